"""Special functions for the testing procedures and the simulation harness.

Hand-translated rational approximations (no SciPy dependency): Cody's
Chebyshev fits for erf/erfc and Wichura's PPND16 for the normal quantile,
plus exact series for the chi-square survival function with even degrees
of freedom and the beta CDF with integer parameters.  All functions accept
scalars or numpy arrays and target absolute error below 1e-12.
"""

from __future__ import annotations

import math

import numpy as np


class DomainError(ValueError):
    """Argument outside the mathematical domain of a special function."""


_SQRT2 = math.sqrt(2.0)
_INV_SQRTPI = 5.6418958354775628695e-1  # 1/sqrt(pi)

# Cody (1969) rational coefficients, as in netlib CALERF.
_ERF_A = (3.16112374387056560e0, 1.13864154151050156e2,
          3.77485237685302021e2, 3.20937758913846947e3,
          1.85777706184603153e-1)
_ERF_B = (2.36012909523441209e1, 2.44024637934444173e2,
          1.28261652607737228e3, 2.84423683343917062e3)
_ERFC_C = (5.64188496988670089e-1, 8.88314979438837594e0,
           6.61191906371416295e1, 2.98635138197400131e2,
           8.81952221241769090e2, 1.71204761263407058e3,
           2.05107837782607147e3, 1.23033935479799725e3,
           2.15311535474403846e-8)
_ERFC_D = (1.57449261107098347e1, 1.17693950891312499e2,
           5.37181101862009858e2, 1.62138957456669019e3,
           3.29079923573345963e3, 4.36261909014324716e3,
           3.43936767414372164e3, 1.23033935480374942e3)
_ERFC_P = (3.05326634961232344e-1, 3.60344899949804439e-1,
           1.25781726111229246e-1, 1.60837851487422766e-2,
           6.58749161529837803e-4, 1.63153871373020978e-2)
_ERFC_Q = (2.56852019228982242e0, 1.87295284992346047e0,
           5.27905102951428412e-1, 6.05183413124413191e-2,
           2.33520497626869185e-3)


def _erf_small(z):
    # |x| <= 0.46875, z = x^2; returns erf(x)/x
    num = _ERF_A[4] * z
    den = z
    for i in range(3):
        num = (num + _ERF_A[i]) * z
        den = (den + _ERF_B[i]) * z
    return (num + _ERF_A[3]) / (den + _ERF_B[3])


def _erfc_mid(y):
    # 0.46875 <= y <= 4; returns erfc(y) * exp(y^2)
    num = _ERFC_C[8] * y
    den = y
    for i in range(7):
        num = (num + _ERFC_C[i]) * y
        den = (den + _ERFC_D[i]) * y
    return (num + _ERFC_C[7]) / (den + _ERFC_D[7])


def _erfc_tail(y):
    # y > 4; returns erfc(y) * exp(y^2)
    z = 1.0 / (y * y)
    num = _ERFC_P[5] * z
    den = z
    for i in range(4):
        num = (num + _ERFC_P[i]) * z
        den = (den + _ERFC_Q[i]) * z
    r = z * (num + _ERFC_P[4]) / (den + _ERFC_Q[4])
    return (_INV_SQRTPI - r) / y


def _exp_msq(y):
    # exp(-y^2) computed as exp(-hi^2)*exp(-(y-hi)(y+hi)) to limit the
    # squaring error in the far tail (hi = y rounded to 1/16).
    hi = np.floor(y * 16.0) / 16.0
    rest = (y - hi) * (y + hi)
    with np.errstate(under="ignore"):
        return np.exp(-hi * hi) * np.exp(-rest)


def _erfc_array(x):
    x = np.asarray(x, dtype=float)
    y = np.abs(x)
    out = np.empty_like(y)

    small = y <= 0.46875
    if small.any():
        out[small] = 1.0 - x[small] * _erf_small(x[small] * x[small])
    mid = (~small) & (y <= 4.0)
    if mid.any():
        out[mid] = _erfc_mid(y[mid]) * _exp_msq(y[mid])
    tail = y > 4.0
    if tail.any():
        yt = y[tail]
        with np.errstate(under="ignore"):
            out[tail] = _erfc_tail(yt) * _exp_msq(yt)
    neg = (x < 0) & ~small
    out[neg] = 2.0 - out[neg]
    return out


def erfc(x):
    """Complementary error function (vectorized)."""
    res = _erfc_array(x)
    return float(res) if np.ndim(x) == 0 else res


def erf(x):
    """Error function (vectorized)."""
    x_arr = np.asarray(x, dtype=float)
    out = np.empty_like(x_arr)
    small = np.abs(x_arr) <= 0.46875
    if small.any():
        xs = x_arr[small]
        out[small] = xs * _erf_small(xs * xs)
    if (~small).any():
        out[~small] = 1.0 - _erfc_array(x_arr[~small])
    return float(out) if np.ndim(x) == 0 else out


def normal_cdf(x):
    """Standard normal CDF Phi(x)."""
    res = 0.5 * _erfc_array(np.negative(x) / _SQRT2)
    return float(res) if np.ndim(x) == 0 else res


# Wichura (1988), algorithm AS 241, PPND16 coefficients.
_PPND_A = (3.3871328727963666080e0, 1.3314166789178437745e2,
           1.9715909503065514427e3, 1.3731693765509461125e4,
           4.5921953931549871457e4, 6.7265770927008700853e4,
           3.3430575583588128105e4, 2.5090809287301226727e3)
_PPND_B = (1.0, 4.2313330701600911252e1, 6.8718700749205790830e2,
           5.3941960214247511077e3, 2.1213794301586595867e4,
           3.9307895800092710610e4, 2.8729085735721942674e4,
           5.2264952788528545610e3)
_PPND_C = (1.42343711074968357734e0, 4.63033784615654529590e0,
           5.76949722146069140550e0, 3.64784832476320460504e0,
           1.27045825245236838258e0, 2.41780725177450611770e-1,
           2.27238449892691845833e-2, 7.74545014278341407640e-4)
_PPND_D = (1.0, 2.05319162663775882187e0, 1.67638483018380384940e0,
           6.89767334985100004550e-1, 1.48103976427480074590e-1,
           1.51986665636164571966e-2, 5.47593808499534494600e-4,
           1.05075007164441684324e-9)
_PPND_E = (6.65790464350110377720e0, 5.46378491116411436990e0,
           1.78482653991729133580e0, 2.96560571828504891230e-1,
           2.65321895265761230930e-2, 1.24266094738807843860e-3,
           2.71155556874348757815e-5, 2.01033439929228813265e-7)
_PPND_F = (1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1,
           1.48753612908506148525e-2, 7.86869131145613259100e-4,
           1.84631831751005468180e-5, 1.42151175831644588870e-7,
           2.04426310338993978564e-15)


def _poly(coeffs, r):
    acc = np.full_like(r, coeffs[7])
    for c in reversed(coeffs[:7]):
        acc = acc * r + c
    return acc


def normal_quantile(p):
    """Standard normal quantile Phi^{-1}(p) for p in the open unit interval.

    Raises:
        DomainError: if any p lies outside (0, 1).
    """
    p_arr = np.asarray(p, dtype=float)
    if np.any(~((p_arr > 0.0) & (p_arr < 1.0))):
        raise DomainError("normal_quantile requires p in (0, 1)")
    q = p_arr - 0.5
    out = np.empty_like(p_arr)

    central = np.abs(q) <= 0.425
    if central.any():
        r = 0.180625 - q[central] * q[central]
        out[central] = q[central] * _poly(_PPND_A, r) / _poly(_PPND_B, r)
    if (~central).any():
        qt = q[~central]
        pt = p_arr[~central]
        r = np.sqrt(-np.log(np.where(qt < 0.0, pt, 1.0 - pt)))
        near = r <= 5.0
        val = np.empty_like(r)
        val[near] = _poly(_PPND_C, r[near] - 1.6) / _poly(_PPND_D, r[near] - 1.6)
        val[~near] = _poly(_PPND_E, r[~near] - 5.0) / _poly(_PPND_F, r[~near] - 5.0)
        out[~central] = np.where(qt < 0.0, -val, val)
    return float(out) if np.ndim(p) == 0 else out


def chisq_survival(x, df):
    """Chi-square survival function for a positive even number of dof.

    For df = 2n this is the exact Poisson tail
    ``exp(-x/2) * sum_{k<n} (x/2)^k / k!``, which is what combining 2n
    log-transformed p-values requires.
    """
    if df <= 0 or df % 2 != 0:
        raise DomainError("chisq_survival requires a positive even df")
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < 0):
        raise DomainError("chisq_survival requires x >= 0")
    # +inf statistic (a zero p-value in Fisher's method) yields survival 0
    inf = np.isposinf(x_arr)
    half = np.where(inf, 0.0, x_arr / 2.0)
    with np.errstate(under="ignore"):
        term = np.exp(-half)
        total = term.copy()
        for k in range(1, df // 2):
            term = term * half / k
            total = total + term
    res = np.clip(np.where(inf, 0.0, total), 0.0, 1.0)
    return float(res) if np.ndim(x) == 0 else res


def beta_cdf(x, a, b):
    """Beta CDF with positive integer shape parameters.

    Evaluates I_x(a, b) = P(Binomial(a+b-1, x) >= a) through the lower
    binomial tail accumulated in log space, exact for the order-statistic
    distributions used by the combining functions.
    """
    if a < 1 or b < 1 or a != int(a) or b != int(b):
        raise DomainError("beta_cdf requires integer a >= 1, b >= 1")
    a, b = int(a), int(b)
    x_arr = np.asarray(x, dtype=float)
    if np.any((x_arr < 0) | (x_arr > 1)):
        raise DomainError("beta_cdf requires x in [0, 1]")
    n = a + b - 1
    inner = np.clip(x_arr, np.nextafter(0.0, 1.0), np.nextafter(1.0, 0.0))
    log_x = np.log(inner)
    log_1mx = np.log1p(-inner)
    lower = np.zeros_like(x_arr)
    with np.errstate(under="ignore"):
        for j in range(a):
            log_c = (math.lgamma(n + 1) - math.lgamma(j + 1)
                     - math.lgamma(n - j + 1))
            lower = lower + np.exp(log_c + j * log_x + (n - j) * log_1mx)
    res = np.clip(1.0 - lower, 0.0, 1.0)
    res = np.where(x_arr == 1.0, 1.0, res)
    res = np.where(x_arr == 0.0, 0.0, res)
    return float(res) if np.ndim(x) == 0 else res
