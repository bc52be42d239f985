"""Monte Carlo harness: graph generators, truth assignment, p-value
sampling, the replication loop, and the validity checks that accompany the
procedures.

Per-replication RNG streams are derived from (seed, grid index, replication
index) through numpy's SeedSequence, so results are bit-identical no matter
how replications are scheduled across workers.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .combine import Combiner, smooth_all_descendants, smooth_rows
from .dag import build_dag, check_heredity, compute_depths, group_index
from .filters import FilterSpec
from .procedures import (ReshapingFn, bh, by_procedure, storey_bh,
                         unity_weights, wfbh, yekutieli_tree)
from .special import normal_cdf
from .weights import WeightConfig, WeightWorkspace, dag_weights, resolve_dw

GRAPH_FAMILIES = ("wide-tree", "bipartite1", "deep-tree", "bipartite2")
SIGNAL_SETUPS = ("global", "decremental", "incremental")


class RhoOutOfRangeError(ValueError):
    pass


class UnknownFamilyError(ValueError):
    pass


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _wide_tree():
    edges = [(r, 50 + 10 * r + j) for r in range(50) for j in range(10)]
    return build_dag(550, edges)


def _deep_tree():
    edges = [(r, 5 + 10 * r + j) for r in range(5) for j in range(10)]
    edges += [(5 + k, 55 + 10 * k + j) for k in range(50) for j in range(10)]
    return build_dag(555, edges)


def _bipartite1(rng, max_tries=1000):
    # 200 roots each pick 10 distinct leaf children; resample until every
    # leaf is covered so the generated graph keeps its two-level shape
    for _ in range(max_tries):
        edges = []
        covered = np.zeros(350, dtype=bool)
        for r in range(200):
            picks = rng.choice(350, size=10, replace=False)
            covered[picks] = True
            edges.extend((r, 200 + int(j)) for j in picks)
        if covered.all():
            return build_dag(550, edges)
    raise RuntimeError("failed to cover every leaf of bipartite graph 1")


def _bipartite2(rng, max_tries=10000):
    # 61 roots x 10 child slots = 610 = 370 single-parent + 2*120
    # double-parent leaves; deal shuffled slots, rejecting hands where a
    # root would receive the same leaf twice
    doubled = rng.choice(490, size=120, replace=False)
    pool = np.concatenate([np.arange(490), doubled])
    for _ in range(max_tries):
        perm = rng.permutation(pool)
        hands = perm.reshape(61, 10)
        if all(np.unique(h).size == 10 for h in hands):
            edges = [(r, 61 + int(leaf)) for r in range(61) for leaf in hands[r]]
            return build_dag(551, edges)
    raise RuntimeError("failed to deal distinct children for bipartite graph 2")


def generate_graph(family, seed=0):
    """Build one of the named simulation graphs; random families draw from
    the seed, deterministic ones ignore it."""
    rng = _rng(seed)
    if family == "wide-tree":
        return _wide_tree()
    if family == "deep-tree":
        return _deep_tree()
    if family == "bipartite1":
        return _bipartite1(rng)
    if family == "bipartite2":
        return _bipartite2(rng)
    raise UnknownFamilyError(f"unknown graph family {family!r}")


def assign_truth(dag, p_nonnull, seed=0):
    """Sample round(p * #leaves) leaves as non-null, then mark every inner
    node non-null iff it has a non-null child.  The result always respects
    the ancestor-heredity assumption."""
    if not (0.0 < p_nonnull < 1.0):
        raise ValueError(f"p_nonnull must be in (0, 1), got {p_nonnull}")
    rng = _rng(seed)
    leaves = np.asarray(dag.leaves, dtype=np.intp)
    k = round(p_nonnull * leaves.size)
    nonnull = np.zeros(dag.m, dtype=bool)
    if k > 0:
        nonnull[rng.choice(leaves, size=k, replace=False)] = True
    for v in reversed(dag.topo_order):
        if dag.children[v]:
            nonnull[v] = any(nonnull[c] for c in dag.children[v])
    out = frozenset(int(i) for i in np.flatnonzero(nonnull))
    assert check_heredity(dag, out)
    return out


def signal_means(depths, truth, setup):
    """Per-node normal means: 0 for nulls, setup-dependent for non-nulls."""
    mu = np.zeros(len(depths.depth))
    idx = np.asarray(sorted(truth), dtype=np.intp)
    if idx.size == 0:
        return mu
    d = depths.depth[idx].astype(float)
    if setup == "global":
        mu[idx] = 2.0
    elif setup == "decremental":
        mu[idx] = 2.0 + 1.5 * (d - 1.0)
    elif setup == "incremental":
        mu[idx] = 2.0 + 1.5 * (depths.max_depth - d)
    else:
        raise ValueError(f"unknown signal setup {setup!r}")
    return mu


def sample_pvalues(dag, depths, truth, setup, rho, seed=0):
    """One-sided normal p-values p = 1 - Phi(X) with
    X = mu + (1 - rho) Z + rho Z0 (shared Z0; no variance renormalization).
    The shared draw is consumed even at rho = 0, so the independent model is
    the exact rho = 0 stream."""
    if not (0.0 <= rho < 1.0):
        raise RhoOutOfRangeError(f"rho must be in [0, 1), got {rho}")
    rng = _rng(seed)
    mu = signal_means(depths, truth, setup)
    z0 = rng.standard_normal()
    z = rng.standard_normal(dag.m)
    x = mu + (1.0 - rho) * z + rho * z0
    return normal_cdf(-x)


@dataclass(frozen=True)
class MethodSpec:
    """A procedure name plus the filter it reports through."""

    procedure: str
    filter: str = "trivial"

    @property
    def label(self):
        return f"{self.procedure}+{self.filter}"


@dataclass(frozen=True)
class SimConfig:
    family: str = "wide-tree"
    setup: str = "global"
    p_nonnull: tuple = (0.1, 0.3, 0.5)
    rho: float = 0.0
    q: float = 0.05
    lambda_policy: str = "fixed:0.5"
    c: int = 1
    dw: object = "auto"
    n_reps: int = 200
    seed: int = 0
    smoothing: str = None
    methods: tuple = (MethodSpec("wfbh", "ds"), MethodSpec("fbh", "ds"))
    yk_divisor: float = 2.88

    def resolved_lambda(self):
        if self.lambda_policy == "q":
            return self.q
        if self.lambda_policy.startswith("fixed:"):
            return float(self.lambda_policy.split(":", 1)[1])
        raise ValueError(f"unknown lambda policy {self.lambda_policy!r}")


@dataclass(frozen=True)
class CellSummary:
    method: str
    filter: str
    p_nonnull: float
    fdr_hat: float
    se_fdr: float
    power_hat: float
    se_power: float
    n_reps: int


@dataclass(frozen=True)
class SimSummary:
    """Aggregated cells plus the raw per-replication (FDP, power) paths.

    Power averages |discoveries intersect non-nulls| / |non-nulls| over all
    non-null nodes, not only leaves; the denominator choice is part of this
    harness's contract, not a claim about any external convention.
    """

    config: SimConfig
    cells: tuple
    histories: dict = field(repr=False)


def run_method(spec, dag, depths, groups, pvalues, config):
    """Dispatch one configured method; returns the discovery set."""
    q = config.q
    lam = config.resolved_lambda()
    fspec = FilterSpec.from_name(spec.filter)
    if spec.procedure == "bh":
        return bh(pvalues, q)
    if spec.procedure == "storey-bh":
        return storey_bh(pvalues, q, lam)
    if spec.procedure == "by":
        return by_procedure(pvalues, q)
    if spec.procedure == "fbh":
        return wfbh(dag, pvalues, unity_weights(dag.m), fspec, q).discovery_set
    if spec.procedure == "wfbh":
        wv = dag_weights(dag, depths, groups, pvalues,
                         WeightConfig(lam=lam, c=config.c, dw=config.dw))
        return wfbh(dag, pvalues, wv, fspec, q).discovery_set
    if spec.procedure == "wrfbh":
        wv = dag_weights(dag, depths, groups, pvalues,
                         WeightConfig(lam=lam, c=config.c, dw=config.dw))
        return wfbh(dag, pvalues, wv, fspec, q,
                    reshaping=ReshapingFn.by(dag.m)).discovery_set
    if spec.procedure == "yekutieli-tree":
        return yekutieli_tree(dag, pvalues, q / config.yk_divisor)
    raise ValueError(f"unknown procedure {spec.procedure!r}")


def _replicate(config, p_idx, rep):
    """One replication: build, assign, sample, run every method."""
    rng = np.random.default_rng([config.seed, p_idx, rep])
    dag = generate_graph(config.family, rng)
    depths = compute_depths(dag)
    groups = group_index(dag, depths)
    p_nonnull = config.p_nonnull[p_idx]
    truth = assign_truth(dag, p_nonnull, rng)
    pv = sample_pvalues(dag, depths, truth, config.setup, config.rho, rng)
    if config.smoothing is not None:
        pv = smooth_all_descendants(dag, pv, Combiner.from_name(config.smoothing))

    n_nonnull = len(truth)
    out = []
    for spec in config.methods:
        disc = run_method(spec, dag, depths, groups, pv, config)
        n_disc = len(disc)
        false_disc = sum(1 for v in disc if v not in truth)
        fdp = false_disc / max(n_disc, 1)
        power = (n_disc - false_disc) / max(n_nonnull, 1)
        out.append((fdp, power))
    return out


def _replicate_star(args):
    config, p_idx, rep = args
    return p_idx, rep, _replicate(config, p_idx, rep)


def resolve_workers(n_workers=None):
    """Worker count: explicit argument, else FOCUSFDR_THREADS (0 = auto),
    else serial."""
    if n_workers is not None:
        return max(1, int(n_workers))
    env = os.environ.get("FOCUSFDR_THREADS", "").strip()
    if not env:
        return 1
    n = int(env)
    return (os.cpu_count() or 1) if n == 0 else max(1, n)


def run_simulation(config, n_workers=None):
    """Run the configured replications over the p_nonnull grid.

    Results are deterministic in (config, seed) regardless of the worker
    count; replication streams never depend on scheduling order.
    """
    jobs = [(config, p_idx, rep)
            for p_idx in range(len(config.p_nonnull))
            for rep in range(config.n_reps)]
    workers = resolve_workers(n_workers)

    results = {}
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for p_idx, rep, rows in pool.map(_replicate_star, jobs, chunksize=8):
                results[(p_idx, rep)] = rows
    else:
        for job in jobs:
            p_idx, rep, rows = _replicate_star(job)
            results[(p_idx, rep)] = rows

    cells = []
    histories = {}
    for p_idx, p_nonnull in enumerate(config.p_nonnull):
        for mi, spec in enumerate(config.methods):
            hist = np.array([results[(p_idx, rep)][mi]
                             for rep in range(config.n_reps)])
            histories[(spec.label, p_nonnull)] = hist
            n = config.n_reps
            fdr_hat, power_hat = hist.mean(axis=0)
            sds = hist.std(axis=0, ddof=1) if n > 1 else np.zeros(2)
            cells.append(CellSummary(
                method=spec.procedure, filter=spec.filter,
                p_nonnull=p_nonnull,
                fdr_hat=float(fdr_hat), se_fdr=float(sds[0] / np.sqrt(n)),
                power_hat=float(power_hat), se_power=float(sds[1] / np.sqrt(n)),
                n_reps=n))
    return SimSummary(config=config, cells=tuple(cells), histories=histories)


@dataclass(frozen=True)
class Condition1Result:
    estimate: float
    se: float
    n_nulls: int
    bound: float


def condition1_check(dag, weight_config, truth, n_mc, seed=0, setup="global"):
    """Monte Carlo estimate of the summed expected inverse weights.

    Each replication draws null p-values i.i.d. uniform (non-nulls from the
    signal setup), then evaluates every null node's weight with that node's
    own p-value replaced by zero; the per-replication statistic is the sum
    of inverse weights over the nulls.  FDR control needs the expectation of
    this sum to stay at or below the number of hypotheses.
    """
    rng = _rng(seed)
    depths = compute_depths(dag)
    groups = group_index(dag, depths)
    dw = resolve_dw(weight_config, groups, depths)
    ws = WeightWorkspace(groups, depths, dw, weight_config.c)
    lam = weight_config.lam

    nulls = np.array([v for v in range(dag.m) if v not in truth], dtype=np.intp)
    mu = signal_means(depths, truth, setup)
    totals = np.empty(n_mc)
    for r in range(n_mc):
        x = mu + rng.standard_normal(dag.m)
        p = normal_cdf(-x)
        w0 = ws.leave_self_zero_weights(p, lam)
        totals[r] = np.sum(1.0 / w0[nulls])
    est = float(totals.mean())
    se = float(totals.std(ddof=1) / np.sqrt(n_mc)) if n_mc > 1 else 0.0
    return Condition1Result(estimate=est, se=se, n_nulls=int(nulls.size),
                            bound=float(dag.m))


@dataclass(frozen=True)
class SuperuniformityResult:
    thresholds: tuple
    cdf: np.ndarray   # shape (m, len(thresholds))
    se: np.ndarray    # shape (len(thresholds),)

    def max_excess_z(self):
        """Largest (F_hat(t) - t)/se over nodes and thresholds."""
        ts = np.asarray(self.thresholds)
        return float(((self.cdf - ts) / self.se).max())


def superuniformity_check(dag, combiner, n_mc, seed=0,
                          thresholds=(0.01, 0.05, 0.1, 0.25, 0.5)):
    """Empirical CDF of each node's smoothed p-value under the full null.

    Valid smoothing keeps every node's CDF at or below the uniform line up
    to Monte Carlo noise; ``se`` is the binomial standard error of the
    empirical CDF at each threshold.
    """
    rng = _rng(seed)
    block = rng.uniform(size=(n_mc, dag.m))
    smoothed = smooth_rows(dag, block, combiner)
    ts = np.asarray(thresholds, dtype=float)
    cdf = np.stack([(smoothed <= t).mean(axis=0) for t in ts], axis=1)
    se = np.sqrt(ts * (1.0 - ts) / n_mc)
    return SuperuniformityResult(thresholds=tuple(thresholds), cdf=cdf, se=se)
