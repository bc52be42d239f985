"""p-value combining functions, all-descendant smoothing, and intersection
p-value construction.

Every combiner maps a block of p-values to a single global-null p-value and
is monotone in each input.  The matrix forms (`*_rows`) combine each row of
an (r, n) array at once, which is what the Monte Carlo validity checks need.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .special import DomainError, beta_cdf, chisq_survival, normal_cdf, normal_quantile


class EmptyInputError(ValueError):
    pass


class LengthMismatchError(ValueError):
    pass


class AnnotationNotNestedError(ValueError):
    pass


class EmptyAnnotationError(ValueError):
    pass


@dataclass(frozen=True)
class Combiner:
    """A named p-value combining rule.

    kind is one of "fisher", "stouffer", "simes", "orderstat", "bonferroni";
    ``order`` selects the order statistic for "orderstat" (1 = Tippett's
    minimum rule).  When a block has fewer than ``order`` values the order is
    clamped to the block size, so singleton blocks always pass through.
    """

    kind: str
    order: int = 1

    @classmethod
    def from_name(cls, name):
        name = name.strip().lower()
        if name == "tippett":
            return cls("orderstat", 1)
        if name.startswith("orderstat:"):
            i = int(name.split(":", 1)[1])
            if i < 1:
                raise ValueError("order statistic index must be >= 1")
            return cls("orderstat", i)
        if name in ("fisher", "stouffer", "simes", "bonferroni"):
            return cls(name)
        raise ValueError(f"unknown combiner {name!r}")

    @property
    def name(self):
        if self.kind == "orderstat":
            return "tippett" if self.order == 1 else f"orderstat:{self.order}"
        return self.kind


def validate_pvalues(values):
    """Return a float array after checking entries lie in [0, 1] (no NaN)."""
    arr = np.asarray(values, dtype=float)
    if np.any(~((arr >= 0.0) & (arr <= 1.0))):
        raise DomainError("p-values must lie in [0, 1] and not be NaN")
    return arr


def combine_rows(combiner, block):
    """Combine each row of an (r, n) array of p-values; returns shape (r,)."""
    block = np.asarray(block, dtype=float)
    if block.ndim != 2 or block.shape[1] == 0:
        raise EmptyInputError("need a nonempty 2-D block of p-values")
    n = block.shape[1]
    kind = combiner.kind

    if kind == "fisher":
        with np.errstate(divide="ignore"):
            stat = -2.0 * np.sum(np.log(block), axis=1)
        return chisq_survival(stat, 2 * n)

    if kind == "stouffer":
        zeros = np.any(block == 0.0, axis=1)
        ones = np.any(block == 1.0, axis=1)
        if np.any(zeros & ones):
            raise DomainError("Stouffer is undefined when a block has both a"
                              " zero and a one")
        inner = np.clip(block, np.nextafter(0.0, 1.0), np.nextafter(1.0, 0.0))
        z = normal_quantile(inner)
        out = normal_cdf(np.sum(z, axis=1) / math.sqrt(n))
        out = np.where(zeros, 0.0, out)
        out = np.where(ones, 1.0, out)
        return np.atleast_1d(out)

    if kind == "simes":
        srt = np.sort(block, axis=1)
        ranks = np.arange(1, n + 1, dtype=float)
        return np.clip(np.min(srt * (n / ranks), axis=1), 0.0, 1.0)

    if kind == "orderstat":
        i = min(combiner.order, n)
        if i == 1:
            stat = np.min(block, axis=1)
        else:
            stat = np.sort(block, axis=1)[:, i - 1]
        return np.atleast_1d(beta_cdf(stat, i, n - i + 1))

    if kind == "bonferroni":
        return np.minimum(1.0, n * np.min(block, axis=1))

    raise ValueError(f"unknown combiner kind {combiner.kind!r}")


def combine(combiner, pvalues):
    """Combine a nonempty sequence of p-values into one p-value.

    The conventions for boundary inputs: Fisher returns 0 when any input is
    exactly 0 (the limit of the chi-square statistic); Stouffer maps an
    all-finite block through the z-sum and propagates hard zeros/ones as
    limits, raising DomainError only for the genuinely undefined mixed case.
    """
    arr = validate_pvalues(pvalues)
    if arr.ndim != 1 or arr.size == 0:
        raise EmptyInputError("need at least one p-value")
    return float(combine_rows(combiner, arr[None, :])[0])


def smooth_rows(dag, block, combiner):
    """All-descendant smoothing applied to each row of an (r, m) block."""
    block = np.asarray(block, dtype=float)
    if block.ndim != 2 or block.shape[1] != dag.m:
        raise LengthMismatchError(
            f"expected rows of length {dag.m}, got {block.shape}")
    out = block.copy()
    for v in range(dag.m):
        desc = dag.descendant_indices(v)
        if desc.size == 0:
            continue
        cols = np.concatenate(([v], desc))
        out[:, v] = combine_rows(combiner, block[:, cols])
    return out


def smooth_all_descendants(dag, pvalues, combiner):
    """Replace each node's p-value by the combination of itself with all of
    its descendants; nodes without descendants keep their own p-value."""
    arr = validate_pvalues(pvalues)
    if arr.ndim != 1 or arr.size != dag.m:
        raise LengthMismatchError(f"expected {dag.m} p-values, got {arr.size}")
    return smooth_rows(dag, arr[None, :], combiner)[0]


def intersection_dag_pvalues(dag, annotations, item_pvalues, combiner):
    """Node p-values for an intersection DAG from item-level p-values.

    ``annotations[i]`` is the set of item indices node i's hypothesis
    intersects over; every edge must satisfy the nesting A_child <= A_parent.
    """
    items = validate_pvalues(item_pvalues)
    if len(annotations) != dag.m:
        raise LengthMismatchError(
            f"expected {dag.m} annotation sets, got {len(annotations)}")
    sets = [frozenset(int(j) for j in a) for a in annotations]
    for i, a in enumerate(sets):
        if not a:
            raise EmptyAnnotationError(f"node {i} has an empty annotation set")
        for j in a:
            if not (0 <= j < items.size):
                raise DomainError(f"node {i} references unknown item {j}")
    for parent, child in dag.edges:
        if not sets[child] <= sets[parent]:
            raise AnnotationNotNestedError(
                f"items of node {child} not contained in its parent {parent}")
    out = np.empty(dag.m, dtype=float)
    for i, a in enumerate(sets):
        out[i] = combine(combiner, items[sorted(a)])
    return out
