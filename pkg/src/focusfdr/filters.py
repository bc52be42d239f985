"""Rejection-set filters: prune a candidate rejection set to a structured
subset before reporting.

A filter maps (R, p) to U <= R.  The built-in kinds are the trivial filter,
the ancestor-closed ("ds") filter, the outer-nodes filter, and a fixed
threshold screening filter.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dag import is_tree, mask_of


@dataclass(frozen=True)
class FilterSpec:
    """One of "trivial" | "ds" | "outer" | "screen" (with a threshold)."""

    kind: str
    threshold: float = None

    def __post_init__(self):
        if self.kind not in ("trivial", "ds", "outer", "screen"):
            raise ValueError(f"unknown filter kind {self.kind!r}")
        if self.kind == "screen":
            if self.threshold is None or not (0.0 <= self.threshold <= 1.0):
                raise ValueError("screening filter needs a threshold in [0, 1]")

    @classmethod
    def from_name(cls, name):
        name = name.strip().lower()
        if name.startswith("screen:"):
            return cls("screen", float(name.split(":", 1)[1]))
        return cls(name)

    @property
    def name(self):
        if self.kind == "screen":
            return f"screen:{self.threshold:g}"
        return self.kind


TRIVIAL = FilterSpec("trivial")
DAG_STRUCTURED = FilterSpec("ds")
OUTER_NODES = FilterSpec("outer")


def apply_filter(spec, dag, rejected, pvalues=None):
    """Filtered subset of ``rejected`` under ``spec``.

    "ds" keeps nodes whose ancestors are all rejected (largest rooted
    sub-DAG); "outer" keeps nodes with no rejected descendant (the antichain
    of outermost rejections); "screen" intersects with {p <= threshold}.
    """
    rejected = frozenset(int(v) for v in rejected)
    for v in rejected:
        dag._check_node(v)
    if spec.kind == "trivial":
        return rejected
    if spec.kind == "ds":
        r_mask = mask_of(rejected)
        anc = dag.ancestor_masks
        return frozenset(v for v in rejected if anc[v] & ~r_mask == 0)
    if spec.kind == "outer":
        r_mask = mask_of(rejected)
        desc = dag.descendant_masks
        return frozenset(v for v in rejected if desc[v] & r_mask == 0)
    if spec.kind == "screen":
        p = np.asarray(pvalues, dtype=float)
        return frozenset(v for v in rejected if p[v] <= spec.threshold)
    raise ValueError(f"unknown filter kind {spec.kind!r}")


def is_monotonic(spec, dag):
    """Monotonicity classification: True, False, or None when unknown.

    A filter is monotonic when growing the rejection set (and shrinking the
    p-values) never shrinks the filtered count.  The ancestor-closed filter
    is monotonic on any DAG; the outer-nodes filter only on trees; trivial
    and screening filters always.
    """
    if spec.kind in ("trivial", "screen", "ds"):
        return True
    if spec.kind == "outer":
        return bool(is_tree(dag))
    return None


def filtered_count_curve(spec, dag, weighted_p, pvalues=None):
    """Threshold curve of filtered-set sizes for base sets {i: wp_i <= t}.

    Returns a function mapping a sorted-or-not array of thresholds t to
    |F({i: wp_i <= t}, p)| for each t, in O(log m) per threshold after an
    O(m log m + edges) setup.  Each node contributes over an interval of
    thresholds, so the curve is a difference of two sorted-rank lookups.
    """
    wp = np.asarray(weighted_p, dtype=float)

    if spec.kind == "trivial":
        enter = np.sort(wp)
        leave = None
    elif spec.kind == "ds":
        # a node is kept once itself and every ancestor is rejected
        enter = wp.copy()
        for v in dag.topo_order:
            for a in dag.parents[v]:
                if enter[a] > enter[v]:
                    enter[v] = enter[a]
        enter = np.sort(enter)
        leave = None
    elif spec.kind == "outer":
        # kept while rejected but before any descendant enters
        dmin = np.full(dag.m, np.inf)
        for v in reversed(dag.topo_order):
            for c in dag.children[v]:
                dmin[v] = min(dmin[v], wp[c], dmin[c])
        enter = np.sort(wp)
        leave = np.sort(np.maximum(wp, dmin))
    elif spec.kind == "screen":
        p = np.asarray(pvalues, dtype=float)
        enter = np.sort(wp[p <= spec.threshold])
        leave = None
    else:
        raise ValueError(f"unknown filter kind {spec.kind!r}")

    def counts(ts):
        ts = np.asarray(ts, dtype=float)
        c = np.searchsorted(enter, ts, side="right")
        if leave is not None:
            c = c - np.searchsorted(leave, ts, side="right")
        return c

    return counts
