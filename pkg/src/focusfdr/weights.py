"""Data-adaptive weights for DAG-structured hypotheses.

Each depth d splits into sibling groups (children of a shared parent; the
roots form one group under a dummy parent).  A group's weight is Storey's
within-group null-proportion estimate times a size ratio K, groups at or
below the size threshold c fall back to the ratio alone, and a node that
belongs to several groups gets the harmonic average across them.  Depths
outside the gated set receive unity weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .combine import EmptyInputError, validate_pvalues


class LambdaOutOfRangeError(ValueError):
    pass


class NoEligibleGroupError(ValueError):
    pass


@dataclass(frozen=True)
class WeightConfig:
    """Weighting parameters.

    dw selects the depths with data-adaptive weights: "auto" applies the
    minimum-possible-weight rule, "none" gates no depth (all weights 1), or
    pass an explicit iterable of depths.
    """

    lam: float = 0.5
    c: int = 1
    dw: object = "auto"


def _check_lambda(lam):
    if not (0.0 < lam < 1.0):
        raise LambdaOutOfRangeError(f"lambda must be in (0, 1), got {lam}")


def storey_pi0(pvalues, lam):
    """Storey's null-proportion estimate (1 + #{p > lam}) / (m (1 - lam))."""
    _check_lambda(lam)
    arr = validate_pvalues(pvalues)
    if arr.size == 0:
        raise EmptyInputError("need at least one p-value")
    return float((1.0 + np.count_nonzero(arr > lam)) / (arr.size * (1.0 - lam)))


def group_storey(group_pvalues, lam):
    """Storey's estimate restricted to one sibling group."""
    return storey_pi0(group_pvalues, lam)


def min_possible_weight(d, groups, lam, c=1):
    """Smallest weight any hypothesis at depth d can receive, n_d/((1-lam)|H_d|).

    Only defined when some group at d is large enough (> c) for Storey
    estimation; smaller groups carry data-free ratio weights instead.
    """
    _check_lambda(lam)
    if not any(g.size > c for g in groups.by_depth.get(d, ())):
        raise NoEligibleGroupError(f"no group at depth {d} larger than c={c}")
    return groups.n_d[d] / ((1.0 - lam) * groups.depth_sizes[d])


def auto_dw(groups, depths, lam, c=1):
    """Depths selected for data-adaptive weights by the structural rule.

    A depth is gated unless its minimum possible weight already exceeds one
    (in which case adaptive weights could only hurt).  Depths whose groups
    are all at or below the size threshold keep their data-free ratio
    weights and are always gated.  The rule never looks at p-values.
    """
    out = set()
    for d in range(1, depths.max_depth + 1):
        if not any(g.size > c for g in groups.by_depth.get(d, ())):
            out.add(d)
        elif min_possible_weight(d, groups, lam, c) <= 1.0:
            out.add(d)
    return frozenset(out)


def resolve_dw(config, groups, depths):
    """Resolve a WeightConfig.dw specification to a concrete depth set."""
    dw = config.dw
    if isinstance(dw, str):
        if dw == "auto":
            return auto_dw(groups, depths, config.lam, config.c)
        if dw == "none":
            return frozenset()
        raise ValueError(f"unknown dw mode {dw!r}")
    return frozenset(int(d) for d in dw)


@dataclass(frozen=True)
class WeightVector:
    """Per-node positive weights plus the depth set actually gated."""

    values: np.ndarray
    resolved_dw: frozenset


class WeightWorkspace:
    """Flattened group-membership indexes for one (dag, depths, groups, dw, c).

    Precomputing these arrays makes both the weight evaluation and the
    leave-self-out variant (each null's weight with its own p-value zeroed,
    as the FDR bound requires) a handful of vectorized passes, which the
    Monte Carlo checks rely on.
    """

    def __init__(self, groups, depths, dw, c):
        self.dw = frozenset(dw)
        self.c = c
        m = len(groups.node_groups)
        self.m = m

        gated_groups = []
        for d in sorted(self.dw):
            gated_groups.extend(groups.by_depth.get(d, ()))
        self.n_groups = len(gated_groups)

        sizes, ratios, mem_node, mem_group = [], [], [], []
        for gi, g in enumerate(gated_groups):
            sizes.append(g.size)
            ratios.append(g.size / groups.depth_sizes[g.depth] * groups.n_d[g.depth])
            mem_node.extend(g.members)
            mem_group.extend([gi] * g.size)
        self.group_size = np.asarray(sizes, dtype=float)
        self.group_ratio = np.asarray(ratios, dtype=float)
        self.mem_node = np.asarray(mem_node, dtype=np.intp)
        self.mem_group = np.asarray(mem_group, dtype=np.intp)
        self.storey_branch = self.group_size > c
        # membership count per node; > 0 exactly on nodes at gated depths
        self.par_count = np.bincount(self.mem_node, minlength=m).astype(float)
        self.gated_nodes = self.par_count > 0

    def _group_inv_weights(self, counts, lam):
        # counts: per-group Storey exceedance counts (possibly adjusted)
        pi_hat = (1.0 + counts) / ((1.0 - lam) * self.group_size)
        w = np.where(self.storey_branch, pi_hat * self.group_ratio,
                     self.group_ratio)
        return 1.0 / w

    def node_weights(self, pvalues, lam):
        """Per-node weights for the given p-values (1 outside gated depths)."""
        _check_lambda(lam)
        exceed = (np.asarray(pvalues, dtype=float) > lam).astype(float)
        counts = np.bincount(self.mem_group, weights=exceed[self.mem_node],
                             minlength=self.n_groups)
        inv_flat = self._group_inv_weights(counts, lam)[self.mem_group]
        inv_sum = np.bincount(self.mem_node, weights=inv_flat, minlength=self.m)
        weights = np.ones(self.m)
        g = self.gated_nodes
        weights[g] = self.par_count[g] / inv_sum[g]
        return weights

    def leave_self_zero_weights(self, pvalues, lam):
        """Per-node weights each evaluated with that node's own p-value at 0."""
        _check_lambda(lam)
        exceed = (np.asarray(pvalues, dtype=float) > lam).astype(float)
        counts = np.bincount(self.mem_group, weights=exceed[self.mem_node],
                             minlength=self.n_groups)
        # zeroing p_i removes only node i's own exceedance from its groups
        adj = counts[self.mem_group] - exceed[self.mem_node]
        pi_hat = (1.0 + adj) / ((1.0 - lam) * self.group_size[self.mem_group])
        w_flat = np.where(self.storey_branch[self.mem_group],
                          pi_hat * self.group_ratio[self.mem_group],
                          self.group_ratio[self.mem_group])
        inv_sum = np.bincount(self.mem_node, weights=1.0 / w_flat,
                              minlength=self.m)
        weights = np.ones(self.m)
        g = self.gated_nodes
        weights[g] = self.par_count[g] / inv_sum[g]
        return weights


def dag_weights(dag, depths, groups, pvalues, config):
    """Data-adaptive weights per node under the given configuration."""
    arr = validate_pvalues(pvalues)
    if arr.size != dag.m:
        raise ValueError(f"expected {dag.m} p-values, got {arr.size}")
    dw = resolve_dw(config, groups, depths)
    ws = WeightWorkspace(groups, depths, dw, config.c)
    return WeightVector(values=ws.node_weights(arr, config.lam), resolved_dw=dw)
