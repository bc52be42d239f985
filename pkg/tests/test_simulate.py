"""Tests for the graph generators, data generation, and the Monte Carlo
replication harness."""

from collections import Counter

import numpy as np
import pytest
from scipy import stats

from focusfdr.combine import Combiner
from focusfdr.dag import build_dag, check_heredity, compute_depths, is_tree
from focusfdr.simulate import (MethodSpec, RhoOutOfRangeError, SimConfig,
                               UnknownFamilyError, assign_truth,
                               condition1_check, generate_graph,
                               run_simulation, sample_pvalues, signal_means,
                               superuniformity_check)
from focusfdr.special import normal_cdf
from focusfdr.weights import WeightConfig


def test_wide_tree_counts():
    dag = generate_graph("wide-tree")
    depths = compute_depths(dag)
    assert dag.m == 550
    assert len(depths.levels[1]) == 50
    assert len(depths.levels[2]) == 500
    assert is_tree(dag)


def test_deep_tree_counts():
    dag = generate_graph("deep-tree")
    depths = compute_depths(dag)
    assert dag.m == 555
    assert [len(depths.levels[d]) for d in (1, 2, 3)] == [5, 50, 500]
    assert is_tree(dag)


def test_family_group_counts():
    from focusfdr.dag import group_index

    dag = generate_graph("deep-tree")
    depths = compute_depths(dag)
    assert group_index(dag, depths).n_d == {1: 1, 2: 5, 3: 50}
    dag = generate_graph("bipartite2", 4)
    depths = compute_depths(dag)
    assert group_index(dag, depths).n_d == {1: 1, 2: 61}
    dag = generate_graph("wide-tree")
    depths = compute_depths(dag)
    assert group_index(dag, depths).n_d == {1: 1, 2: 50}


def test_bipartite1_counts():
    dag = generate_graph("bipartite1", 11)
    depths = compute_depths(dag)
    assert dag.m == 550
    assert len(dag.roots) == 200 and len(dag.leaves) == 350
    assert depths.max_depth == 2
    assert not is_tree(dag)
    assert all(len(dag.children[r]) == 10 for r in range(200))


def test_bipartite2_parent_multiset():
    dag = generate_graph("bipartite2", 11)
    assert dag.m == 551
    assert len(dag.roots) == 61 and len(dag.leaves) == 490
    counts = Counter(len(dag.parents[v]) for v in range(61, 551))
    assert counts == {1: 370, 2: 120}
    assert all(len(dag.children[r]) == 10 for r in range(61))


def test_generate_graph_deterministic_in_seed():
    a = generate_graph("bipartite2", 123)
    b = generate_graph("bipartite2", 123)
    assert a.edges == b.edges
    assert generate_graph("bipartite1", 5).edges != generate_graph("bipartite1", 6).edges


def test_unknown_family():
    with pytest.raises(UnknownFamilyError):
        generate_graph("ladder")


def test_assign_truth_chain_propagation():
    dag = build_dag(3, [(0, 1), (1, 2)])
    truth = assign_truth(dag, 0.9, 0)   # the single leaf becomes non-null
    assert truth == {0, 1, 2}


def test_assign_truth_counts_and_heredity():
    dag = generate_graph("wide-tree")
    for seed, p in [(0, 0.1), (1, 0.3), (2, 0.5)]:
        truth = assign_truth(dag, p, seed)
        n_leaves = sum(1 for v in truth if not dag.children[v])
        assert n_leaves == round(p * 500)
        assert check_heredity(dag, truth)


def test_assign_truth_near_one_marks_every_root():
    dag = generate_graph("wide-tree")
    truth = assign_truth(dag, 0.999, 3)
    assert len(truth & set(dag.roots)) == 50


def test_signal_means_setups():
    dag = generate_graph("deep-tree")
    depths = compute_depths(dag)
    truth = frozenset(range(dag.m))
    mu_g = signal_means(depths, truth, "global")
    mu_d = signal_means(depths, truth, "decremental")
    mu_i = signal_means(depths, truth, "incremental")
    assert np.all(mu_g == 2.0)
    assert mu_d[0] == 2.0 and mu_d[554] == pytest.approx(2 + 1.5 * 2)
    assert mu_i[0] == pytest.approx(2 + 1.5 * 2) and mu_i[554] == 2.0


def test_null_pvalues_uniform():
    dag = build_dag(1, [])
    depths = compute_depths(dag)
    rng = np.random.default_rng(0)
    draws = np.array([sample_pvalues(dag, depths, frozenset(), "global",
                                     0.0, rng)[0] for _ in range(20_000)])
    assert stats.kstest(draws, "uniform").pvalue > 0.01


def test_signal_detection_rate_matches_closed_form():
    # P(p <= 0.05 | mu = 2) = Phi(2 - z_0.95)
    dag = build_dag(1, [])
    depths = compute_depths(dag)
    truth = frozenset({0})
    rng = np.random.default_rng(1)
    draws = np.array([sample_pvalues(dag, depths, truth, "global", 0.0, rng)[0]
                      for _ in range(20_000)])
    expected = 0.6387600313123353
    assert (draws <= 0.05).mean() == pytest.approx(expected, abs=0.012)


def test_equicorrelation_of_null_statistics():
    # X = (1-rho) Z + rho Z0 gives corr = rho^2 / ((1-rho)^2 + rho^2)
    dag = build_dag(2, [])
    depths = compute_depths(dag)
    rng = np.random.default_rng(2)
    n = 40_000
    xs = np.empty((n, 2))
    for r in range(n):
        p = sample_pvalues(dag, depths, frozenset(), "global", 0.2, rng)
        xs[r] = p
    z = stats.norm.ppf(1 - xs)
    got = np.corrcoef(z[:, 0], z[:, 1])[0, 1]
    assert got == pytest.approx(0.04 / 0.68, abs=0.012)


def test_rho_zero_equals_independent_model():
    dag = generate_graph("wide-tree")
    depths = compute_depths(dag)
    truth = assign_truth(dag, 0.3, 5)
    pv = sample_pvalues(dag, depths, truth, "decremental", 0.0, 7)
    rng = np.random.default_rng(7)
    rng.standard_normal()                     # the consumed shared draw
    z = rng.standard_normal(dag.m)
    mu = signal_means(depths, truth, "decremental")
    assert np.array_equal(pv, normal_cdf(-(mu + z)))


def test_rho_domain():
    dag = build_dag(1, [])
    depths = compute_depths(dag)
    with pytest.raises(RhoOutOfRangeError):
        sample_pvalues(dag, depths, frozenset(), "global", 1.0, 0)


def _small_config(**kw):
    base = dict(family="wide-tree", setup="global", p_nonnull=(0.3,),
                n_reps=8, seed=42,
                methods=(MethodSpec("bh"), MethodSpec("fbh", "trivial"),
                         MethodSpec("wfbh", "ds")))
    base.update(kw)
    return SimConfig(**base)


def test_bh_equals_unity_trivial_focused_history():
    summary = run_simulation(_small_config())
    h_bh = summary.histories[("bh+trivial", 0.3)]
    h_fbh = summary.histories[("fbh+trivial", 0.3)]
    assert np.array_equal(h_bh, h_fbh)


def test_run_simulation_deterministic():
    s1 = run_simulation(_small_config())
    s2 = run_simulation(_small_config())
    assert s1.cells == s2.cells
    for key in s1.histories:
        assert np.array_equal(s1.histories[key], s2.histories[key])


def test_run_simulation_worker_count_invariance():
    serial = run_simulation(_small_config(n_reps=6))
    parallel = run_simulation(_small_config(n_reps=6), n_workers=2)
    assert serial.cells == parallel.cells
    for key in serial.histories:
        assert np.array_equal(serial.histories[key], parallel.histories[key])


def test_replication_composition_with_smoothing():
    # pins the per-replication pipeline: draw, smooth, weight the smoothed
    # vector, run the filtered scan, score against the truth
    from focusfdr.dag import group_index
    from focusfdr.filters import FilterSpec
    from focusfdr.procedures import wfbh
    from focusfdr.simulate import _replicate
    from focusfdr.combine import smooth_all_descendants
    from focusfdr.weights import dag_weights

    cfg = SimConfig(family="wide-tree", setup="decremental", p_nonnull=(0.3,),
                    n_reps=1, seed=3, smoothing="fisher",
                    methods=(MethodSpec("wfbh", "ds"),))
    fdp, power = _replicate(cfg, 0, 0)[0]

    rng = np.random.default_rng([3, 0, 0])
    dag = generate_graph("wide-tree", rng)
    depths = compute_depths(dag)
    groups = group_index(dag, depths)
    truth = assign_truth(dag, 0.3, rng)
    pv = sample_pvalues(dag, depths, truth, "decremental", 0.0, rng)
    sm = smooth_all_descendants(dag, pv, Combiner("fisher"))
    wv = dag_weights(dag, depths, groups, sm, WeightConfig(lam=0.5, c=1))
    disc = wfbh(dag, sm, wv, FilterSpec("ds"), 0.05).discovery_set
    false = len(disc - truth)
    assert fdp == false / max(len(disc), 1)
    assert power == (len(disc) - false) / len(truth)


def test_smoothing_config_changes_results():
    plain = run_simulation(_small_config(setup="decremental"))
    smoothed = run_simulation(_small_config(setup="decremental",
                                            smoothing="fisher"))
    h1 = plain.histories[("wfbh+ds", 0.3)]
    h2 = smoothed.histories[("wfbh+ds", 0.3)]
    assert not np.array_equal(h1, h2)


def test_lambda_policy_q():
    cfg = _small_config(lambda_policy="q", q=0.05)
    assert cfg.resolved_lambda() == 0.05
    assert _small_config(lambda_policy="fixed:0.4").resolved_lambda() == 0.4


def test_condition1_unity_weights_exact():
    dag = generate_graph("wide-tree")
    res = condition1_check(dag, WeightConfig(dw="none"), frozenset(),
                           n_mc=50, seed=0)
    assert res.estimate == pytest.approx(550.0)
    assert res.se == pytest.approx(0.0)


def test_condition1_flat_group_bound():
    # 20 isolated roots form one group; all-null truth
    dag = build_dag(20, [])
    res = condition1_check(dag, WeightConfig(lam=0.5, c=1, dw="auto"),
                           frozenset(), n_mc=10_000, seed=1)
    assert res.estimate <= 20 + 3 * res.se
    assert res.n_nulls == 20


def test_condition1_with_signals_still_bounded():
    dag = generate_graph("wide-tree")
    truth = assign_truth(dag, 0.3, 9)
    res = condition1_check(dag, WeightConfig(lam=0.5, c=1, dw="auto"), truth,
                           n_mc=4000, seed=2, setup="decremental")
    assert res.estimate <= res.bound * (1 + 3 * res.se / res.estimate)


def test_condition1_random_tree_with_truth():
    rng = np.random.default_rng(10)
    m = 30
    dag = build_dag(m, [(int(rng.integers(0, j)), j) for j in range(1, m)])
    truth = assign_truth(dag, 0.4, 10)
    res = condition1_check(dag, WeightConfig(lam=0.5, c=1, dw="auto"), truth,
                           n_mc=10_000, seed=3)
    assert res.estimate <= res.bound + 3 * res.se


def test_resolve_workers_env(monkeypatch):
    from focusfdr.simulate import resolve_workers

    monkeypatch.delenv("FOCUSFDR_THREADS", raising=False)
    assert resolve_workers() == 1
    monkeypatch.setenv("FOCUSFDR_THREADS", "3")
    assert resolve_workers() == 3
    monkeypatch.setenv("FOCUSFDR_THREADS", "0")
    assert resolve_workers() >= 1
    assert resolve_workers(2) == 2


def test_superuniformity_leaves_exact():
    dag = build_dag(3, [(0, 1), (1, 2)])
    res = superuniformity_check(dag, Combiner("fisher"), n_mc=30_000, seed=3)
    # the leaf keeps its own uniform p-value: F(t) = t within noise both ways
    leaf_cdf = res.cdf[2]
    for j, t in enumerate(res.thresholds):
        assert abs(leaf_cdf[j] - t) <= 4 * res.se[j]


def test_superuniformity_chain_root_fisher_and_simes():
    dag = build_dag(3, [(0, 1), (1, 2)])
    for name in ("fisher", "simes"):
        res = superuniformity_check(dag, Combiner.from_name(name),
                                    n_mc=30_000, seed=4)
        assert res.max_excess_z() <= 3.5
