import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bootperc.engine import (
    EXACT_DIAMETER_LIMIT,
    PercolationResult,
    classify_outcome,
    infect_ball,
    result_summary,
    run_bootstrap,
    simulate_instance,
    threshold_count,
    uninfected_components,
    write_summary_json,
)
from bootperc.geometry import Space
from bootperc.rgg import build_rgg
from bootperc.sampler import MarkedPointSet, ModelParams
from oracles import brute_adjacency, sync_fixpoint, torus_dist, union_find_components


def graph_of(pos, side, dim, r, marks=None):
    pos = np.asarray(pos, float).reshape(-1, dim)
    marks = np.zeros(len(pos), bool) if marks is None else np.asarray(marks, bool)
    return build_rgg(MarkedPointSet(Space(dim, side), pos, marks), r)


def random_instance(rng, max_n=500):
    dim = int(rng.integers(1, 3))
    n = int(rng.integers(0, max_n + 1))
    side = float(rng.uniform(8, 30)) if dim == 2 else float(rng.uniform(40, 200))
    r = float(rng.uniform(0.5, 0.24 * side)) if dim == 1 else float(rng.uniform(0.5, 3.0))
    pos = rng.random((n, dim)) * side
    marks = rng.random(n) < rng.uniform(0, 0.6)
    return graph_of(pos, side, dim, min(r, 0.24 * side), marks), pos, side


# -- threshold ----------------------------------------------------------------------


def test_threshold_count():
    assert threshold_count(ModelParams(2, 0.1, 0.0, 100)) == 0
    assert threshold_count(ModelParams(2, 0.1, 0.5, math.exp(5))) == 5
    assert threshold_count(ModelParams(2, 0.1, 0.5, 1e5)) == math.ceil(math.log(1e5)) == 12


# -- dynamics -------------------------------------------------------------------------


def test_k_zero_infects_everything():
    g = graph_of([[1, 1], [5, 5]], 20.0, 2, 1.0)
    res = run_bootstrap(g, 0, np.zeros(2, bool))
    assert res.a_infinity.all() and res.uninfected_count == 0


def test_all_initial_is_fixpoint():
    g = graph_of([[1, 1], [1.5, 1], [5, 5]], 20.0, 2, 1.0)
    res = run_bootstrap(g, 1, np.ones(3, bool), record_rounds=True)
    assert res.newly_infected_count == 0 and res.round_sizes == [3]


def test_hand_traced_rounds():
    g = graph_of([0, 1, 2, 3, 4], 10.0, 1, 2.1)
    res = run_bootstrap(g, 2, [True, True, False, False, False], record_rounds=True)
    assert res.a_infinity.all()
    assert res.round_sizes == [2, 3, 4, 5]
    assert res.rounds == 3


def test_initial_shape_checked():
    g = graph_of([0, 1], 10.0, 1, 2.1)
    with pytest.raises(ValueError):
        run_bootstrap(g, 1, [True])


@settings(max_examples=60)
@given(st.integers(0, 2**32 - 1))
def test_queue_matches_synchronous_oracle(seed):
    rng = np.random.default_rng(seed)
    g, pos, side = random_instance(rng, 300)
    k = int(rng.integers(0, 8))
    init = g.points.marks
    res = run_bootstrap(g, k, init, record_rounds=True)
    want, sizes = sync_fixpoint(brute_adjacency(pos, side, g.r), k, init)
    assert np.array_equal(res.a_infinity, want)
    if k > 0:
        assert res.round_sizes == sizes
    assert all(b > a for a, b in zip(res.round_sizes, res.round_sizes[1:]))
    assert res.newly_infected_count + int(init.sum()) + res.uninfected_count == g.n_vertices


@settings(max_examples=40)
@given(st.integers(0, 2**32 - 1))
def test_monotone_and_idempotent(seed):
    rng = np.random.default_rng(seed)
    g, _, _ = random_instance(rng, 300)
    k = int(rng.integers(1, 6))
    small = g.points.marks
    big = small | (rng.random(g.n_vertices) < 0.1)
    a_small = run_bootstrap(g, k, small).a_infinity
    a_big = run_bootstrap(g, k, big).a_infinity
    assert np.all(a_big[a_small])
    a_harder = run_bootstrap(g, k + 1, small).a_infinity
    assert np.all(a_small[a_harder])
    again = run_bootstrap(g, k, a_small)
    assert np.array_equal(again.a_infinity, a_small) and again.newly_infected_count == 0


# -- adversarial ball ---------------------------------------------------------------


def test_infect_ball():
    pts = MarkedPointSet(Space(2, 10.0), [[1, 1], [5, 5], [9.5, 9.5]], [True, False, False])
    assert np.array_equal(infect_ball(pts, (5, 5), 0.0), pts.marks)
    assert infect_ball(pts, (5, 5), 10.0).all()
    # the ball wraps: (0.2, 0.2) is within 1.1 of (9.5, 9.5)
    assert infect_ball(pts, (0.2, 0.2), 1.1).tolist() == [True, False, True]
    with pytest.raises(ValueError):
        infect_ball(pts, (5, 5), -1.0)


def test_infect_ball_brute_force():
    rng = np.random.default_rng(4)
    pos = rng.random((2000, 2)) * 30
    pts = MarkedPointSet(Space(2, 30.0), pos, np.zeros(2000, bool))
    c = np.array([29.0, 1.0])
    got = infect_ball(pts, c, 4.5)
    want = np.array([torus_dist(30.0, x, c) < 4.5 for x in pos])
    assert np.array_equal(got, want)


# -- uninfected components -------------------------------------------------------------


def test_components_full_percolation():
    g = graph_of([[1, 1], [1.5, 1]], 10.0, 2, 1.0)
    assert uninfected_components(g, run_bootstrap(g, 0, [False, False])).components == []


def test_components_isolated():
    g = graph_of([[1, 1], [5, 5], [8, 2]], 20.0, 2, 1.0)
    rep = uninfected_components(g, run_bootstrap(g, 1, [False] * 3))
    assert rep.sizes == [1, 1, 1]
    assert all(c.diameter == 0 for c in rep.components)


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1))
def test_components_match_union_find(seed):
    rng = np.random.default_rng(seed)
    g, pos, side = random_instance(rng, 300)
    res = run_bootstrap(g, int(rng.integers(1, 5)), g.points.marks)
    rep = uninfected_components(g, res)
    groups = union_find_components(brute_adjacency(pos, side, g.r), ~res.a_infinity)
    assert rep.sizes == [len(m) for m in groups]
    assert sum(rep.sizes) == res.uninfected_count
    # diameters: brute-force max pairwise distance per component
    want = sorted(
        (len(m), max((torus_dist(side, pos[i], pos[j]) for i in m for j in m), default=0.0)) for m in groups
    )
    got = sorted((c.size, c.diameter) for c in rep.components)
    for (s1, d1), (s2, d2) in zip(got, want):
        assert s1 == s2 and d1 == pytest.approx(d2, abs=1e-9)


def test_large_component_uses_box_bound():
    # a dense cluster above the exact limit gets a bounding-box diameter
    rng = np.random.default_rng(0)
    pos = 50 + rng.random((EXACT_DIAMETER_LIMIT + 50, 2)) * 5
    g = graph_of(pos, 200.0, 2, 1.0)
    rep = uninfected_components(g, run_bootstrap(g, 10**6, np.zeros(len(pos), bool)))
    big = rep.components[0]
    assert not big.exact
    assert big.diameter >= 5 * 0.95 and big.diameter <= 5 * math.sqrt(2) + 1e-9


# -- labels ------------------------------------------------------------------------------


def fake(count, newly, left):
    a = np.zeros(count, bool)
    a[: count - left] = True
    return PercolationResult(1, a, newly, left)


def test_classify_outcome():
    assert classify_outcome(fake(1000, 0, 500)) == "none"
    assert classify_outcome(fake(1000, 300, 0)) == "full"
    assert classify_outcome(fake(1000, 5, 600), frac_tol=0.05) == "almost-none"
    assert classify_outcome(fake(1000, 600, 20), frac_tol=0.05) == "almost-full"
    assert classify_outcome(fake(1000, 400, 300), frac_tol=0.05) == "partial"
    assert classify_outcome(fake(0, 0, 0)) == "full"
    with pytest.raises(ValueError):
        classify_outcome(fake(10, 1, 1), frac_tol=0.5)


def test_summary_json(tmp_path):
    inst = simulate_instance(ModelParams(2, 0.5, 0.4, 2000, 2, 3), record_rounds=True)
    rep = uninfected_components(inst.graph, inst.result)
    s = result_summary(inst.result, inst.label, rep)
    write_summary_json(s, tmp_path / "s.json")
    back = json.loads((tmp_path / "s.json").read_text())
    assert set(back) == {"n_points", "k", "newly_infected", "uninfected", "rounds", "label", "components"}
    assert back["uninfected"] == sum(c["size"] for c in back["components"])
