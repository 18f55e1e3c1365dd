import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from netsurrogate.cycles import CycleVector
from netsurrogate.graph import WeightedGraph, to_equality_form
from netsurrogate.sampler import (InfeasibleError, UnboundedError, alpha_interval,
                                  feasible_interval, init_chain, propose_generator, run, step)
from netsurrogate.toy import (LOOPED_ROOT, PHONE_NODE_WEIGHTS, PHONE_WEIGHTS, looped_phone_graph,
                              path3, phone_network)

from strategies import interval_problems


def _sq(x, y, z, w):
    return WeightedGraph(4, [(0, 1), (1, 2), (2, 3), (3, 0)], [x, y, z, w], [0, 10])


def test_phone_chain_dimensions():
    s = init_chain(phone_network(1), seed=0)
    assert s.catalogs.null_dim == 1
    assert s.catalogs.generator_count == 1
    assert s.sweep_length == 1
    np.testing.assert_array_equal(s.weights, PHONE_WEIGHTS)


def test_path3_start_state():
    s = init_chain(path3(), seed=0)
    assert s.problem.graph.edge_count == 5
    np.testing.assert_array_equal(s.weights, [0.3, 0.6, 0, 0, 0])
    assert s.sweep_length == 2


def test_tree_chain_is_frozen(caplog):
    g = WeightedGraph(3, [(0, 1), (1, 2)], [1.0, 2.0])
    s = init_chain(g, seed=1)
    assert s.pool_size == 0 and s.degenerate
    assert propose_generator(s) is None
    snaps = []
    summary = run(s, 3, sink=lambda i, w: snaps.append(w))
    assert summary.completed and summary.noop_steps == 3
    assert all(np.array_equal(w, [1.0, 2.0]) for w in snaps) and len(snaps) == 3
    assert "degenerate" in caplog.text


def test_infeasible_start_names_constraint():
    g = WeightedGraph(2, [(0, 1)], [5.0], [0, 4])
    with pytest.raises(InfeasibleError, match="edge 0"):
        init_chain(g)


def test_looped_generators_uniform():
    s = init_chain(to_equality_form(looped_phone_graph()), seed=11, roots=[LOOPED_ROOT])
    assert s.pool_size == 4
    keys = {}
    for _ in range(8000):
        y = propose_generator(s)
        k = tuple(sorted(y.as_dict().items()))
        keys[k] = keys.get(k, 0) + 1
    assert len(keys) == 4
    assert stats.chisquare(list(keys.values())).pvalue > 1e-3


def test_three_dirty_edges_give_three_pairs():
    # triangle with loops on two corners: all three off-tree edges are dirty
    g = WeightedGraph(3, [(0, 1), (1, 2), (2, 0), (0, 0), (1, 1)], [1, 1, 1, 0, 0], [-5, 5])
    s = init_chain(to_equality_form(g), seed=3)
    assert s.catalogs.n_clean == 0 and s.pool_size == 3
    counts = {}
    for _ in range(6000):
        k = tuple(sorted(propose_generator(s).as_dict().items()))
        counts[k] = counts.get(k, 0) + 1
    assert len(counts) == 3
    assert stats.chisquare(list(counts.values())).pvalue > 1e-3


def test_c4_single_generator():
    s = init_chain(_sq(1, 2, 3, 4), seed=0)
    first = propose_generator(s)
    assert all(propose_generator(s) == first for _ in range(50))


def test_interval_single_box():
    y = CycleVector([0], [1])
    assert feasible_interval([0.3], np.array([[0.0, 1.0]]), y) == pytest.approx((-0.3, 0.7))


def test_interval_coefficient_minus_two():
    y = CycleVector([0], [-2])
    assert feasible_interval([0.3], np.array([[0.0, 1.0]]), y) == pytest.approx((-0.35, 0.15))


def test_interval_of_clean_cycle_on_box():
    # clean cycle through {1,3},{1,6},{3,4},{4,6} with those weights 5.5, 4, 7, 6
    y = CycleVector.from_dense([0, 0, -1, 1, 0, 1, 0, -1, 0])
    w = np.zeros(9)
    w[[2, 3, 5, 7]] = [5.5, 4.0, 7.0, 6.0]
    bounds = np.tile([0.0, 24.0], (9, 1))
    assert feasible_interval(w, bounds, y) == (-4.0, 5.5)


def test_interval_always_contains_zero():
    # the observed point sits on a bound: interval degenerates to a side of 0
    s = init_chain(_sq(0.0, 2, 0.0, 2), seed=0)
    lo, hi = alpha_interval(s, s.catalogs.generator(0))
    assert lo <= 0 <= hi and lo * hi == 0


@given(interval_problems(), st.integers(0, 1000), st.floats(0, 1))
@settings(max_examples=80, deadline=None)
def test_interval_shift_identity(g, seed, t):
    # reversibility: moving by alpha shifts the interval by -alpha
    s = init_chain(g, seed=seed)
    if s.pool_size == 0:
        return
    run(s, 3)
    y = propose_generator(s)
    lo, hi = alpha_interval(s, y)
    alpha = lo + t * (hi - lo)
    w2 = s.weights + alpha * y.to_dense(s.weights.shape[0])
    lo2, hi2 = feasible_interval(w2, s.problem.graph.edge_bounds, y)
    scale = max(1.0, hi - lo)
    assert lo2 == pytest.approx(lo - alpha, abs=1e-9 * scale)
    assert hi2 == pytest.approx(hi - alpha, abs=1e-9 * scale)


def test_steps_stay_in_path3_polygon():
    s = init_chain(path3(), seed=5)
    n = s.problem.origin_edge_count
    for _ in range(2000):
        rec = step(s)
        assert rec.interval[0] <= rec.alpha <= rec.interval[1]
        assert rec.interval[0] <= 0 <= rec.interval[1]
        x, y = s.weights[:n]
        assert 0 <= x <= 1 and 0 <= y <= 1
        assert 0.25 - 1e-12 <= x and 0.25 - 1e-12 <= y and x + y <= 1.5 + 1e-12


def test_long_run_drift():
    s = init_chain(phone_network(2), seed=2)
    summary = run(s, 1000, steps_per_sample=1000)
    assert summary.steps == 10**6
    assert summary.max_drift < 1e-8
    assert s.drift() < 1e-8


def test_exact_node_weights_preserved():
    s = init_chain(phone_network(1), seed=9)
    g = phone_network(1)
    out = []
    run(s, 500, sink=lambda i, w: out.append(g.vertex_weights(w)))
    np.testing.assert_allclose(np.array(out), np.tile(PHONE_NODE_WEIGHTS, (500, 1)), atol=1e-8)


def test_determinism_and_seed_sensitivity():
    def draw(seed):
        s = init_chain(phone_network(2), seed=seed)
        out = []
        run(s, 50, sink=lambda i, w: out.append(w.copy()))
        return np.array(out)
    a, b, c = draw(4), draw(4), draw(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_snapshots_are_read_only():
    s = init_chain(phone_network(1), seed=0)
    got = []
    run(s, 1, sink=lambda i, w: got.append(w))
    with pytest.raises(ValueError):
        got[0][0] = 1.0


def test_sink_failure_stops_run():
    s = init_chain(phone_network(1), seed=0)

    def sink(i, w):
        if i == 2:
            raise OSError("disk full")
    summary = run(s, 10, sink=sink)
    assert not summary.completed
    assert summary.samples_emitted == 2
    assert "disk full" in summary.error


def test_progress_callback():
    s = init_chain(phone_network(1), seed=0)
    calls = []
    run(s, 10, progress=lambda *a: calls.append(a), progress_every=5)
    assert [c[1] for c in calls] == [5, 10]
    assert calls[-1][0] == 10


def test_unbounded_direction():
    g = WeightedGraph(4, [(0, 1), (1, 2), (2, 3), (3, 0)], [1, 1, 1, 1], [-np.inf, np.inf])
    with pytest.raises(UnboundedError):
        run(init_chain(g, seed=0), 1)


def test_run_rejects_bad_counts():
    s = init_chain(phone_network(1))
    with pytest.raises(ValueError):
        run(s, 0)
    with pytest.raises(ValueError):
        run(s, 1, steps_per_sample=0)


def test_summary_stats_add_up():
    s = init_chain(to_equality_form(looped_phone_graph().with_bounds(edge_bounds=[-24, 24])), seed=1)
    summary = run(s, 100, steps_per_sample=7)
    assert summary.steps == 700 == s.steps_taken
    assert summary.clean_steps + summary.pair_steps + summary.noop_steps == 700
    assert summary.pair_steps > summary.clean_steps
    assert 0 < summary.mean_abs_alpha <= summary.mean_width


@given(interval_problems())
@settings(max_examples=60, deadline=None)
def test_feasibility_invariant(g):
    s = init_chain(g, seed=0)
    lo, hi = g.vertex_bounds[:, 0], g.vertex_bounds[:, 1]

    def sink(i, w):
        assert np.all(w >= g.edge_bounds[:, 0]) and np.all(w <= g.edge_bounds[:, 1])
        vw = g.vertex_weights(w)
        tol = 1e-9 * np.maximum(1, np.abs(vw))
        assert np.all(vw >= lo - tol) and np.all(vw <= hi + tol)
    summary = run(s, 100, sink=sink)
    assert summary.completed, summary.error
