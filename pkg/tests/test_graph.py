import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netsurrogate.graph import (DirectedWeightedGraph, WeightedGraph, component_labels,
                                connected_components, directed_to_bipartite, incidence_matrix,
                                map_back, to_equality_form, validate, vertex_weight)
from netsurrogate.toy import PHONE_NODE_WEIGHTS, looped_phone_graph, phone_network

from strategies import connected_graphs, interval_problems, random_digraph


def test_phone_node_weights():
    g = phone_network(1)
    assert vertex_weight(g, 3) == 17.0
    np.testing.assert_array_equal(g.vertex_weights(), PHONE_NODE_WEIGHTS)


def test_isolated_vertex_weighs_zero():
    g = WeightedGraph(3, [(0, 1)], [2.0])
    assert vertex_weight(g, 2) == 0.0


def test_self_loop_counts_twice():
    g = WeightedGraph(1, [(0, 0)], [1.5], [-5, 5])
    assert vertex_weight(g, 0) == 3.0


def test_vertex_weight_out_of_range():
    with pytest.raises(IndexError):
        vertex_weight(phone_network(1), 6)


def test_duplicate_edges_rejected():
    with pytest.raises(ValueError, match="duplicate"):
        WeightedGraph(3, [(0, 1), (1, 2), (1, 0)], [1, 1, 1])


def test_validate_phone_ok():
    assert validate(phone_network(1)).ok


def test_validate_reports_edge_violation():
    g = phone_network(1)
    b = g.edge_bounds.copy()
    b[4] = (0, 2.0)  # {3,4} has weight 3
    rep = validate(g.with_bounds(edge_bounds=b))
    assert not rep
    assert [v[0] for v in rep.edge_violations] == [4]
    assert rep.vertex_violations == []


def test_validate_empty_graph():
    assert validate(WeightedGraph(0, np.zeros((0, 2)), [])).ok


def test_incidence_matches_looped_table():
    A = incidence_matrix(looped_phone_graph()).toarray().astype(int)
    expected = np.array([
        [2, 1, 1, 1, 0, 0, 0, 0, 0],
        [0, 1, 0, 0, 1, 0, 0, 0, 0],
        [0, 0, 1, 0, 1, 1, 0, 0, 0],
        [0, 0, 0, 0, 0, 1, 1, 1, 0],
        [0, 0, 0, 0, 0, 0, 1, 0, 0],
        [0, 0, 0, 1, 0, 0, 0, 1, 2],
    ])
    np.testing.assert_array_equal(A, expected)


def test_equality_form_loop_bounds():
    g = WeightedGraph(2, [(0, 1)], [10.0], [0, 20], [[8, 12], [10, 10]])
    p = to_equality_form(g)
    assert p.graph.edge_count == 2
    np.testing.assert_array_equal(p.graph.edges[1], [0, 0])
    np.testing.assert_array_equal(p.graph.edge_bounds[1], [-1.0, 1.0])
    assert p.loop_of_vertex.tolist() == [1, -1]
    assert p.graph.weight[1] == 0.0


def test_equality_form_phone_case2():
    p = to_equality_form(phone_network(2))
    assert p.graph.edge_count == 7 + 6
    loop = p.loop_of_vertex[1]
    np.testing.assert_array_equal(p.graph.edge_bounds[loop], [-9.25, 2.75])
    assert np.all(p.residual(p.graph.weight) == 0)


def test_equality_form_rejects_infeasible():
    g = WeightedGraph(2, [(0, 1)], [10.0], [0, 5])
    with pytest.raises(ValueError, match="infeasible"):
        to_equality_form(g)


def test_equality_form_rejects_loop_with_interval():
    g = WeightedGraph(2, [(0, 1), (0, 0)], [1.0, 1.0], [0, 5], [[0, 9], [1, 1]])
    with pytest.raises(ValueError, match="self-loop"):
        to_equality_form(g)


@given(interval_problems())
@settings(max_examples=60, deadline=None)
def test_equality_form_projection_round_trip(g):
    # any state of the equality problem, projected, satisfies the original intervals
    p = to_equality_form(g)
    n = g.edge_count
    assert validate(p.graph).ok
    rng = np.random.default_rng(n)
    for _ in range(20):
        loops = p.graph.edge_bounds[n:]
        t = rng.random(loops.shape[0])
        lw = loops[:, 0] + t * (loops[:, 1] - loops[:, 0])
        # move loops, then re-balance via the vertex equalities: W_orig = target - 2*loop
        W_orig = p.vertex_target.copy()
        for k, v in enumerate(p.graph.edges[n:, 0]):
            W_orig[v] -= 2 * lw[k]
        lo, hi = g.vertex_bounds[:, 0], g.vertex_bounds[:, 1]
        assert np.all(W_orig >= lo - 1e-9) and np.all(W_orig <= hi + 1e-9)


def test_single_arc_to_bipartite():
    d = DirectedWeightedGraph(2, [(0, 1)], [3.0])
    g, mp = directed_to_bipartite(d)
    assert g.vertex_count == 4
    np.testing.assert_array_equal(g.edges, [[0, 3]])


def test_two_cycle_has_distinct_images():
    d = DirectedWeightedGraph(2, [(0, 1), (1, 0)], [1.0, 2.0])
    g, _ = directed_to_bipartite(d)
    np.testing.assert_array_equal(g.edges, [[0, 3], [1, 2]])


def test_directed_triangle():
    d = DirectedWeightedGraph(3, [(0, 1), (1, 2), (2, 0)], [1.0, 2.0, 4.0])
    g, _ = directed_to_bipartite(d)
    assert g.vertex_count == 6
    np.testing.assert_array_equal(g.edges, [[0, 4], [1, 5], [2, 3]])
    assert g.vertex_weights()[0] == d.out_weights()[0] == 1.0
    np.testing.assert_array_equal(g.vertex_weights()[3:], d.in_weights())


@given(st.integers(0, 2**31))
@settings(max_examples=30, deadline=None)
def test_bipartite_twin_parity_colouring(seed):
    rng = np.random.default_rng(seed)
    d = random_digraph(rng, int(rng.integers(2, 8)), int(rng.integers(1, 20)))
    g, mp = directed_to_bipartite(d)
    side = g.edges >= mp.vertex_offset
    assert np.all(side[:, 0] != side[:, 1])
    np.testing.assert_array_equal(map_back(g.weight, mp), d.weight)


def test_map_back_missing_edges():
    d = DirectedWeightedGraph(3, [(0, 1), (1, 2)], [1.0, 2.0])
    _, mp = directed_to_bipartite(d)
    with pytest.raises(ValueError):
        map_back([1.0], mp)


def test_map_back_empty():
    d = DirectedWeightedGraph(2, np.zeros((0, 2)), [])
    _, mp = directed_to_bipartite(d)
    assert map_back([], mp).shape == (0,)


def test_looped_graph_is_one_component():
    comps = connected_components(looped_phone_graph())
    assert len(comps) == 1
    assert comps[0].vertices.shape[0] == 6 and comps[0].edges.shape[0] == 9


def test_two_disjoint_edges():
    comps = connected_components(WeightedGraph(4, [(0, 1), (2, 3)], [1, 1]))
    assert [c.vertices.tolist() for c in comps] == [[0, 1], [2, 3]]
    assert [c.edges.tolist() for c in comps] == [[0], [1]]


def _union_find_count(m, edges):
    parent = list(range(m))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x
    for u, v in edges:
        parent[find(u)] = find(v)
    return len({find(x) for x in range(m)})


def test_large_random_forest_component_count():
    rng = np.random.default_rng(7)
    m = 100_000
    # attach each vertex to an earlier one unless it starts a new tree
    starts = rng.random(m) < 0.01
    starts[0] = True
    child = np.flatnonzero(~starts)
    par = (rng.random(child.shape[0]) * child).astype(np.int64)
    g = WeightedGraph(m, np.column_stack([par, child]), np.ones(child.shape[0]))
    n, _ = component_labels(g)
    assert n == int(starts.sum())
    assert n == _union_find_count(m, g.edges.tolist())


@given(connected_graphs())
@settings(max_examples=50, deadline=None)
def test_validate_ok_iff_no_violations(g):
    rep = validate(g)
    assert rep.ok == (not rep.edge_violations and not rep.vertex_violations)
    assert rep.ok  # generated graphs are feasible by construction
