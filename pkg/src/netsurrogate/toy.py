"""Small reference networks used by tests, scripts and the README.

Vertex labels in the comments are 1-based; ids are 0-based.
"""
import numpy as np

from .graph import WeightedGraph

# Six people, seven call-duration edges (hours over one day). Node weights
# 13.5, 5.5, 12.0, 17.0, 8.0, 13.0. The node weights leave one free
# parameter t in [1, 9] (w13 = t-1, w16 = 13-t, w34 = 9-t, w46 = t); the
# observed network uses t = 6.
PHONE_EDGES = np.array([(1, 2), (1, 3), (1, 6), (2, 3), (3, 4), (4, 5), (4, 6)]) - 1
PHONE_WEIGHTS = np.array([1.5, 5.0, 7.0, 4.0, 3.0, 8.0, 6.0])
PHONE_NODE_WEIGHTS = np.array([13.5, 5.5, 12.0, 17.0, 8.0, 13.0])


def phone_network(case: int = 1) -> WeightedGraph:
    """Case 1: exact node weights, edges in [0, 24]. Case 2: edges and nodes in [0, 24]."""
    if case == 1:
        return WeightedGraph(6, PHONE_EDGES, PHONE_WEIGHTS, [0.0, 24.0])
    if case == 2:
        return WeightedGraph(6, PHONE_EDGES, PHONE_WEIGHTS, [0.0, 24.0], [0.0, 24.0])
    raise ValueError("case must be 1 or 2")


# Phone network plus self-loops on nodes 1 and 6, in the column order
# {1},{1,2},{1,3},{1,6},{2,3},{3,4},{4,5},{4,6},{6}.
LOOPED_EDGES = np.array([(1, 1), (1, 2), (1, 3), (1, 6), (2, 3), (3, 4), (4, 5), (4, 6), (6, 6)]) - 1
LOOPED_TREE = [2, 4, 5, 6, 7]  # {1,3},{2,3},{3,4},{4,5},{4,6}
LOOPED_ROOT = 2  # vertex 3


def looped_phone_graph() -> WeightedGraph:
    w = np.array([0.0, 1.5, 5.0, 7.0, 4.0, 3.0, 8.0, 6.0, 0.0])
    return WeightedGraph(6, LOOPED_EDGES, w, [-24.0, 24.0])


def path3() -> WeightedGraph:
    """Path 1-2-3 with weights 0.3, 0.6; edges in [0, 1], nodes in [0.25, 1.5]."""
    return WeightedGraph(3, [(0, 1), (1, 2)], [0.3, 0.6], [0.0, 1.0], [0.25, 1.5])


def random_bipartite(n_edges: int, n_vertices: int, seed: int = 0, edge_bounds=(0.0, 10.0)) -> WeightedGraph:
    """Sparse random bipartite graph with distinct edges and weights in [0.5, 5].

    Vertices 0..h-1 form one side and h..n_vertices-1 the other, h = n_vertices // 2.
    """
    rng = np.random.default_rng(seed)
    h = n_vertices // 2
    k = n_vertices - h
    if n_edges > h * k:
        raise ValueError(f"at most {h * k} distinct edges fit")
    keys = np.empty(0, dtype=np.int64)
    while keys.size < n_edges:
        draw = rng.integers(0, h, 2 * n_edges) * k + rng.integers(0, k, 2 * n_edges)
        keys = np.unique(np.concatenate([keys, draw]))
    keys = rng.permutation(keys)[:n_edges]
    edges = np.column_stack([keys // k, h + keys % k])
    return WeightedGraph(n_vertices, edges, rng.uniform(0.5, 5.0, n_edges), list(edge_bounds))
