"""Weighted graphs with interval constraints, and their reformulations.

Vertex and edge ids are dense 0-based integers. An edge is stored as an
(u, v) row; u == v marks a self-loop, which only the equality-form
transformation is allowed to introduce. A self-loop enters its vertex's
weight with coefficient 2, matching the incidence matrix convention
A[v, e] = 2 * [v in e] / |e|.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components as _cc


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


def _bounds(b, n, default):
    if b is None:
        return _frozen(np.tile(default, (n, 1)).reshape(n, 2), np.float64)
    b = np.asarray(b, dtype=np.float64)
    if b.shape == (2,):
        b = np.tile(b, (n, 1))
    if b.shape != (n, 2):
        raise ValueError(f"bounds must have shape ({n}, 2), got {b.shape}")
    return _frozen(b, np.float64)


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Undirected edge-weighted graph with edge and vertex intervals.

    `edge_bounds[e] = (a(e), b(e))`, `vertex_bounds[v] = (A(v), B(v))`.
    Missing edge bounds default to [0, inf); missing vertex bounds default
    to the observed vertex weights (exact preservation).
    """

    vertex_count: int
    edges: np.ndarray
    weight: np.ndarray
    edge_bounds: np.ndarray = None
    vertex_bounds: np.ndarray = None

    def __post_init__(self):
        if self.vertex_count < 0:
            raise ValueError("vertex_count must be non-negative")
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        n = edges.shape[0]
        weight = np.asarray(self.weight, dtype=np.float64).reshape(-1)
        if weight.shape[0] != n:
            raise ValueError(f"{n} edges but {weight.shape[0]} weights")
        if n and (edges.min() < 0 or edges.max() >= self.vertex_count):
            raise ValueError("edge endpoint out of range")
        if n:
            lo, hi = np.minimum(edges[:, 0], edges[:, 1]), np.maximum(edges[:, 0], edges[:, 1])
            _, first = np.unique(lo * self.vertex_count + hi, return_index=True)
            if first.shape[0] != n:
                dup = np.setdiff1d(np.arange(n), first)[0]
                raise ValueError(f"duplicate edge {tuple(edges[dup])} at index {dup}")
        object.__setattr__(self, "edges", _frozen(edges, np.int64))
        object.__setattr__(self, "weight", _frozen(weight, np.float64))
        object.__setattr__(self, "edge_bounds", _bounds(self.edge_bounds, n, [0.0, np.inf]))
        if self.vertex_bounds is None:
            w = self.vertex_weights()
            vb = np.column_stack([w, w])
        else:
            vb = self.vertex_bounds
        object.__setattr__(self, "vertex_bounds", _bounds(vb, self.vertex_count, [0.0, 0.0]))

    @property
    def edge_count(self) -> int:
        return self.edges.shape[0]

    @cached_property
    def is_loop(self) -> np.ndarray:
        return self.edges[:, 0] == self.edges[:, 1]

    def vertex_weights(self, w=None) -> np.ndarray:
        """All vertex weights under edge weights `w` (default: observed)."""
        w = self.weight if w is None else np.asarray(w, dtype=np.float64)
        m = self.vertex_count
        return (np.bincount(self.edges[:, 0], weights=w, minlength=m)
                + np.bincount(self.edges[:, 1], weights=w, minlength=m))

    @cached_property
    def adjacency(self):
        """CSR adjacency (ptr, neighbour, edge id); each row in edge-id order."""
        n = self.edge_count
        src = self.edges.reshape(-1)
        dst = self.edges[:, ::-1].reshape(-1)
        eid = np.repeat(np.arange(n, dtype=np.int64), 2)
        order = np.argsort(src, kind="stable")
        ptr = np.zeros(self.vertex_count + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=self.vertex_count), out=ptr[1:])
        return ptr, dst[order], eid[order]

    def with_bounds(self, edge_bounds=None, vertex_bounds=None) -> "WeightedGraph":
        return WeightedGraph(
            self.vertex_count, self.edges, self.weight,
            self.edge_bounds if edge_bounds is None else edge_bounds,
            self.vertex_bounds if vertex_bounds is None else vertex_bounds,
        )


@dataclass(frozen=True, eq=False)
class DirectedWeightedGraph:
    """Directed edge-weighted graph with out- and in-weight intervals."""

    vertex_count: int
    edges: np.ndarray
    weight: np.ndarray
    edge_bounds: np.ndarray = None
    out_bounds: np.ndarray = None
    in_bounds: np.ndarray = None

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        n = edges.shape[0]
        weight = np.asarray(self.weight, dtype=np.float64).reshape(-1)
        if weight.shape[0] != n:
            raise ValueError(f"{n} edges but {weight.shape[0]} weights")
        if n and (edges.min() < 0 or edges.max() >= self.vertex_count):
            raise ValueError("edge endpoint out of range")
        if n and np.unique(edges[:, 0] * self.vertex_count + edges[:, 1]).shape[0] != n:
            raise ValueError("duplicate directed edge")
        object.__setattr__(self, "edges", _frozen(edges, np.int64))
        object.__setattr__(self, "weight", _frozen(weight, np.float64))
        object.__setattr__(self, "edge_bounds", _bounds(self.edge_bounds, n, [0.0, np.inf]))
        wo, wi = self.out_weights(), self.in_weights()
        ob = np.column_stack([wo, wo]) if self.out_bounds is None else self.out_bounds
        ib = np.column_stack([wi, wi]) if self.in_bounds is None else self.in_bounds
        object.__setattr__(self, "out_bounds", _bounds(ob, self.vertex_count, [0.0, 0.0]))
        object.__setattr__(self, "in_bounds", _bounds(ib, self.vertex_count, [0.0, 0.0]))

    @property
    def edge_count(self) -> int:
        return self.edges.shape[0]

    def out_weights(self, w=None) -> np.ndarray:
        w = self.weight if w is None else np.asarray(w, dtype=np.float64)
        return np.bincount(self.edges[:, 0], weights=w, minlength=self.vertex_count)

    def in_weights(self, w=None) -> np.ndarray:
        w = self.weight if w is None else np.asarray(w, dtype=np.float64)
        return np.bincount(self.edges[:, 1], weights=w, minlength=self.vertex_count)


@dataclass(frozen=True, eq=False)
class EqualityProblem:
    """Graph whose vertex weights are pinned to `vertex_target`.

    Edges 0..origin_edge_count-1 are the input edges; the rest are slack
    self-loops, listed in `loop_of_vertex` (vertex -> edge id, -1 if none).
    """

    graph: WeightedGraph
    vertex_target: np.ndarray
    loop_of_vertex: np.ndarray
    origin_edge_count: int

    @property
    def original_edges(self) -> np.ndarray:
        return self.graph.edges[: self.origin_edge_count]

    def residual(self, w) -> np.ndarray:
        """Incidence image of `w` minus the vertex targets."""
        return self.graph.vertex_weights(w) - self.vertex_target


@dataclass(frozen=True, eq=False)
class EdgeMapping:
    """Bipartite edge i corresponds to directed edge forward[i]."""

    forward: np.ndarray
    vertex_offset: int


@dataclass
class ValidationReport:
    edge_violations: list = field(default_factory=list)
    vertex_violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.edge_violations and not self.vertex_violations

    def __bool__(self):
        return self.ok

    def lines(self):
        for e, val, lo, hi in self.edge_violations:
            yield f"edge {e}: weight {val!r} outside [{lo!r}, {hi!r}]"
        for v, val, lo, hi in self.vertex_violations:
            yield f"vertex {v}: weight {val!r} outside [{lo!r}, {hi!r}]"


@dataclass(frozen=True)
class Component:
    vertices: np.ndarray
    edges: np.ndarray


def vertex_weight(graph: WeightedGraph, v: int) -> float:
    if not 0 <= v < graph.vertex_count:
        raise IndexError(f"vertex {v} out of range [0, {graph.vertex_count})")
    e = graph.edges
    mask = (e[:, 0] == v) | (e[:, 1] == v)
    coeff = np.where(graph.is_loop[mask], 2.0, 1.0)
    return float(np.sum(coeff * graph.weight[mask]))


def incidence_matrix(graph: WeightedGraph) -> sp.csr_matrix:
    """Sparse |V| x |E| incidence matrix; self-loop columns carry a single 2."""
    n = graph.edge_count
    rows = graph.edges.reshape(-1)
    cols = np.repeat(np.arange(n), 2)
    return sp.csr_matrix((np.ones(2 * n), (rows, cols)), shape=(graph.vertex_count, n))


def _check(values, bounds, tol):
    lo, hi = bounds[:, 0], bounds[:, 1]
    slack = tol * np.maximum(1.0, np.abs(values))
    bad = np.flatnonzero((values < lo - slack) | (values > hi + slack))
    return [(int(i), float(values[i]), float(lo[i]), float(hi[i])) for i in bad]


def validate(graph, tol: float = 1e-12) -> ValidationReport:
    """Report every edge or vertex whose weight falls outside its interval.

    Vertex sums get a relative slack of `tol` to absorb summation order.
    Accepts a WeightedGraph or a DirectedWeightedGraph (vertex ids in the
    directed report are offset by vertex_count for in-weights).
    """
    report = ValidationReport()
    report.edge_violations = _check(graph.weight, graph.edge_bounds, 0.0)
    if isinstance(graph, DirectedWeightedGraph):
        m = graph.vertex_count
        out = _check(graph.out_weights(), graph.out_bounds, tol)
        inn = _check(graph.in_weights(), graph.in_bounds, tol)
        report.vertex_violations = out + [(v + m, *rest) for v, *rest in inn]
    else:
        report.vertex_violations = _check(graph.vertex_weights(), graph.vertex_bounds, tol)
    return report


def to_equality_form(graph: WeightedGraph) -> EqualityProblem:
    """Replace vertex intervals by exact targets plus slack self-loops.

    A vertex with A(v) < B(v) receives a self-loop of weight 0 and bounds
    [(W - B) / 2, (W - A) / 2]; the halving comes from the loop's
    coefficient 2 in the vertex sum. Input self-loops are kept as ordinary
    edges, but such a vertex must have an exact weight.
    """
    report = validate(graph)
    if not report.ok:
        raise ValueError("infeasible input: " + "; ".join(report.lines()))
    W = graph.vertex_weights()
    A, B = graph.vertex_bounds[:, 0], graph.vertex_bounds[:, 1]
    slack = np.flatnonzero(B > A)
    looped = np.intersect1d(slack, graph.edges[graph.is_loop, 0])
    if looped.size:
        raise ValueError(f"vertex {int(looped[0])} has a self-loop and a weight interval; "
                         "widen the loop's bounds instead")
    n = graph.edge_count
    loop_bounds = np.column_stack([(W[slack] - B[slack]) / 2, (W[slack] - A[slack]) / 2])
    # rounding must not push 0 outside the loop interval
    loop_bounds[:, 0] = np.minimum(loop_bounds[:, 0], 0.0)
    loop_bounds[:, 1] = np.maximum(loop_bounds[:, 1], 0.0)
    eq = WeightedGraph(
        graph.vertex_count,
        np.vstack([graph.edges, np.column_stack([slack, slack])]),
        np.concatenate([graph.weight, np.zeros(slack.shape[0])]),
        np.vstack([graph.edge_bounds, loop_bounds]),
        np.column_stack([W, W]),
    )
    loop_of = np.full(graph.vertex_count, -1, dtype=np.int64)
    loop_of[slack] = n + np.arange(slack.shape[0])
    return EqualityProblem(eq, _frozen(W, np.float64), _frozen(loop_of, np.int64), n)


def directed_to_bipartite(dgraph: DirectedWeightedGraph):
    """Undirected bipartite twin: (u, v) becomes {u, v + m}.

    Vertices 0..m-1 carry out-weights, m..2m-1 carry in-weights.
    """
    m = dgraph.vertex_count
    edges = dgraph.edges.copy()
    edges[:, 1] += m
    g = WeightedGraph(
        2 * m, edges, dgraph.weight, dgraph.edge_bounds,
        np.vstack([dgraph.out_bounds, dgraph.in_bounds]),
    )
    mapping = EdgeMapping(_frozen(np.arange(dgraph.edge_count), np.int64), m)
    return g, mapping


def map_back(sample, mapping: EdgeMapping) -> np.ndarray:
    """Directed edge weights from a bipartite-twin sample."""
    sample = np.asarray(sample, dtype=np.float64)
    n = mapping.forward.shape[0]
    if sample.shape[0] < n:
        raise ValueError(f"sample has {sample.shape[0]} edges, mapping needs {n}")
    out = np.empty(n)
    out[mapping.forward] = sample[:n]
    return out


def component_labels(graph: WeightedGraph):
    """Component label per vertex, numbered by smallest member vertex."""
    m = graph.vertex_count
    if m == 0:
        return 0, np.zeros(0, dtype=np.int64)
    e = graph.edges
    adj = sp.coo_matrix((np.ones(e.shape[0]), (e[:, 0], e[:, 1])), shape=(m, m))
    n, labels = _cc(adj, directed=False)
    # relabel so component order follows first vertex
    _, first = np.unique(labels, return_index=True)
    rank = np.empty(n, dtype=np.int64)
    rank[np.argsort(first)] = np.arange(n)
    return n, rank[labels]


def connected_components(graph: WeightedGraph) -> list[Component]:
    n, labels = component_labels(graph)
    v_order = np.argsort(labels, kind="stable")
    v_split = np.cumsum(np.bincount(labels, minlength=n))[:-1]
    e_labels = labels[graph.edges[:, 0]] if graph.edge_count else np.zeros(0, np.int64)
    e_order = np.argsort(e_labels, kind="stable")
    e_split = np.cumsum(np.bincount(e_labels, minlength=n))[:-1]
    return [Component(vs, es) for vs, es in
            zip(np.split(v_order, v_split), np.split(e_order, e_split))]
