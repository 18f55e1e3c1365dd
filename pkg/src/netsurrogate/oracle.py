"""Brute-force ground truth for small instances.

Nothing here touches the spanning-tree machinery: null spaces come from
plain Gaussian elimination on the dense incidence matrix and uniform
samples from rejection sampling of the edge-weight box.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import WeightedGraph

PIVOT_TOL = 1e-9
MAX_EDGES = 200


class OracleRefusal(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class DenseBasis:
    vectors: np.ndarray  # (dim, |E|)

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]


def dense_incidence(graph: WeightedGraph) -> np.ndarray:
    A = np.zeros((graph.vertex_count, graph.edge_count))
    for e, (u, v) in enumerate(graph.edges):
        A[u, e] += 1.0
        A[v, e] += 1.0
    return A


def rref(M, tol: float = PIVOT_TOL):
    """Reduced row echelon form with partial pivoting; returns (R, pivot columns)."""
    R = np.array(M, dtype=np.float64, copy=True)
    rows, cols = R.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        p = r + int(np.argmax(np.abs(R[r:, c])))
        if abs(R[p, c]) <= tol:
            continue
        R[[r, p]] = R[[p, r]]
        R[r] /= R[r, c]
        for i in range(rows):
            if i != r and R[i, c] != 0.0:
                R[i] -= R[i, c] * R[r]
        pivots.append(c)
        r += 1
    return R, pivots


def rank(M, tol: float = PIVOT_TOL) -> int:
    M = np.atleast_2d(np.asarray(M, dtype=np.float64))
    if M.size == 0:
        return 0
    return len(rref(M, tol)[1])


def dense_null_basis(graph: WeightedGraph) -> DenseBasis:
    if graph.edge_count > MAX_EDGES:
        raise OracleRefusal(f"{graph.edge_count} edges exceeds the oracle limit of {MAX_EDGES}")
    n = graph.edge_count
    A = dense_incidence(graph)
    if A.shape[0] == 0:
        return DenseBasis(np.eye(n))
    R, pivots = rref(A)
    free = [c for c in range(n) if c not in set(pivots)]
    basis = np.zeros((len(free), n))
    for k, f in enumerate(free):
        basis[k, f] = 1.0
        for i, p in enumerate(pivots):
            basis[k, p] = -R[i, f]
    return DenseBasis(basis)


def span_check(vectors, basis: DenseBasis) -> tuple[float, int]:
    """(largest residual of projecting each vector onto the basis, rank of the vectors).

    `vectors` may be dense arrays or anything with a `to_dense(n)` method.
    """
    n = basis.vectors.shape[1]
    V = np.array([v.to_dense(n) if hasattr(v, "to_dense") else v for v in vectors],
                 dtype=np.float64).reshape(-1, n)
    if V.shape[0] == 0:
        return 0.0, 0
    if basis.dim:
        Q, _ = np.linalg.qr(basis.vectors.T)
        resid = V - (V @ Q) @ Q.T
    else:
        resid = V
    return float(np.max(np.linalg.norm(resid, axis=1))), rank(V)


def _accept(graph: WeightedGraph, W: np.ndarray) -> np.ndarray:
    """Rows of W (samples x edges) that satisfy every vertex interval."""
    m = graph.vertex_count
    vw = np.zeros((W.shape[0], m))
    for e, (u, v) in enumerate(graph.edges):
        vw[:, u] += W[:, e]
        vw[:, v] += W[:, e]
    lo, hi = graph.vertex_bounds[:, 0], graph.vertex_bounds[:, 1]
    return np.all((vw >= lo) & (vw <= hi), axis=1)


def rejection_sample(graph: WeightedGraph, n: int, seed=0, max_edges: int = 8,
                     pilot: int = 100_000, min_rate: float = 1e-4) -> np.ndarray:
    """Exactly uniform samples (n x |E|) from the feasible edge weights.

    Edges are drawn independently uniform on their intervals and a draw is
    kept iff every vertex weight lies in its interval.
    """
    if graph.edge_count > max_edges:
        raise OracleRefusal(f"{graph.edge_count} edges exceeds {max_edges}")
    if graph.is_loop.any():
        raise OracleRefusal("rejection oracle expects a graph without self-loops")
    lo, hi = graph.edge_bounds[:, 0], graph.edge_bounds[:, 1]
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise OracleRefusal("edge bounds must be finite")
    rng = np.random.default_rng(seed)
    draw = lambda k: lo + (hi - lo) * rng.random((k, graph.edge_count))
    rate = _accept(graph, draw(pilot)).mean()
    if rate < min_rate:
        raise OracleRefusal(f"acceptance rate {rate:.2e} below {min_rate:.0e}")
    out = []
    have = 0
    batch = int(min(10 * n / rate + 1000, 5_000_000))
    while have < n:
        W = draw(batch)
        W = W[_accept(graph, W)]
        out.append(W)
        have += W.shape[0]
    return np.vstack(out)[:n]
