"""Sparse null-space generators of the incidence matrix.

A breadth-first spanning tree is grown per connected component. Each
off-tree edge closes a fundamental cycle, encoded as a signed sparse
vector whose coefficients alternate along the tree paths to the root.
Cycles of clean edges (odd depth sum) lie in the null space directly.
Cycles of dirty edges (self-loops or even depth sum) leave a residual of
+-2 at the root row, so they are combined in pairs whose residuals cancel.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .graph import Component, WeightedGraph, incidence_matrix


class InvariantError(RuntimeError):
    """An internal consistency check failed; indicates a bug, not bad input."""


@dataclass(frozen=True, eq=False)
class CycleVector:
    """Sparse integer vector over edge ids; `edges` is strictly increasing."""

    edges: np.ndarray
    coefs: np.ndarray
    source: int = -1

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=np.int64)
        c = np.asarray(self.coefs, dtype=np.int64)
        order = np.argsort(e, kind="stable")
        object.__setattr__(self, "edges", e[order])
        object.__setattr__(self, "coefs", c[order])

    @classmethod
    def from_dense(cls, x, source: int = -1) -> "CycleVector":
        x = np.asarray(x)
        nz = np.flatnonzero(x)
        return cls(nz, x[nz].astype(np.int64), source)

    def to_dense(self, n: int) -> np.ndarray:
        out = np.zeros(n, dtype=np.int64)
        out[self.edges] = self.coefs
        return out

    def as_dict(self) -> dict:
        return dict(zip(self.edges.tolist(), self.coefs.tolist()))

    def __len__(self):
        return self.edges.shape[0]

    def __eq__(self, other):
        if not isinstance(other, CycleVector):
            return NotImplemented
        return self.as_dict() == other.as_dict()

    def __repr__(self):
        return f"CycleVector({self.as_dict()})"


@dataclass(frozen=True, eq=False)
class SpanningTree:
    """Spanning tree of one component.

    `parent`, `parent_edge` and `vertex_depth` are indexed by global vertex
    id; entries outside the component are -1.
    """

    root: int
    vertices: np.ndarray
    parent: np.ndarray
    parent_edge: np.ndarray
    vertex_depth: np.ndarray
    tree_edges: np.ndarray
    off_tree_edges: np.ndarray

    def edge_depth(self, e: int) -> int:
        """Depth of a tree edge; edges touching the root have depth 0."""
        child = np.flatnonzero(self.parent_edge == e)
        if child.shape[0] != 1:
            raise ValueError(f"edge {e} is not a tree edge")
        return int(self.vertex_depth[child[0]]) - 1

    def path_to_root(self, v: int) -> list[int]:
        """Tree edge ids from v up to the root."""
        out = []
        while self.parent[v] >= 0:
            out.append(int(self.parent_edge[v]))
            v = int(self.parent[v])
        return out


@dataclass(frozen=True, eq=False)
class SpanningForest:
    """BFS spanning trees for every component, as flat per-vertex arrays."""

    parent: np.ndarray
    parent_edge: np.ndarray
    depth: np.ndarray
    component: np.ndarray
    roots: np.ndarray

    @property
    def component_count(self) -> int:
        return self.roots.shape[0]


@dataclass(frozen=True, eq=False)
class _CSR:
    ptr: np.ndarray
    idx: np.ndarray
    coef: np.ndarray

    @property
    def rows(self) -> int:
        return self.ptr.shape[0] - 1

    def row(self, i: int, source: int = -1) -> CycleVector:
        s, t = self.ptr[i], self.ptr[i + 1]
        return CycleVector(self.idx[s:t], self.coef[s:t], source)

    def take(self, rows: np.ndarray) -> "_CSR":
        lengths = np.diff(self.ptr)[rows]
        ptr = np.zeros(rows.shape[0] + 1, dtype=np.int64)
        np.cumsum(lengths, out=ptr[1:])
        starts = self.ptr[rows]
        gather = np.repeat(starts - ptr[:-1], lengths) + np.arange(ptr[-1])
        return _CSR(ptr, self.idx[gather], self.coef[gather])

    def slice(self, a: int, b: int) -> "_CSR":
        s, t = self.ptr[a], self.ptr[b]
        return _CSR(self.ptr[a:b + 1] - s, self.idx[s:t], self.coef[s:t])

    def to_sparse(self, n_edges: int) -> sp.csc_matrix:
        """Columns are cycles."""
        return sp.csc_matrix((self.coef.astype(np.float64), self.idx, self.ptr),
                             shape=(n_edges, self.rows))


@dataclass(frozen=True, eq=False)
class BasisCatalog:
    """Null-space generators of one component.

    Clean cycles are stored as-is; dirty cycles with the sign of their root
    residual. Pair generators are formed on demand by `pair`.
    """

    root: int
    vertex_count: int
    edge_count: int
    clean_edges: np.ndarray
    clean: _CSR
    dirty_edges: np.ndarray
    dirty: _CSR
    dirty_signs: np.ndarray

    @property
    def n_clean(self) -> int:
        return self.clean_edges.shape[0]

    @property
    def n_dirty(self) -> int:
        return self.dirty_edges.shape[0]

    @property
    def pair_count(self) -> int:
        d = self.n_dirty
        return d * (d - 1) // 2

    @property
    def generator_count(self) -> int:
        return self.n_clean + self.pair_count

    @property
    def null_dim(self) -> int:
        if self.n_dirty == 0:
            return self.n_clean
        return self.n_clean + self.n_dirty - 1

    @property
    def bipartite(self) -> bool:
        return self.n_dirty == 0

    @property
    def frozen(self) -> bool:
        return self.null_dim == 0

    def clean_cycle(self, i: int) -> CycleVector:
        return self.clean.row(i, int(self.clean_edges[i]))

    def dirty_cycle(self, i: int) -> tuple[CycleVector, int]:
        return self.dirty.row(i, int(self.dirty_edges[i])), int(self.dirty_signs[i])

    @property
    def clean_cycles(self) -> list[CycleVector]:
        return [self.clean_cycle(i) for i in range(self.n_clean)]

    @property
    def dirty_cycles(self) -> list[tuple[CycleVector, int]]:
        return [self.dirty_cycle(i) for i in range(self.n_dirty)]

    def pair(self, i: int, j: int) -> CycleVector:
        c1, s1 = self.dirty_cycle(i)
        c2, s2 = self.dirty_cycle(j)
        return pair_vector(c1, s1, c2, s2)

    def generator(self, k: int) -> CycleVector:
        """Generator k in enumeration order: clean first, then colex pairs."""
        if k < self.n_clean:
            return self.clean_cycle(k)
        i, j = _kernels.decode_pair(k - self.n_clean)
        return self.pair(int(i), int(j))


@dataclass(frozen=True, eq=False)
class CatalogSet:
    """Catalogs of all components plus the packed arrays the sampler reads."""

    forest: SpanningForest
    catalogs: list
    clean: _CSR
    dirty: _CSR
    dirty_signs: np.ndarray
    dirty_start: np.ndarray
    pair_cum: np.ndarray

    @property
    def n_clean(self) -> int:
        return self.clean.rows

    @property
    def generator_count(self) -> int:
        return self.n_clean + (int(self.pair_cum[-1]) if self.pair_cum.size else 0)

    @property
    def null_dim(self) -> int:
        return sum(c.null_dim for c in self.catalogs)

    def generator(self, k: int) -> CycleVector:
        """Generator k of the global pool (the order the sampler draws from)."""
        if k < self.n_clean:
            return self.clean.row(k)
        p = k - self.n_clean
        comp = int(np.searchsorted(self.pair_cum, p, side="right"))
        base = int(self.pair_cum[comp - 1]) if comp else 0
        i, j = _kernels.decode_pair(p - base)
        return self.catalogs[comp].pair(int(i), int(j))


def spanning_forest(graph: WeightedGraph, roots=None) -> SpanningForest:
    """BFS spanning forest; `roots` lists preferred roots (at most one per component)."""
    ptr, nbr, eid = graph.adjacency
    order = np.asarray([] if roots is None else roots, dtype=np.int64)
    parent, pedge, depth, comp, rts = _kernels.bfs_forest(graph.vertex_count, ptr, nbr, eid, order)
    return SpanningForest(parent, pedge, depth, comp, rts)


def build_spanning_tree(graph: WeightedGraph, component: Component | None = None,
                        root: int | None = None, tree_edges=None) -> SpanningTree:
    """Spanning tree of one component.

    By default the tree is found by BFS from the component's smallest
    vertex, scanning neighbours in input edge order. `tree_edges` pins
    the tree to a given edge set instead (BFS is then restricted to it).
    """
    if component is None:
        component = Component(np.arange(graph.vertex_count), np.arange(graph.edge_count))
    verts = np.asarray(component.vertices, dtype=np.int64)
    if verts.shape[0] == 0:
        raise ValueError("empty component")
    if root is None:
        root = int(verts.min())
    elif root not in set(verts.tolist()):
        raise ValueError(f"root {root} is not in the component")
    comp_edges = np.asarray(component.edges, dtype=np.int64)
    use = comp_edges if tree_edges is None else np.asarray(tree_edges, dtype=np.int64)
    sub = graph.edges[use]
    src = np.concatenate([sub[:, 0], sub[:, 1]])
    dst = np.concatenate([sub[:, 1], sub[:, 0]])
    ids = np.concatenate([use, use])
    # interleave so that each vertex's neighbours stay in edge order
    order = np.lexsort((ids, src))
    ptr = np.zeros(graph.vertex_count + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=graph.vertex_count), out=ptr[1:])
    parent, pedge, depth, comp, _ = _kernels.bfs_forest(
        graph.vertex_count, ptr, dst[order], ids[order], np.array([root], dtype=np.int64))
    in_comp = np.zeros(graph.vertex_count, dtype=bool)
    in_comp[verts] = True
    label = comp[root]
    reached = comp == label
    if not np.array_equal(reached, in_comp):
        raise ValueError("component is not connected" if tree_edges is None
                         else "tree_edges do not span the component")
    mask = ~in_comp
    parent[mask] = -1
    pedge[mask] = -1
    depth[mask] = -1
    tree = np.sort(pedge[pedge >= 0])
    if tree_edges is not None and tree.shape[0] != use.shape[0]:
        raise ValueError("tree_edges contain a cycle")
    off = np.setdiff1d(comp_edges, tree)
    return SpanningTree(int(root), np.sort(verts), parent, pedge, depth, tree, off)


def _check_off_tree(tree: SpanningTree, e: int):
    if e in set(tree.tree_edges.tolist()):
        raise ValueError(f"edge {e} is a tree edge")
    if e not in set(tree.off_tree_edges.tolist()):
        raise ValueError(f"edge {e} is not in this component")


def _root_of(graph: WeightedGraph, tree: SpanningTree) -> np.ndarray:
    root_of = np.full(graph.vertex_count, -1, dtype=np.int64)
    root_of[tree.vertices] = tree.root
    return root_of


def fundamental_cycle(graph: WeightedGraph, tree: SpanningTree, e: int) -> CycleVector:
    _check_off_tree(tree, e)
    ptr, idx, coef, _, _ = _kernels.fundamental_cycles(
        np.array([e], dtype=np.int64), graph.edges[:, 0], graph.edges[:, 1],
        tree.parent, tree.parent_edge, tree.vertex_depth, _root_of(graph, tree))
    return CycleVector(idx, coef, e)


def classify(graph: WeightedGraph, tree: SpanningTree, e: int) -> str:
    """'clean' if the endpoints are distinct with odd depth sum, else 'dirty'."""
    _check_off_tree(tree, e)
    u, v = graph.edges[e]
    d = tree.vertex_depth
    return "clean" if u != v and (d[u] + d[v]) % 2 == 1 else "dirty"


def root_residual_sign(graph: WeightedGraph, cycle: CycleVector, root: int) -> int:
    """Sign of the incidence image of a dirty cycle, which must be +-2 at `root` only."""
    image = incidence_matrix(graph) @ cycle.to_dense(graph.edge_count)
    expected = np.zeros(graph.vertex_count, dtype=np.int64)
    val = int(image[root])
    expected[root] = val
    if abs(val) != 2 or not np.array_equal(image, expected):
        raise InvariantError(f"cycle {cycle} has residual {image.tolist()}, not +-2 at root {root}")
    return 1 if val > 0 else -1


def pair_vector(c1: CycleVector, s1: int, c2: CycleVector, s2: int) -> CycleVector:
    """Combine two dirty cycles so their root residuals cancel: c1 - s1*s2*c2."""
    if c1.source >= 0 and c1.source == c2.source:
        raise ValueError(f"both cycles come from edge {c1.source}")
    d = c1.as_dict()
    for e, k in c2.as_dict().items():
        d[e] = d.get(e, 0) - s1 * s2 * k
    d = {e: k for e, k in d.items() if k}
    return CycleVector(list(d), list(d.values()))


def _cycles_for(graph, off, parent, pedge, depth, root_of, verify):
    ptr, idx, coef, dirty, residual = _kernels.fundamental_cycles(
        off, graph.edges[:, 0], graph.edges[:, 1], parent, pedge, depth, root_of)
    csr = _CSR(ptr, idx, coef)
    clean_rows = np.flatnonzero(~dirty)
    dirty_rows = np.flatnonzero(dirty)
    if np.any(residual[clean_rows] != 0) or np.any(np.abs(residual[dirty_rows]) != 2):
        raise InvariantError("fundamental cycle with unexpected root residual")
    if verify:
        image = incidence_matrix(graph) @ csr.to_sparse(graph.edge_count)
        image = image.tocsc()
        expect = sp.csc_matrix(
            (residual[dirty_rows].astype(float), (root_of[graph.edges[off[dirty_rows], 0]], dirty_rows)),
            shape=image.shape)
        if (image - expect).count_nonzero():
            raise InvariantError("fundamental cycle incidence image is not confined to the root")
    signs = np.sign(residual[dirty_rows]).astype(np.int8)
    return csr.take(clean_rows), off[clean_rows], csr.take(dirty_rows), off[dirty_rows], signs


def build_catalog(graph: WeightedGraph, tree: SpanningTree, verify: bool = False) -> BasisCatalog:
    """Generators of the component spanned by `tree`."""
    off = np.asarray(tree.off_tree_edges, dtype=np.int64)
    clean, ce, dirty, de, signs = _cycles_for(
        graph, off, tree.parent, tree.parent_edge, tree.vertex_depth, _root_of(graph, tree), verify)
    return BasisCatalog(tree.root, tree.vertices.shape[0], tree.tree_edges.shape[0] + off.shape[0],
                        ce, clean, de, dirty, signs)


def build_catalogs(graph: WeightedGraph, roots=None, verify: bool = False) -> CatalogSet:
    """Catalogs for every component, built in one vectorised pass."""
    forest = spanning_forest(graph, roots)
    n_comp = forest.component_count
    m = graph.edge_count
    tree_mask = np.zeros(m, dtype=bool)
    tree_mask[forest.parent_edge[forest.parent_edge >= 0]] = True
    off = np.flatnonzero(~tree_mask)
    off_comp = forest.component[graph.edges[off, 0]]
    off = off[np.argsort(off_comp, kind="stable")]
    off_comp = forest.component[graph.edges[off, 0]]
    root_of = forest.roots[forest.component]
    clean, ce, dirty, de, signs = _cycles_for(
        graph, off, forest.parent, forest.parent_edge, forest.depth, root_of, verify)

    vcount = np.bincount(forest.component, minlength=n_comp)
    ecount = np.bincount(forest.component[graph.edges[:, 0]], minlength=n_comp) if m else np.zeros(n_comp, int)
    n_clean = np.bincount(forest.component[graph.edges[ce, 0]], minlength=n_comp)
    n_dirty = np.bincount(forest.component[graph.edges[de, 0]], minlength=n_comp)
    c_start = np.concatenate([[0], np.cumsum(n_clean)])
    d_start = np.concatenate([[0], np.cumsum(n_dirty)])
    catalogs = []
    for c in range(n_comp):
        a, b = c_start[c], c_start[c + 1]
        x, y = d_start[c], d_start[c + 1]
        catalogs.append(BasisCatalog(
            int(forest.roots[c]), int(vcount[c]), int(ecount[c]),
            ce[a:b], clean.slice(a, b), de[x:y], dirty.slice(x, y), signs[x:y]))
    pair_cum = np.cumsum(n_dirty * (n_dirty - 1) // 2).astype(np.int64)
    return CatalogSet(forest, catalogs, clean, dirty, signs, d_start[:-1].astype(np.int64), pair_cum)


def enumerate_generators(catalog: BasisCatalog, budget: int = 1_000_000) -> Iterator[CycleVector]:
    """All generators of a catalog: clean cycles, then every dirty pair (colex order)."""
    if catalog.generator_count > budget:
        raise MemoryError(f"{catalog.generator_count} generators exceed budget {budget}")
    yield from catalog.clean_cycles
    dirty = catalog.dirty_cycles
    for j in range(len(dirty)):
        for i in range(j):
            yield pair_vector(dirty[i][0], dirty[i][1], dirty[j][0], dirty[j][1])
