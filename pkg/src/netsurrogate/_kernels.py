"""Compiled inner loops.

Everything here works on flat integer/float arrays so that the public
modules can stay in plain numpy. Vertex and edge ids are dense 0-based.
"""
import numpy as np
from numba import njit

# status codes returned by run_steps
OK = 0
UNBOUNDED = 1


@njit(cache=True, nogil=True)
def bfs_forest(n_vertices, adj_ptr, adj_vertex, adj_edge, root_order):
    """Breadth-first spanning forest.

    Vertices listed in `root_order` are tried as roots first (in order);
    remaining unvisited vertices become roots in increasing id order.
    Neighbours are visited in adjacency order, which callers arrange to be
    input edge order. Self-loops never become tree edges.
    """
    parent = np.full(n_vertices, -1, np.int64)
    parent_edge = np.full(n_vertices, -1, np.int64)
    depth = np.full(n_vertices, -1, np.int64)
    comp = np.full(n_vertices, -1, np.int64)
    roots = np.empty(n_vertices, np.int64)
    queue = np.empty(n_vertices, np.int64)
    n_comp = 0
    n_order = root_order.shape[0]
    for k in range(n_order + n_vertices):
        if k < n_order:
            r = root_order[k]
        else:
            r = k - n_order
        if depth[r] >= 0:
            continue
        depth[r] = 0
        comp[r] = n_comp
        roots[n_comp] = r
        head = 0
        tail = 1
        queue[0] = r
        while head < tail:
            x = queue[head]
            head += 1
            for a in range(adj_ptr[x], adj_ptr[x + 1]):
                y = adj_vertex[a]
                if y == x or depth[y] >= 0:
                    continue
                depth[y] = depth[x] + 1
                parent[y] = x
                parent_edge[y] = adj_edge[a]
                comp[y] = n_comp
                queue[tail] = y
                tail += 1
        n_comp += 1
    return parent, parent_edge, depth, comp, roots[:n_comp].copy()


@njit(cache=True)
def _sign(p):
    return 1 if p % 2 == 0 else -1


@njit(cache=True)
def _cycle_length(u, v, parent, depth, dirty):
    a = u
    b = v
    n = 1
    while a != b:
        if depth[a] >= depth[b]:
            a = parent[a]
        else:
            b = parent[b]
        n += 1
    if dirty:
        n += depth[a]
    return n


@njit(cache=True)
def fundamental_cycles(off_edges, edge_u, edge_v, parent, parent_edge, depth, root_of):
    """Signed fundamental cycles for the given off-tree edges.

    Returns CSR arrays (ptr, idx, coef) with each row sorted by edge id,
    a dirty flag per row and the incidence image at the component root.

    Coefficients follow the alternating-sign rule along each root path;
    below the lowest common ancestor the two paths are disjoint, above it
    they cancel (odd depth sum) or double (even depth sum).
    """
    n = off_edges.shape[0]
    dirty = np.zeros(n, np.bool_)
    ptr = np.zeros(n + 1, np.int64)
    for i in range(n):
        e = off_edges[i]
        u = edge_u[e]
        v = edge_v[e]
        dirty[i] = u == v or (depth[u] + depth[v]) % 2 == 0
        ptr[i + 1] = ptr[i] + _cycle_length(u, v, parent, depth, dirty[i])
    idx = np.empty(ptr[n], np.int64)
    coef = np.empty(ptr[n], np.int8)
    residual = np.zeros(n, np.int64)
    for i in range(n):
        e = off_edges[i]
        u = edge_u[e]
        v = edge_v[e]
        p = ptr[i]
        idx[p] = e
        coef[p] = 1
        p += 1
        a = u
        b = v
        while a != b:
            if depth[a] >= depth[b]:
                idx[p] = parent_edge[a]
                coef[p] = _sign(depth[u] + depth[a] - 1)
                a = parent[a]
            else:
                idx[p] = parent_edge[b]
                coef[p] = _sign(depth[v] + depth[b] - 1)
                b = parent[b]
            p += 1
        if dirty[i]:
            while depth[a] > 0:
                idx[p] = parent_edge[a]
                coef[p] = 2 * _sign(depth[u] + depth[a] - 1)
                a = parent[a]
                p += 1
        s = ptr[i]
        t = ptr[i + 1]
        order = np.argsort(idx[s:t])
        idx[s:t] = idx[s:t][order]
        coef[s:t] = coef[s:t][order]
        r = root_of[u]
        res = 0
        for q in range(s, t):
            f = idx[q]
            if edge_u[f] == r or edge_v[f] == r:
                res += coef[q] * (2 if edge_u[f] == edge_v[f] else 1)
        residual[i] = res
    return ptr, idx, coef, dirty, residual


@njit(cache=True)
def decode_pair(q):
    """Map a colex pair index q to (i, j), i < j: (0,1),(0,2),(1,2),(0,3),..."""
    j = np.int64((1.0 + np.sqrt(1.0 + 8.0 * q)) / 2.0)
    while j * (j - 1) // 2 > q:
        j -= 1
    while (j + 1) * j // 2 <= q:
        j += 1
    return q - j * (j - 1) // 2, j


@njit(cache=True, nogil=True)
def assemble(k, n_clean, c_ptr, c_idx, c_coef, d_ptr, d_idx, d_coef, d_sign,
             d_comp_start, pair_cum, buf_idx, buf_coef):
    """Write generator `k` of the global pool into the buffers.

    Returns (support size, kind) where kind is 0 for clean, 1 for pair.
    """
    if k < n_clean:
        s = c_ptr[k]
        m = c_ptr[k + 1] - s
        for q in range(m):
            buf_idx[q] = c_idx[s + q]
            buf_coef[q] = c_coef[s + q]
        return m, 0
    p = k - n_clean
    comp = np.searchsorted(pair_cum, p, side="right")
    base = 0
    if comp > 0:
        base = pair_cum[comp - 1]
    i, j = decode_pair(p - base)
    gi = d_comp_start[comp] + i
    gj = d_comp_start[comp] + j
    factor = -d_sign[gi] * d_sign[gj]
    a = d_ptr[gi]
    a_end = d_ptr[gi + 1]
    b = d_ptr[gj]
    b_end = d_ptr[gj + 1]
    m = 0
    while a < a_end or b < b_end:
        if b >= b_end or (a < a_end and d_idx[a] < d_idx[b]):
            buf_idx[m] = d_idx[a]
            buf_coef[m] = d_coef[a]
            a += 1
            m += 1
        elif a >= a_end or d_idx[b] < d_idx[a]:
            buf_idx[m] = d_idx[b]
            buf_coef[m] = factor * d_coef[b]
            b += 1
            m += 1
        else:
            c = d_coef[a] + factor * d_coef[b]
            if c != 0:
                buf_idx[m] = d_idx[a]
                buf_coef[m] = c
                m += 1
            a += 1
            b += 1
    return m, 1


@njit(cache=True, nogil=True)
def step_interval(w, lower, upper, buf_idx, buf_coef, m):
    lo = -np.inf
    hi = np.inf
    for q in range(m):
        e = buf_idx[q]
        k = buf_coef[q]
        if k > 0:
            a = (lower[e] - w[e]) / k
            b = (upper[e] - w[e]) / k
        else:
            a = (upper[e] - w[e]) / k
            b = (lower[e] - w[e]) / k
        if a > lo:
            lo = a
        if b < hi:
            hi = b
    # rounding can leave the state an ulp outside a bound
    if lo > 0.0:
        lo = 0.0
    if hi < 0.0:
        hi = 0.0
    return lo, hi


@njit(cache=True, nogil=True)
def run_steps(w, lower, upper, n_clean, c_ptr, c_idx, c_coef, d_ptr, d_idx, d_coef,
              d_sign, d_comp_start, pair_cum, draws_idx, draws_u, stats, last,
              buf_idx, buf_coef):
    """Apply len(draws_idx) steps to `w` in place.

    stats accumulates [steps, clean, pair, noop, sum|alpha|, sum width].
    last receives [kind, lo, hi, alpha, support] of the final step.
    Returns (status, index of the offending step).
    """
    for t in range(draws_idx.shape[0]):
        m, kind = assemble(draws_idx[t], n_clean, c_ptr, c_idx, c_coef, d_ptr, d_idx,
                           d_coef, d_sign, d_comp_start, pair_cum, buf_idx, buf_coef)
        lo, hi = step_interval(w, lower, upper, buf_idx, buf_coef, m)
        if not (np.isfinite(lo) and np.isfinite(hi)):
            return UNBOUNDED, t
        alpha = lo + draws_u[t] * (hi - lo)
        for q in range(m):
            e = buf_idx[q]
            x = w[e] + alpha * buf_coef[q]
            if x < lower[e]:
                x = lower[e]
            elif x > upper[e]:
                x = upper[e]
            w[e] = x
        stats[0] += 1
        stats[1 + kind] += 1
        if hi - lo == 0.0:
            stats[3] += 1
        stats[4] += abs(alpha)
        stats[5] += hi - lo
        last[0] = kind
        last[1] = lo
        last[2] = hi
        last[3] = alpha
        last[4] = m
    return OK, -1
