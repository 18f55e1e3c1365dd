"""Edge-list ingestion and constraint configuration.

Input rows are `source, target, weight` separated by tabs or commas
(detected from the first data row); blank lines and lines starting with
`#` are skipped. Labels are mapped to dense ids in order of first
appearance; edge order is input order after filtering and is the
canonical edge indexing everywhere downstream.
"""
from __future__ import annotations

import hashlib
from dataclasses import asdict, dataclass

import numpy as np

from .graph import DirectedWeightedGraph, WeightedGraph

SCALE_EPS = 1e-6


class ParseError(ValueError):
    pass


@dataclass
class IngestionOptions:
    dedupe: bool = False
    rating_cap: float | None = None
    scale_to_unit: bool = False
    bipartite_prefixing: bool = False

    def __post_init__(self):
        if self.rating_cap is not None and self.rating_cap <= 0:
            raise ValueError("rating_cap must be positive")


@dataclass
class ParsedEdges:
    labels: list
    edges: np.ndarray
    weight: np.ndarray
    directed: bool
    options: IngestionOptions
    rows_read: int = 0
    dropped_duplicates: int = 0
    dropped_by_cap: int = 0
    scale: tuple | None = None  # (slope, offset): scaled = slope * raw + offset
    content_sha256: str = ""

    @property
    def vertex_count(self) -> int:
        return len(self.labels)

    @property
    def edge_count(self) -> int:
        return self.edges.shape[0]

    def edge_label(self, e: int) -> str:
        u, v = self.edges[e]
        sep = "->" if self.directed else "--"
        return f"{self.labels[u]}{sep}{self.labels[v]}"

    def edge_order_hash(self) -> str:
        h = hashlib.sha256()
        for e in range(self.edge_count):
            h.update(self.edge_label(e).encode())
            h.update(b"\n")
        return h.hexdigest()

    def unscale(self, w):
        """Map weights back to the original scale."""
        if self.scale is None:
            return np.asarray(w, dtype=np.float64)
        slope, offset = self.scale
        if slope == 0:
            raise ValueError("constant weights were scaled; the original value is in the manifest")
        return (np.asarray(w, dtype=np.float64) - offset) / slope

    def graph(self):
        """Graph with default bounds (exact vertex weights, edges in [0, inf))."""
        if self.directed:
            return DirectedWeightedGraph(self.vertex_count, self.edges, self.weight)
        return WeightedGraph(self.vertex_count, self.edges, self.weight)


def _split(line: str, delim):
    return [t.strip() for t in (line.split(delim) if delim else line.split())]


def parse_edges(path, options: IngestionOptions | None = None, directed: bool = False) -> ParsedEdges:
    """Read a triple file. Order of operations: dedupe, cap, symbol table, scaling."""
    options = options or IngestionOptions()
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    text = raw.decode("utf-8")
    rows = []
    delim = None
    detected = False
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        if not detected:
            delim = "\t" if "\t" in s else ("," if "," in s else None)
            detected = True
        parts = _split(s, delim)
        if len(parts) != 3 or not parts[0] or not parts[1]:
            raise ParseError(f"{path}:{lineno}: expected 3 fields, got {len(parts)}")
        try:
            w = float(parts[2])
        except ValueError:
            raise ParseError(f"{path}:{lineno}: weight {parts[2]!r} is not a number") from None
        if not np.isfinite(w):
            raise ParseError(f"{path}:{lineno}: weight must be finite")
        a, b = parts[0], parts[1]
        if options.bipartite_prefixing:
            a, b = "r:" + a, "c:" + b
        rows.append((a, b, w, lineno))
    if not rows:
        raise ParseError(f"{path}: no edges")

    out = ParsedEdges([], np.zeros((0, 2), np.int64), np.zeros(0), directed, options,
                      rows_read=len(rows), content_sha256=hashlib.sha256(raw).hexdigest())
    seen = {}
    kept = []
    for a, b, w, lineno in rows:
        key = (a, b) if directed else (min(a, b), max(a, b))
        if key in seen:
            if options.dedupe:
                out.dropped_duplicates += 1
                continue
            raise ParseError(f"{path}:{lineno}: duplicate edge {a} {b} "
                             f"(first on line {seen[key]}); use dedupe")
        seen[key] = lineno
        kept.append((a, b, w))
    if options.rating_cap is not None:
        n0 = len(kept)
        kept = [r for r in kept if r[2] <= options.rating_cap]
        out.dropped_by_cap = n0 - len(kept)
    if not kept:
        raise ParseError(f"{path}: no edges left after filtering")

    ids = {}
    edges = np.empty((len(kept), 2), dtype=np.int64)
    for i, (a, b, _) in enumerate(kept):
        edges[i, 0] = ids.setdefault(a, len(ids))
        edges[i, 1] = ids.setdefault(b, len(ids))
    weight = np.array([r[2] for r in kept], dtype=np.float64)
    if options.scale_to_unit:
        lo, hi = float(weight.min()), float(weight.max())
        if hi > lo:
            slope = (1.0 - 2 * SCALE_EPS) / (hi - lo)
            offset = SCALE_EPS - lo * slope
        else:
            slope, offset = 0.0, 0.5
        weight = slope * weight + offset
        out.scale = (slope, offset)
    out.labels = list(ids)
    out.edges = edges
    out.weight = weight
    return out


@dataclass
class ConstraintSpec:
    """How bounds are assigned.

    edge_mode: "global" uses `edge_interval`; "file" reads `edge_file`
    rows `source, target, lo, hi` (unlisted edges fall back to
    `edge_interval`). vertex_mode: "exact", "ratio" (interval
    [(1-r) W, (1+r) W]), "interval" (`vertex_interval` for every vertex),
    or "file" (rows `label, lo, hi`; unlisted vertices stay exact; in
    directed mode labels are written `out:LABEL` or `in:LABEL`).
    """

    edge_mode: str = "global"
    edge_interval: tuple = (0.0, float("inf"))
    edge_file: str | None = None
    vertex_mode: str = "exact"
    ratio: float = 0.0
    vertex_interval: tuple | None = None
    vertex_file: str | None = None
    directed: bool = False

    def __post_init__(self):
        if self.vertex_mode not in ("exact", "ratio", "interval", "file"):
            raise ValueError(f"unknown vertex mode {self.vertex_mode!r}")
        if self.edge_mode not in ("global", "file"):
            raise ValueError(f"unknown edge mode {self.edge_mode!r}")
        if self.ratio < 0:
            raise ValueError("ratio must be >= 0")
        if self.vertex_mode == "ratio" and self.ratio == 0:
            self.vertex_mode = "exact"
        lo, hi = self.edge_interval
        if lo > hi:
            raise ValueError("empty edge interval")
        if self.vertex_interval is not None and self.vertex_interval[0] > self.vertex_interval[1]:
            raise ValueError("empty vertex interval")

    @classmethod
    def from_flags(cls, vertex_mode: str = "exact", edge_bounds: str | None = None,
                   directed: bool = False) -> "ConstraintSpec":
        """Parse CLI values: `exact | ratio=R | interval=LO,HI | file=PATH` and `LO,HI | file=PATH`."""
        kw = {"directed": directed}
        if edge_bounds:
            if edge_bounds.startswith("file="):
                kw.update(edge_mode="file", edge_file=edge_bounds[5:])
            else:
                kw["edge_interval"] = _pair(edge_bounds)
        if vertex_mode == "exact":
            pass
        elif vertex_mode.startswith("ratio="):
            kw.update(vertex_mode="ratio", ratio=float(vertex_mode[6:]))
        elif vertex_mode.startswith("interval="):
            kw.update(vertex_mode="interval", vertex_interval=_pair(vertex_mode[9:]))
        elif vertex_mode.startswith("file="):
            kw.update(vertex_mode="file", vertex_file=vertex_mode[5:])
        else:
            raise ValueError(f"bad vertex mode {vertex_mode!r}")
        return cls(**kw)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["edge_interval"] = [repr(x) for x in self.edge_interval]
        return d


def _pair(s: str) -> tuple:
    try:
        lo, hi = (float(x) for x in s.split(","))
    except ValueError:
        raise ValueError(f"expected LO,HI, got {s!r}") from None
    return lo, hi


def _read_rows(path, ncols):
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            parts = _split(s, "\t" if "\t" in s else ("," if "," in s else None))
            if len(parts) != ncols:
                raise ParseError(f"{path}:{lineno}: expected {ncols} fields")
            try:
                out.append((*parts[:-2], float(parts[-2]), float(parts[-1])))
            except ValueError:
                raise ParseError(f"{path}:{lineno}: bounds must be numbers") from None
    return out


def _ratio_bounds(W, r):
    a, b = (1 - r) * W, (1 + r) * W
    return np.column_stack([np.minimum(a, b), np.maximum(a, b)])


def apply_constraints(parsed: ParsedEdges, spec: ConstraintSpec):
    """Graph of `parsed` carrying the bounds described by `spec`."""
    n = parsed.edge_count
    eb = np.tile(np.asarray(spec.edge_interval, dtype=np.float64), (n, 1))
    if spec.edge_mode == "file":
        index = {}
        for e in range(n):
            u, v = (parsed.labels[x] for x in parsed.edges[e])
            index[(u, v)] = e
            if not parsed.directed:
                index[(v, u)] = e
        pre = ("r:", "c:") if parsed.options.bipartite_prefixing else ("", "")
        for a, b, lo, hi in _read_rows(spec.edge_file, 4):
            e = index.get((pre[0] + a, pre[1] + b))
            if e is None:
                raise ParseError(f"{spec.edge_file}: unknown edge {a} {b}")
            eb[e] = (lo, hi)
    base = parsed.graph()
    m = parsed.vertex_count
    if parsed.directed:
        Wo, Wi = base.out_weights(), base.in_weights()
        W = np.concatenate([Wo, Wi])
    else:
        W = base.vertex_weights()
    if spec.vertex_mode == "exact":
        vb = np.column_stack([W, W])
    elif spec.vertex_mode == "ratio":
        vb = _ratio_bounds(W, spec.ratio)
    elif spec.vertex_mode == "interval":
        vb = np.tile(np.asarray(spec.vertex_interval, dtype=np.float64), (W.shape[0], 1))
    else:
        vb = np.column_stack([W, W])
        ids = {lab: i for i, lab in enumerate(parsed.labels)}
        for lab, lo, hi in _read_rows(spec.vertex_file, 3):
            off = 0
            if parsed.directed:
                kind, _, lab = lab.partition(":")
                if kind not in ("out", "in"):
                    raise ParseError(f"{spec.vertex_file}: directed labels need out: or in: prefix")
                off = m if kind == "in" else 0
            if lab not in ids:
                raise ParseError(f"{spec.vertex_file}: unknown vertex {lab!r}")
            vb[ids[lab] + off] = (lo, hi)
    if parsed.directed:
        return DirectedWeightedGraph(m, parsed.edges, parsed.weight, eb, vb[:m], vb[m:])
    return WeightedGraph(m, parsed.edges, parsed.weight, eb, vb)


def vertex_labels(parsed: ParsedEdges) -> list:
    """Labels of the vertices the sampler sees (out:/in: twins when directed)."""
    if parsed.directed:
        return [f"out:{x}" for x in parsed.labels] + [f"in:{x}" for x in parsed.labels]
    return list(parsed.labels)


def options_dict(options: IngestionOptions) -> dict:
    return asdict(options)
