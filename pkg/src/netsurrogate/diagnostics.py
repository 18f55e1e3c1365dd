"""Convergence traces and min/max range reports."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PLATEAU_SLOPE = 0.01
PER_DECADE = 20


def frobenius_distance(w, w_j, n_original: int | None = None) -> float:
    """Euclidean norm of w - w_j over the first `n_original` entries (all if None)."""
    w = np.asarray(w, dtype=np.float64)
    w_j = np.asarray(w_j, dtype=np.float64)
    if w.shape != w_j.shape:
        raise ValueError(f"length mismatch: {w.shape} vs {w_j.shape}")
    if n_original is not None:
        w, w_j = w[:n_original], w_j[:n_original]
    return float(np.sqrt(np.sum((w - w_j) ** 2)))


def log_checkpoints(total: int, per_decade: int = PER_DECADE) -> np.ndarray:
    """Sorted distinct integers in [0, total], log-spaced with `per_decade` points per decade."""
    if total <= 0:
        return np.array([0], dtype=np.int64)
    k = np.arange(0, int(np.ceil(np.log10(total) * per_decade)) + 1)
    pts = np.floor(10.0 ** (k / per_decade)).astype(np.int64)
    pts = np.concatenate([[0], pts[pts <= total], [total]])
    return np.unique(pts)


@dataclass
class NormTrace:
    """Frobenius distance from a reference state as the chain advances.

    `points` are the checkpoints written to trace files. Every sample fed
    through `observe` is also kept (steps, distance) for the plateau
    heuristic, which needs more than the sparse checkpoints.
    """

    reference: np.ndarray
    points: list = field(default_factory=list)
    sample_steps: list = field(default_factory=list)
    sample_dist: list = field(default_factory=list)

    def observe(self, snapshot, steps: int, checkpoint: bool = False) -> float:
        last = self.sample_steps[-1] if self.sample_steps else (self.points[-1][0] if self.points else 0)
        if steps < last:
            raise ValueError(f"steps {steps} precede last recorded {last}")
        d = frobenius_distance(self.reference, snapshot)
        self.sample_steps.append(int(steps))
        self.sample_dist.append(d)
        if checkpoint:
            self.points.append((int(steps), d))
        return d

    @property
    def normalization(self) -> float:
        return max(max(self.sample_dist, default=0.0), max((d for _, d in self.points), default=0.0))

    def steps(self) -> np.ndarray:
        return np.array([s for s, _ in self.points], dtype=np.int64)

    def raw(self) -> np.ndarray:
        return np.array([d for _, d in self.points], dtype=np.float64)

    def normalized(self) -> np.ndarray:
        z = self.normalization
        r = self.raw()
        return r / z if z > 0 else np.zeros_like(r)

    def plateau_level(self) -> float:
        """Mean normalised distance over the final decade of observed samples."""
        s = np.asarray(self.sample_steps, dtype=np.float64)
        z = self.normalization
        if s.size == 0 or z == 0:
            return 0.0
        sel = s >= s[-1] / 10.0
        return float(np.mean(np.asarray(self.sample_dist)[sel]) / z)


def start_trace(reference) -> NormTrace:
    """New trace whose first point is (0, 0): the reference itself."""
    t = NormTrace(np.array(reference, dtype=np.float64))
    t.points.append((0, 0.0))
    return t


def record_trace(trace: NormTrace, snapshot, steps: int) -> NormTrace:
    """Append a checkpoint (steps, distance of snapshot from the reference)."""
    trace.observe(snapshot, steps, checkpoint=True)
    return trace


def _slopes(x, y, lo_idx, hi_idx):
    """Least-squares slopes of y on x over index ranges [lo, hi), via prefix sums."""
    c = lambda a: np.concatenate([[0.0], np.cumsum(a)])
    S1, Sx, Sy, Sxx, Sxy = c(np.ones_like(x)), c(x), c(y), c(x * x), c(x * y)
    n = S1[hi_idx] - S1[lo_idx]
    sx = Sx[hi_idx] - Sx[lo_idx]
    sy = Sy[hi_idx] - Sy[lo_idx]
    sxx = Sxx[hi_idx] - Sxx[lo_idx]
    sxy = Sxy[hi_idx] - Sxy[lo_idx]
    den = n * sxx - sx * sx
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(den > 0, (n * sxy - sx * sy) / den, np.inf)


def plateau_slope(trace: NormTrace, upto: int | None = None) -> float:
    """Slope (per decade of steps) of the normalised distance over the final decade."""
    s = np.asarray(trace.sample_steps, dtype=np.float64)
    if upto is None:
        upto = s[-1] if s.size else 0
    k = int(np.searchsorted(s, upto, side="right"))
    return float(convergence_slopes(trace, np.array([upto]))[0]) if k else np.inf


def convergence_slopes(trace: NormTrace, at) -> np.ndarray:
    s = np.asarray(trace.sample_steps, dtype=np.float64)
    z = trace.normalization or 1.0
    y = np.asarray(trace.sample_dist, dtype=np.float64) / z
    keep = s > 0
    s, y = s[keep], y[keep]
    at = np.asarray(at, dtype=np.float64)
    hi = np.searchsorted(s, at, side="right")
    lo = np.searchsorted(s, at / 10.0, side="left")
    return _slopes(np.log10(s), y, lo, hi)


def convergence_point(trace: NormTrace, threshold: float = PLATEAU_SLOPE,
                      min_samples: int = 10) -> int | None:
    """First checkpoint at which the trace counts as flat, or None.

    Flat means the least-squares slope of the normalised per-sample
    distance against log10(steps), fitted over the decade ending at the
    checkpoint, is below `threshold` in magnitude. Advisory only.
    """
    steps = trace.steps()
    steps = steps[steps > 0]
    if steps.size == 0:
        return None
    s = np.asarray(trace.sample_steps, dtype=np.float64)
    first = s[s > 0][0] if np.any(s > 0) else 1
    cand = steps[steps >= 10 * first]
    if cand.size == 0:
        return None
    counts = np.searchsorted(s, cand, side="right") - np.searchsorted(s, cand / 10.0, side="left")
    slopes = convergence_slopes(trace, cand)
    ok = (np.abs(slopes) < threshold) & (counts >= min_samples)
    return int(cand[np.argmax(ok)]) if ok.any() else None


@dataclass
class RangeReport:
    edge_min: np.ndarray
    edge_max: np.ndarray
    vertex_min: np.ndarray
    vertex_max: np.ndarray
    samples: int

    @property
    def edge_range(self) -> tuple[float, float]:
        return float(self.edge_min.min(initial=np.inf)), float(self.edge_max.max(initial=-np.inf))

    @property
    def vertex_range(self) -> tuple[float, float]:
        return float(self.vertex_min.min(initial=np.inf)), float(self.vertex_max.max(initial=-np.inf))


class RangeAccumulator:
    """Streaming per-edge and per-vertex min/max over original edges."""

    def __init__(self, edges, vertex_count: int):
        self.edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        self.m = vertex_count
        n = self.edges.shape[0]
        self.emin = np.full(n, np.inf)
        self.emax = np.full(n, -np.inf)
        self.vmin = np.full(vertex_count, np.inf)
        self.vmax = np.full(vertex_count, -np.inf)
        self.count = 0

    def update(self, w):
        w = np.asarray(w, dtype=np.float64)[: self.edges.shape[0]]
        vw = (np.bincount(self.edges[:, 0], weights=w, minlength=self.m)
              + np.bincount(self.edges[:, 1], weights=w, minlength=self.m))
        np.minimum(self.emin, w, out=self.emin)
        np.maximum(self.emax, w, out=self.emax)
        np.minimum(self.vmin, vw, out=self.vmin)
        np.maximum(self.vmax, vw, out=self.vmax)
        self.count += 1

    def report(self) -> RangeReport:
        if self.count == 0:
            raise ValueError("no samples")
        return RangeReport(self.emin.copy(), self.emax.copy(), self.vmin.copy(),
                           self.vmax.copy(), self.count)


def range_report(samples, problem) -> RangeReport:
    """Exact min/max over samples. `problem` is a WeightedGraph or EqualityProblem;
    slack self-loops are excluded from vertex weights."""
    if hasattr(problem, "origin_edge_count"):
        edges = problem.graph.edges[: problem.origin_edge_count]
        m = problem.graph.vertex_count
    else:
        edges, m = problem.edges, problem.vertex_count
    acc = RangeAccumulator(edges, m)
    for w in samples:
        acc.update(w)
    return acc.report()
