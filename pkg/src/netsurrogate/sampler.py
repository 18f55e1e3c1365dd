"""Markov chain over feasible edge weights.

Each step picks a null-space generator y uniformly from the pool of all
components' generators, computes the largest interval [lo, hi] such that
w + alpha * y stays inside the edge boxes, and moves to w + alpha * y with
alpha uniform on [lo, hi]. Vertex weights never change because A y = 0.

Random stream protocol: steps are drawn in blocks (one block per sample,
split into chunks of at most 2**20 steps). For a block of n steps the
generator first draws n pool indices with ``integers(0, pool_size, n)``
and then n uniforms with ``random(n)``. The same (problem, seed,
steps_per_sample, burn_in) therefore reproduces the same chain bit for bit.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _kernels
from .cycles import CatalogSet, CycleVector, InvariantError, build_catalogs
from .graph import EqualityProblem, WeightedGraph, to_equality_form, validate

log = logging.getLogger(__name__)

CHUNK = 1 << 20
DRIFT_TOL = 1e-8


class InfeasibleError(ValueError):
    """The starting point violates a constraint."""


class UnboundedError(ValueError):
    """A generator direction is not bounded by any edge interval."""


@dataclass(eq=False)
class ChainState:
    problem: EqualityProblem
    catalogs: CatalogSet
    weights: np.ndarray
    rng: np.random.Generator
    steps_taken: int = 0
    sweep_length: int = 1
    degenerate: bool = False
    _buf_idx: np.ndarray = field(default=None, repr=False)
    _buf_coef: np.ndarray = field(default=None, repr=False)

    @property
    def pool_size(self) -> int:
        return self.catalogs.generator_count

    @property
    def original_weights(self) -> np.ndarray:
        return self.weights[: self.problem.origin_edge_count]

    def drift(self) -> float:
        """Largest vertex-weight deviation, relative to max(1, |target|)."""
        r = self.problem.residual(self.weights)
        if r.size == 0:
            return 0.0
        return float(np.max(np.abs(r) / np.maximum(1.0, np.abs(self.problem.vertex_target))))


@dataclass(frozen=True)
class StepRecord:
    kind: str
    alpha: float
    interval: tuple
    touched_edges: int


@dataclass
class RunSummary:
    samples_emitted: int = 0
    steps: int = 0
    clean_steps: int = 0
    pair_steps: int = 0
    noop_steps: int = 0
    mean_abs_alpha: float = 0.0
    mean_width: float = 0.0
    max_drift: float = 0.0
    wall_time: float = 0.0
    completed: bool = False
    error: str | None = None


def init_chain(problem, seed: int | np.random.SeedSequence = 0, roots=None,
               verify: bool = False) -> ChainState:
    """Start a chain at the observed weights (slack loops at zero).

    `problem` may be an EqualityProblem or a WeightedGraph, which is then
    converted with `to_equality_form`.
    """
    if isinstance(problem, WeightedGraph):
        try:
            problem = to_equality_form(problem)
        except ValueError as exc:
            raise InfeasibleError(str(exc)) from exc
    g = problem.graph
    report = validate(g)
    # vertex targets are what the chain preserves, check against them too
    drift = np.abs(problem.residual(g.weight)) / np.maximum(1.0, np.abs(problem.vertex_target))
    if not report.ok or np.any(drift > DRIFT_TOL):
        lines = list(report.lines())
        lines += [f"vertex {v}: weight differs from target" for v in np.flatnonzero(drift > DRIFT_TOL)]
        raise InfeasibleError("infeasible start: " + "; ".join(lines))
    cats = build_catalogs(g, roots=roots, verify=verify)
    longest = 1
    for csr in (cats.clean, cats.dirty):
        if csr.rows:
            longest = max(longest, int(np.diff(csr.ptr).max()))
    state = ChainState(
        problem=problem,
        catalogs=cats,
        weights=np.array(g.weight, dtype=np.float64),
        rng=np.random.default_rng(seed),
        sweep_length=max(1, cats.null_dim),
        _buf_idx=np.empty(2 * longest, dtype=np.int64),
        _buf_coef=np.empty(2 * longest, dtype=np.int8),
    )
    if cats.generator_count == 0:
        state.degenerate = True
    return state


def _warn_degenerate(state: ChainState):
    if state.degenerate:
        log.warning("degenerate chain: every component is frozen, steps are no-ops")
        state.degenerate = False  # only once


def propose_generator(state: ChainState) -> CycleVector | None:
    """Draw one generator uniformly from the global pool (advances the RNG)."""
    if state.pool_size == 0:
        _warn_degenerate(state)
        return None
    k = int(state.rng.integers(0, state.pool_size))
    return state.catalogs.generator(k)


def feasible_interval(weights, bounds, y: CycleVector) -> tuple[float, float]:
    """Largest [lo, hi] with bounds[:,0] <= weights + alpha*y <= bounds[:,1] on the support."""
    e = y.edges
    k = y.coefs.astype(np.float64)
    w = np.asarray(weights, dtype=np.float64)[e]
    a = (bounds[e, 0] - w) / k
    b = (bounds[e, 1] - w) / k
    lo = float(np.max(np.where(k > 0, a, b))) if e.size else -np.inf
    hi = float(np.min(np.where(k > 0, b, a))) if e.size else np.inf
    return min(lo, 0.0), max(hi, 0.0)


def alpha_interval(state: ChainState, y: CycleVector) -> tuple[float, float]:
    return feasible_interval(state.weights, state.problem.graph.edge_bounds, y)


def _advance(state: ChainState, n: int, stats: np.ndarray, last: np.ndarray):
    if n <= 0:
        return
    if state.pool_size == 0:
        _warn_degenerate(state)
        state.steps_taken += n
        stats[0] += n
        stats[3] += n
        return
    cats = state.catalogs
    bounds = state.problem.graph.edge_bounds
    lower = np.ascontiguousarray(bounds[:, 0])
    upper = np.ascontiguousarray(bounds[:, 1])
    done = 0
    while done < n:
        m = min(CHUNK, n - done)
        idx = state.rng.integers(0, state.pool_size, size=m, dtype=np.int64)
        u = state.rng.random(m)
        status, at = _kernels.run_steps(
            state.weights, lower, upper, cats.n_clean,
            cats.clean.ptr, cats.clean.idx, cats.clean.coef,
            cats.dirty.ptr, cats.dirty.idx, cats.dirty.coef, cats.dirty_signs,
            cats.dirty_start, cats.pair_cum, idx, u, stats, last,
            state._buf_idx, state._buf_coef)
        if status == _kernels.UNBOUNDED:
            state.steps_taken += done + at
            raise UnboundedError(f"generator {idx[at]} has an unbounded step interval; "
                                 "give every edge finite bounds")
        done += m
    state.steps_taken += n


def step(state: ChainState) -> StepRecord:
    """Take one step and check feasibility of everything it touched."""
    stats = np.zeros(6)
    last = np.zeros(5)
    before = state.weights.copy()
    _advance(state, 1, stats, last)
    if state.pool_size == 0:
        return StepRecord("none", 0.0, (0.0, 0.0), 0)
    b = state.problem.graph.edge_bounds
    if np.any(state.weights < b[:, 0]) or np.any(state.weights > b[:, 1]):
        raise InvariantError("edge weight left its interval")
    changed = np.flatnonzero(state.weights != before)
    if changed.size and state.drift() > DRIFT_TOL:
        raise InvariantError(f"vertex weights drifted by {state.drift():.3g}")
    return StepRecord("clean" if last[0] == 0 else "pair", float(last[3]),
                      (float(last[1]), float(last[2])), int(last[4]))


def run(state: ChainState, samples: int, steps_per_sample: int | None = None,
        sink: Callable[[int, np.ndarray], None] | None = None, burn_in: int = 0,
        progress: Callable[[int, int, float], None] | None = None,
        progress_every: int = 0) -> RunSummary:
    """Emit `samples` snapshots of the original-edge weights.

    A snapshot is taken after every `steps_per_sample` steps (default: one
    sweep, i.e. the null-space dimension). `sink(i, weights)` receives a
    read-only copy. If the sink raises, the run stops and the returned
    summary carries the error.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    sps = state.sweep_length if steps_per_sample is None else int(steps_per_sample)
    if sps < 1:
        raise ValueError("steps_per_sample must be >= 1")
    stats = np.zeros(6)
    last = np.zeros(5)
    summary = RunSummary()
    start = state.original_weights.copy()
    t0 = time.perf_counter()
    _advance(state, burn_in, stats, last)
    for i in range(samples):
        _advance(state, sps, stats, last)
        summary.max_drift = max(summary.max_drift, state.drift())
        if summary.max_drift > DRIFT_TOL:
            raise InvariantError(f"vertex weights drifted by {summary.max_drift:.3g}")
        snap = state.original_weights.copy()
        snap.setflags(write=False)
        if sink is not None:
            try:
                sink(i, snap)
            except Exception as exc:  # noqa: BLE001 - reported in the summary
                summary.error = f"sink failed at sample {i}: {exc!r}"
                break
        summary.samples_emitted = i + 1
        if progress is not None and progress_every and (i + 1) % progress_every == 0:
            progress(state.steps_taken, i + 1, float(np.linalg.norm(snap - start)))
    else:
        summary.completed = True
    summary.steps = int(stats[0])
    summary.clean_steps = int(stats[1])
    summary.pair_steps = int(stats[2])
    summary.noop_steps = int(stats[3])
    if stats[0]:
        summary.mean_abs_alpha = float(stats[4] / stats[0])
        summary.mean_width = float(stats[5] / stats[0])
    summary.wall_time = time.perf_counter() - t0
    return summary
