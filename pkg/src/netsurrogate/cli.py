"""Command line: inspect, sample, diagnose.

Exit codes: 0 ok, 2 infeasible or ill-posed constraints, 3 input or I/O
error, 4 internal invariant failure, 130 interrupted (partial output kept,
manifest marked incomplete).
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import platform
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .cycles import InvariantError, enumerate_generators
from .diagnostics import (NormTrace, RangeAccumulator, convergence_point, log_checkpoints,
                          start_trace)
from .graph import directed_to_bipartite, to_equality_form, validate
from .ingest import (ConstraintSpec, IngestionOptions, ParseError, ParsedEdges,
                     apply_constraints, parse_edges, vertex_labels)
from .oracle import MAX_EDGES, OracleRefusal, dense_null_basis, span_check
from .sampler import InfeasibleError, UnboundedError, init_chain, run

log = logging.getLogger("netsurrogate")

EXIT_OK, EXIT_INFEASIBLE, EXIT_IO, EXIT_INTERNAL, EXIT_INTERRUPTED = 0, 2, 3, 4, 130


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


@dataclass
class Loaded:
    parsed: ParsedEdges
    spec: ConstraintSpec
    graph: object  # WeightedGraph or DirectedWeightedGraph with bounds
    undirected: object  # what the sampler sees
    range_edges: np.ndarray = field(default=None)
    range_vertices: int = 0


def load(path, options: IngestionOptions, spec: ConstraintSpec) -> Loaded:
    try:
        parsed = parse_edges(path, options, directed=spec.directed)
        graph = apply_constraints(parsed, spec)
    except (ParseError, OSError) as exc:
        raise CliError(EXIT_IO, str(exc)) from exc
    except ValueError as exc:
        raise CliError(EXIT_INFEASIBLE, str(exc)) from exc
    report = validate(graph)
    if not report.ok:
        lines = "\n  ".join(_label_violations(parsed, report))
        raise CliError(EXIT_INFEASIBLE, f"observed weights violate the constraints:\n  {lines}")
    und = directed_to_bipartite(graph)[0] if spec.directed else graph
    return Loaded(parsed, spec, graph, und, und.edges, und.vertex_count)


def _label_violations(parsed, report):
    vl = vertex_labels(parsed)
    for e, val, lo, hi in report.edge_violations:
        yield f"edge {parsed.edge_label(e)}: {val!r} outside [{lo!r}, {hi!r}]"
    for v, val, lo, hi in report.vertex_violations:
        yield f"vertex {vl[v]}: {val!r} outside [{lo!r}, {hi!r}]"


def _options(args) -> IngestionOptions:
    try:
        return IngestionOptions(dedupe=args.dedupe, rating_cap=args.cap,
                                scale_to_unit=args.scale, bipartite_prefixing=args.prefix)
    except ValueError as exc:
        raise CliError(EXIT_IO, str(exc)) from exc


def _spec(args) -> ConstraintSpec:
    try:
        return ConstraintSpec.from_flags(args.vertex_mode, args.edge_bounds, args.directed)
    except ValueError as exc:
        raise CliError(EXIT_IO, str(exc)) from exc


# ---------------------------------------------------------------- inspect

def cmd_inspect(args, out=None) -> int:
    out = out or sys.stdout
    ld = load(args.input, _options(args), _spec(args))
    try:
        problem = to_equality_form(ld.undirected)
        state = init_chain(problem)
    except (ValueError, InfeasibleError) as exc:
        raise CliError(EXIT_INFEASIBLE, str(exc)) from exc
    cats = state.catalogs
    n_loops = problem.graph.edge_count - problem.origin_edge_count
    frozen = sum(c.frozen for c in cats.catalogs)
    rows = [
        ("vertices", ld.parsed.vertex_count),
        ("edges", ld.parsed.edge_count),
        ("components", len(cats.catalogs)),
        ("frozen_components", frozen),
        ("slack_loops", n_loops),
        ("clean_cycles", cats.n_clean),
        ("dirty_cycles", sum(c.n_dirty for c in cats.catalogs)),
        ("generator_count", cats.generator_count),
        ("null_dim", cats.null_dim),
        ("bipartite", "yes" if all(c.bipartite for c in cats.catalogs) else "no"),
        ("feasible", "yes"),
    ]
    p = ld.parsed
    if p.dropped_duplicates or p.dropped_by_cap:
        rows += [("dropped_duplicates", p.dropped_duplicates), ("dropped_by_cap", p.dropped_by_cap)]
    for k, v in rows:
        print(f"{k}: {v}", file=out)
    if cats.null_dim == 0:
        print("warning: frozen, the constraints determine every edge weight", file=out)
    elif frozen:
        print(f"warning: {frozen} frozen component(s) keep their observed weights", file=out)
    if args.verify:
        return _verify(problem.graph, cats, out)
    return EXIT_OK


def _verify(graph, cats, out) -> int:
    try:
        dense = dense_null_basis(graph)
    except OracleRefusal as exc:
        print(f"verify: skipped ({exc})", file=out)
        return EXIT_OK
    gens = [g for c in cats.catalogs for g in enumerate_generators(c, budget=100_000)]
    resid, rk = span_check(gens, dense) if gens else (0.0, 0)
    ok = resid < 1e-9 and rk == dense.dim == cats.null_dim
    print(f"verify: dense_dim={dense.dim} generator_rank={rk} max_residual={resid:.3g} "
          f"{'ok' if ok else 'MISMATCH'}", file=out)
    return EXIT_OK if ok else EXIT_INTERNAL


# ----------------------------------------------------------------- output

def _header(seed, sha) -> str:
    return f"# netsurrogate {__version__} seed={seed} input_sha256={sha}\n"


def write_trace(path, header: str, trace: NormTrace):
    norm = trace.normalized()
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header)
        fh.write("steps,raw_norm,normalized_norm\n")
        for (s, d), z in zip(trace.points, norm):
            fh.write(f"{s},{d!r},{float(z)!r}\n")


def write_ranges(path, header: str, acc: RangeAccumulator, edge_labels, vlabels):
    r = acc.report()
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header)
        fh.write("kind,label,min,max\n")
        for lab, a, b in zip(edge_labels, r.edge_min, r.edge_max):
            fh.write(f"edge,{lab},{float(a)!r},{float(b)!r}\n")
        for lab, a, b in zip(vlabels, r.vertex_min, r.vertex_max):
            fh.write(f"vertex,{lab},{float(a)!r},{float(b)!r}\n")
        lo, hi = r.edge_range
        fh.write(f"edge_range,*,{lo!r},{hi!r}\n")
        lo, hi = r.vertex_range
        fh.write(f"vertex_range,*,{lo!r},{hi!r}\n")


def _edge_labels(parsed):
    return [parsed.edge_label(e) for e in range(parsed.edge_count)]


def _row(i, w) -> str:
    return str(i) + "\t" + "\t".join(map(repr, w.tolist())) + "\n"


# ----------------------------------------------------------------- sample

@dataclass
class SampleConfig:
    input: str
    out: str
    seed: int = 0
    samples: int = 1000
    steps_per_sample: int | None = None
    burn_in: int = 0
    chain: int | None = None  # chain index when run as one of --chains k
    progress_every: int = 0
    options: IngestionOptions = field(default_factory=IngestionOptions)
    spec: ConstraintSpec = field(default_factory=ConstraintSpec)


def _rng_seed(cfg: SampleConfig):
    return cfg.seed if cfg.chain is None else np.random.SeedSequence([cfg.seed, cfg.chain])


def _versions():
    import numba
    import scipy
    return {"netsurrogate": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__, "numba": numba.__version__}


def sample_one(cfg: SampleConfig, ld: Loaded | None = None) -> int:
    ld = ld or load(cfg.input, cfg.options, cfg.spec)
    parsed = ld.parsed
    outdir = Path(cfg.out)
    paths = {k: outdir / f for k, f in
             [("samples", "samples.tsv"), ("trace", "trace.csv"),
              ("ranges", "ranges.csv"), ("manifest", "manifest.json")]}
    try:
        outdir.mkdir(parents=True, exist_ok=True)
        fh = open(paths["samples"], "w", encoding="utf-8", newline="\n")
        for k in ("trace", "ranges", "manifest"):
            with open(paths[k], "a", encoding="utf-8"):
                pass
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write to {outdir}: {exc}") from exc

    manifest = {
        "tool": "netsurrogate", "versions": _versions(), "complete": False,
        "seed": cfg.seed, "chain": cfg.chain,
        "input": os.path.abspath(cfg.input), "input_sha256": parsed.content_sha256,
        "edge_order_sha256": parsed.edge_order_hash(),
        "vertices": parsed.vertex_count, "edges": parsed.edge_count,
        "rows_read": parsed.rows_read, "dropped_duplicates": parsed.dropped_duplicates,
        "dropped_by_cap": parsed.dropped_by_cap,
        "scale": None if parsed.scale is None else {"slope": parsed.scale[0], "offset": parsed.scale[1]},
        "ingestion": asdict(cfg.options),
        "constraints": cfg.spec.to_dict(),
        "samples_requested": cfg.samples, "burn_in": cfg.burn_in,
    }
    header = _header(cfg.seed if cfg.chain is None else f"{cfg.seed}/{cfg.chain}", parsed.content_sha256)
    code = EXIT_OK
    t0 = time.perf_counter()
    try:
        try:
            state = init_chain(to_equality_form(ld.undirected), _rng_seed(cfg))
        except (ValueError, InfeasibleError) as exc:
            raise CliError(EXIT_INFEASIBLE, str(exc)) from exc
        sps = state.sweep_length if cfg.steps_per_sample is None else cfg.steps_per_sample
        manifest.update(steps_per_sample=sps, null_dim=state.catalogs.null_dim,
                        generator_count=state.catalogs.generator_count,
                        components=len(state.catalogs.catalogs),
                        init_seconds=time.perf_counter() - t0)
        if state.catalogs.null_dim == 0:
            log.warning("frozen: every sample equals the observed weights")
        trace = start_trace(parsed.weight)
        acc = RangeAccumulator(ld.range_edges, ld.range_vertices)
        checkpoints = set(log_checkpoints(cfg.samples).tolist())
        fh.write(header)
        fh.write("sample\t" + "\t".join(_edge_labels(parsed)) + "\n")

        def sink(i, w):
            fh.write(_row(i, w))
            acc.update(w)
            trace.observe(w, cfg.burn_in + (i + 1) * sps, checkpoint=(i + 1) in checkpoints)

        def progress(steps, k, dist):
            log.info("sample %d/%d steps=%d distance=%.6g", k, cfg.samples, steps, dist)

        try:
            summary = run(state, cfg.samples, sps, sink=sink, burn_in=cfg.burn_in,
                          progress=progress, progress_every=cfg.progress_every)
        except UnboundedError as exc:
            raise CliError(EXIT_INFEASIBLE, str(exc)) from exc
        except InvariantError as exc:
            raise CliError(EXIT_INTERNAL, str(exc)) from exc
        except KeyboardInterrupt:
            code = EXIT_INTERRUPTED
            summary = None
        if summary is not None and summary.error:
            raise CliError(EXIT_IO, summary.error)
        manifest["samples_emitted"] = acc.count
        if summary is not None:
            manifest["complete"] = summary.completed
            manifest["run"] = {k: getattr(summary, k) for k in
                               ("steps", "clean_steps", "pair_steps", "noop_steps",
                                "mean_abs_alpha", "mean_width", "max_drift", "wall_time")}
        cp = convergence_point(trace)
        manifest["plateau_steps"] = cp
        manifest["plateau_level"] = trace.plateau_level()
        fh.close()
        write_trace(paths["trace"], header, trace)
        if acc.count:
            write_ranges(paths["ranges"], header, acc, _edge_labels(parsed), vertex_labels(parsed))
    except CliError as exc:
        manifest["error"] = str(exc)
        raise
    finally:
        fh.close()
        manifest["wall_seconds"] = time.perf_counter() - t0
        try:
            with open(paths["manifest"], "w", encoding="utf-8") as mf:
                json.dump(manifest, mf, indent=2, sort_keys=True, default=_json_default)
                mf.write("\n")
        except OSError as exc:
            log.error("cannot write manifest: %s", exc)
    return code


def _json_default(x):
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    raise TypeError(type(x).__name__)


def _sample_config(args) -> SampleConfig:
    return SampleConfig(args.input, args.out, seed=args.seed, samples=args.samples,
                        steps_per_sample=args.steps_per_sample, burn_in=args.burn_in,
                        progress_every=args.progress, options=_options(args), spec=_spec(args))


def cmd_sample(args) -> int:
    if args.replay:
        try:
            with open(args.replay, encoding="utf-8") as fh:
                m = json.load(fh)
        except (OSError, ValueError) as exc:
            raise CliError(EXIT_IO, f"cannot read manifest {args.replay}: {exc}") from exc
        if m.get("chain") is not None:
            raise CliError(EXIT_IO, "replay a multi-chain run with --seed and --chains instead")
        args = _settings_from_manifest(m, args)
    cfg = _sample_config(args)
    if cfg.samples < 1 or cfg.burn_in < 0 or (cfg.steps_per_sample is not None and cfg.steps_per_sample < 1):
        raise CliError(EXIT_IO, "samples and steps-per-sample must be >= 1, burn-in >= 0")
    if args.chains <= 1:
        return sample_one(cfg)
    ld = load(cfg.input, cfg.options, cfg.spec)
    cfgs = [SampleConfig(**{**vars(cfg), "out": str(Path(cfg.out) / f"chain_{i}"), "chain": i})
            for i in range(args.chains)]

    def one(c):
        try:
            return sample_one(c, ld)
        except CliError as exc:
            log.error("chain %s: %s", c.chain, exc)
            return exc.code

    with ThreadPoolExecutor(max_workers=min(args.chains, os.cpu_count() or 1)) as pool:
        codes = list(pool.map(one, cfgs))
    return max(codes)


def _settings_from_manifest(m: dict, base=None) -> argparse.Namespace:
    """Namespace carrying the input, ingestion and constraint settings of a manifest."""
    ing, con = m["ingestion"], m["constraints"]
    vm = con["vertex_mode"]
    if vm == "ratio":
        vm = f"ratio={con['ratio']!r}"
    elif vm == "interval":
        vm = "interval={!r},{!r}".format(*con["vertex_interval"])
    elif vm == "file":
        vm = f"file={con['vertex_file']}"
    eb = f"file={con['edge_file']}" if con["edge_mode"] == "file" else ",".join(con["edge_interval"])
    ns = argparse.Namespace(**vars(base)) if base is not None else argparse.Namespace(input=None)
    ns.input = ns.input or m["input"]
    ns.seed, ns.samples = m["seed"], m["samples_requested"]
    ns.steps_per_sample, ns.burn_in = m.get("steps_per_sample"), m["burn_in"]
    ns.vertex_mode, ns.edge_bounds, ns.directed = vm, eb, con["directed"]
    ns.dedupe, ns.cap = ing["dedupe"], ing["rating_cap"]
    ns.scale, ns.prefix = ing["scale_to_unit"], ing["bipartite_prefixing"]
    return ns


# --------------------------------------------------------------- diagnose

def _read_samples(path, n_edges):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if line.startswith("#") or line.startswith("sample\t"):
                if line.startswith("sample\t") and len(line.rstrip("\n").split("\t")) - 1 != n_edges:
                    raise CliError(EXIT_IO, f"{path}: header lists a different number of edges")
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != n_edges + 1:
                raise CliError(EXIT_IO, f"{path}:{lineno}: expected {n_edges} weights")
            yield int(parts[0]), np.array([float(x) for x in parts[1:]])


def cmd_diagnose(args) -> int:
    spath = Path(args.samples)
    if spath.is_dir():
        spath = spath / "samples.tsv"
    mpath = Path(args.manifest) if args.manifest else spath.parent / "manifest.json"
    try:
        with open(mpath, encoding="utf-8") as fh:
            m = json.load(fh)
    except (OSError, ValueError) as exc:
        raise CliError(EXIT_IO, f"cannot read manifest {mpath}: {exc}") from exc
    if "steps_per_sample" not in m:
        raise CliError(EXIT_IO, f"{mpath}: run never started, nothing to diagnose")
    ns = _settings_from_manifest(m, argparse.Namespace(input=args.input))
    ld = load(ns.input, _options(ns), _spec(ns))
    parsed = ld.parsed
    if parsed.edge_order_hash() != m["edge_order_sha256"]:
        raise CliError(EXIT_IO, "edge order of the input differs from the one recorded in the manifest")
    seed = m["seed"] if m.get("chain") is None else f"{m['seed']}/{m['chain']}"
    header = _header(seed, m["input_sha256"])
    sps, burn = m["steps_per_sample"], m["burn_in"]
    checkpoints = set(log_checkpoints(m["samples_requested"]).tolist())
    trace = start_trace(parsed.weight)
    acc = RangeAccumulator(ld.range_edges, ld.range_vertices)
    try:
        for i, w in _read_samples(spath, parsed.edge_count):
            acc.update(w)
            trace.observe(w, burn + (i + 1) * sps, checkpoint=(i + 1) in checkpoints)
    except OSError as exc:
        raise CliError(EXIT_IO, str(exc)) from exc
    except ValueError as exc:
        raise CliError(EXIT_IO, f"{spath}: {exc}") from exc
    out = Path(args.out) if args.out else spath.parent / "diagnose"
    try:
        out.mkdir(parents=True, exist_ok=True)
        write_trace(out / "trace.csv", header, trace)
        if acc.count:
            write_ranges(out / "ranges.csv", header, acc, _edge_labels(parsed), vertex_labels(parsed))
    except OSError as exc:
        raise CliError(EXIT_IO, str(exc)) from exc
    cp = convergence_point(trace)
    print(f"samples: {acc.count}")
    print(f"plateau_steps: {cp if cp is not None else 'not reached'}")
    print(f"plateau_level: {trace.plateau_level():.4f}")
    print(f"written: {out}")
    return EXIT_OK


# ------------------------------------------------------------------- main

def _common(p, need_input=True):
    if need_input:
        p.add_argument("input", help="edge list: source, target, weight (tab or comma)")
    p.add_argument("--vertex-mode", default="exact",
                   help="exact | ratio=R | interval=LO,HI | file=PATH (default exact)")
    p.add_argument("--edge-bounds", default=None, help="LO,HI or file=PATH (default 0,inf)")
    p.add_argument("--directed", action="store_true", help="preserve out- and in-weights separately")
    p.add_argument("--scale", action="store_true", help="min-max scale weights into (0, 1)")
    p.add_argument("--dedupe", action="store_true", help="keep the first of duplicate edges")
    p.add_argument("--cap", type=float, default=None, help="drop edges with weight above X")
    p.add_argument("--prefix", action="store_true",
                   help="separate label namespaces for the source and target columns")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="netsurrogate",
                                 description="Structure-preserving surrogate networks.")
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("inspect", help="counts, null-space dimension, feasibility")
    _common(p)
    p.add_argument("--verify", action="store_true",
                   help=f"cross-check against a dense null space (<= {MAX_EDGES} edges)")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("sample", help="draw surrogate weight vectors")
    p.add_argument("input", nargs="?", default=None)
    _common(p, need_input=False)
    p.add_argument("--out", "-o", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--steps-per-sample", type=int, default=None,
                   help="default: one sweep (null-space dimension)")
    p.add_argument("--burn-in", type=int, default=0, help="steps discarded before the first sample")
    p.add_argument("--chains", type=int, default=1, help="independent chains in chain_i/ subdirectories")
    p.add_argument("--progress", type=int, default=0, help="log every N samples")
    p.add_argument("--replay", default=None, help="rerun with the settings of a manifest.json")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("diagnose", help="recompute trace and ranges from a samples file")
    p.add_argument("samples", help="samples.tsv or the directory holding it")
    p.add_argument("input", nargs="?", default=None, help="original input (default: path in manifest)")
    p.add_argument("--manifest", default=None)
    p.add_argument("--out", "-o", default=None, help="default: <samples dir>/diagnose")
    p.set_defaults(func=cmd_diagnose)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    if args.command == "sample" and args.input is None and not args.replay:
        print("netsurrogate sample: an input file is required", file=sys.stderr)
        return EXIT_IO
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except InvariantError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except KeyboardInterrupt:
        return EXIT_INTERRUPTED


if __name__ == "__main__":
    sys.exit(main())
