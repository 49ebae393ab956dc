"""Command-line interface: check | solve | config | compare."""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import logging
import math
import os
import sys
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .assembly import AssemblyError, calabi_energy, total_curvature, vertex_classes
from .flows import FlowSpec, FlowTrace, Status, integrate, newton_solve
from .hypgeom import GeometryError, solve_config
from .render import config_svg
from .surface import LIBRARY, SurfaceError, TriangulatedSurface, admissible, bundled, validate

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_GEOMETRY = 0, 1, 2, 3
AGREEMENT_TOL = 1e-5
INIT_RANGE = 2.0


class InputError(Exception):
    """Unreadable or invalid input file or argument (exit code 2)."""


# -- input ------------------------------------------------------------------

def _read_json(path) -> object:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise InputError(f"{path}: {e.strerror or e}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(f"{path}: line {e.lineno}, column {e.colno}: {e.msg}") from None


def load_surface(spec: str) -> TriangulatedSurface:
    """A surface file, or the name of a bundled surface when no such file exists."""
    if not os.path.exists(spec) and spec in LIBRARY:
        return bundled(spec)
    try:
        surface = TriangulatedSurface.from_json(_read_json(spec))
    except SurfaceError as e:
        raise InputError(f"{spec}: {e}") from None
    problems = validate(surface)
    if problems:
        raise InputError(f"{spec}: {problems[0]}")
    return surface


def load_target(path: str, surface: TriangulatedSurface) -> np.ndarray:
    data = _read_json(path)
    if not isinstance(data, dict) or "L_hat" not in data:
        raise InputError(f"{path}: expected an object with field 'L_hat'")
    vals = data["L_hat"]
    if not isinstance(vals, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in vals):
        raise InputError(f"{path}: field 'L_hat' must be a list of numbers")
    if len(vals) != surface.n_vertices:
        raise InputError(f"{path}: field 'L_hat' has {len(vals)} entries, surface has {surface.n_vertices} vertices")
    for i, v in enumerate(vals):
        if not (math.isfinite(v) and v > 0):
            raise InputError(f"{path}: L_hat[{i + 1}] = {v} must be positive and finite")
    return np.array(vals, dtype=float)


# -- output -----------------------------------------------------------------

def _num(x) -> str:
    x = float(x)
    return format(x, ".17g") if math.isfinite(x) else "null"


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with every float at 17 significant digits, so output is byte-stable."""
    pad, inner = " " * (indent * _level), " " * (indent * (_level + 1))
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in seq) + "]"
        return "[\n" + ",\n".join(inner + dumps(v, indent, _level + 1) for v in seq) + "\n" + pad + "]"
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    return json.dumps(str(obj))


def write_atomic(path, text: str) -> None:
    """Write through a temporary file in the target directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def trace_csv(trace: FlowTrace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    n = len(trace.K[0])
    w.writerow(["t", "calabi"] + [f"K_{i + 1}" for i in range(n)])
    for t, C, K in zip(trace.times, trace.calabi, trace.K):
        w.writerow([_num(t), _num(C)] + [_num(x) for x in K])
    return buf.getvalue()


# -- solving ----------------------------------------------------------------

@dataclass
class SolveResult:
    label: str
    K: np.ndarray
    residual: float
    outcome: str
    reason: str
    iterations: int
    wall_time: float | None
    trace: FlowTrace | None = None

    @property
    def converged(self) -> bool:
        return self.outcome == Status.CONVERGED.value

    def to_dict(self, timing: bool = True) -> dict:
        return {
            "flow": self.label,
            "k": np.exp(self.K),
            "K": self.K,
            "classes": vertex_classes(self.K),
            "residual": self.residual,
            "outcome": self.outcome,
            "reason": self.reason,
            "iterations": self.iterations,
            "wall_time": self.wall_time if timing else None,
        }


def parse_flow(text: str, s: float = 1.0, p: float = 2.0) -> tuple[str, float, float]:
    """``calabi``, ``ricci``, ``newton``, ``fractional[:s]`` or ``pcalabi[:p]``."""
    name, _, arg = text.partition(":")
    name = name.strip().lower()
    if name not in ("calabi", "ricci", "newton", "fractional", "pcalabi"):
        raise InputError(f"unknown flow {text!r}")
    if arg:
        try:
            val = float(arg)
        except ValueError:
            raise InputError(f"bad parameter in flow {text!r}") from None
        if name == "fractional":
            s = val
        elif name == "pcalabi":
            p = val
        else:
            raise InputError(f"flow {name!r} takes no parameter")
    return name, s, p


def run_one(surface, L_hat, name: str, *, s=1.0, p=2.0, tol=1e-10, max_time=1e4, step=0.1,
            max_steps=200_000, K0=None) -> SolveResult:
    K0 = np.zeros(surface.n_vertices) if K0 is None else np.asarray(K0, dtype=float)
    t0 = time.perf_counter()
    if name == "newton":
        res = newton_solve(surface, L_hat, K0)
        wall = time.perf_counter() - t0
        C = calabi_energy(total_curvature(surface, res.K), L_hat)
        outcome = Status.CONVERGED if res.converged else Status.DIVERGED
        return SolveResult("newton", res.K, C, outcome.value, res.reason, res.iterations, wall)
    spec = FlowSpec(name, L_hat, s=s, p=p, step=step, tol=tol, max_time=max_time, max_steps=max_steps)
    trace = integrate(spec, surface, K0)
    wall = time.perf_counter() - t0
    return SolveResult(spec.label, trace.K_final, trace.calabi[-1], trace.status.value, trace.reason,
                       trace.accepted, wall, trace)


def _initial_state(n: int, seed: int | None) -> np.ndarray | None:
    if seed is None:
        return None
    return np.random.default_rng(seed).uniform(-INIT_RANGE, INIT_RANGE, n)


# -- commands ---------------------------------------------------------------

def cmd_check(args) -> int:
    surface = load_surface(args.surface)
    L_hat = load_target(args.target, surface)
    method = "exhaustive" if surface.n_vertices <= 20 else "mincut"
    report = admissible(surface, L_hat, literal=args.literal, method=method)
    print(report.describe())
    return EXIT_OK if report.admissible else EXIT_FAIL


def cmd_solve(args) -> int:
    surface = load_surface(args.surface)
    L_hat = load_target(args.target, surface)
    name, s, p = parse_flow(args.flow, args.s, args.p)
    try:
        res = run_one(surface, L_hat, name, s=s, p=p, tol=args.tol, max_time=args.max_time, step=args.step,
                      K0=_initial_state(surface.n_vertices, args.seed))
    except (GeometryError, AssemblyError) as e:
        print(f"geometric error: {e}", file=sys.stderr)
        return EXIT_GEOMETRY
    text = dumps(res.to_dict(timing=not args.no_timing)) + "\n"
    if args.output:
        write_atomic(args.output, text)
    else:
        sys.stdout.write(text)
    if args.trace:
        if res.trace is None:
            print("warning: --trace is ignored for the Newton solver", file=sys.stderr)
        else:
            write_atomic(args.trace, trace_csv(res.trace))
    print(f"{res.label}: {res.outcome} after {res.iterations} iterations, residual {res.residual:.3e}"
          + (f" ({res.reason})" if res.reason else ""), file=sys.stderr)
    if res.reason.startswith("geometric error"):
        return EXIT_GEOMETRY
    return EXIT_OK if res.converged else EXIT_FAIL


def cmd_config(args) -> int:
    try:
        ks = [float(x) for x in args.k]
    except ValueError as e:
        raise InputError(str(e)) from None
    if not all(math.isfinite(k) and k > 0 for k in ks):
        raise InputError(f"curvatures must be positive and finite, got {args.k}")
    try:
        cfg = solve_config(*ks)
    except GeometryError as e:
        print(f"geometric error: {e}", file=sys.stderr)
        return EXIT_GEOMETRY
    for name, k, L in zip("ijk", ks, cfg.arcs):
        print(f"L_{name} = {L:.15g}    (k_{name} = {k:.6g}, {cfg.classes['ijk'.index(name)].value})")
    print(f"area = {cfg.area:.15g}")
    if args.svg:
        write_atomic(args.svg, config_svg(cfg))
    return EXIT_OK


def cmd_compare(args) -> int:
    surface = load_surface(args.surface)
    L_hat = load_target(args.target, surface)
    flows = [parse_flow(f) for f in args.flows.split(",") if f.strip()]
    if not flows:
        raise InputError("--flows lists no flows")
    if not any(f[0] == "newton" for f in flows):
        flows.append(("newton", 1.0, 2.0))
    method = "exhaustive" if surface.n_vertices <= 20 else "mincut"
    report = admissible(surface, L_hat, method=method)
    if not report.admissible:
        print(f"warning: target is {report.describe()}", file=sys.stderr)
    K0 = _initial_state(surface.n_vertices, args.seed)

    def job(f):
        name, s, p = f
        try:
            return run_one(surface, L_hat, name, s=s, p=p, tol=args.tol, max_time=args.max_time,
                           step=args.step, K0=K0)
        except (GeometryError, AssemblyError) as e:
            label = name if name in ("calabi", "ricci", "newton") else f"{name}:{s if name == 'fractional' else p:g}"
            return SolveResult(label, np.full(surface.n_vertices, np.nan), math.inf, Status.DIVERGED.value,
                               f"geometric error: {e}", 0, None)

    with ThreadPoolExecutor(max_workers=min(len(flows), os.cpu_count() or 1)) as pool:
        results = list(pool.map(job, flows))

    width = max(len(r.label) for r in results)
    print(f"{'flow':<{width}}  {'outcome':<10} {'iters':>7} {'wall[s]':>9} {'residual':>10}")
    for r in results:
        wall = f"{r.wall_time:9.3f}" if r.wall_time is not None else f"{'-':>9}"
        print(f"{r.label:<{width}}  {r.outcome:<10} {r.iterations:>7} {wall} {r.residual:10.3e}")
    worst = 0.0
    if len(results) > 1:
        print("\npairwise max |K - K'|:")
        for a, b in itertools.combinations(results, 2):
            d = float(np.max(np.abs(a.K - b.K)))
            worst = max(worst, d) if math.isfinite(d) else math.inf
            print(f"  {a.label:<{width}} vs {b.label:<{width}}  {d:.3e}")
    ok = all(r.converged for r in results) and worst < AGREEMENT_TOL
    print(f"\n{'agree' if ok else 'DISAGREE'}: max disagreement {worst:.3e} (tolerance {AGREEMENT_TOL:g})")
    return EXIT_OK if ok else EXIT_FAIL


# -- parser -----------------------------------------------------------------

def _flow_options(p: argparse.ArgumentParser, tol: float = 1e-10) -> None:
    p.add_argument("--tol", type=float, default=tol, help=f"Calabi-energy stopping threshold (default {tol:g})")
    p.add_argument("--max-time", type=float, default=1e4, help="flow time limit")
    p.add_argument("--step", type=float, default=0.1, help="initial step size")
    p.add_argument("--seed", type=int, default=None,
                   help="start from K0 uniform in [-2, 2]^n drawn with this seed (default K0 = 0)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hypack", description="Generalized hyperbolic circle packings on closed surfaces.")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="test a target for admissibility")
    p.add_argument("surface", help="surface JSON file or bundled name")
    p.add_argument("target", help='target JSON file {"L_hat": [...]}')
    p.add_argument("--literal", action="store_true", help="compare the full sum of L_hat against every subset bound")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("solve", help="run one flow or Newton's method")
    p.add_argument("surface", help="surface JSON file or bundled name")
    p.add_argument("target", help='target JSON file {"L_hat": [...]}')
    p.add_argument("-o", "--output", help="SolveResult JSON path (default stdout)")
    p.add_argument("--flow", default="calabi", help="calabi | ricci | newton | fractional[:s] | pcalabi[:p]")
    p.add_argument("--s", type=float, default=1.0, help="fractional exponent")
    p.add_argument("--p", type=float, default=2.0, help="p-Laplacian exponent, > 1")
    p.add_argument("--trace", help="write the flow trace as CSV")
    p.add_argument("--no-timing", action="store_true", help="write wall_time as null for byte-stable output")
    _flow_options(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("config", help="arcs and area of one three-circle face")
    p.add_argument("k", nargs=3, metavar="k", help="geodesic curvatures k_i k_j k_k")
    p.add_argument("--svg", help="render the face in the Poincare disk")
    p.set_defaults(func=cmd_config)

    p = sub.add_parser("compare", help="run several flows plus Newton and compare the limits")
    p.add_argument("surface", help="surface JSON file or bundled name")
    p.add_argument("target", help='target JSON file {"L_hat": [...]}')
    p.add_argument("--flows", default="calabi,ricci,fractional:0.5,pcalabi:3",
                   help="comma-separated flow list; Newton is always added")
    _flow_options(p, tol=1e-14)
    p.set_defaults(func=cmd_compare)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as e:
        # flow parameter ranges and the like
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
