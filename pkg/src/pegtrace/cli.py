"""Command-line front end: ``pegtrace <command> [options]``."""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .coincidence import count_M
from .diameters import find_diameters
from .generate import GenerationBudgetExceeded, generate
from .geometry import Polygon, PolygonError, validate_polygon
from .shape import convergence_ratio, integrated_identity, verify_sweep
from .svg import polygon_svg, shape_svg
from .tracer import TraceConfig, TraceError, TrickyDiameter, trace_all

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_FAULT = 0, 1, 2, 3

COMMANDS = ("diameters", "trace", "verify", "coincidences", "generate")


class InputError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    inputs: tuple[str, ...] = ()
    out: str | None = None
    seed: int = 0
    grid: int | None = None
    trace: dict = field(default_factory=dict)  # TraceConfig overrides
    n: int | None = None
    count: int | None = None

    def trace_config(self) -> TraceConfig:
        cfg = TraceConfig(**self.trace)
        if self.grid is not None:
            cfg = TraceConfig(**{**asdict(cfg), "oracle_grid": self.grid or None})
        return cfg

    def to_json(self) -> dict:
        d = asdict(self)
        d["inputs"] = list(self.inputs)
        d["version"] = __version__
        return d


def parse_polygon(text: str, source: str = "<input>") -> Polygon:
    """Parse ``{"vertices": [[x, y], ...]}``; errors name the offending position."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(f"{source}:{e.lineno}:{e.colno}: invalid JSON: {e.msg}") from None
    if not isinstance(data, dict) or "vertices" not in data:
        raise InputError(f"{source}: expected an object with a 'vertices' list")
    verts = data["vertices"]
    if not isinstance(verts, list):
        raise InputError(f"{source}: 'vertices' must be a list")
    for i, v in enumerate(verts):
        ok = isinstance(v, list) and len(v) == 2 and all(
            isinstance(c, (int, float)) and not isinstance(c, bool) for c in v
        )
        if not ok:
            raise InputError(f"{source}: vertices[{i}]: expected [x, y] numbers, got {v!r}")
    try:
        return validate_polygon(verts)
    except PolygonError as e:
        raise InputError(f"{source}: {e}") from None


def load_polygon(path: str) -> Polygon:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise InputError(f"{path}: {e.strerror}") from None
    return parse_polygon(text, path)


def dumps(obj) -> str:
    """Deterministic JSON: sorted keys, fixed indentation, non-finite floats as strings."""
    return json.dumps(_finite(obj), sort_keys=True, indent=2) + "\n"


def _finite(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


class _Sink:
    """Writes named artifacts into ``--out`` or, without it, the report to stdout."""

    def __init__(self, out: str | None):
        self.out = Path(out) if out else None
        if self.out:
            self.out.mkdir(parents=True, exist_ok=True)

    def write(self, name: str, text: str, primary: bool = False) -> None:
        if self.out:
            (self.out / name).write_text(text)
        elif primary:
            sys.stdout.write(text)


def _stem(path: str) -> str:
    return Path(path).stem


# --- commands ---------------------------------------------------------------------

def cmd_diameters(cfg: RunConfig, path: str, sink: _Sink, svg: bool) -> int:
    poly = load_polygon(path)
    rep = find_diameters(poly)
    warnings = []
    if not rep.generic:
        warnings.append("degenerate diameter structure (parallel-edge families, borderline chords, or ties)")
    if rep.tricky:
        warnings.append("tricky diameters present; tracing will refuse this polygon")
    report = {
        "run_config": cfg.to_json(),
        "input": path,
        "polygon": poly.to_json(),
        "delta_plus": rep.delta_plus,
        "generic": rep.generic,
        "diameters": [d.to_json() for d in rep.diameters],
        "borderline": [d.to_json() for d in rep.borderline],
        "families": len(rep.families),
        "ties": len(rep.ties),
        "warnings": warnings,
    }
    for w in warnings:
        print(f"warning: {path}: {w}", file=sys.stderr)
    stem = _stem(path)
    sink.write(f"{stem}.diameters.json", dumps(report), primary=True)
    if svg:
        sink.write(f"{stem}.diameters.svg", polygon_svg(poly, rep.positive, f"{stem}: positive diameters"))
    return EXIT_OK


def _trace(cfg: RunConfig, path: str):
    poly = load_polygon(path)
    rep = find_diameters(poly)
    comps = trace_all(poly, cfg.trace_config(), rep)
    return poly, rep, comps


def cmd_trace(cfg: RunConfig, path: str, sink: _Sink, svg: bool, dump: bool) -> int:
    poly, rep, comps = _trace(cfg, path)
    arcs = sum(c.is_arc for c in comps)
    report = {
        "run_config": cfg.to_json(),
        "input": path,
        "delta_plus": rep.delta_plus,
        "components": len(comps),
        "arc_components": arcs,
        "loop_components": len(comps) - arcs,
        "arc_count_matches": arcs == 2 * rep.delta_plus,
        "classes": [c.cls for c in comps],
    }
    stem = _stem(path)
    sink.write(f"{stem}.trace.json", dumps(report), primary=not dump)
    if dump:
        sink.write(f"{stem}.components.json", dumps([c.to_json() for c in comps]), primary=True)
    if svg:
        sink.write(f"{stem}.shape.svg", shape_svg(comps, f"{stem}: shape curves"))
    return EXIT_OK


def cmd_verify(cfg: RunConfig, path: str, sink: _Sink) -> int:
    poly, _, comps = _trace(cfg, path)
    rows, table = [], []
    ok = True
    for i, c in enumerate(comps):
        sw = verify_sweep(poly, c)
        conv = convergence_ratio(poly, c)
        lhs, rhs = integrated_identity(poly, c)
        row = sw.to_json() | {"component": i, "shift": c.shift, "identity_lhs": lhs, "identity_rhs": rhs}
        rows.append(row)
        table.append(
            {
                "component": i,
                "h": conv.h,
                "residual_h": conv.coarse,
                "residual_h2": conv.fine,
                "ratio": conv.ratio,
                "floor": conv.floor,
                "pass": conv.passed,
            }
        )
        ok &= sw.passed and conv.passed
    report = {"run_config": cfg.to_json(), "input": path, "area": poly.area, "components": rows, "differential": table, "pass": ok}
    sink.write(f"{_stem(path)}.verify.json", dumps(report), primary=True)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_coincidences(cfg: RunConfig, path: str, sink: _Sink) -> int:
    poly, rep, comps = _trace(cfg, path)
    res = count_M(poly, comps, rep)
    report = {"run_config": cfg.to_json(), "input": path} | res.to_json()
    sink.write(f"{_stem(path)}.coincidences.json", dumps(report), primary=True)
    return EXIT_OK if res.pass_generic and res.pass_nontricky else EXIT_FAIL


def cmd_generate(cfg: RunConfig, sink: _Sink) -> int:
    if cfg.n is None or cfg.n < 3:
        raise InputError("generate needs --n N with N >= 3")
    polys = generate(cfg.n, cfg.count or 1, cfg.seed)
    width = len(str(len(polys) - 1))
    for i, p in enumerate(polys):
        sink.write(f"poly_n{cfg.n}_s{cfg.seed}_{i:0{width}d}.json", dumps(p.to_json()))
    manifest = {"run_config": cfg.to_json(), "count": len(polys)}
    sink.write("manifest.json", dumps(manifest), primary=True)
    return EXIT_OK


# --- entry point ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pegtrace", description="Rectangles inscribed in polygons.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--input", action="append", default=[], metavar="FILE", help="polygon JSON (repeatable)")
    ap.add_argument("--out", metavar="DIR", help="write reports here instead of stdout")
    ap.add_argument("--seed", type=int, default=0, metavar="K")
    ap.add_argument("--grid", type=int, metavar="N", help="oracle grid for loop discovery (0 disables)")
    ap.add_argument("--svg", action="store_true", help="also write SVG figures (needs --out)")
    ap.add_argument("--dump", action="store_true", help="trace: dump full components")
    ap.add_argument("--h-max", type=float, metavar="H", help="largest step, as a fraction of the perimeter")
    ap.add_argument("--n", type=int, metavar="N", help="generate: vertex count")
    ap.add_argument("--count", type=int, default=1, metavar="C", help="generate: number of polygons")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {"h_max": args.h_max} if args.h_max is not None else {}
    cfg = RunConfig(
        command=args.command,
        inputs=tuple(args.input),
        out=args.out,
        seed=args.seed,
        grid=args.grid,
        trace=overrides,
        n=args.n,
        count=args.count,
    )
    sink = _Sink(args.out)
    if args.svg and not args.out:
        print("warning: --svg ignored without --out", file=sys.stderr)
    try:
        if args.command == "generate":
            return cmd_generate(cfg, sink)
        if not args.input:
            raise InputError(f"{args.command} needs --input FILE")
        code = EXIT_OK
        for path in args.input:
            if args.command == "diameters":
                rc = cmd_diameters(cfg, path, sink, args.svg)
            elif args.command == "trace":
                rc = cmd_trace(cfg, path, sink, args.svg, args.dump)
            elif args.command == "verify":
                rc = cmd_verify(cfg, path, sink)
            else:
                rc = cmd_coincidences(cfg, path, sink)
            code = max(code, rc)
        return code
    except (InputError, GenerationBudgetExceeded, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except TrickyDiameter as e:
        print(f"error: {e} (the inscribed-rectangle count needs a polygon without tricky diameters)", file=sys.stderr)
        return EXIT_INPUT
    except TraceError as e:
        print(f"tracer fault: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAULT


if __name__ == "__main__":
    sys.exit(main())
