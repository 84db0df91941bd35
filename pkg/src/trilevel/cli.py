"""Command-line entry point: ``trilevel {separatrix,minimize,ground,scan,converge}``."""
from __future__ import annotations

import argparse
import contextlib
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import io as tio
from . import quantum, scan, semiclassical
from .errors import CapReached, TrilevelError
from .model import Configuration, ModelParams, load_params, resonant, validate

log = logging.getLogger("trilevel")

EXIT_OK, EXIT_INVALID, EXIT_PARTIAL = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _floats(text: str, count: int | None = None) -> list[float]:
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if count is not None and len(values) != count:
        raise argparse.ArgumentTypeError(f"expected {count} values, got {text!r}")
    return values


def _range(text: str) -> tuple[float, float, int]:
    lo, hi, steps = _floats(text, 3)
    if steps != int(steps):
        raise argparse.ArgumentTypeError(f"step count must be an integer, got {text!r}")
    return lo, hi, int(steps)


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", choices=["xi", "lambda", "v"], default=None)
    p.add_argument("--params", type=Path, help="key = value parameter file")
    p.add_argument("--omega", type=lambda t: _floats(t, 3),
                   help="omega1,omega2,omega3 (default: a resonant scheme per configuration)")
    p.add_argument("--mu12", type=float)
    p.add_argument("--mu13", type=float)
    p.add_argument("--mu23", type=float)
    p.add_argument("--na", type=int, help="number of atoms")
    p.add_argument("--out", type=Path, help="output file (default stdout)")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="trilevel", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("separatrix", help="sample the semiclassical phase boundary")
    _common(p)
    p.add_argument("--x-max", type=float, default=3.0)
    p.add_argument("--y-max", type=float, default=3.0)
    p.add_argument("--samples", type=int, default=201)

    p = sub.add_parser("minimize", help="semiclassical minimum at one point")
    _common(p)

    p = sub.add_parser("ground", help="exact ground state at one point")
    _common(p)
    p.add_argument("--window", type=int, default=20)
    p.add_argument("--hard-cap", type=int, default=500)

    p = sub.add_parser("scan", help="sweep the coupling plane")
    _common(p)
    p.add_argument("--engine", choices=[e.value for e in scan.Engine], default="quantum")
    p.add_argument("--x-range", type=_range, default=(0.0, 3.0, 61), metavar="MIN,MAX,STEPS")
    p.add_argument("--y-range", type=_range, default=(0.0, 3.0, 61), metavar="MIN,MAX,STEPS")
    p.add_argument("--threads", type=int, help=f"worker count (env {scan.THREADS_ENV})")
    p.add_argument("--gnuplot", type=Path, help="also write an energy matrix for heat maps")
    p.add_argument("--crossovers", type=Path, help="also write extracted boundary polylines")
    p.add_argument("--refine", action="store_true",
                   help="bisect crossover vertices to 1e-4 instead of edge midpoints")

    p = sub.add_parser("converge", help="finite-N M*=0 boundaries versus the separatrix")
    _common(p)
    p.add_argument("--atoms", type=lambda t: [int(v) for v in _floats(t)], default=[2, 10])
    p.add_argument("--y-range", type=_range, default=(0.0, 2.5, 11), metavar="MIN,MAX,N")
    p.add_argument("--x-range", type=_range, default=(0.0, 3.0, 61), metavar="MIN,MAX,STEPS")
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--threads", type=int)
    return parser


def params_from_args(args) -> ModelParams:
    if args.params is not None:
        params = load_params(args.params)
        if args.config is not None and Configuration.parse(args.config) is not params.config:
            params = params.replace(config=Configuration.parse(args.config))
    else:
        params = resonant(args.config or "xi")
    changes = {}
    if args.omega is not None:
        changes.update(omega1=args.omega[0], omega2=args.omega[1], omega3=args.omega[2])
    for name in ("mu12", "mu13", "mu23"):
        if getattr(args, name) is not None:
            changes[name] = getattr(args, name)
    if args.na is not None:
        changes["n_atoms"] = args.na
    return validate(params.replace(**changes))


@contextlib.contextmanager
def _output(path: Path | None):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _suffixed(path: Path | None, engine: scan.Engine, multiple: bool) -> Path | None:
    if path is None or not multiple:
        return path
    return path.with_name(f"{path.stem}_{engine.value}{path.suffix}")


def _cmd_separatrix(args) -> int:
    params = params_from_args(args)
    curve = semiclassical.separatrix(params.config, params,
                                     semiclassical.CouplingRange(args.x_max, args.y_max,
                                                                 args.samples))
    with _output(args.out) as fh:
        if args.format == "json":
            json.dump(tio.separatrix_json(curve), fh, indent=1)
            fh.write("\n")
        else:
            tio.write_separatrix(curve, fh)
    return EXIT_OK


def _cmd_minimize(args) -> int:
    params = params_from_args(args)
    res = semiclassical.minimize(params)
    payload = asdict(res)
    payload["phase_label"] = res.phase_label.value
    with _output(args.out) as fh:
        json.dump(payload, fh, indent=1, default=float)
        fh.write("\n")
    return EXIT_OK


def _cmd_ground(args) -> int:
    params = params_from_args(args)
    status = EXIT_OK
    try:
        res = quantum.global_ground(params, quantum.SearchOptions(args.window, args.hard_cap))
    except CapReached as exc:
        log.warning("%s", exc)
        res, status = exc.result, EXIT_PARTIAL
    with _output(args.out) as fh:
        json.dump(res.to_dict(), fh, indent=1)
        fh.write("\n")
    return status


def _cmd_scan(args) -> int:
    params = params_from_args(args)
    kx, ky = params.config.axes
    spec = scan.ScanSpec(params, scan.Axis(kx, *args.x_range), scan.Axis(ky, *args.y_range),
                         engine=scan.Engine(args.engine), threads=args.threads)
    grids = scan.run_scan(spec)
    multiple = len(grids) > 1
    failed = 0
    for engine, grid in grids.items():
        with _output(_suffixed(args.out, engine, multiple)) as fh:
            tio.write_grid(grid, fh, args.format)
        if args.gnuplot is not None:
            with open(_suffixed(args.gnuplot, engine, multiple), "w") as fh:
                tio.write_gnuplot_matrix(grid, fh)
        bad = grid.failed()
        failed += len(bad)
        for rec in bad:
            log.warning("point (%s, %s) failed: %s", tio.fmt(rec.mu_x), tio.fmt(rec.mu_y),
                        rec.error)
        if args.crossovers is not None and not bad:
            refine = scan.label_function(params, engine) if args.refine else None
            crossings = scan.extract_crossovers(grid, refine)
            with open(_suffixed(args.crossovers, engine, multiple), "w", newline="") as fh:
                tio.write_crossovers(crossings, fh, args.format)
    if failed:
        print(f"{failed} grid point(s) failed", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def _cmd_converge(args) -> int:
    params = params_from_args(args)
    lo, hi, n = args.y_range
    kx, _ = params.config.axes
    table = scan.convergence_study(params, args.atoms, np.linspace(lo, hi, n),
                                   x_axis=scan.Axis(kx, *args.x_range), tol=args.tol,
                                   threads=args.threads)
    with _output(args.out) as fh:
        tio.write_convergence(table, fh, args.format)
    return EXIT_OK


_COMMANDS = {
    "separatrix": _cmd_separatrix,
    "minimize": _cmd_minimize,
    "ground": _cmd_ground,
    "scan": _cmd_scan,
    "converge": _cmd_converge,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except (TrilevelError, OSError) as exc:
        print(f"trilevel: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
