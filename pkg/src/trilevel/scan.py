"""Coupling-plane sweeps, crossover extraction and the finite-N convergence study."""
from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Hashable, Sequence

import numpy as np

from . import quantum, semiclassical
from .errors import IncompleteGrid, InvalidParameters, TrilevelError
from .model import Configuration, ModelParams, validate

THREADS_ENV = "TRILEVEL_THREADS"


class Engine(enum.Enum):
    SEMICLASSICAL = "semiclassical"
    QUANTUM = "quantum"
    BOTH = "both"

    def expand(self) -> tuple["Engine", ...]:
        if self is Engine.BOTH:
            return (Engine.SEMICLASSICAL, Engine.QUANTUM)
        return (self,)


@dataclass(frozen=True)
class Axis:
    name: str
    lo: float = 0.0
    hi: float = 3.0
    steps: int = 61

    def values(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.steps)


@dataclass(frozen=True)
class ScanSpec:
    """A rectangular sweep over the two couplings allowed by ``base.config``.

    Couplings on the axes override those in ``base``; level energies and the
    atom number are taken from it.
    """

    base: ModelParams
    x: Axis
    y: Axis
    engine: Engine = Engine.QUANTUM
    threads: int | None = None
    minimize_options: semiclassical.MinimizeOptions = field(
        default_factory=semiclassical.MinimizeOptions)
    search_options: quantum.SearchOptions = field(default_factory=quantum.SearchOptions)

    def __post_init__(self):
        if (self.x.name, self.y.name) != self.base.config.axes:
            raise InvalidParameters(
                f"{self.base.config.name} scans need axes {self.base.config.axes}, "
                f"got ({self.x.name}, {self.y.name})")
        for axis in (self.x, self.y):
            if axis.steps < 2:
                raise InvalidParameters(f"axis {axis.name} needs at least 2 steps")
            if not axis.lo <= axis.hi:
                raise InvalidParameters(f"axis {axis.name} has min > max")

    @classmethod
    def default(cls, base: ModelParams, steps: int = 61, span: float = 3.0,
                **kwargs) -> "ScanSpec":
        kx, ky = base.config.axes
        return cls(base, Axis(kx, 0.0, span, steps), Axis(ky, 0.0, span, steps), **kwargs)


@dataclass(frozen=True)
class ScanRecord:
    ix: int
    iy: int
    mu_x: float
    mu_y: float
    energy: float
    m_value: float
    label: str | None
    error: str = ""


@dataclass
class ScanGrid:
    engine: Engine
    x: np.ndarray
    y: np.ndarray
    records: list[ScanRecord]

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.y), len(self.x))

    def failed(self) -> list[ScanRecord]:
        return [r for r in self.records if r.error]

    def labels(self) -> list[list[str | None]]:
        ny, nx = self.shape
        return [[self.records[iy * nx + ix].label for ix in range(nx)] for iy in range(ny)]

    def energies(self) -> np.ndarray:
        return np.array([r.energy for r in self.records]).reshape(self.shape)


def parallelism(requested: int | None = None) -> int:
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise InvalidParameters(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    return 1


def evaluate_point(params: ModelParams, engine: Engine,
                   minimize_options: semiclassical.MinimizeOptions | None = None,
                   search_options: quantum.SearchOptions | None = None):
    """(energy per atom, m value, label) of one engine at one parameter point."""
    validate(params)
    if engine is Engine.SEMICLASSICAL:
        res = semiclassical.minimize(params, minimize_options)
        return res.energy_per_atom, res.m_per_atom, res.phase_label.value
    res = quantum.global_ground(params, search_options)
    return res.energy / params.n_atoms, float(res.m_star), str(res.m_star)


def _evaluate_task(task) -> ScanRecord:
    ix, iy, params, engine, mopts, sopts = task
    mu_x, mu_y = params.axis_values()
    try:
        energy, m_value, label = evaluate_point(params, engine, mopts, sopts)
        return ScanRecord(ix, iy, mu_x, mu_y, energy, m_value, label)
    except TrilevelError as exc:
        return ScanRecord(ix, iy, mu_x, mu_y, math.nan, math.nan, None,
                          f"{type(exc).__name__}: {exc}")


def _map(func, tasks: list, workers: int) -> list:
    if workers <= 1 or len(tasks) < 2:
        return [func(t) for t in tasks]
    chunk = max(1, len(tasks) // (8 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, tasks, chunksize=chunk))


def run_scan(spec: ScanSpec) -> dict[Engine, ScanGrid]:
    """Evaluate every grid point with the requested engine(s).

    Records come back row-major (y outer, x inner) whatever the worker count.
    Failed points carry an error message instead of aborting the sweep.
    """
    xs, ys = spec.x.values(), spec.y.values()
    workers = parallelism(spec.threads)
    out = {}
    for engine in spec.engine.expand():
        tasks = [(ix, iy, spec.base.with_axes(float(x), float(y)), engine,
                  spec.minimize_options, spec.search_options)
                 for iy, y in enumerate(ys) for ix, x in enumerate(xs)]
        out[engine] = ScanGrid(engine, xs, ys, _map(_evaluate_task, tasks, workers))
    return out


# ---------------------------------------------------------------------------
# crossovers


@dataclass(frozen=True)
class Polyline:
    labels: tuple[str, str]
    points: tuple[tuple[float, float], ...]


@dataclass
class CrossoverSet:
    polylines: list[Polyline] = field(default_factory=list)

    def __len__(self):
        return len(self.polylines)


def _label_key(label: str):
    # numeric sector labels sort numerically, phase labels Normal < Collective
    order = {"Normal": 0, "Collective": 1}
    try:
        return (0, int(label), "")
    except ValueError:
        return (1, order.get(label, 2), label)


def extract_crossovers(grid: ScanGrid,
                       refine: Callable[[float, float], Hashable] | None = None,
                       tol: float = 1e-4) -> CrossoverSet:
    """Boundaries between differently labelled grid points.

    One vertex is placed on every grid edge whose end labels differ (at the
    midpoint, or by bisection with ``refine(mu_x, mu_y) -> label`` when given),
    and vertices of the same label pair within a cell are chained into
    polylines.
    """
    labels = grid.labels()
    ny, nx = grid.shape
    if any(lab is None for row in labels for lab in row) or len(grid.records) != nx * ny:
        raise IncompleteGrid("grid has failed or missing points")
    xs, ys = grid.x, grid.y

    def key(a, b):
        return tuple(sorted((a, b), key=_label_key))

    def locate(p0, p1, lab0):
        if refine is None:
            return (0.5 * (p0[0] + p1[0]), 0.5 * (p0[1] + p1[1]))
        lo, hi = 0.0, 1.0
        span = math.hypot(p1[0] - p0[0], p1[1] - p0[1])
        while (hi - lo) * span > tol:
            mid = 0.5 * (lo + hi)
            pt = (p0[0] + mid * (p1[0] - p0[0]), p0[1] + mid * (p1[1] - p0[1]))
            if refine(*pt) == lab0:
                lo = mid
            else:
                hi = mid
        t = 0.5 * (lo + hi)
        return (p0[0] + t * (p1[0] - p0[0]), p0[1] + t * (p1[1] - p0[1]))

    vertices = {}
    for iy in range(ny):
        for ix in range(nx):
            a = labels[iy][ix]
            p0 = (float(xs[ix]), float(ys[iy]))
            if ix + 1 < nx and labels[iy][ix + 1] != a:
                p1 = (float(xs[ix + 1]), p0[1])
                vertices[("h", iy, ix)] = (key(a, labels[iy][ix + 1]), locate(p0, p1, a))
            if iy + 1 < ny and labels[iy + 1][ix] != a:
                p1 = (p0[0], float(ys[iy + 1]))
                vertices[("v", iy, ix)] = (key(a, labels[iy + 1][ix]), locate(p0, p1, a))

    adjacency: dict[tuple, list[tuple]] = {v: [] for v in vertices}
    for iy in range(ny - 1):
        for ix in range(nx - 1):
            edges = [e for e in (("h", iy, ix), ("v", iy, ix + 1),
                                 ("h", iy + 1, ix), ("v", iy, ix)) if e in vertices]
            by_pair: dict[tuple, list[tuple]] = {}
            for e in edges:
                by_pair.setdefault(vertices[e][0], []).append(e)
            for group in by_pair.values():
                # 4 crossings of one pair is a saddle cell: join consecutive sides
                for k in range(0, len(group) - 1, 2):
                    adjacency[group[k]].append(group[k + 1])
                    adjacency[group[k + 1]].append(group[k])

    seen = set()
    polylines = []

    def walk(start):
        path, prev, cur = [start], None, start
        seen.add(start)
        while True:
            nxt = [v for v in adjacency[cur] if v != prev and v not in seen]
            if not nxt:
                return path
            prev, cur = cur, nxt[0]
            seen.add(cur)
            path.append(cur)

    ordered = sorted(vertices)
    starts = [v for v in ordered if len(adjacency[v]) <= 1] + ordered
    for v in starts:
        if v in seen:
            continue
        path = walk(v)
        pair = vertices[v][0]
        polylines.append(Polyline(pair, tuple(vertices[p][1] for p in path)))
    return CrossoverSet(polylines)


def label_function(base: ModelParams, engine: Engine,
                   minimize_options=None, search_options=None):
    """Closure mapping (mu_x, mu_y) to the engine's label, for refinement."""
    def label(mu_x, mu_y):
        return evaluate_point(base.with_axes(mu_x, mu_y), engine,
                              minimize_options, search_options)[2]
    return label


# ---------------------------------------------------------------------------
# convergence towards the separatrix


@dataclass
class ConvergenceTable:
    mu_y: np.ndarray
    atom_counts: tuple[int, ...]
    boundaries: dict[int, np.ndarray]
    separatrix: np.ndarray
    x_name: str = "mu_x"
    y_name: str = "mu_y"

    def columns(self) -> list[str]:
        return ([self.y_name] + [f"boundary_N{n}" for n in self.atom_counts]
                + ["separatrix"])

    def rows(self) -> list[list[float]]:
        return [[float(y)] + [float(self.boundaries[n][k]) for n in self.atom_counts]
                + [float(self.separatrix[k])] for k, y in enumerate(self.mu_y)]

    def mean_gap(self, n_atoms: int) -> float:
        return float(np.mean(np.abs(self.boundaries[n_atoms] - self.separatrix)))


def normal_boundary(params: ModelParams, mu_y: float, x_values: Sequence[float],
                    tol: float = 1e-4, search=None) -> float:
    """Smallest x-axis coupling at which the quantum ground state leaves M = 0.

    Marches ``x_values`` at fixed ``mu_y`` and bisects the first sign change
    to ``tol``.  Returns 0.0 if M* != 0 already at the first sample and nan if
    M* = 0 everywhere.
    """
    def in_normal(x):
        return quantum.global_ground(params.with_axes(x, mu_y), search).m_star == 0

    prev = None
    for x in x_values:
        if not in_normal(x):
            if prev is None:
                return float(x)
            lo, hi = prev, float(x)
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                if in_normal(mid):
                    lo = mid
                else:
                    hi = mid
            return 0.5 * (lo + hi)
        prev = float(x)
    return math.nan


def _boundary_task(task):
    params, y, xs, tol, search = task
    return normal_boundary(params, y, xs, tol, search)


def convergence_study(base: ModelParams, atom_counts: Sequence[int],
                      mu_y: Sequence[float], x_axis: Axis | None = None,
                      tol: float = 1e-4, threads: int | None = None,
                      search: quantum.SearchOptions | None = None) -> ConvergenceTable:
    """Finite-N edges of the M* = 0 region next to the semiclassical separatrix.

    All curves share the abscissae ``mu_y`` (the configuration's second axis);
    each entry is the boundary value of the first axis coupling.
    """
    counts = tuple(int(n) for n in atom_counts)
    if not counts:
        raise InvalidParameters("atom_counts must be nonempty")
    if list(counts) != sorted(counts):
        raise InvalidParameters("atom_counts must be ascending")
    kx, ky = base.config.axes
    x_axis = x_axis or Axis(kx, 0.0, 3.0, 61)
    xs = [float(v) for v in x_axis.values()]
    ys = np.asarray(mu_y, dtype=float)
    workers = parallelism(threads)
    boundaries = {}
    for n in counts:
        params = validate(base.replace(n_atoms=n))
        tasks = [(params, float(y), xs, tol, search) for y in ys]
        boundaries[n] = np.array(_map(_boundary_task, tasks, workers))
    sep = np.array([semiclassical.critical_coupling(base, float(y)) for y in ys])
    return ConvergenceTable(ys, counts, boundaries, sep, kx, ky)
