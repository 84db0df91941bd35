"""Coherent-state energy surface, its global minimum, and the phase boundary.

The trial state is a product of a field coherent state and a U(3) coherent
state in the symmetric irrep.  After the phases are fixed at their minimising
values the energy per atom depends on three non-negative amplitudes:

``rho_bar``  field amplitude divided by sqrt(N_a),
``rho2``     amplitude feeding level 3,
``rho3``     amplitude feeding level 2.

The field amplitude enters quadratically and can be eliminated exactly, so the
minimiser works on the two atomic amplitudes only.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import optimize

from .errors import (
    AmbiguousClassification,
    DegenerateGap,
    NoConvergence,
    NoCrossing,
    NonFiniteInput,
)
from .model import Configuration, ModelParams, excitation_weights


class Phase(enum.Enum):
    NORMAL = "Normal"
    COLLECTIVE = "Collective"


class Order(enum.Enum):
    FIRST = "First"
    SECOND = "Second"


@dataclass(frozen=True)
class VariationalPoint:
    rho_bar: float
    rho2: float
    rho3: float

    def __post_init__(self):
        for name in ("rho_bar", "rho2", "rho3"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise NonFiniteInput(f"{name} is not finite: {v}")
            if v < 0:
                raise ValueError(f"{name} must be non-negative, got {v}")

    @classmethod
    def origin(cls) -> "VariationalPoint":
        return cls(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class MinimizeOptions:
    grid_size: int = 64
    n_starts: int = 5
    grad_tol: float = 1e-9
    origin_tol: float = 1e-6
    jump_tol: float = 1e-3
    tie_tol: float = 1e-12
    max_iter: int = 500


@dataclass(frozen=True)
class SemiclassicalResult:
    energy_per_atom: float
    point: VariationalPoint
    m_per_atom: float
    populations: tuple[float, float, float]
    photon_density: float
    phase_label: Phase
    degenerate: bool = False
    grad_norm: float = 0.0


def _abs_couplings(params: ModelParams) -> tuple[float, float, float]:
    return abs(params.mu12), abs(params.mu13), abs(params.mu23)


def energy_surface(point: VariationalPoint, params: ModelParams) -> float:
    """Energy per atom of the trial state at ``point``."""
    rb, r2, r3 = point.rho_bar, point.rho2, point.rho3
    a, b, c = _abs_couplings(params)
    d = 1.0 + r2 * r2 + r3 * r3
    levels = (params.omega1 + params.omega2 * r3 * r3 + params.omega3 * r2 * r2) / d
    coupling = a * r3 + b * r2 + c * r2 * r3
    out = rb * rb + levels - 2.0 * rb * coupling / d
    if not math.isfinite(out):
        raise NonFiniteInput(f"energy is not finite at {point}")
    return out


def optimal_field_amplitude(rho2: float, rho3: float, params: ModelParams) -> float:
    """Field amplitude minimising the surface at fixed atomic amplitudes."""
    a, b, c = _abs_couplings(params)
    return (a * rho3 + b * rho2 + c * rho2 * rho3) / (1.0 + rho2 * rho2 + rho3 * rho3)


def reduced_excess(r2: float, r3: float, params: ModelParams) -> float:
    """Energy per atom above omega1 with the field amplitude eliminated.

    Accepts signed amplitudes; the value is written without the omega1 offset
    so that tiny energies near the origin keep full relative precision.
    """
    a, b, c = _abs_couplings(params)
    d = 1.0 + r2 * r2 + r3 * r3
    p = params.omega21 * r3 * r3 + params.omega31 * r2 * r2
    x = a * r3 + b * r2 + c * r2 * r3
    return p / d - (x * x) / (d * d)


def reduced_gradient(r2: float, r3: float, params: ModelParams) -> np.ndarray:
    """Analytic gradient of :func:`reduced_excess`."""
    a, b, c = _abs_couplings(params)
    d = 1.0 + r2 * r2 + r3 * r3
    p = params.omega21 * r3 * r3 + params.omega31 * r2 * r2
    x = a * r3 + b * r2 + c * r2 * r3
    d2, d3 = 2.0 * r2, 2.0 * r3
    p2, p3 = 2.0 * params.omega31 * r2, 2.0 * params.omega21 * r3
    x2, x3 = b + c * r3, a + c * r2
    g2 = (p2 * d - p * d2) / (d * d) - (2.0 * x * x2 * d - 2.0 * x * x * d2) / (d * d * d)
    g3 = (p3 * d - p * d3) / (d * d) - (2.0 * x * x3 * d - 2.0 * x * x * d3) / (d * d * d)
    return np.array([g2, g3])


def _reduced_hessian(r: np.ndarray, params: ModelParams) -> np.ndarray:
    h = 1e-6 * np.maximum(np.abs(r), 1e-3)
    hess = np.empty((2, 2))
    for i in range(2):
        e = np.zeros(2)
        e[i] = h[i]
        hess[:, i] = (reduced_gradient(*(r + e), params)
                      - reduced_gradient(*(r - e), params)) / (2 * h[i])
    return 0.5 * (hess + hess.T)


def _grid_excess(params: ModelParams, n: int) -> tuple[np.ndarray, np.ndarray]:
    # compactified coordinate x = rho^2 / (1 + rho^2) sampled on [0, 1)
    xs = np.arange(n) / n
    rho = np.sqrt(xs / (1.0 - xs))
    r2, r3 = np.meshgrid(rho, rho, indexing="ij")
    a, b, c = _abs_couplings(params)
    d = 1.0 + r2**2 + r3**2
    p = params.omega21 * r3**2 + params.omega31 * r2**2
    x = a * r3 + b * r2 + c * r2 * r3
    return rho, p / d - x**2 / d**2


def _start_points(values: np.ndarray, rho: np.ndarray, n_starts: int) -> list[np.ndarray]:
    n = values.shape[0]
    padded = np.pad(values, 1, constant_values=np.inf)
    is_min = np.ones_like(values, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == dj == 0:
                continue
            is_min &= values <= padded[1 + di:1 + di + n, 1 + dj:1 + dj + n]
    order = np.argsort(values, axis=None, kind="stable")
    flat_min = is_min.ravel()
    ranked = [int(k) for k in order if flat_min[k]]
    ranked += [int(k) for k in order if not flat_min[k]]
    starts = []
    for k in ranked:
        i, j = divmod(k, n)
        if i == 0 and j == 0:
            # the origin is stationary; nudge so descent can leave a saddle
            i, j = (1, 1)
        starts.append(np.array([rho[i], rho[j]]))
        if len(starts) == n_starts:
            break
    return starts


def _polish(r: np.ndarray, params: ModelParams, max_iter: int = 100) -> np.ndarray:
    """Newton iterations on the reduced surface; stops once the gradient stalls."""
    g = reduced_gradient(*r, params)
    gnorm = float(np.linalg.norm(g))
    for _ in range(max_iter):
        if gnorm == 0.0:
            break
        hess = _reduced_hessian(r, params)
        try:
            if np.linalg.eigvalsh(hess)[0] <= 0:
                break
            step = np.linalg.solve(hess, -g)
        except np.linalg.LinAlgError:
            break
        trial = r + step
        g_trial = reduced_gradient(*trial, params)
        n_trial = float(np.linalg.norm(g_trial))
        if not n_trial < gnorm:
            break
        r, g, gnorm = trial, g_trial, n_trial
    return r


def _refine(start: np.ndarray, params: ModelParams, opts: MinimizeOptions) -> np.ndarray:
    res = optimize.minimize(
        lambda v: reduced_excess(v[0], v[1], params),
        start,
        jac=lambda v: reduced_gradient(v[0], v[1], params),
        method="BFGS",
        options={"gtol": opts.grad_tol * 1e-3, "maxiter": opts.max_iter},
    )
    return _polish(np.asarray(res.x, dtype=float), params)


def origin_is_local_min(params: ModelParams) -> bool:
    """Whether the Hessian of the reduced surface at the origin is positive semidefinite."""
    a, b, _ = _abs_couplings(params)
    hess = np.array([[params.omega31 - b * b, -a * b],
                     [-a * b, params.omega21 - a * a]])
    return bool(np.linalg.eigvalsh(hess)[0] >= 0.0)


def describe(r2: float, r3: float, params: ModelParams, origin_tol: float = 1e-6,
             degenerate: bool = False) -> SemiclassicalResult:
    """Observables of the trial state at atomic amplitudes (r2, r3)."""
    r2, r3 = abs(float(r2)), abs(float(r3))
    rb = optimal_field_amplitude(r2, r3, params)
    d = 1.0 + r2 * r2 + r3 * r3
    pops = (1.0 / d, r3 * r3 / d, r2 * r2 / d)
    w = excitation_weights(params.config).level_weights
    photons = rb * rb
    m = photons + sum(wk * pk for wk, pk in zip(w, pops))
    is_origin = max(rb, r2, r3) < origin_tol
    energy = params.omega1 + reduced_excess(r2, r3, params)
    return SemiclassicalResult(
        energy_per_atom=energy,
        point=VariationalPoint(rb, r2, r3),
        m_per_atom=m,
        populations=pops,
        photon_density=photons,
        phase_label=Phase.NORMAL if is_origin else Phase.COLLECTIVE,
        degenerate=degenerate,
        grad_norm=float(np.linalg.norm(reduced_gradient(r2, r3, params))),
    )


def minimize(params: ModelParams, opts: MinimizeOptions | None = None) -> SemiclassicalResult:
    """Global minimum of the energy surface.

    A coarse grid on the compactified quadrant picks the start points, each
    is refined by BFGS followed by Newton polishing, and the origin (always a
    stationary point) competes as an extra candidate.  Among candidates tied
    within ``tie_tol`` the one with the smaller excitation number wins and the
    result is flagged ``degenerate``.
    """
    opts = opts or MinimizeOptions()
    rho, values = _grid_excess(params, opts.grid_size)
    candidates = [np.zeros(2)]
    for start in _start_points(values, rho, opts.n_starts):
        r = np.abs(_refine(start, params, opts))
        if max(r) < opts.origin_tol:
            r = np.zeros(2)
        candidates.append(r)

    scored = [(reduced_excess(r[0], r[1], params), r) for r in candidates]
    if not origin_is_local_min(params) and min(v for v, _ in scored[1:]) < 0.0:
        # past a continuous transition the origin is a saddle, not a rival minimum
        scored = scored[1:]
    best_value = min(v for v, _ in scored)
    tied = [r for v, r in scored if v <= best_value + opts.tie_tol]
    described = [describe(r[0], r[1], params, opts.origin_tol) for r in tied]
    described.sort(key=lambda s: (s.m_per_atom, s.energy_per_atom))
    best = described[0]
    distinct = any(
        abs(s.point.rho2 - best.point.rho2) + abs(s.point.rho3 - best.point.rho3)
        > 1e3 * opts.origin_tol for s in described[1:])
    if distinct:
        best = describe(best.point.rho2, best.point.rho3, params, opts.origin_tol,
                        degenerate=True)

    if best.phase_label is Phase.COLLECTIVE and not best.grad_norm < opts.grad_tol:
        raise NoConvergence(
            f"gradient norm {best.grad_norm:.3e} exceeds {opts.grad_tol:.1e}",
            best=best, grad_norm=best.grad_norm)
    return best


# ---------------------------------------------------------------------------
# separatrix


@dataclass(frozen=True)
class CouplingRange:
    """First-quadrant window of the coupling plane, in the configuration's axes."""

    x_max: float = 3.0
    y_max: float = 3.0
    samples: int = 201


@dataclass(frozen=True)
class SeparatrixSegment:
    points: np.ndarray  # shape (n, 2): (mu_x, mu_y)
    order: Order


@dataclass(frozen=True)
class SeparatrixCurve:
    config: Configuration
    segments: list[SeparatrixSegment] = field(default_factory=list)

    def rows(self) -> list[tuple[float, float, str]]:
        return [(float(x), float(y), seg.order.value)
                for seg in self.segments for x, y in seg.points]


def _heaviside(x: float) -> float:
    return 1.0 if x > 0 else 0.0


def _gaps(params: ModelParams) -> tuple[float, float]:
    """(gap on the x axis, gap that sets the threshold / y scale)."""
    config = params.config
    if config is Configuration.XI:
        gaps = (params.omega21, params.omega31)
    elif config is Configuration.LAMBDA:
        gaps = (params.omega31, params.omega21)
    else:
        gaps = (params.omega21, params.omega31)
    need_both = config is Configuration.V
    if gaps[0] <= 0 or (need_both and gaps[1] <= 0):
        raise DegenerateGap(f"vanishing level gap for {config.name}: {params.omegas}")
    return gaps


def separatrix_residual(params: ModelParams, mu_x: float, mu_y: float) -> float:
    """Left minus right side of the closed-form boundary relation."""
    gx, gy = _gaps(params)
    x, y = abs(mu_x), abs(mu_y)
    if params.config is Configuration.V:
        return x * x / gx + y * y / gy - 1.0
    t = y - math.sqrt(gy)
    return x * x + t * t * _heaviside(t) - gx


def critical_coupling(params: ModelParams, mu_y: float) -> float:
    """Boundary value of the x-axis coupling at fixed ``mu_y``.

    Returns 0.0 where the whole x axis already lies in the collective phase.
    """
    gx, gy = _gaps(params)
    y = abs(mu_y)
    if params.config is Configuration.V:
        return math.sqrt(max(0.0, gx * (1.0 - y * y / gy)))
    t = y - math.sqrt(gy)
    return math.sqrt(max(0.0, gx - t * t * _heaviside(t)))


def separatrix(config: Configuration, params: ModelParams,
               grid: CouplingRange | None = None) -> SeparatrixCurve:
    """Sampled phase boundary with each piece labelled by transition order."""
    grid = grid or CouplingRange()
    config = Configuration.parse(config)
    if config is not params.config:
        params = params.replace(config=config)
    gx, gy = _gaps(params)
    n = grid.samples
    segments = []
    if config is Configuration.V:
        theta = np.linspace(0.0, 0.5 * math.pi, n)
        pts = np.column_stack([math.sqrt(gx) * np.cos(theta), math.sqrt(gy) * np.sin(theta)])
        pts[-1, 0] = 0.0
        segments.append((pts, Order.SECOND))
    else:
        sx, sy = math.sqrt(gx), math.sqrt(gy)
        ys = np.linspace(0.0, sy, n)
        segments.append((np.column_stack([np.full(n, sx), ys]), Order.SECOND))
        theta = np.linspace(0.0, 0.5 * math.pi, n)
        arc = np.column_stack([sx * np.cos(theta), sy + sx * np.sin(theta)])
        arc[-1, 0] = 0.0
        segments.append((arc, Order.FIRST))
    out = []
    for pts, order in segments:
        keep = (pts[:, 0] <= grid.x_max + 1e-15) & (pts[:, 1] <= grid.y_max + 1e-15)
        if keep.any():
            out.append(SeparatrixSegment(pts[keep], order))
    return SeparatrixCurve(config, out)


# ---------------------------------------------------------------------------
# transition order


def _point_on(crossing, t: float) -> tuple[float, float]:
    (x0, y0), (x1, y1) = crossing
    return (x0 + t * (x1 - x0), y0 + t * (y1 - y0))


def locate_crossing(params: ModelParams, crossing, opts: MinimizeOptions | None = None,
                    tol: float = 1e-13) -> tuple[float, Phase]:
    """Parameter t in [0, 1] where the minimiser's phase label flips.

    Also returns the label found at t = 0.
    """
    opts = opts or MinimizeOptions()

    def label(t):
        return minimize(params.with_axes(*_point_on(crossing, t)), opts).phase_label

    lo, hi = 0.0, 1.0
    lab_lo, lab_hi = label(lo), label(hi)
    if lab_lo is lab_hi:
        raise NoCrossing(f"segment {crossing} does not cross the phase boundary")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if label(mid) is lab_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi), lab_lo


def _aitken_limit(seq: Sequence[float]) -> float:
    a, b, c = seq[-3:]
    denom = (c - b) - (b - a)
    if denom == 0.0 or (c - b) * (b - a) <= 0:
        return c
    return c - (c - b) ** 2 / denom


def classify_order(config: Configuration, params: ModelParams, crossing,
                   opts: MinimizeOptions | None = None) -> Order:
    """First- or second-order character of the transition along ``crossing``.

    ``crossing`` is ((x0, y0), (x1, y1)) in the configuration's coupling axes
    and must cross the boundary once.  The field amplitude is sampled at
    offsets delta = 1e-2 ... 1e-7 on both sides of the located crossing; the
    jump is extrapolated to delta -> 0 with Aitken's process and compared
    with ``opts.jump_tol``.
    """
    opts = opts or MinimizeOptions()
    config = Configuration.parse(config)
    if config is not params.config:
        params = params.replace(config=config)
    (x0, y0), (x1, y1) = crossing
    length = math.hypot(x1 - x0, y1 - y0)
    if length == 0:
        raise NoCrossing("degenerate crossing segment")
    t_star, side_lo = locate_crossing(params, crossing, opts)

    def rho_bar(t):
        return minimize(params.with_axes(*_point_on(crossing, t)), opts).point.rho_bar

    jumps, collective_side = [], []
    for k in range(2, 8):
        dt = 10.0 ** (-k) / length
        lo, hi = rho_bar(max(0.0, t_star - dt)), rho_bar(min(1.0, t_star + dt))
        jumps.append(abs(hi - lo))
        collective_side.append(lo if side_lo is Phase.COLLECTIVE else hi)
    jump = abs(_aitken_limit(jumps))
    if jump > 10 * opts.jump_tol:
        return Order.FIRST
    if jump < 0.1 * opts.jump_tol:
        # amplitude is identically zero on the normal side, so a continuous
        # nonzero branch on the other side has a kinked derivative
        if collective_side[-1] > 0.0:
            return Order.SECOND
        raise AmbiguousClassification("order parameter vanishes on both sides", jump=jump)
    raise AmbiguousClassification(
        f"extrapolated jump {jump:.3e} too close to jump_tol {opts.jump_tol:.1e}", jump=jump)
