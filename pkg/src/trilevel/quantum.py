"""Exact diagonalisation in fixed-excitation sectors.

Atoms live in the completely symmetric U(3) irrep [N_a, 0, 0], realised by
three boson modes: the generator A_ij acts as b_i^dagger b_j on occupation
states |n1, n2, n3>.  Together with the photon number this gives a basis in
which the Hamiltonian is block diagonal in the conserved excitation number M.
"""
from __future__ import annotations

import math
from functools import lru_cache
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

import numpy as np
import scipy.linalg

from .errors import CapReached, DimensionMismatch, EigenFailure, InvalidSector
from .model import Configuration, ModelParams, excitation_weights

# (lower level, upper level, coupling attribute); indices are 0-based
_PAIRS = ((0, 1, "mu12"), (0, 2, "mu13"), (1, 2, "mu23"))


class BasisState(NamedTuple):
    n1: int
    n2: int
    n3: int
    photons: int

    @property
    def occupations(self) -> tuple[int, int, int]:
        return (self.n1, self.n2, self.n3)

    def label(self) -> str:
        return f"|{self.n1},{self.n2},{self.n3};{self.photons}>"


@dataclass(frozen=True)
class SectorBasis:
    config: Configuration
    n_atoms: int
    m_total: int
    states: tuple[BasisState, ...]

    def __len__(self):
        return len(self.states)

    def index(self) -> dict[BasisState, int]:
        return {s: i for i, s in enumerate(self.states)}


@dataclass
class GroundStateResult:
    energy: float
    m_star: int
    amplitudes: np.ndarray
    basis: SectorBasis
    sector_energies: dict[int, float] = field(default_factory=dict)
    converged: bool = True

    @property
    def m_expectation(self) -> float:
        return float(self.m_star)

    def top_amplitudes(self, k: int = 10) -> list[tuple[str, float]]:
        order = np.argsort(-np.abs(self.amplitudes), kind="stable")[:k]
        return [(self.basis.states[i].label(), float(self.amplitudes[i])) for i in order]

    def to_dict(self) -> dict:
        return {
            "energy": float(self.energy),
            "m_star": int(self.m_star),
            "converged": self.converged,
            "sector_energies": {str(m): float(e) for m, e in sorted(self.sector_energies.items())},
            "top_amplitudes": [{"state": s, "amplitude": a} for s, a in self.top_amplitudes()],
        }


@dataclass(frozen=True)
class SearchOptions:
    window: int = 20
    hard_cap: int = 500
    tie_tol: float = 1e-12


def enumerate_sector(config: Configuration, n_atoms: int, m_total: int) -> SectorBasis:
    """All (n1, n2, n3, photons) with N_a atoms and M excitations.

    Ordered lexicographically in (n3, n2); the photon number is fixed by the
    excitation constraint.
    """
    config = Configuration.parse(config)
    _, (_, w2, w3) = excitation_weights(config)
    states = []
    if m_total >= 0:
        for n3 in range(n_atoms + 1):
            for n2 in range(n_atoms - n3 + 1):
                photons = m_total - w2 * n2 - w3 * n3
                if photons >= 0:
                    states.append(BasisState(n_atoms - n2 - n3, n2, n3, photons))
    return SectorBasis(config, n_atoms, m_total, tuple(states))


def apply_hamiltonian(state: BasisState, params: ModelParams,
                      n_atoms: int) -> Iterator[tuple[BasisState, float]]:
    """Yield (target, amplitude) pairs of H acting on ``state``.

    Uses every coupling in ``params`` regardless of configuration, so no
    conservation law is built in.
    """
    occ, nu = list(state.occupations), state.photons
    yield state, nu + sum(w * n for w, n in zip(params.omegas, occ))
    scale = 1.0 / math.sqrt(n_atoms)
    for lo, hi, name in _PAIRS:
        mu = params.coupling(name)
        if mu == 0.0:
            continue
        # a A_hi,lo: absorb a photon, promote lo -> hi
        if nu > 0 and occ[lo] > 0:
            new = occ.copy()
            new[lo] -= 1
            new[hi] += 1
            amp = -mu * scale * math.sqrt(nu * occ[lo] * (occ[hi] + 1))
            yield BasisState(*new, nu - 1), amp
        # a^dagger A_lo,hi: emit a photon, demote hi -> lo
        if occ[hi] > 0:
            new = occ.copy()
            new[hi] -= 1
            new[lo] += 1
            amp = -mu * scale * math.sqrt((nu + 1) * occ[hi] * (occ[lo] + 1))
            yield BasisState(*new, nu + 1), amp


def _check_basis(basis: SectorBasis, params: ModelParams):
    if len(basis) == 0:
        raise DimensionMismatch("empty sector basis")
    if basis.config is not params.config or basis.n_atoms != params.n_atoms:
        raise DimensionMismatch(
            f"basis ({basis.config.name}, N_a={basis.n_atoms}) does not match "
            f"params ({params.config.name}, N_a={params.n_atoms})")


@lru_cache(maxsize=4096)
def _sector_structure(config: Configuration, n_atoms: int, m_total: int):
    """Parameter-independent pieces of a sector Hamiltonian.

    Returns (basis, photons, occupations, {coupling name: unit matrix}); the
    sector Hamiltonian is diag(photons + occupations @ omegas) plus the unit
    matrices scaled by their couplings.
    """
    basis = enumerate_sector(config, n_atoms, m_total)
    index = basis.index()
    dim = len(basis)
    photons = np.array([s.photons for s in basis.states], dtype=float)
    occupations = np.array([s.occupations for s in basis.states], dtype=float).reshape(dim, 3)
    units = {}
    for _, _, name in _PAIRS:
        unit = ModelParams(0.0, 0.0, 0.0, config=config, n_atoms=n_atoms, **{name: 1.0})
        mat = np.zeros((dim, dim))
        for j, state in enumerate(basis.states):
            for target, amp in apply_hamiltonian(state, unit, n_atoms):
                i = index.get(target)
                if i is None:
                    if amp != 0.0 and target != state:
                        # only couplings forbidden by the configuration leave the sector
                        mat = None
                        break
                    continue
                if i > j:
                    mat[i, j] = mat[j, i] = amp
            if mat is None:
                break
        units[name] = mat
    for arr in (photons, occupations):
        arr.flags.writeable = False
    return basis, photons, occupations, units


def build_hamiltonian(basis: SectorBasis, params: ModelParams) -> np.ndarray:
    """Dense real symmetric Hamiltonian restricted to one sector.

    Each off-diagonal pair is written from one evaluation into both triangles,
    so the result is exactly symmetric.
    """
    _check_basis(basis, params)
    cached, photons, occupations, units = _sector_structure(
        basis.config, basis.n_atoms, basis.m_total)
    if cached.states != basis.states:
        raise DimensionMismatch("basis is not the canonical sector basis")
    h = np.diag(photons + occupations @ np.array(params.omegas))
    for name, unit in units.items():
        mu = params.coupling(name)
        if mu == 0.0:
            continue
        if unit is None:
            raise DimensionMismatch(
                f"{name} couples sector M={basis.m_total} to other sectors "
                f"in the {basis.config.name} configuration")
        h = h + mu * unit
    return h


def atomic_coupling_norm(params: ModelParams) -> float:
    """Operator norm of sum_ij mu_ij b_j^dagger b_i on the N_a-atom space."""
    return _coupling_norm(params.n_atoms, abs(params.mu12), abs(params.mu13), abs(params.mu23))


@lru_cache(maxsize=1024)
def _coupling_norm(n_atoms: int, mu12: float, mu13: float, mu23: float) -> float:
    states = [(n_atoms - n2 - n3, n2, n3)
              for n3 in range(n_atoms + 1) for n2 in range(n_atoms - n3 + 1)]
    index = {s: i for i, s in enumerate(states)}
    mat = np.zeros((len(states), len(states)))
    for j, occ in enumerate(states):
        for (lo, hi, _), mu in zip(_PAIRS, (mu12, mu13, mu23)):
            if mu == 0.0 or occ[lo] == 0:
                continue
            new = list(occ)
            new[lo] -= 1
            new[hi] += 1
            mat[index[tuple(new)], j] += mu * math.sqrt(occ[lo] * (occ[hi] + 1))
    return float(np.linalg.norm(mat, 2)) if mat.size else 0.0


def sector_lower_bound(params: ModelParams, m_total: int) -> float:
    """Rigorous lower bound on every eigenvalue in sectors M >= m_total.

    With c = ||B|| / sqrt(N_a), any state with mean photon number nu has
    energy >= N_a omega1 + nu - 2 c sqrt(nu), and the excitation constraint
    forces nu >= M - N_a * (largest level weight).  The bound is
    non-decreasing in M.
    """
    _, weights = excitation_weights(params.config)
    nu_min = max(0.0, m_total - max(weights) * params.n_atoms)
    c = atomic_coupling_norm(params) / math.sqrt(params.n_atoms)
    nu = max(nu_min, c * c)
    return params.n_atoms * params.omega1 + nu - 2.0 * c * math.sqrt(nu)


def eigen_residual(h: np.ndarray, energy: float, vector: np.ndarray) -> float:
    return float(np.linalg.norm(h @ vector - energy * vector))


def sector_ground(basis: SectorBasis, params: ModelParams) -> tuple[float, np.ndarray]:
    """Lowest eigenpair of a sector; the largest-magnitude amplitude is positive."""
    h = build_hamiltonian(basis, params)
    try:
        vals, vecs = scipy.linalg.eigh(h, subset_by_index=[0, 0])
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigenFailure(f"eigh failed in sector M={basis.m_total}: {exc}") from exc
    energy, vec = float(vals[0]), vecs[:, 0]
    vec = vec / np.linalg.norm(vec)
    if vec[np.argmax(np.abs(vec))] < 0:
        vec = -vec
    residual = eigen_residual(h, energy, vec)
    if residual > 1e-10 * max(1.0, abs(energy)):
        raise EigenFailure(f"eigen residual {residual:.3e} in sector M={basis.m_total}",
                           residual=residual)
    return energy, vec


def global_ground(params: ModelParams, search: SearchOptions | None = None) -> GroundStateResult:
    """Ground state over all excitation sectors M = 0, 1, 2, ...

    The scan stops once ``search.window`` consecutive sectors fail to lower
    the running minimum by more than ``search.tie_tol`` and
    :func:`sector_lower_bound` shows that no higher sector can do so either;
    ties keep the smaller M.  Raises :class:`CapReached` (carrying the partial result) when
    ``search.hard_cap`` is reached first.
    """
    search = search or SearchOptions()
    best = None
    energies: dict[int, float] = {}
    stale = 0
    m = 0
    while True:
        basis = enumerate_sector(params.config, params.n_atoms, m)
        energy, vec = sector_ground(basis, params)
        energies[m] = energy
        if best is None or energy < best[0] - search.tie_tol:
            best = (energy, m, vec, basis)
            stale = 0
        else:
            stale += 1
        if stale >= search.window and (
                sector_lower_bound(params, m + 1) >= best[0] - search.tie_tol):
            break
        if m >= search.hard_cap:
            result = GroundStateResult(best[0], best[1], best[2], best[3], energies,
                                       converged=False)
            raise CapReached(f"sector minimum still improving at M={m}", result=result)
        m += 1
    return GroundStateResult(best[0], best[1], best[2], best[3], energies)


def analytic_one_atom_xi(m_total: int, mu12: float, mu23: float) -> float:
    """Closed-form lowest energy of one Xi atom in sector M >= 1 (levels 0, 1, 2)."""
    if m_total < 1:
        raise InvalidSector(f"closed form needs M >= 1, got {m_total}")
    return m_total - math.sqrt(m_total * mu12**2 + (m_total - 1) * mu23**2)


def commutant_check(params: ModelParams, n_atoms: int, sample_m: int) -> float:
    """Largest matrix element of H between different excitation sectors.

    H is assembled on the union of sectors sample_m - 1 .. sample_m + 1 from
    the unrestricted operator; zero means M is conserved.
    """
    config = params.config
    sectors = [enumerate_sector(config, n_atoms, m)
               for m in (sample_m - 1, sample_m, sample_m + 1) if m >= 0]
    label = {}
    for basis in sectors:
        for state in basis.states:
            label[state] = basis.m_total
    worst = 0.0
    for state, m in label.items():
        for target, amp in apply_hamiltonian(state, params, n_atoms):
            m_target = label.get(target)
            if m_target is not None and m_target != m:
                worst = max(worst, abs(amp))
    return worst
