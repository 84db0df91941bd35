"""Atomic configurations, model parameters and their validation.

All energies and couplings are dimensionless: the field frequency is fixed
to one.
"""
from __future__ import annotations

import configparser
import enum
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping, NamedTuple

from .errors import (
    ForbiddenCoupling,
    InvalidParameters,
    NonFiniteInput,
    NonPositiveAtoms,
    OrderingViolation,
)

COUPLINGS = ("mu12", "mu13", "mu23")


class Configuration(enum.Enum):
    XI = "xi"
    LAMBDA = "lambda"
    V = "v"

    @classmethod
    def parse(cls, value: "str | Configuration") -> "Configuration":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {"xi": cls.XI, "ladder": cls.XI, "cascade": cls.XI,
                   "lambda": cls.LAMBDA, "v": cls.V}
        try:
            return aliases[key]
        except KeyError:
            raise InvalidParameters(f"unknown configuration {value!r}") from None

    @property
    def forbidden_coupling(self) -> str:
        return {"xi": "mu13", "lambda": "mu12", "v": "mu23"}[self.value]

    @property
    def axes(self) -> tuple[str, str]:
        """The two allowed couplings, in plotting order (x, y)."""
        return {"xi": ("mu12", "mu23"),
                "lambda": ("mu13", "mu23"),
                "v": ("mu12", "mu13")}[self.value]


class ExcitationWeights(NamedTuple):
    field_weight: int
    level_weights: tuple[int, int, int]


_WEIGHTS = {
    Configuration.XI: (0, 1, 2),
    Configuration.LAMBDA: (0, 0, 1),
    Configuration.V: (0, 1, 1),
}


def excitation_weights(config: Configuration) -> ExcitationWeights:
    """Coefficients of the conserved excitation number for ``config``.

    The field always counts with weight one; the level weights are the
    number of photons absorbed to promote an atom from level 1.
    """
    return ExcitationWeights(1, _WEIGHTS[Configuration.parse(config)])


@dataclass(frozen=True)
class ModelParams:
    omega1: float
    omega2: float
    omega3: float
    mu12: float = 0.0
    mu13: float = 0.0
    mu23: float = 0.0
    config: Configuration = Configuration.XI
    n_atoms: int = 1

    def __post_init__(self):
        object.__setattr__(self, "config", Configuration.parse(self.config))

    @property
    def omegas(self) -> tuple[float, float, float]:
        return (self.omega1, self.omega2, self.omega3)

    @property
    def omega21(self) -> float:
        return self.omega2 - self.omega1

    @property
    def omega31(self) -> float:
        return self.omega3 - self.omega1

    @property
    def omega32(self) -> float:
        return self.omega3 - self.omega2

    def coupling(self, name: str) -> float:
        if name not in COUPLINGS:
            raise KeyError(name)
        return getattr(self, name)

    def axis_values(self) -> tuple[float, float]:
        x, y = self.config.axes
        return (getattr(self, x), getattr(self, y))

    def with_axes(self, x: float, y: float) -> "ModelParams":
        """Copy with the configuration's two allowed couplings replaced."""
        kx, ky = self.config.axes
        return replace(self, **{kx: x, ky: y})

    def replace(self, **changes) -> "ModelParams":
        return replace(self, **changes)


def validate(params: ModelParams) -> ModelParams:
    values = params.omegas + (params.mu12, params.mu13, params.mu23)
    if not all(math.isfinite(v) for v in values):
        raise NonFiniteInput(f"non-finite parameter in {params}")
    if not (params.omega1 <= params.omega2 <= params.omega3):
        raise OrderingViolation(
            f"level energies must be ascending, got {params.omegas}")
    forbidden = params.config.forbidden_coupling
    if params.coupling(forbidden) != 0.0:
        raise ForbiddenCoupling(
            f"{params.config.name} configuration requires {forbidden}=0, "
            f"got {params.coupling(forbidden)}")
    if int(params.n_atoms) != params.n_atoms or params.n_atoms < 1:
        raise NonPositiveAtoms(f"n_atoms must be a positive integer, got {params.n_atoms}")
    return params


def resonant(config: "Configuration | str", n_atoms: int = 1, **couplings) -> ModelParams:
    """Parameters for the reference resonant level schemes (with omega1 = 0).

    Xi and V use unit gaps; Lambda uses omega31 = 1.3, omega32 = 0.8.
    """
    config = Configuration.parse(config)
    omegas = {Configuration.XI: (0.0, 1.0, 2.0),
              Configuration.LAMBDA: (0.0, 0.5, 1.3),
              Configuration.V: (0.0, 1.0, 1.0)}[config]
    return ModelParams(*omegas, config=config, n_atoms=n_atoms, **couplings)


_FLOAT_KEYS = ("omega1", "omega2", "omega3") + COUPLINGS


def params_from_mapping(data: Mapping[str, object]) -> ModelParams:
    """Build parameters from flat keys: config, omega1..3, mu12, mu13, mu23, n_atoms."""
    unknown = set(data) - set(_FLOAT_KEYS) - {"config", "n_atoms"}
    if unknown:
        raise InvalidParameters(f"unknown parameter keys: {sorted(unknown)}")
    try:
        kwargs = {k: float(data[k]) for k in _FLOAT_KEYS if k in data}
        for k in ("omega1", "omega2", "omega3"):
            if k not in kwargs:
                raise InvalidParameters(f"missing required key {k!r}")
        n_atoms = int(data.get("n_atoms", 1))
    except (TypeError, ValueError) as exc:
        raise InvalidParameters(str(exc)) from exc
    config = Configuration.parse(data.get("config", "xi"))
    return validate(ModelParams(config=config, n_atoms=n_atoms, **kwargs))


def load_params(path: "str | Path") -> ModelParams:
    """Read a ``key = value`` parameter file (``#`` comments allowed)."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    parser.read_string("[params]\n" + Path(path).read_text())
    return params_from_mapping(dict(parser["params"]))


def params_to_mapping(params: ModelParams) -> dict[str, object]:
    out: dict[str, object] = {"config": params.config.value}
    out.update({k: getattr(params, k) for k in _FLOAT_KEYS})
    out["n_atoms"] = params.n_atoms
    return out
