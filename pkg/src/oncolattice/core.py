"""Parameter sets, oxygen-response functions and nondimensionalization.

Units follow the local model: densities in cells/mm^3, oxygen in mM, time in
days.  Nondimensional quantities use ``x = u/K``, ``y = n/K``, ``z = beta*c/phi``
and ``tau = r1*t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import Union

import numpy as np

__all__ = [
    "Constant",
    "Sigmoid",
    "Scaled",
    "OxygenResponse",
    "DimensionalParams",
    "NondimParams",
    "LocalState",
    "eval_response",
    "eval_response_deriv",
    "nondimensionalize",
    "redimension_state",
    "nondimensionalize_state",
    "DEFAULT_PARAMS",
    "INITIAL_U",
    "INITIAL_N",
    "INITIAL_C",
]


# Oxygen responses ---------------------------------------------------------------------


@dataclass(frozen=True)
class Constant:
    """Oxygen-independent rate."""

    value: float

    def __post_init__(self):
        if not self.value >= 0:
            raise ValueError(f"constant rate must be >= 0, got {self.value}")

    def rate(self, c):
        if isinstance(c, np.ndarray):
            return np.full_like(c, self.value, dtype=float)
        return float(self.value)

    def slope(self, c):
        if isinstance(c, np.ndarray):
            return np.zeros_like(c, dtype=float)
        return 0.0

    @property
    def at_zero(self) -> float:
        return float(self.value)

    @property
    def limit(self) -> float:
        return float(self.value)


@dataclass(frozen=True)
class Sigmoid:
    """Logistic response ``vinf*v0 / (v0 + (vinf - v0) exp(-k c))``.

    Equals ``v0`` at zero oxygen, increases monotonically and saturates at
    ``vinf``.
    """

    v0: float
    vinf: float
    k: float

    def __post_init__(self):
        if not (0 <= self.v0 < self.vinf):
            raise ValueError(f"sigmoid needs 0 <= v0 < vinf, got v0={self.v0}, vinf={self.vinf}")
        if not self.k > 0:
            raise ValueError(f"sigmoid steepness must be > 0, got {self.k}")

    def rate(self, c):
        return self.vinf * self.v0 / (self.v0 + (self.vinf - self.v0) * np.exp(-self.k * c))

    def slope(self, c):
        v = self.rate(c)
        return self.k * v * (1.0 - v / self.vinf)

    @property
    def at_zero(self) -> float:
        return float(self.v0)

    @property
    def limit(self) -> float:
        return float(self.vinf)


@dataclass(frozen=True)
class Scaled:
    """Lazily rescaled response ``out_scale * base(arg_scale * z)``.

    Produced by :func:`nondimensionalize`; keeps the dimensional response
    around instead of folding the scales into a new sigmoid.
    """

    base: Union[Constant, Sigmoid]
    out_scale: float
    arg_scale: float

    def rate(self, z):
        return self.out_scale * self.base.rate(self.arg_scale * z)

    def slope(self, z):
        return self.out_scale * self.arg_scale * self.base.slope(self.arg_scale * z)

    @property
    def at_zero(self) -> float:
        return self.out_scale * self.base.at_zero

    @property
    def limit(self) -> float:
        return self.out_scale * self.base.limit


OxygenResponse = Union[Constant, Sigmoid, Scaled]


def is_constant(resp: OxygenResponse) -> bool:
    if isinstance(resp, Scaled):
        return is_constant(resp.base)
    return isinstance(resp, Constant)


def _check_oxygen(c):
    if np.any(np.asarray(c) < 0):
        raise ValueError(f"oxygen level must be non-negative, got {c}")


def eval_response(resp: OxygenResponse, c):
    """Rate of ``resp`` at oxygen level ``c`` (scalar or array, ``c >= 0``)."""
    _check_oxygen(c)
    return resp.rate(c)


def eval_response_deriv(resp: OxygenResponse, c):
    """Analytic derivative of ``resp`` with respect to oxygen at ``c >= 0``."""
    _check_oxygen(c)
    return resp.slope(c)


# Parameter sets -----------------------------------------------------------------------


@dataclass(frozen=True)
class DimensionalParams:
    """Local model parameters in physical units (conventional names)."""

    r1: float
    r2: float
    K: float
    alpha: float
    phi: float
    beta: float
    q1: float
    q2: float
    theta: OxygenResponse
    gamma: OxygenResponse

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, (int, float)) and not v >= 0:
                raise ValueError(f"{f.name} must be >= 0, got {v}")
        if not self.K > 0:
            raise ValueError("K must be > 0")
        if not self.alpha > 0:
            raise ValueError("alpha must be > 0")
        if not self.r1 > self.r2:
            raise ValueError(f"expected r1 > r2, got r1={self.r1}, r2={self.r2}")

    def replace(self, **changes) -> "DimensionalParams":
        kw = {f.name: getattr(self, f.name) for f in fields(self)}
        kw.update(changes)
        return DimensionalParams(**kw)


@dataclass(frozen=True)
class NondimParams:
    """Rescaled local model parameters.

    ``theta`` and ``gamma`` are functions of the dimensionless oxygen ``z``.
    """

    r: float
    alpha: float
    beta: float
    q1: float
    q2: float
    theta: OxygenResponse
    gamma: OxygenResponse

    def __post_init__(self):
        for name in ("r", "alpha", "beta", "q1", "q2"):
            v = getattr(self, name)
            if not v >= 0:
                raise ValueError(f"{name} must be >= 0, got {v}")
        if not self.r < 1:
            raise ValueError(f"r must be < 1, got {self.r}")

    def replace(self, **changes) -> "NondimParams":
        kw = {f.name: getattr(self, f.name) for f in fields(self)}
        kw.update(changes)
        return NondimParams(**kw)


@dataclass(frozen=True)
class LocalState:
    """Local state; ``(u, n, c)`` or ``(x, y, z)`` when ``nondim`` is set."""

    u: float
    n: float
    c: float
    nondim: bool = field(default=False)

    def __post_init__(self):
        if min(self.u, self.n, self.c) < 0:
            raise ValueError(f"state components must be >= 0: {self}")

    def as_array(self) -> np.ndarray:
        return np.array([self.u, self.n, self.c], dtype=float)


def nondimensionalize(p: DimensionalParams) -> NondimParams:
    if p.r1 == 0:
        raise ZeroDivisionError("r1 = 0 has no time scale")
    oxygen_scale = p.phi / p.beta if p.beta != 0 else math.inf
    return NondimParams(
        r=p.r2 / p.r1,
        alpha=p.alpha / p.K,
        beta=p.beta / p.r1,
        q1=p.q1 * p.K / p.r1,
        q2=p.q2 * p.K / p.r1,
        theta=Scaled(p.theta, 1.0 / p.r1, oxygen_scale),
        gamma=Scaled(p.gamma, 1.0 / p.r1, oxygen_scale),
    )


def redimension_state(s, p: DimensionalParams, tau=None):
    """Map ``(x, y, z)`` back to ``(u, n, c)``; optionally also ``tau -> t``.

    ``s`` may be a :class:`LocalState`, a length-3 vector or an ``(m, 3)``
    array of states.
    """
    scale = np.array([p.K, p.K, p.phi / p.beta])
    if isinstance(s, LocalState):
        u, n, c = s.as_array() * scale
        out = LocalState(u, n, c, nondim=False)
    else:
        out = np.asarray(s, dtype=float) * scale
    if tau is None:
        return out
    return out, np.asarray(tau, dtype=float) / p.r1


def nondimensionalize_state(s, p: DimensionalParams, t=None):
    scale = np.array([p.K, p.K, p.phi / p.beta])
    if isinstance(s, LocalState):
        x, y, z = s.as_array() / scale
        out = LocalState(x, y, z, nondim=True)
    else:
        out = np.asarray(s, dtype=float) / scale
    if t is None:
        return out
    return out, np.asarray(t, dtype=float) * p.r1


# Default parameter set, constant-rate case.
DEFAULT_PARAMS = DimensionalParams(
    r1=0.3954,
    r2=0.21,
    K=1.0e6,
    alpha=1.0e5,
    phi=1.0e4,
    beta=5.0976,
    q1=5.47e-5,
    q2=2.735e-5,
    theta=Constant(1.0),
    gamma=Constant(0.5115),
)

INITIAL_U = 10000.0
INITIAL_N = 100.0
INITIAL_C = 4.3751
