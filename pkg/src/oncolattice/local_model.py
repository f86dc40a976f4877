"""Vector fields and Jacobians of the local (primary-site) model.

Three systems are provided side by side:

* the dimensional system in ``(u, n, c)``,
* the rescaled system in ``(x, y, z)``,
* the oxygen-free two-variable system in ``(x, y)`` with constant rates.

All right-hand sides accept a state vector or a stack of states along the
last axis, so the same functions drive single and batched integrations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .core import DimensionalParams, LocalState, NondimParams, is_constant

__all__ = [
    "Params2D",
    "LocalModel",
    "rhs_dimensional",
    "rhs_nondim",
    "rhs_2d",
    "jacobian_3d",
    "jacobian_2d",
]


@dataclass(frozen=True)
class Params2D:
    """Constants of the oxygen-free subsystem (all dimensionless)."""

    r: float
    alpha: float
    theta: float
    gamma: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be > 0")
        if min(self.r, self.theta, self.gamma) < 0:
            raise ValueError("rates must be >= 0")

    @classmethod
    def from_nondim(cls, p: NondimParams) -> "Params2D":
        if not (is_constant(p.theta) and is_constant(p.gamma)):
            raise ValueError("the two-variable system needs constant theta and gamma")
        return cls(r=p.r, alpha=p.alpha, theta=p.theta.rate(0.0), gamma=p.gamma.rate(0.0))


@dataclass(frozen=True)
class LocalModel:
    """A parameter set tagged with the system it drives."""

    params: Union[DimensionalParams, NondimParams]
    reduced: bool = False

    def __post_init__(self):
        if self.reduced:
            if not isinstance(self.params, NondimParams):
                raise ValueError("the reduced system is nondimensional")
            Params2D.from_nondim(self.params)

    @property
    def dimensional(self) -> bool:
        return isinstance(self.params, DimensionalParams)

    def rhs(self, s):
        if self.reduced:
            s = np.asarray(s, dtype=float)
            return rhs_2d(s[..., 0], s[..., 1], Params2D.from_nondim(self.params), stack=True)
        if self.dimensional:
            return rhs_dimensional(s, self.params)
        return rhs_nondim(s, self.params)


def _unpack(s):
    if isinstance(s, LocalState):
        s = s.as_array()
    s = np.asarray(s, dtype=float)
    return s[..., 0], s[..., 1], s[..., 2]


def rhs_dimensional(s, p: DimensionalParams) -> np.ndarray:
    u, n, c = _unpack(s)
    th = p.theta.rate(c)
    ga = p.gamma.rate(c)
    crowd = 1.0 - (u + n) / p.K
    infection = th * n * u / (p.alpha + n)
    out = np.empty(u.shape + (3,))
    out[..., 0] = p.r1 * u * crowd - infection
    out[..., 1] = p.r2 * n * crowd + infection - ga * n
    out[..., 2] = p.phi - p.beta * c - p.q1 * u * c - p.q2 * n * c
    return out


def rhs_nondim(s, p: NondimParams) -> np.ndarray:
    x, y, z = _unpack(s)
    th = p.theta.rate(z)
    ga = p.gamma.rate(z)
    crowd = 1.0 - x - y
    infection = th * x * y / (p.alpha + y)
    out = np.empty(x.shape + (3,))
    out[..., 0] = x * crowd - infection
    out[..., 1] = p.r * y * crowd + infection - ga * y
    out[..., 2] = p.beta * (1.0 - z) - p.q1 * x * z - p.q2 * y * z
    return out


def rhs_2d(x, y, p: Params2D, stack: bool = False):
    """Oxygen-free subsystem; returns ``(dx, dy)`` or a stacked array."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    crowd = 1.0 - x - y
    infection = p.theta * x * y / (p.alpha + y)
    dx = x * crowd - infection
    dy = p.r * y * crowd + infection - p.gamma * y
    if stack:
        return np.stack([dx, dy], axis=-1)
    return dx, dy


def jacobian_3d(s, p: NondimParams) -> np.ndarray:
    x, y, z = (float(v) for v in _unpack(s))
    th, dth = p.theta.rate(z), p.theta.slope(z)
    ga, dga = p.gamma.rate(z), p.gamma.slope(z)
    a = p.alpha
    sat = y / (a + y)
    dsat = a / (a + y) ** 2
    return np.array([
        [1 - 2 * x - y - th * sat, -x - th * x * dsat, -dth * x * sat],
        [-p.r * y + th * sat, p.r * (1 - x - 2 * y) + th * x * dsat - ga, dth * x * sat - dga * y],
        [-p.q1 * z, -p.q2 * z, -p.beta - p.q1 * x - p.q2 * y],
    ])


def jacobian_2d(x, y, p: Params2D) -> np.ndarray:
    x, y = float(x), float(y)
    a, th = p.alpha, p.theta
    sat = y / (a + y)
    dsat = a / (a + y) ** 2
    return np.array([
        [1 - 2 * x - y - th * sat, -x - th * x * dsat],
        [-p.r * y + th * sat, p.r * (1 - x - 2 * y) + th * x * dsat - p.gamma],
    ])
