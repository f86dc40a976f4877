"""Steady states of the local model and their stability.

For the oxygen-free two-variable system every steady state is available in
closed form and its stability follows the existence/stability table
(:func:`classify_2d`).  With oxygen dependence the tumour-dominant and
uninfected-free states are located analytically or by a bracketed scalar
root search; interior states are only found numerically.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import NondimParams, is_constant
from .linalg import eigenvalues
from .local_model import Params2D, jacobian_2d, jacobian_3d, rhs_2d, rhs_nondim

__all__ = [
    "MARGINAL_TOL",
    "Verdict",
    "Basis",
    "StabilityVerdict",
    "SteadyState2D",
    "SteadyState3D",
    "infected_only_bound",
    "coexistence_2d",
    "classify_2d",
    "tumour_free_3d",
    "tumour_dominant_3d",
    "uninfected_free_3d",
    "interior_3d",
    "numeric_verdict",
    "bisect",
    "scan_roots",
    "residual_2d",
]

MARGINAL_TOL = 1e-8


class Verdict(enum.Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    MARGINAL = "marginal"


class Basis(enum.Enum):
    ANALYTIC = "analytic"
    NUMERIC = "numeric_eigen"


@dataclass(frozen=True)
class StabilityVerdict:
    verdict: Verdict
    basis: Basis
    margin: float = math.nan
    reason: str = ""

    @property
    def stable(self) -> bool:
        return self.verdict is Verdict.STABLE

    def __str__(self):
        return self.verdict.value + (f" ({self.reason})" if self.reason else "")


def _verdict_from_growth(g: float, basis: Basis, reason: str = "", tol: float = MARGINAL_TOL) -> StabilityVerdict:
    if g < -tol:
        v = Verdict.STABLE
    elif g > tol:
        v = Verdict.UNSTABLE
    else:
        v = Verdict.MARGINAL
    return StabilityVerdict(v, basis, margin=abs(g), reason=reason)


def numeric_verdict(J, tol: float = MARGINAL_TOL) -> StabilityVerdict:
    """Classify a linearization by the largest real part of its eigenvalues."""
    ev = eigenvalues(J)
    return _verdict_from_growth(float(np.max(ev.real)), Basis.NUMERIC, tol=tol)


# Two-variable system --------------------------------------------------------------------


@dataclass(frozen=True)
class SteadyState2D:
    kind: str  # "origin" | "tumour_only" | "infected_only" | "coexistence"
    x: float
    y: float
    eigenvalues: tuple = ()

    @property
    def point(self) -> np.ndarray:
        return np.array([self.x, self.y])


def infected_only_bound(p: Params2D) -> float:
    """Infection rate above which ``(0, (r-gamma)/r)`` is stable (``inf`` if r <= gamma)."""
    if p.r <= p.gamma:
        return math.inf
    return p.gamma * (p.alpha / (p.r - p.gamma) + 1.0 / p.r)


def _positive_root(a: float, b: float, c: float) -> Optional[float]:
    if a == 0.0:
        if b == 0.0:
            return None
        y = -c / b
        return y if y > 0 else None
    disc = b * b - 4 * a * c
    if disc < 0:
        return None
    sq = math.sqrt(disc)
    q = -0.5 * (b + math.copysign(sq, b))
    roots = []
    if q != 0.0:
        roots += [q / a, c / q]
    else:
        roots += [0.0]
    pos = [y for y in roots if y > 0]
    return max(pos) if pos else None


def coexistence_2d(p: Params2D) -> Optional[SteadyState2D]:
    """Positive steady state ``(x*, y*)``, or ``None`` when it does not exist."""
    r, a, th, ga = p.r, p.alpha, p.theta, p.gamma
    if not th > a * ga:
        return None
    qa = th - r * th + ga
    qb = th * th + a * th + 2 * a * ga - r * a * th - th
    qc = a * (a * ga - th)
    y = _positive_root(qa, qb, qc)
    if y is None:
        return None
    x = 1.0 - y - th * y / (a + y)
    if not x > 0:
        return None
    ev = tuple(eigenvalues(jacobian_2d(x, y, p)))
    return SteadyState2D("coexistence", x, y, ev)


def classify_2d(p: Params2D, tol: float = MARGINAL_TOL) -> list[tuple[SteadyState2D, StabilityVerdict]]:
    """Existing steady states with their verdicts, following the stability table.

    Boundary cases (a deciding eigenvalue within ``tol`` of zero) come back
    as ``MARGINAL``.
    """
    r, a, th, ga = p.r, p.alpha, p.theta, p.gamma
    out = []

    origin = SteadyState2D("origin", 0.0, 0.0, (1.0, r - ga))
    out.append((origin, StabilityVerdict(Verdict.UNSTABLE, Basis.ANALYTIC, 1.0, "eigenvalue 1 > 0")))

    lam = th / a - ga
    tumour = SteadyState2D("tumour_only", 1.0, 0.0, (-1.0, lam))
    reason = "θ < αγ" if lam < 0 else "θ > αγ"
    out.append((tumour, _verdict_from_growth(lam, Basis.ANALYTIC, reason, tol)))

    if r > ga:
        y0 = (r - ga) / r
        lam1 = 1.0 - y0 - th * y0 / (a + y0)
        bound = infected_only_bound(p)
        inf_state = SteadyState2D("infected_only", 0.0, y0, (lam1, ga - r))
        reason = (f"θ > γ(α/(r-γ) + 1/r) = {bound:.6g}" if th > bound
                  else f"θ < γ(α/(r-γ) + 1/r) = {bound:.6g}")
        out.append((inf_state, _verdict_from_growth(lam1, Basis.ANALYTIC, reason, tol)))

    co = coexistence_2d(p)
    if co is not None:
        bound = infected_only_bound(p)
        near_edge = abs(lam) <= tol or (math.isfinite(bound) and abs(th - bound) <= tol)
        v = Verdict.MARGINAL if near_edge else Verdict.STABLE
        margin = float(-max(np.real(co.eigenvalues)))
        out.append((co, StabilityVerdict(v, Basis.ANALYTIC, margin,
                                         "αγ < θ < γ(α/(r-γ) + 1/r)")))
    return out


# Three-variable system ------------------------------------------------------------------


@dataclass(frozen=True)
class SteadyState3D:
    kind: str  # "tumour_free" | "tumour_dominant" | "uninfected_free" | "interior"
    x: float
    y: float
    z: float
    eigenvalues: tuple = ()
    flags: tuple = field(default_factory=tuple)

    @property
    def point(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


def tumour_free_3d(p: NondimParams) -> tuple[SteadyState3D, StabilityVerdict]:
    ev = (1.0, p.r - p.gamma.rate(1.0), -p.beta)
    st = SteadyState3D("tumour_free", 0.0, 0.0, 1.0, ev)
    return st, StabilityVerdict(Verdict.UNSTABLE, Basis.ANALYTIC, 1.0, "eigenvalue 1 > 0")


def tumour_dominant_3d(p: NondimParams, tol: float = MARGINAL_TOL) -> tuple[SteadyState3D, StabilityVerdict]:
    z = p.beta / (p.beta + p.q1)
    th, ga = p.theta.rate(z), p.gamma.rate(z)
    lam2 = th / p.alpha - ga
    st = SteadyState3D("tumour_dominant", 1.0, 0.0, z, (-1.0, lam2, -p.beta - p.q1))
    reason = "θ(z*) < αγ(z*)" if lam2 < 0 else "θ(z*) > αγ(z*)"
    return st, _verdict_from_growth(max(lam2, -1.0, -p.beta - p.q1), Basis.ANALYTIC, reason, tol)


def bisect(f, lo: float, hi: float, xtol: float = 1e-12, flo: Optional[float] = None) -> float:
    """Bisection on a sign change of ``f`` over ``[lo, hi]``."""
    flo = f(lo) if flo is None else flo
    fhi = f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise ValueError(f"no sign change on [{lo}, {hi}]")
    while hi - lo > xtol * max(1.0, abs(lo), abs(hi)):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fm = f(mid)
        if fm == 0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def scan_roots(f, lo: float, hi: float, n: int = 10_000, xtol: float = 1e-12,
               include_lo: bool = True) -> list[float]:
    """All sign changes of ``f`` on an ``n``-point grid, refined by bisection.

    ``f`` must accept a numpy array for the scan.
    """
    grid = np.linspace(lo, hi, n + 1)
    vals = np.asarray(f(grid), dtype=float)
    roots = []
    for i in range(n):
        a, b = vals[i], vals[i + 1]
        if a == 0 and (include_lo or i > 0):
            roots.append(float(grid[i]))
        elif a != 0 and b != 0 and (a > 0) != (b > 0):
            roots.append(bisect(lambda s: float(f(np.array([s]))[0]), grid[i], grid[i + 1], xtol, flo=a))
    if vals[-1] == 0:
        roots.append(float(grid[-1]))
    return roots


def uninfected_free_3d(p: NondimParams, tol: float = MARGINAL_TOL) -> list[tuple[SteadyState3D, StabilityVerdict]]:
    """Steady states ``(0, y*, z*)``; empty when none lies in the admissible bracket.

    ``z*`` solves ``gamma(z) = r (1 + beta/q2 - beta/(q2 z))`` on
    ``(beta/(beta+q2), 1]``.  With several roots all are returned and each is
    flagged ``"multiple"``.
    """
    if not p.q2 > 0:
        raise ValueError("uninfected-free state requires q2 > 0")
    b, q2, r = p.beta, p.q2, p.r
    z_lo = b / (b + q2)

    if is_constant(p.gamma):
        g = p.gamma.rate(1.0)
        denom = q2 * (1.0 - g / r) + b if r > 0 else -1.0
        zs = [b / denom] if denom > 0 and z_lo < b / denom <= 1.0 else []
    else:
        def g(z):
            return p.gamma.rate(z) - r * (1.0 + b / q2 - b / (q2 * z))
        zs = scan_roots(g, z_lo, 1.0, include_lo=False)

    out = []
    flags = ("multiple",) if len(zs) > 1 else ()
    for z in zs:
        y = (b / q2) * (1.0 - z) / z
        th = p.theta.rate(z)
        dga = p.gamma.slope(z)
        lam1 = 1.0 - y - th * y / (p.alpha + y)
        # lower 2x2 block of the linearization: [[-r y, -gamma' y], [-q2 z, -b/z]]
        tr = -r * y - b / z
        det = r * y * b / z - dga * q2 * y * z
        sq = np.sqrt(complex(tr * tr - 4 * det))
        ev = (lam1, 0.5 * (tr + sq), 0.5 * (tr - sq))
        growth = max(lam1, max(e.real for e in ev[1:]))
        conds = []
        conds.append("θ(z*) > (1-y*)(α+y*)/y*" if lam1 < 0 else "θ(z*) <= (1-y*)(α+y*)/y*")
        conds.append("γ'(z*) < βr/(q2 z*^2)" if det > 0 else "γ'(z*) >= βr/(q2 z*^2)")
        st = SteadyState3D("uninfected_free", 0.0, y, z, ev, flags)
        out.append((st, _verdict_from_growth(growth, Basis.ANALYTIC, "; ".join(conds), tol)))
    return out


def interior_3d(p: NondimParams, guess, tol: float = 1e-13, max_iter: int = 50) -> tuple[SteadyState3D, StabilityVerdict]:
    """Newton refinement of an interior steady state from ``guess``.

    Typically seeded with the endpoint of a long trajectory; the verdict is
    numeric.
    """
    s = np.array(guess, dtype=float)
    for _ in range(max_iter):
        F = rhs_nondim(s, p)
        if np.max(np.abs(F)) < tol:
            break
        s = s - np.linalg.solve(jacobian_3d(s, p), F)
    else:
        if np.max(np.abs(rhs_nondim(s, p))) > 1e-9:
            raise RuntimeError("Newton iteration did not converge to a steady state")
    J = jacobian_3d(s, p)
    st = SteadyState3D("interior", *map(float, s), eigenvalues=tuple(eigenvalues(J)))
    return st, numeric_verdict(J)


def residual_2d(state: SteadyState2D, p: Params2D) -> float:
    dx, dy = rhs_2d(state.x, state.y, p)
    return float(max(abs(dx), abs(dy)))
