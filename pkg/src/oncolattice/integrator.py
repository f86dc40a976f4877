"""Adaptive Dormand-Prince 5(4) integration of autonomous systems ``y' = f(y)``.

Two drivers share one step kernel:

* :func:`integrate` follows a single trajectory, keeps every accepted step
  (with derivatives, for Hermite resampling) and can stop once the vector
  field has been quiet for a while.
* :func:`integrate_batch` advances many independent initial value problems
  stacked as rows of an array.  Each row keeps its own time and step size, so
  a row's result does not depend on which other rows share the batch.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "IntegratorConfig",
    "Termination",
    "Trajectory",
    "BatchResult",
    "integrate",
    "integrate_batch",
    "sample_at",
]

# Dormand & Prince (1980) tableau; stage 7 is the FSAL evaluation.
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
# difference between the 5th and embedded 4th order weights
E1, E3, E4, E5, E6, E7 = (
    71 / 57600,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
)

SAFETY = 0.9
FAC_MIN = 0.2
FAC_MAX = 5.0
UNDERFLOW = 1e-12


class Termination(enum.Enum):
    HORIZON_REACHED = "horizon_reached"
    STEADY_STATE = "steady_state_detected"
    STEP_FAILURE = "step_failure"


@dataclass(frozen=True)
class IntegratorConfig:
    """Tolerances and stopping rules.

    ``h_init=None`` picks the first step automatically.  ``settle_norm=None``
    disables steady-state detection.
    """

    t_end: float
    rtol: float = 1e-8
    atol: float = 1e-10
    h_init: Optional[float] = None
    h_max: float = np.inf
    settle_norm: Optional[float] = 1e-9
    settle_duration: float = 5.0
    max_steps: int = 10_000_000

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("rtol and atol must be positive")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if not self.h_max > 0:
            raise ValueError("h_max must be positive")
        if self.h_init is not None and not 0 < self.h_init <= self.h_max:
            raise ValueError("need 0 < h_init <= h_max")

    def replace(self, **changes) -> "IntegratorConfig":
        kw = dict(self.__dict__)
        kw.update(changes)
        return IntegratorConfig(**kw)


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    derivs: np.ndarray
    terminated_by: Termination
    message: str = ""
    n_accepted: int = 0
    n_rejected: int = 0
    n_evals: int = 0

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def __len__(self):
        return len(self.times)


@dataclass
class BatchResult:
    y: np.ndarray
    t: np.ndarray
    status: list
    n_accepted: np.ndarray
    n_rejected: np.ndarray
    obs_max: Optional[np.ndarray] = None
    obs_min: Optional[np.ndarray] = None
    messages: dict = field(default_factory=dict)


def _stages(f, y, h, k1):
    """One Dormand-Prince step from ``y`` with step ``h`` and ``k1 = f(y)``.

    Works elementwise, so ``y`` may be a vector or a stack of row vectors with
    ``h`` of shape ``(m, 1)``.  Returns the 5th-order solution, ``f`` at it,
    and the embedded error estimate.
    """
    k2 = f(y + h * (A21 * k1))
    k3 = f(y + h * (A31 * k1 + A32 * k2))
    k4 = f(y + h * (A41 * k1 + A42 * k2 + A43 * k3))
    k5 = f(y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))
    k6 = f(y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5))
    y_new = y + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6)
    k7 = f(y_new)
    err = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
    return y_new, k7, err


def _error_norm(err, y, y_new, rtol, atol):
    scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
    return np.max(np.abs(err) / scale, axis=-1)


def _initial_step(f, y0, f0, rtol, atol, h_max):
    # Hairer, Norsett & Wanner, Solving ODEs I, II.4
    scale = atol + rtol * np.abs(y0)
    d0 = np.max(np.abs(y0) / scale, axis=-1)
    d1 = np.max(np.abs(f0) / scale, axis=-1)
    h0 = np.where((d0 < 1e-5) | (d1 < 1e-5), 1e-6, 0.01 * d0 / np.where(d1 > 0, d1, 1.0))
    h0 = np.minimum(h0, h_max)
    hb = h0[..., None] if np.ndim(h0) else h0
    f1 = f(y0 + hb * f0)
    d2 = np.max(np.abs(f1 - f0) / scale, axis=-1) / h0
    dmax = np.maximum(d1, d2)
    h1 = np.where(dmax <= 1e-15, np.maximum(1e-6, h0 * 1e-3), (0.01 / np.where(dmax > 0, dmax, 1.0)) ** 0.2)
    return np.minimum(np.minimum(100 * h0, h1), h_max)


def _next_factor(err, accepted):
    with np.errstate(divide="ignore"):
        fac = SAFETY * np.where(err > 0, err, 1e-300) ** -0.2
    fac = np.clip(fac, FAC_MIN, FAC_MAX)
    return np.where(accepted, fac, np.minimum(fac, 1.0))


def integrate(rhs: Callable[[np.ndarray], np.ndarray], y0, cfg: IntegratorConfig) -> Trajectory:
    """Integrate ``y' = rhs(y)`` from ``y0`` over ``[0, cfg.t_end]``.

    Every accepted step is recorded.  Integration stops early when
    ``max|rhs(y)| < cfg.settle_norm`` has held for ``cfg.settle_duration``
    time units, when the step size underflows, or when ``rhs`` returns a
    non-finite value; in the latter two cases the partial trajectory is
    returned with ``terminated_by = STEP_FAILURE``.
    """
    y = np.array(y0, dtype=float)
    if y.ndim != 1 or not np.all(np.isfinite(y)):
        raise ValueError("y0 must be a finite 1-D vector")
    t_end = float(cfg.t_end)
    k1 = np.asarray(rhs(y), dtype=float)
    n_evals = 1
    times, states, derivs = [0.0], [y], [k1]
    if not np.all(np.isfinite(k1)):
        return Trajectory(np.array(times), np.array(states), np.array(derivs),
                          Termination.STEP_FAILURE, "non-finite rhs at initial state", 0, 0, n_evals)

    if cfg.h_init is not None:
        h = float(cfg.h_init)
    else:
        h = float(_initial_step(rhs, y, k1, cfg.rtol, cfg.atol, cfg.h_max))
        n_evals += 1
    h_min = UNDERFLOW * t_end

    def quiet(k):
        return cfg.settle_norm is not None and np.max(np.abs(k)) < cfg.settle_norm

    quiet_since = 0.0 if quiet(k1) else None
    t = 0.0
    n_acc = n_rej = 0
    status, message = Termination.HORIZON_REACHED, ""
    while t < t_end:
        if n_acc + n_rej >= cfg.max_steps:
            status, message = Termination.STEP_FAILURE, "maximum number of steps exceeded"
            break
        last = t + h >= t_end
        step = t_end - t if last else h
        if step < h_min:
            status, message = Termination.STEP_FAILURE, f"step size underflow at t={t:.6g}"
            break
        y_new, k7, err = _stages(rhs, y, step, k1)
        n_evals += 6
        if not (np.all(np.isfinite(y_new)) and np.all(np.isfinite(k7))):
            n_rej += 1
            h = 0.5 * step
            if h < h_min:
                status, message = Termination.STEP_FAILURE, f"non-finite rhs near t={t:.6g}"
                break
            continue
        e = float(_error_norm(err, y, y_new, cfg.rtol, cfg.atol))
        accepted = e <= 1.0
        fac = float(_next_factor(e, accepted))
        if accepted:
            t = t_end if last else t + step
            y, k1 = y_new, k7
            times.append(t)
            states.append(y)
            derivs.append(k1)
            n_acc += 1
            if quiet(k1):
                if quiet_since is None:
                    quiet_since = t
                if t - quiet_since >= cfg.settle_duration:
                    status = Termination.STEADY_STATE
                    break
            else:
                quiet_since = None
        else:
            n_rej += 1
        h = min(step * fac, cfg.h_max)

    return Trajectory(
        times=np.array(times),
        states=np.array(states),
        derivs=np.array(derivs),
        terminated_by=status,
        message=message,
        n_accepted=n_acc,
        n_rejected=n_rej,
        n_evals=n_evals,
    )


def sample_at(traj: Trajectory, t):
    """Cubic Hermite interpolation of ``traj`` at time(s) ``t``."""
    times = traj.times
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t_arr < times[0]) or np.any(t_arr > times[-1]):
        raise ValueError(f"t outside trajectory range [{times[0]}, {times[-1]}]")
    if len(times) == 1:
        out = np.repeat(traj.states[:1], len(t_arr), axis=0)
        return out[0] if np.ndim(t) == 0 else out
    i = np.clip(np.searchsorted(times, t_arr, side="right") - 1, 0, len(times) - 2)
    t0, t1 = times[i], times[i + 1]
    h = (t1 - t0)[:, None]
    s = ((t_arr - t0) / (t1 - t0))[:, None]
    y0, y1 = traj.states[i], traj.states[i + 1]
    f0, f1 = traj.derivs[i], traj.derivs[i + 1]
    h00 = (1 + 2 * s) * (1 - s) ** 2
    h10 = s * (1 - s) ** 2
    h01 = s * s * (3 - 2 * s)
    h11 = s * s * (s - 1)
    out = h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1
    # hit stored nodes exactly
    exact = t_arr == times[i]
    out[exact] = y0[exact]
    exact1 = t_arr == t1
    out[exact1] = y1[exact1]
    return out[0] if np.ndim(t) == 0 else out


def integrate_batch(
    rhs: Callable[[np.ndarray, np.ndarray], np.ndarray],
    Y0,
    cfg: IntegratorConfig,
    observe: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> BatchResult:
    """Integrate many independent systems stacked as the rows of ``Y0``.

    ``rhs(Y, rows)`` receives the states of the currently active rows and
    their indices into ``Y0`` (so per-row parameters can be looked up) and
    returns their derivatives.  Rows advance with individual step sizes.

    ``observe(Y)`` maps states to per-row quantities whose running max and
    min over all accepted steps (initial state included) are returned;
    without it the state components themselves are tracked.

    Only the horizon is used as a stopping rule; ``settle_norm`` is ignored.
    """
    Y = np.array(Y0, dtype=float)
    if Y.ndim != 2:
        raise ValueError("Y0 must be 2-D (rows are independent systems)")
    m = Y.shape[0]
    t_end = float(cfg.t_end)
    h_min = UNDERFLOW * t_end
    obs = observe if observe is not None else (lambda a: a)
    all_rows = np.arange(m)
    K1 = np.asarray(rhs(Y, all_rows), dtype=float)
    o = np.asarray(obs(Y), dtype=float)
    o_max, o_min = o.copy(), o.copy()

    t = np.zeros(m)
    if cfg.h_init is not None:
        h = np.full(m, float(cfg.h_init))
    else:
        h = np.empty(m)
        for i in range(m):
            # one row at a time keeps the choice independent of the batch
            h[i] = _initial_step(lambda a, i=i: rhs(a[None, :], all_rows[i:i + 1])[0],
                                 Y[i], K1[i], cfg.rtol, cfg.atol, cfg.h_max)
    n_acc = np.zeros(m, dtype=int)
    n_rej = np.zeros(m, dtype=int)
    status = [Termination.HORIZON_REACHED] * m
    messages = {}
    bad = ~np.all(np.isfinite(K1), axis=1)
    active = ~bad
    for i in np.flatnonzero(bad):
        status[i] = Termination.STEP_FAILURE
        messages[i] = "non-finite rhs at initial state"

    while np.any(active):
        rows = np.flatnonzero(active)
        tr, hr = t[rows], h[rows]
        last = tr + hr >= t_end
        step = np.where(last, t_end - tr, hr)
        tiny = step < h_min
        if np.any(tiny) or np.any(n_acc[rows] + n_rej[rows] >= cfg.max_steps):
            over = n_acc[rows] + n_rej[rows] >= cfg.max_steps
            for i, ti, ov in zip(rows[tiny | over], tr[tiny | over], over[tiny | over]):
                status[i] = Termination.STEP_FAILURE
                messages[i] = "maximum number of steps exceeded" if ov else f"step size underflow at t={ti:.6g}"
                active[i] = False
            keep = ~(tiny | over)
            rows, tr, last, step = rows[keep], tr[keep], last[keep], step[keep]
            if rows.size == 0:
                continue
        y = Y[rows]

        def f(a, rows=rows):
            return rhs(a, rows)

        y_new, k7, err = _stages(f, y, step[:, None], K1[rows])
        finite = np.all(np.isfinite(y_new), axis=1) & np.all(np.isfinite(k7), axis=1)
        e = np.where(finite, _error_norm(err, y, y_new, cfg.rtol, cfg.atol), np.inf)
        acc = e <= 1.0
        fac = np.where(finite, _next_factor(e, acc), 0.5)
        h[rows] = np.minimum(step * fac, cfg.h_max)
        n_rej[rows[~acc]] += 1
        if np.any(acc):
            ra = rows[acc]
            Y[ra] = y_new[acc]
            K1[ra] = k7[acc]
            t[ra] = np.where(last[acc], t_end, tr[acc] + step[acc])
            n_acc[ra] += 1
            oa = np.asarray(obs(y_new[acc]), dtype=float)
            o_max[ra] = np.maximum(o_max[ra], oa)
            o_min[ra] = np.minimum(o_min[ra], oa)
            active[ra[t[ra] >= t_end]] = False

    return BatchResult(y=Y, t=t, status=status, n_accepted=n_acc, n_rejected=n_rej,
                       obs_max=o_max, obs_min=o_min, messages=messages)
