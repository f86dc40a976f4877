"""Named scenarios and the sweeps built on them.

A :class:`Scenario` binds a model, an initial state and a horizon.  The
presets in :data:`PRESETS` cover the local time courses, the phase
portraits, the lattice oxygenation runs and the infection/death-rate sweep.
All outputs are plain :class:`Table` objects so that they can be written as
CSV without further processing.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .core import INITIAL_C, INITIAL_N, INITIAL_U, DEFAULT_PARAMS, Constant, Sigmoid
from .equilibria import classify_2d
from .integrator import IntegratorConfig, Termination, integrate, integrate_batch, sample_at
from .local_model import LocalModel, Params2D, rhs_2d
from .regional import (LatticeModel, RegionalState, default_initial_state, lattice_preset,
                       transport_terms)

__all__ = [
    "OUTPUT_KINDS",
    "ScenarioError",
    "Scenario",
    "Table",
    "run_timeseries",
    "PhasePortrait",
    "phase_portrait",
    "PHASE_STARTS",
    "HeatmapSpec",
    "HeatmapResult",
    "theta_gamma_heatmap",
    "worker_count",
    "ComparisonRun",
    "OxygenationReport",
    "oxygenation_comparison",
    "StabilityRegion",
    "stability_region",
    "FullOxygenationReport",
    "full_oxygenation_regional",
    "PRESETS",
    "preset",
    "LOCAL_HORIZON",
    "REGIONAL_HORIZON",
]

log = logging.getLogger(__name__)

OUTPUT_KINDS = ("timeseries", "phase_portrait", "heatmap", "stability_region", "comparison")
LOCAL_HORIZON = 200.0
REGIONAL_HORIZON = 80.0
PHASE_HORIZON = 500.0
SETTLE_NORM = 1e-6


class ScenarioError(RuntimeError):
    def __init__(self, name: str, message: str):
        super().__init__(f"scenario {name!r}: {message}")
        self.scenario = name


Model = Union[LocalModel, LatticeModel, Params2D]


@dataclass(frozen=True)
class Scenario:
    """A model, an initial state and a horizon, plus the artifacts to produce.

    ``source`` says where the constants come from (``"caption"``,
    ``"table"``, ``"reference script"`` ...).
    """

    name: str
    model: Model
    initial: tuple
    horizon: float
    outputs: tuple = ("timeseries",)
    source: str = ""
    output_step: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "initial", tuple(float(v) for v in np.ravel(self.initial)))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        if not self.horizon > 0:
            raise ValueError(f"scenario {self.name!r}: horizon must be > 0")
        for o in self.outputs:
            if o not in OUTPUT_KINDS:
                raise ValueError(f"scenario {self.name!r}: unknown output {o!r}")
        if "phase_portrait" in self.outputs and not self.two_variable:
            raise ValueError(f"scenario {self.name!r}: phase portraits need the two-variable model")
        if len(self.initial) != len(self.columns) - 1:
            raise ValueError(f"scenario {self.name!r}: initial state has {len(self.initial)} "
                             f"components, model needs {len(self.columns) - 1}")
        if min(self.initial) < 0:
            raise ValueError(f"scenario {self.name!r}: initial state must be non-negative")
        if self.output_step is not None and not 0 < self.output_step <= self.horizon:
            raise ValueError(f"scenario {self.name!r}: need 0 < output_step <= horizon")

    @property
    def two_variable(self) -> bool:
        return isinstance(self.model, Params2D) or (isinstance(self.model, LocalModel) and self.model.reduced)

    @property
    def columns(self) -> list[str]:
        m = self.model
        if isinstance(m, LatticeModel):
            return ["t"] + [f"{v}{i}" for i in range(len(m.nodes)) for v in ("u", "n", "c")]
        if self.two_variable:
            return ["t", "x", "y"]
        if m.dimensional:
            return ["t", "u", "n", "c"]
        return ["t", "x", "y", "z"]

    def rhs(self):
        m = self.model
        if isinstance(m, LatticeModel):
            return m.rhs
        if isinstance(m, Params2D):
            return lambda s: rhs_2d(s[..., 0], s[..., 1], m, stack=True)
        return m.rhs


@dataclass
class Table:
    """Column names plus a 2-D float array, one row per record."""

    columns: list
    data: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float).reshape(-1, len(self.columns))

    def column(self, name: str) -> np.ndarray:
        return self.data[:, self.columns.index(name)]

    def __len__(self):
        return self.data.shape[0]


def _default_config(horizon: float) -> IntegratorConfig:
    return IntegratorConfig(t_end=horizon, settle_norm=None)


def _sample_times(horizon: float, step: float) -> np.ndarray:
    n = int(round(horizon / step))
    t = step * np.arange(n + 1)
    t[-1] = horizon if abs(t[-1] - horizon) <= 1e-9 * horizon else t[-1]
    if t[-1] < horizon - 1e-9 * horizon:
        t = np.append(t, horizon)
    return np.minimum(t, horizon)


def run_timeseries(sc: Scenario, cfg: Optional[IntegratorConfig] = None) -> Table:
    """Integrate ``sc`` and resample at a uniform step (default ``0.01 * horizon``).

    The returned table's ``meta`` holds the integrator statistics and
    whether the vector field had settled (``max|rhs| < 1e-6``) at the end.
    """
    cfg = _default_config(sc.horizon) if cfg is None else cfg.replace(t_end=sc.horizon)
    rhs = sc.rhs()
    traj = integrate(rhs, np.array(sc.initial), cfg)
    if traj.terminated_by is Termination.STEP_FAILURE:
        raise ScenarioError(sc.name, f"integration failed: {traj.message}")
    step = sc.output_step if sc.output_step is not None else 0.01 * sc.horizon
    t = _sample_times(sc.horizon, step)
    t = t[t <= traj.times[-1]]
    states = sample_at(traj, t)
    final_norm = float(np.max(np.abs(traj.derivs[-1])))
    settled = final_norm < SETTLE_NORM
    log.info("%s: %d steps, %d rejected, settled=%s (max|rhs|=%.3g)",
             sc.name, traj.n_accepted, traj.n_rejected, settled, final_norm)
    meta = dict(n_accepted=traj.n_accepted, n_rejected=traj.n_rejected, settled=settled,
                final_rhs_norm=final_norm, final_state=traj.final.copy())
    return Table(sc.columns, np.column_stack([t, states]), meta)


# Phase portraits -------------------------------------------------------------------------

# fixed start set covering the square [0, 1.2]^2
PHASE_STARTS = (
    (0.05, 0.05), (0.2, 0.8), (0.8, 0.2), (0.5, 0.5),
    (1.1, 0.1), (0.1, 1.1), (1.0, 1.0), (1.2, 1.2),
    (0.3, 0.05), (0.05, 0.3), (0.6, 0.9), (0.9, 0.6),
)


@dataclass
class PhasePortrait:
    grid_x: np.ndarray
    grid_y: np.ndarray
    direction: np.ndarray  # (ny, nx, 2), unit length where the field is non-zero
    trajectories: list  # Table per start
    endpoints: np.ndarray
    steady_states: list  # (SteadyState2D, StabilityVerdict)

    def field_table(self) -> Table:
        X, Y = np.meshgrid(self.grid_x, self.grid_y)
        return Table(["x", "y", "dx", "dy"],
                     np.column_stack([X.ravel(), Y.ravel(), self.direction[..., 0].ravel(),
                                      self.direction[..., 1].ravel()]))

    def trajectory_table(self) -> Table:
        rows = []
        for k, tab in enumerate(self.trajectories):
            rows.append(np.column_stack([np.full(len(tab), k), tab.data]))
        return Table(["start", "t", "x", "y"], np.vstack(rows))


def phase_portrait(p: Params2D, resolution: int = 25, horizon: float = PHASE_HORIZON,
                   starts: Sequence = PHASE_STARTS, samples: int = 201) -> PhasePortrait:
    """Normalized direction field on ``[0, 1.2]^2`` and trajectories from ``starts``."""
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    g = np.linspace(0.0, 1.2, resolution)
    X, Y = np.meshgrid(g, g)
    dx, dy = rhs_2d(X, Y, p)
    norm = np.hypot(dx, dy)
    safe = np.where(norm > 0, norm, 1.0)
    direction = np.stack([np.where(norm > 0, dx / safe, 0.0), np.where(norm > 0, dy / safe, 0.0)], axis=-1)

    cfg = IntegratorConfig(t_end=horizon, settle_norm=1e-12, settle_duration=10.0)
    rhs = lambda s: rhs_2d(s[..., 0], s[..., 1], p, stack=True)
    trajs, ends = [], []
    for x0, y0 in starts:
        tr = integrate(rhs, [x0, y0], cfg)
        if tr.terminated_by is Termination.STEP_FAILURE:
            raise ScenarioError("phase_portrait", f"trajectory from ({x0}, {y0}) failed: {tr.message}")
        t = np.linspace(0.0, tr.times[-1], samples)
        trajs.append(Table(["t", "x", "y"], np.column_stack([t, sample_at(tr, t)])))
        ends.append(tr.final)
    return PhasePortrait(g, g, direction, trajs, np.array(ends), classify_2d(p))


# Stability region ------------------------------------------------------------------------


@dataclass
class StabilityRegion:
    r: float
    alpha: float
    gamma: np.ndarray
    bound: np.ndarray
    checks: list  # (gamma, theta, expected kind, stable kind, agree)

    @property
    def all_agree(self) -> bool:
        return all(c[-1] for c in self.checks)

    def table(self) -> Table:
        return Table(["gamma", "theta_bound"], np.column_stack([self.gamma, self.bound]))


def _stable_kind(p: Params2D) -> Optional[str]:
    kinds = [s.kind for s, v in classify_2d(p) if v.stable]
    return kinds[0] if len(kinds) == 1 else None


def stability_region(r: float, alpha: float, n: int = 200, check_every: int = 10) -> StabilityRegion:
    """Boundary ``theta = gamma (alpha/(r - gamma) + 1/r)`` for ``gamma`` in ``(0, r - 1e-3]``.

    Every ``check_every``-th grid point is probed just above the curve
    (infected-only state expected) and, where ``alpha*gamma`` lies below the
    curve, half-way between the two (coexistence expected).
    """
    if not 0 < r < 1:
        raise ValueError("need 0 < r < 1")
    gam = np.linspace(r / n, r - 1e-3, n)
    bound = gam * (alpha / (r - gam) + 1.0 / r)
    checks = []
    for k in range(0, n, check_every):
        ga, b = float(gam[k]), float(bound[k])
        th = 1.05 * b
        got = _stable_kind(Params2D(r, alpha, th, ga))
        checks.append((ga, th, "infected_only", got, got == "infected_only"))
        lo = alpha * ga
        if lo < b:
            th = 0.5 * (lo + b)
            got = _stable_kind(Params2D(r, alpha, th, ga))
            checks.append((ga, th, "coexistence", got, got == "coexistence"))
    return StabilityRegion(r, alpha, gam, bound, checks)


# Infection / death-rate sweep ------------------------------------------------------------


@dataclass(frozen=True)
class HeatmapSpec:
    """Grid of constant infection (rows) and death (columns) rates.

    The metric is the largest primary-site total ``u_0 + n_0`` over
    ``[0, horizon]``, taken over the accepted integration steps.
    """

    n: int = 100
    step: float = 0.01
    horizon: float = 100.0
    rtol: float = 1e-6
    atol: float = 1e-6
    chunk: int = 512

    def __post_init__(self):
        if self.n < 0 or not self.step > 0 or not self.horizon > 0:
            raise ValueError("invalid heatmap grid")
        if self.chunk < 1:
            raise ValueError("chunk must be >= 1")

    @property
    def theta_grid(self) -> np.ndarray:
        return np.array([self.step * i for i in range(self.n + 1)])

    @property
    def gamma_grid(self) -> np.ndarray:
        return self.theta_grid


@dataclass
class HeatmapResult:
    theta: np.ndarray
    gamma: np.ndarray
    values: np.ndarray  # values[i, j] for theta[i], gamma[j]; NaN where a cell failed
    failures: dict

    def table(self) -> Table:
        cols = ["theta"] + [f"gamma={g:.2f}" for g in self.gamma]
        return Table(cols, np.column_stack([self.theta, self.values]))

    def at(self, theta: float, gamma: float) -> float:
        i = int(np.argmin(np.abs(self.theta - theta)))
        j = int(np.argmin(np.abs(self.gamma - gamma)))
        return float(self.values[i, j])


def worker_count() -> int:
    """Process count for sweeps: ``ONCOLATTICE_THREADS`` (``0`` or unset means all CPUs)."""
    raw = os.environ.get("ONCOLATTICE_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"ONCOLATTICE_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise ValueError("ONCOLATTICE_THREADS must be >= 0")
    return n if n > 0 else (os.cpu_count() or 1)


def _heatmap_chunk(args):
    """Worker: integrate the cells of one chunk of the sweep.

    With constant rates the oxygen equations do not feed back into the
    densities, so only ``(u_i, n_i)`` are integrated.
    """
    base, th, ga, y0, horizon, rtol, atol = args
    m = len(base.nodes)
    K, alpha = base._K, base._alpha
    th = th[:, None]
    ga = ga[:, None]

    def rhs(Y, rows):
        u = Y[:, :m]
        n = Y[:, m:]
        crowd = 1.0 - (u + n) / K
        inf = th[rows] * n * u / (alpha + n)
        tu, tn = transport_terms(u, n, base)
        return np.concatenate([base.r1 * u * crowd - inf + tu,
                               base.r2 * n * crowd + inf - ga[rows] * n + tn], axis=1)

    Y0 = np.repeat(y0[None, :], th.shape[0], axis=0)
    cfg = IntegratorConfig(t_end=horizon, rtol=rtol, atol=atol, settle_norm=None)
    res = integrate_batch(rhs, Y0, cfg, observe=lambda Y: Y[:, 0] + Y[:, m])
    ok = np.array([s is Termination.HORIZON_REACHED for s in res.status])
    return np.where(ok, res.obs_max, np.nan), res.messages


def theta_gamma_heatmap(spec: HeatmapSpec, base: LatticeModel, initial: Optional[RegionalState] = None,
                        workers: Optional[int] = None) -> HeatmapResult:
    """Peak primary-site total density for every (theta, gamma) pair of constant rates.

    Cells are cut into fixed chunks of ``spec.chunk``; chunks run in a
    process pool when ``workers > 1`` and are reassembled by index, so the
    matrix does not depend on the number of workers.
    """
    s0 = default_initial_state(base) if initial is None else initial
    y0 = np.concatenate([s0.u, s0.n])
    tg, gg = spec.theta_grid, spec.gamma_grid
    TH, GA = np.meshgrid(tg, gg, indexing="ij")
    th_flat, ga_flat = TH.ravel(), GA.ravel()
    bounds = [(a, min(a + spec.chunk, th_flat.size)) for a in range(0, th_flat.size, spec.chunk)]
    tasks = [(base, th_flat[a:b], ga_flat[a:b], y0, spec.horizon, spec.rtol, spec.atol) for a, b in bounds]
    workers = worker_count() if workers is None else workers
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as ex:
            results = list(ex.map(_heatmap_chunk, tasks))
    else:
        results = [_heatmap_chunk(t) for t in tasks]
    flat = np.empty(th_flat.size)
    failures = {}
    for (a, b), (vals, msgs) in zip(bounds, results):
        flat[a:b] = vals
        for k, msg in msgs.items():
            failures[np.unravel_index(a + k, TH.shape)] = msg
    return HeatmapResult(tg, gg, flat.reshape(TH.shape), failures)


# Lattice oxygenation runs ----------------------------------------------------------------


@dataclass
class ComparisonRun:
    phi0: float
    table: Table
    primary_final: float
    primary_peak: float
    node_final: np.ndarray  # u_i + n_i at the horizon, i >= 1


@dataclass
class OxygenationReport:
    """Primary-site outcome without and with oxygen supply at the primary site.

    ``reduction_vs_unoxygenated`` compares the long-term totals of the two
    runs; ``reduction_vs_peak`` compares the oxygenated run's long-term
    total with its own peak.
    """

    without: ComparisonRun
    with_oxygen: ComparisonRun

    @property
    def reduction_vs_unoxygenated(self) -> float:
        return 1.0 - self.with_oxygen.primary_final / self.without.primary_final

    @property
    def reduction_vs_peak(self) -> float:
        return 1.0 - self.with_oxygen.primary_final / self.with_oxygen.primary_peak

    def table(self) -> Table:
        k = len(self.without.node_final)
        cols = ["phi0", "primary_final", "primary_peak"] + [f"node{i}_final" for i in range(1, k + 1)]
        rows = [[r.phi0, r.primary_final, r.primary_peak, *r.node_final] for r in (self.without, self.with_oxygen)]
        return Table(cols, rows, meta=dict(reduction_vs_unoxygenated=self.reduction_vs_unoxygenated,
                                           reduction_vs_peak=self.reduction_vs_peak))


def _lattice_run(m: LatticeModel, name: str, horizon: float, cfg: Optional[IntegratorConfig]) -> ComparisonRun:
    sc = Scenario(name, m, default_initial_state(m).as_array(), horizon, source="lattice")
    cfg = _default_config(horizon) if cfg is None else cfg
    traj = integrate(m.rhs, np.array(sc.initial), cfg.replace(t_end=horizon))
    if traj.terminated_by is Termination.STEP_FAILURE:
        raise ScenarioError(name, traj.message)
    t = _sample_times(horizon, 0.01 * horizon)
    tab = Table(sc.columns, np.column_stack([t, sample_at(traj, t)]))
    X = traj.states.reshape(len(traj), -1, 3)
    totals = X[..., 0] + X[..., 1]
    return ComparisonRun(m.nodes[0].phi, tab, float(totals[-1, 0]), float(totals[:, 0].max()), totals[-1, 1:])


def oxygenation_comparison(base: Optional[LatticeModel] = None, phi0: float = 1e4,
                           horizon: float = REGIONAL_HORIZON,
                           cfg: Optional[IntegratorConfig] = None) -> OxygenationReport:
    """Run ``base`` with no oxygen supply and with ``phi0`` at the primary site."""
    base = lattice_preset("fig10") if base is None else base
    nodes0 = base.nodes[0]
    runs = []
    for phi in (0.0, phi0):
        m = base.replace(nodes=(nodes0.replace(phi=phi),) + base.nodes[1:])
        runs.append(_lattice_run(m, f"{base.name or 'lattice'}_phi0={phi:g}", horizon, cfg))
    return OxygenationReport(*runs)


@dataclass
class FullOxygenationReport:
    table: Table
    infected_final: np.ndarray
    capacities: np.ndarray

    @property
    def below_capacity(self) -> list:
        return [bool(n < K) for n, K in zip(self.infected_final[1:], self.capacities[1:])]


def full_oxygenation_regional(base: Optional[LatticeModel] = None, phi: float = 1e4,
                              horizon: float = REGIONAL_HORIZON, check: bool = True,
                              cfg: Optional[IntegratorConfig] = None) -> FullOxygenationReport:
    """Oxygen supply ``phi`` at every node; per-node ``u`` and ``n`` over time.

    With ``check`` a :class:`ScenarioError` is raised unless every lymph
    node's infected density ends strictly below its carrying capacity.
    """
    base = lattice_preset("fig14") if base is None else base
    m = base.replace(nodes=tuple(nd.replace(phi=phi) for nd in base.nodes), full_oxygenation=True)
    sc = Scenario(m.name or "full_oxygenation", m, default_initial_state(m).as_array(), horizon)
    tab = run_timeseries(sc, cfg)
    keep = ["t"] + [c for c in tab.columns if c[0] in "un"]
    idx = [tab.columns.index(c) for c in keep]
    out = Table(keep, tab.data[:, idx], tab.meta)
    final = tab.meta["final_state"].reshape(-1, 3)
    rep = FullOxygenationReport(out, final[:, 1], m._K.copy())
    if check and not all(rep.below_capacity):
        raise ScenarioError(sc.name, "an infected lymph-node density did not settle below capacity")
    return rep


# Presets -------------------------------------------------------------------------------


def _local(name, theta, gamma, source="caption", n0=INITIAL_N, horizon=LOCAL_HORIZON) -> Scenario:
    p = DEFAULT_PARAMS.replace(theta=theta, gamma=gamma)
    return Scenario(name, LocalModel(p), (INITIAL_U, n0, INITIAL_C), horizon, source=source)


def _phase(name, r, alpha, theta, gamma) -> Scenario:
    return Scenario(name, Params2D(r, alpha, theta, gamma), (0.05, 0.05), PHASE_HORIZON,
                    outputs=("phase_portrait",), source="caption")


def _lattice(name, preset_name, phi0, outputs=("timeseries",)) -> Scenario:
    m = lattice_preset(preset_name, phi0=phi0)
    return Scenario(name, m, default_initial_state(m).as_array(), REGIONAL_HORIZON,
                    outputs=outputs, source="caption")


_S = Sigmoid

PRESETS = {
    "fig1a": _phase("fig1a", 0.531107, 10.0, 2.52908, 1.29362),
    "fig1b": _phase("fig1b", 0.531107, 1.0, 2.52908, 1.29362),
    "fig2a": _phase("fig2a", 0.5311, 0.1, 0.01, 0.3),
    "fig2b": _phase("fig2b", 0.5311, 0.1, 0.3, 0.3),
    "fig2c": _phase("fig2c", 0.5311, 0.1, 0.9, 0.3),
    "fig2d": _phase("fig2d", 0.4, 0.1, 1.4, 0.3),
    "fig3": Scenario("fig3", Params2D(0.531107, 0.1, 0.0, 0.0), (0.05, 0.05), PHASE_HORIZON,
                     outputs=("stability_region",), source="caption"),
    "fig5": _local("fig5", Constant(1.0), Constant(0.5115), source="table"),
    "fig6a": _local("fig6a", _S(0.1, 0.12, 0.08), _S(0.05115, 0.09115, 0.08)),
    "fig6b": _local("fig6b", _S(0.1, 0.12, 0.08), _S(0.005115, 0.009115, 0.008)),
    "fig7a": _local("fig7a", _S(0.01, 0.012, 0.008), _S(0.05115, 0.2115, 0.08)),
    "fig7b": _local("fig7b", _S(0.01, 0.012, 0.008), _S(0.05115, 0.2115, 0.08), n0=0.5e6),
    "fig7c": _local("fig7c", _S(5.115e-3, 1.0, 0.08), _S(0.2, 0.4, 0.08)),
    "fig7d": _local("fig7d", _S(5.115e-3, 1.0, 0.08), _S(0.7, 0.9, 0.08)),
    "fig8a": _local("fig8a", _S(5.115e-3, 1.0, 0.08), _S(0.1, 0.9, 0.008)),
    "fig8b": _local("fig8b", _S(5.115e-3, 1.0, 0.08), _S(0.09, 0.2, 0.01)),
    "fig9": _local("fig9", _S(0.005115, 0.02115, 0.8), _S(0.3, 1.0, 0.8), n0=5.0e5),
    "fig10a": _lattice("fig10a", "fig10", 0.0),
    "fig10b": _lattice("fig10b", "fig10", 1e4, outputs=("timeseries", "comparison")),
    "fig11a": _lattice("fig11a", "fig11", 0.0),
    "fig11b": _lattice("fig11b", "fig11", 1e4, outputs=("timeseries", "comparison")),
    "fig13": Scenario("fig13", lattice_preset("baseline"), default_initial_state(lattice_preset("baseline")).as_array(),
                      100.0, outputs=("heatmap",), source="reference script"),
    "fig14": Scenario("fig14", lattice_preset("fig14"), default_initial_state(lattice_preset("fig14")).as_array(),
                      REGIONAL_HORIZON, source="caption; rates as in fig10"),
}


def preset(name: str) -> Scenario:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; valid ids: {', '.join(sorted(PRESETS, key=_id_order))}")
    return PRESETS[name]


def _id_order(name: str):
    digits = "".join(ch for ch in name if ch.isdigit())
    return (int(digits) if digits else 0, name)
