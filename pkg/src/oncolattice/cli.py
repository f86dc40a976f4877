"""Command-line front end.

Every subcommand writes its artifacts to ``--out`` and records them in
``manifest.json`` there.  Exit status is 0 on success, 1 for a bad
configuration or an unknown figure id, 2 when a numerical step fails.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import yaml

from . import __version__
from .config import ConfigError, RunConfig, config_from_scenario, load_config, parameter_hash
from .core import DimensionalParams, is_constant, nondimensionalize
from .equilibria import (classify_2d, interior_3d, tumour_dominant_3d, tumour_free_3d,
                         uninfected_free_3d)
from .experiments import (PRESETS, HeatmapSpec, Scenario, ScenarioError, Table, _id_order,
                          oxygenation_comparison, phase_portrait, preset, run_timeseries,
                          stability_region, theta_gamma_heatmap)
from .integrator import IntegratorConfig, Termination, integrate
from .linalg import EigenvalueError
from .local_model import LocalModel, Params2D
from .output import update_manifest, write_csv, write_svg
from .regional import (LatticeModel, SteadyStateError, _check_forward_regime, prop5_certificate,
                       tumour_dominant_regional)

log = logging.getLogger("oncolattice")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERIC = 2

KIND_LABELS = {"origin": "Origin", "tumour_only": "TumourOnly", "infected_only": "InfectedOnly",
               "coexistence": "Coexistence"}


class _Run:
    """Output directory, format and the list of files written so far."""

    def __init__(self, out: Path, fmt: str):
        self.out = out
        self.fmt = fmt
        self.files: list[str] = []

    def csv(self, table: Table, stem: str):
        if self.fmt in ("csv", "both"):
            write_csv(table, self.out / f"{stem}.csv")
            self.files.append(f"{stem}.csv")

    def svg(self, obj, stem: str, title: str = ""):
        if self.fmt in ("svg", "both"):
            write_svg(obj, self.out / f"{stem}.svg", title=title)
            self.files.append(f"{stem}.svg")

    def text(self, body: str, name: str):
        with open(self.out / name, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(body)
        self.files.append(name)


def _yaml(data) -> str:
    return yaml.safe_dump(data, sort_keys=False, allow_unicode=True)


def _params_2d(sc: Scenario) -> Params2D:
    m = sc.model
    if isinstance(m, Params2D):
        return m
    if isinstance(m, LocalModel) and isinstance(m.params, DimensionalParams):
        p = m.params
        if is_constant(p.theta) and is_constant(p.gamma):
            return Params2D.from_nondim(nondimensionalize(p))
    raise ConfigError("needs the reduced model, or a local model with constant responses", "model", source="")


def _lattice(sc: Scenario) -> LatticeModel:
    if not isinstance(sc.model, LatticeModel):
        raise ConfigError("needs the regional model", "model", source="")
    return sc.model


# Subcommand bodies -----------------------------------------------------------------------


def _timeseries(sc: Scenario, integ: Optional[IntegratorConfig], run: _Run):
    tab = run_timeseries(sc, integ)
    run.csv(tab, sc.name)
    run.svg(tab, sc.name, sc.name)
    if not tab.meta["settled"]:
        log.info("%s: not at a steady state by t=%g", sc.name, sc.horizon)


def _comparison(sc: Scenario, integ: Optional[IntegratorConfig], run: _Run):
    m = _lattice(sc)
    phi0 = m.nodes[0].phi
    if phi0 == 0:
        log.warning("%s: primary-site oxygen supply is zero, comparison skipped", sc.name)
        return
    rep = oxygenation_comparison(m, phi0=phi0, horizon=sc.horizon, cfg=integ)
    tab = rep.table()
    run.csv(tab, f"{sc.name}_comparison")
    print(f"primary-site long-term total: {rep.without.primary_final:.6g} (phi0=0), "
          f"{rep.with_oxygen.primary_final:.6g} (phi0={phi0:g})")
    print(f"reduction vs unoxygenated run: {rep.reduction_vs_unoxygenated:.4f}")
    print(f"reduction vs own peak: {rep.reduction_vs_peak:.4f}")


def _phase(p: Params2D, name: str, resolution: int, horizon: float, run: _Run):
    pp = phase_portrait(p, resolution=resolution, horizon=horizon)
    run.csv(pp.field_table(), f"{name}_field")
    run.csv(pp.trajectory_table(), f"{name}_trajectories")
    run.svg(pp, name, name)
    for st, v in pp.steady_states:
        print(f"{KIND_LABELS[st.kind]}: {v} at ({st.x:.6g}, {st.y:.6g})")


def _heatmap(sc: Scenario, spec: HeatmapSpec, run: _Run):
    res = theta_gamma_heatmap(spec, _lattice(sc), initial=None)
    if res.failures:
        raise ScenarioError(sc.name, f"{len(res.failures)} heatmap cells failed to integrate")
    run.csv(res.table(), sc.name)
    run.svg(res, sc.name, sc.name)


def _stability_region(p: Params2D, name: str, run: _Run):
    reg = stability_region(p.r, p.alpha)
    run.csv(reg.table(), name)
    if not reg.all_agree:
        bad = [c for c in reg.checks if not c[-1]]
        raise ScenarioError(name, f"{len(bad)} probes disagree with the stability boundary")


def _execute(sc: Scenario, cfg: RunConfig, run: _Run):
    integ = cfg.integrator
    for kind in sc.outputs:
        if kind == "timeseries":
            _timeseries(sc, integ, run)
        elif kind == "phase_portrait":
            _phase(_params_2d(sc), sc.name, cfg.phase_resolution, sc.horizon, run)
        elif kind == "heatmap":
            _heatmap(sc, cfg.heatmap, run)
        elif kind == "stability_region":
            _stability_region(_params_2d(sc), sc.name, run)
        elif kind == "comparison":
            _comparison(sc, integ, run)


def classify_lines(p: Params2D) -> list[str]:
    out = []
    found = classify_2d(p)
    kinds = {st.kind for st, _ in found}
    for st, v in found:
        line = f"{KIND_LABELS[st.kind]}: {v}"
        if st.kind == "coexistence":
            line += f"; (x*, y*) = ({st.x:.10g}, {st.y:.10g})"
        out.append(line)
    for kind in ("infected_only", "coexistence"):
        if kind not in kinds:
            out.append(f"{KIND_LABELS[kind]}: does not exist")
    return out


def _cmd_classify(cfg: RunConfig, run: _Run):
    sc = cfg.scenario
    lines = classify_lines(_params_2d(sc))
    print("\n".join(lines))
    run.text("\n".join(lines) + "\n", f"{sc.name}_classify.txt")


def _state_record(st, v) -> dict:
    coords = {k: float(getattr(st, k)) for k in ("x", "y", "z") if hasattr(st, k)}
    rec = {"kind": st.kind, **coords, "verdict": v.verdict.value, "basis": v.basis.value}
    if v.reason:
        rec["conditions"] = v.reason
    if getattr(st, "flags", ()):
        rec["flags"] = list(st.flags)
    rec["eigenvalues"] = [complex(e).real if complex(e).imag == 0 else str(complex(e)) for e in st.eigenvalues]
    return rec


def _cmd_equilibria(cfg: RunConfig, run: _Run):
    sc = cfg.scenario
    m = sc.model
    records = []
    if isinstance(m, Params2D) or (isinstance(m, LocalModel) and m.reduced):
        p = m if isinstance(m, Params2D) else Params2D.from_nondim(m.params)
        records = [_state_record(st, v) for st, v in classify_2d(p)]
    elif isinstance(m, LocalModel):
        p = nondimensionalize(m.params) if m.dimensional else m.params
        found = [tumour_free_3d(p), tumour_dominant_3d(p)]
        if p.q2 > 0:
            found += uninfected_free_3d(p)
        # seed the interior search with the end of a nondimensional run; Newton polishes it
        seed_cfg = IntegratorConfig(t_end=200.0, rtol=1e-6, atol=1e-9, settle_norm=None)
        tr = integrate(LocalModel(p).rhs, [0.5, 0.3, 0.5], seed_cfg)
        end = tr.final
        if tr.terminated_by is not Termination.STEP_FAILURE and min(end[0], end[1]) > 1e-6:
            try:
                found.append(interior_3d(p, end))
            except (RuntimeError, np.linalg.LinAlgError) as exc:
                log.info("interior state not resolved: %s", exc)
        records = [_state_record(st, v) for st, v in found]
    else:
        E = tumour_dominant_regional(_forward_regime(m))
        records = [{"kind": "tumour_dominant", "u": E.u.tolist(), "n": E.n.tolist(), "c": E.c.tolist()}]
    for r in records:
        coords = ", ".join(f"{k}={r[k]}" for k in ("x", "y", "z", "u") if k in r)
        extra = f" ({r['conditions']})" if "conditions" in r else ""
        print(f"{r['kind']}: {r.get('verdict', 'n/a')}{extra}  {coords}")
    run.text(_yaml({"scenario": sc.name, "steady_states": records}), f"{sc.name}_equilibria.yaml")


def _forward_regime(m: LatticeModel) -> LatticeModel:
    try:
        _check_forward_regime(m)
    except ValueError as exc:
        raise ConfigError(str(exc), "lattice", source="") from None
    return m


def _cmd_certify(cfg: RunConfig, run: _Run):
    sc = cfg.scenario
    rep = prop5_certificate(_forward_regime(_lattice(sc)))
    lines = rep.lines()
    print("\n".join(lines))
    discs = Table(["row", "center_re", "center_im", "radius", "rightmost"],
                  [[i, d.center.real, d.center.imag, d.radius, d.rightmost] for i, d in enumerate(rep.discs)])
    run.csv(discs, f"{sc.name}_gershgorin")
    body = {"scenario": sc.name, "certified": rep.certified,
            "steady_state_u": rep.state.u.tolist(),
            "theta0": rep.theta0, "gamma0": rep.gamma0,
            "cond1": {"holds": rep.cond1, "margin": rep.cond1_margin},
            "cond2": [{"node": i, "holds": ok, "margin": mg}
                      for i, (ok, mg) in enumerate(zip(rep.cond2, rep.cond2_margin), start=1)],
            "cond3": [{"node": i, "holds": ok, "margin": mg}
                      for i, (ok, mg) in enumerate(zip(rep.cond3, rep.cond3_margin), start=1)],
            "discs_in_left_half_plane": rep.discs_negative,
            "max_real_eigenvalue": rep.max_real_eigenvalue}
    run.text(_yaml(body), f"{sc.name}_certificate.yaml")


# Argument handling -------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=".", help="output directory (created if missing)")
    common.add_argument("--format", choices=("csv", "svg", "both"), default="csv", dest="fmt")
    common.add_argument("--seed", type=int, default=None,
                        help="recorded in the manifest; all computations here are deterministic")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="oncolattice", description="Oncolytic virotherapy ODE toolkit.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, hlp in (("simulate", "time series for a configured scenario"),
                      ("equilibria", "steady states with stability verdicts"),
                      ("classify", "steady-state report for the two-variable model"),
                      ("phase", "direction field and trajectories"),
                      ("heatmap", "infection/death-rate sweep on the lattice"),
                      ("regional-certify", "stability certificate for the lattice")):
        p = sub.add_parser(name, parents=[common], help=hlp)
        p.add_argument("config", help="YAML configuration file")
    p = sub.add_parser("reproduce", parents=[common], help="run a named figure preset")
    p.add_argument("figure_id", help="e.g. fig10b, fig13")
    return ap


def _dispatch(args, run: _Run) -> tuple[Scenario, RunConfig]:
    if args.command == "reproduce":
        try:
            sc = preset(args.figure_id)
        except KeyError:
            valid = ", ".join(sorted(PRESETS, key=_id_order))
            raise ConfigError(f"unknown figure id {args.figure_id!r}; valid ids: {valid}", source="") from None
        cfg = config_from_scenario(sc)
        cfg.heatmap = HeatmapSpec(horizon=sc.horizon)
        _execute(sc, cfg, run)
        return sc, cfg

    cfg = load_config(args.config)
    sc = cfg.scenario
    if args.command == "simulate":
        outputs = [o for o in sc.outputs if o in ("timeseries", "comparison")] or ["timeseries"]
        for o in outputs:
            (_timeseries if o == "timeseries" else _comparison)(sc, cfg.integrator, run)
    elif args.command == "classify":
        _cmd_classify(cfg, run)
    elif args.command == "equilibria":
        _cmd_equilibria(cfg, run)
    elif args.command == "phase":
        _phase(_params_2d(sc), sc.name, cfg.phase_resolution, sc.horizon, run)
    elif args.command == "heatmap":
        _heatmap(sc, cfg.heatmap, run)
    elif args.command == "regional-certify":
        _cmd_certify(cfg, run)
    return sc, cfg


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create output directory {out}: {exc.strerror}", file=sys.stderr)
        return EXIT_CONFIG
    run = _Run(out, args.fmt)
    try:
        sc, cfg = _dispatch(args, run)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ScenarioError, SteadyStateError, EigenvalueError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    try:
        phash = parameter_hash(cfg)
    except ValueError:
        phash = None
    entry = {"name": sc.name, "command": args.command, "source": sc.source,
             "parameter_hash": phash, "files": sorted(run.files), "seed": args.seed}
    update_manifest(out, entry)
    for f in sorted(run.files):
        log.info("wrote %s", out / f)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
