"""YAML run configuration: schema, loading with line diagnostics, and dumping.

A configuration has these sections (all optional except ``model``)::

    model: local | reduced | regional
    parameters:   {r1, r2, K, alpha, phi, beta, q1, q2}   # local / regional
                  {r, alpha}                             # reduced
    responses:
      theta: {kind: constant, value: 1.0}
      gamma: {kind: sigmoid, v0: 0.1, vinf: 0.9, k: 0.08}
    lattice:      {ell, eta, node_K, node_alpha, q_L, q_R, node_phi,
                   full_oxygenation, nodes: {<index>: {K, alpha, eta, q_L, q_R, phi}}}
    scenario:     {name, horizon, output_step, outputs, initial}
    integrator:   {rtol, atol, h_max}
    heatmap:      {n, step, horizon, rtol, atol}
    phase:        {resolution}

Unknown keys are rejected, and every error names the offending key path
and its line in the file.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np
import yaml

from .core import (INITIAL_C, INITIAL_N, INITIAL_U, DEFAULT_PARAMS, Constant, DimensionalParams, Scaled,
                   Sigmoid)
from .experiments import OUTPUT_KINDS, HeatmapSpec, Scenario
from .integrator import IntegratorConfig
from .local_model import LocalModel, Params2D
from .regional import LYMPH_NODE_C0, LatticeModel, NodeParams, calibrate_lambda

__all__ = [
    "ConfigError",
    "RunConfig",
    "load_config",
    "loads_config",
    "dump_config",
    "config_to_dict",
    "config_from_scenario",
    "parameter_hash",
]

MODEL_KINDS = ("local", "reduced", "regional")
DIM_KEYS = ("r1", "r2", "K", "alpha", "phi", "beta", "q1", "q2")
NODE_KEYS = ("K", "alpha", "eta", "q_L", "q_R", "phi")


class ConfigError(ValueError):
    """Invalid configuration; ``path`` is the dotted key path, ``line`` 1-based or ``None``."""

    def __init__(self, message: str, path: str = "", line: Optional[int] = None, source: str = "<config>"):
        where = (source or "") + (f":{line}" if line is not None else "")
        key = f" [{path}]" if path else ""
        prefix = f"{where}:{key} " if where else (f"[{path}] " if path else "")
        super().__init__(prefix + message)
        self.path = path
        self.line = line


@dataclass
class RunConfig:
    """A validated configuration together with the objects it describes."""

    scenario: Scenario
    integrator: IntegratorConfig
    heatmap: HeatmapSpec = field(default_factory=HeatmapSpec)
    phase_resolution: int = 25


# YAML -> plain data with line marks ------------------------------------------------------


class _Marked:
    """Plain python data plus ``path -> line`` for diagnostics."""

    def __init__(self, source: str):
        self.lines: dict[str, int] = {}
        self.source = source

    def error(self, message: str, path: str) -> ConfigError:
        line = self.lines.get(path)
        while line is None and "." in path:
            path_up = path.rsplit(".", 1)[0]
            line = self.lines.get(path_up)
            path = path_up
        return ConfigError(message, path, line, self.source)


def _to_plain(node, loader, marks: _Marked, path: str):
    marks.lines.setdefault(path, node.start_mark.line + 1)
    if isinstance(node, yaml.MappingNode):
        out = {}
        for k_node, v_node in node.value:
            key = loader.construct_object(k_node, deep=True)
            sub = f"{path}.{key}" if path else str(key)
            if key in out:
                raise ConfigError(f"duplicate key {key!r}", sub, k_node.start_mark.line + 1, marks.source)
            marks.lines[sub] = k_node.start_mark.line + 1
            out[key] = _to_plain(v_node, loader, marks, sub)
        return out
    if isinstance(node, yaml.SequenceNode):
        return [_to_plain(v, loader, marks, f"{path}[{i}]") for i, v in enumerate(node.value)]
    return loader.construct_object(node, deep=True)


class _Loader(yaml.SafeLoader):
    """Safe loader that also reads ``1e6`` and ``1.0e6`` as floats."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
                |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
                |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
                |[-+]?\.(?:inf|Inf|INF)
                |\.(?:nan|NaN|NAN))$""", re.X),
    list("-+0123456789."))


def _parse(text: str, source: str) -> tuple[dict, _Marked]:
    marks = _Marked(source)
    loader = _Loader(text)
    try:
        node = loader.get_single_node()
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"malformed YAML: {getattr(exc, 'problem', exc)}", "",
                          mark.line + 1 if mark else None, source) from None
    finally:
        loader.dispose()
    if node is None:
        raise ConfigError("empty configuration", "", None, source)
    if not isinstance(node, yaml.MappingNode):
        raise ConfigError("top level must be a mapping", "", node.start_mark.line + 1, source)
    return _to_plain(node, _Loader(""), marks, ""), marks


# Schema checks -------------------------------------------------------------------------


def _keys(sec: Any, path: str, marks: _Marked, allowed, required=()) -> dict:
    if sec is None:
        sec = {}
    if not isinstance(sec, dict):
        raise marks.error("expected a mapping", path)
    for k in sec:
        if k not in allowed:
            raise marks.error(f"unknown key {k!r}; allowed: {', '.join(map(str, allowed))}", f"{path}.{k}")
    for k in required:
        if k not in sec:
            raise marks.error(f"missing required key {k!r}", path)
    return sec


def _section(data: dict, key: str, marks: _Marked, allowed, required=()) -> dict:
    return _keys(data.get(key), key, marks, allowed, required)


def _num(sec: dict, key: str, marks: _Marked, path: str, default=None, integer: bool = False,
         allow_inf: bool = False):
    if key not in sec:
        if default is None:
            raise marks.error(f"missing required key {key!r}", path)
        return default
    v = sec[key]
    full = f"{path}.{key}"
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise marks.error(f"expected a number, got {v!r}", full)
    if integer:
        if isinstance(v, float) and not v.is_integer():
            raise marks.error(f"expected an integer, got {v!r}", full)
        return int(v)
    if not (math.isfinite(v) or (allow_inf and v == math.inf)):
        raise marks.error(f"expected a finite number, got {v!r}", full)
    return float(v)


def _wrap(marks: _Marked, path: str, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise marks.error(str(exc), path) from None


def _response(sec: Any, marks: _Marked, path: str):
    if not isinstance(sec, dict):
        raise marks.error("expected a mapping with a 'kind'", path)
    kind = sec.get("kind")
    if kind == "constant":
        _keys(sec, path, marks, ("kind", "value"), ("value",))
        return _wrap(marks, path, Constant, _num(sec, "value", marks, path))
    if kind == "sigmoid":
        _keys(sec, path, marks, ("kind", "v0", "vinf", "k"), ("v0", "vinf", "k"))
        return _wrap(marks, path, Sigmoid, _num(sec, "v0", marks, path), _num(sec, "vinf", marks, path),
                     _num(sec, "k", marks, path))
    raise marks.error(f"response kind must be 'constant' or 'sigmoid', got {kind!r}", f"{path}.kind")


def _initial(sec: Any, kind: str, n_nodes: int, marks: _Marked) -> tuple:
    path = "scenario.initial"
    if kind == "reduced":
        s = _keys(sec, path, marks, ("x", "y"))
        return (_num(s, "x", marks, path, 0.05), _num(s, "y", marks, path, 0.05))
    s = _keys(sec, path, marks, ("u", "n", "c"))
    if kind == "local":
        return (_num(s, "u", marks, path, INITIAL_U), _num(s, "n", marks, path, INITIAL_N),
                _num(s, "c", marks, path, INITIAL_C))
    cols = []
    defaults = {"u": [INITIAL_U] + [0.0] * (n_nodes - 1), "n": [INITIAL_N] + [0.0] * (n_nodes - 1),
                "c": [INITIAL_C] + [LYMPH_NODE_C0] * (n_nodes - 1)}
    for key in ("u", "n", "c"):
        v = s.get(key, defaults[key])
        if not isinstance(v, list) or len(v) != n_nodes:
            raise marks.error(f"expected a list of {n_nodes} numbers", f"{path}.{key}")
        for i, x in enumerate(v):
            if isinstance(x, bool) or not isinstance(x, (int, float)):
                raise marks.error(f"expected a number, got {x!r}", f"{path}.{key}[{i}]")
        cols.append([float(x) for x in v])
    return tuple(float(x) for trip in zip(*cols) for x in trip)


def _lattice(data: dict, params: dict, theta, gamma, marks: _Marked) -> LatticeModel:
    sec = _section(data, "lattice", marks, ("ell", "eta", "node_K", "node_alpha", "q_L", "q_R",
                                            "node_phi", "full_oxygenation", "nodes"))
    ell = _num(sec, "ell", marks, "lattice", 3, integer=True)
    if ell < 1:
        raise marks.error("ell must be >= 1", "lattice.ell")
    eta = _num(sec, "eta", marks, "lattice", 2e-4)
    node_K = _num(sec, "node_K", marks, "lattice", params["K"] / 10)
    node_alpha = _num(sec, "node_alpha", marks, "lattice", params["alpha"] / 10)
    q_L = _num(sec, "q_L", marks, "lattice", 0.05)
    q_R = _num(sec, "q_R", marks, "lattice", 1.0 - q_L)
    node_phi = _num(sec, "node_phi", marks, "lattice", 0.0)
    full = sec.get("full_oxygenation", node_phi != 0)
    if not isinstance(full, bool):
        raise marks.error("expected true or false", "lattice.full_oxygenation")
    per = {0: dict(K=params["K"], alpha=params["alpha"], eta=eta, q_L=0.0, q_R=1.0, phi=params["phi"])}
    for i in range(1, ell + 1):
        per[i] = dict(K=node_K, alpha=node_alpha, eta=eta, q_L=q_L, q_R=q_R, phi=node_phi)
    over = sec.get("nodes", {}) or {}
    if not isinstance(over, dict):
        raise marks.error("expected a mapping from node index to overrides", "lattice.nodes")
    for idx, changes in over.items():
        path = f"lattice.nodes.{idx}"
        if not isinstance(idx, int) or isinstance(idx, bool) or not 0 <= idx <= ell:
            raise marks.error(f"node index must be an integer in 0..{ell}", path)
        ch = _keys(changes, path, marks, NODE_KEYS)
        for k in ch:
            per[idx][k] = _num(ch, k, marks, path)
    nodes = []
    for i in range(ell + 1):
        nodes.append(_wrap(marks, f"lattice.nodes.{i}" if i in over else "lattice", NodeParams, **per[i]))
    return _wrap(marks, "lattice", LatticeModel, nodes=tuple(nodes), r1=params["r1"], r2=params["r2"],
                 beta=params["beta"], q1=params["q1"], q2=params["q2"], theta=theta, gamma=gamma,
                 full_oxygenation=full)


def _build(data: dict, marks: _Marked) -> RunConfig:
    for k in data:
        if k not in ("model", "parameters", "responses", "lattice", "scenario", "integrator", "heatmap", "phase"):
            raise marks.error(f"unknown section {k!r}", str(k))
    kind = data.get("model")
    if kind not in MODEL_KINDS:
        raise marks.error(f"model must be one of {', '.join(MODEL_KINDS)}, got {kind!r}", "model")

    resp = _section(data, "responses", marks, ("theta", "gamma"))
    if kind == "reduced":
        psec = _section(data, "parameters", marks, ("r", "alpha"), ("r", "alpha"))
        theta = _response(resp["theta"], marks, "responses.theta") if "theta" in resp else Constant(DEFAULT_PARAMS.theta.value)
        gamma = _response(resp["gamma"], marks, "responses.gamma") if "gamma" in resp else Constant(DEFAULT_PARAMS.gamma.value)
        if not (isinstance(theta, Constant) and isinstance(gamma, Constant)):
            raise marks.error("the reduced model needs constant responses", "responses")
        model = _wrap(marks, "parameters", Params2D, _num(psec, "r", marks, "parameters"),
                      _num(psec, "alpha", marks, "parameters"), theta.value, gamma.value)
        if "lattice" in data:
            raise marks.error("lattice section only applies to the regional model", "lattice")
    else:
        psec = _section(data, "parameters", marks, DIM_KEYS)
        params = {k: _num(psec, k, marks, "parameters", getattr(DEFAULT_PARAMS, k)) for k in DIM_KEYS}
        theta = _response(resp["theta"], marks, "responses.theta") if "theta" in resp else DEFAULT_PARAMS.theta
        gamma = _response(resp["gamma"], marks, "responses.gamma") if "gamma" in resp else DEFAULT_PARAMS.gamma
        if kind == "local":
            if "lattice" in data:
                raise marks.error("lattice section only applies to the regional model", "lattice")
            p = _wrap(marks, "parameters", DimensionalParams, theta=theta, gamma=gamma, **params)
            model = LocalModel(p)
        else:
            model = _lattice(data, params, theta, gamma, marks)

    sc = _section(data, "scenario", marks, ("name", "horizon", "output_step", "outputs", "initial"))
    name = sc.get("name", "run")
    if not isinstance(name, str) or not name:
        raise marks.error("name must be a non-empty string", "scenario.name")
    default_h = {"local": 200.0, "reduced": 500.0, "regional": 80.0}[kind]
    horizon = _num(sc, "horizon", marks, "scenario", default_h)
    step = _num(sc, "output_step", marks, "scenario", -1.0)
    outputs = sc.get("outputs", ["phase_portrait"] if kind == "reduced" else ["timeseries"])
    if isinstance(outputs, str):
        outputs = [outputs]
    if not isinstance(outputs, list) or any(o not in OUTPUT_KINDS for o in outputs):
        raise marks.error(f"outputs must be a list drawn from {', '.join(OUTPUT_KINDS)}", "scenario.outputs")
    n_nodes = len(model.nodes) if isinstance(model, LatticeModel) else 1
    initial = _initial(sc.get("initial"), kind, n_nodes, marks)
    scenario = _wrap(marks, "scenario", Scenario, name=name, model=model, initial=initial, horizon=horizon,
                     outputs=tuple(outputs), output_step=None if step < 0 else step, source="config")

    isec = _section(data, "integrator", marks, ("rtol", "atol", "h_max"))
    integ = _wrap(marks, "integrator", IntegratorConfig, t_end=horizon,
                  rtol=_num(isec, "rtol", marks, "integrator", 1e-8),
                  atol=_num(isec, "atol", marks, "integrator", 1e-10),
                  h_max=_num(isec, "h_max", marks, "integrator", math.inf, allow_inf=True), settle_norm=None)
    hsec = _section(data, "heatmap", marks, ("n", "step", "horizon", "rtol", "atol"))
    d = HeatmapSpec()
    heat = _wrap(marks, "heatmap", HeatmapSpec, n=_num(hsec, "n", marks, "heatmap", d.n, integer=True),
                 step=_num(hsec, "step", marks, "heatmap", d.step),
                 horizon=_num(hsec, "horizon", marks, "heatmap", d.horizon),
                 rtol=_num(hsec, "rtol", marks, "heatmap", d.rtol),
                 atol=_num(hsec, "atol", marks, "heatmap", d.atol))
    phsec = _section(data, "phase", marks, ("resolution",))
    res = _num(phsec, "resolution", marks, "phase", 25, integer=True)
    if res < 2:
        raise marks.error("resolution must be >= 2", "phase.resolution")
    return RunConfig(scenario, integ, heat, res)


def loads_config(text: str, source: str = "<config>") -> RunConfig:
    data, marks = _parse(text, source)
    return _build(data, marks)


def load_config(path: Union[str, Path]) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", "", None, str(path)) from None
    return loads_config(text, str(path))


# Dumping -------------------------------------------------------------------------------


def _response_dict(r) -> dict:
    if isinstance(r, Scaled):
        raise ValueError("rescaled responses cannot be written to a configuration")
    if isinstance(r, Constant):
        return {"kind": "constant", "value": float(r.value)}
    return {"kind": "sigmoid", "v0": float(r.v0), "vinf": float(r.vinf), "k": float(r.k)}


def config_to_dict(cfg: RunConfig) -> dict:
    """Fully explicit plain-data form of ``cfg`` (every default written out)."""
    sc = cfg.scenario
    m = sc.model
    out: dict = {}
    if isinstance(m, Params2D):
        out["model"] = "reduced"
        out["parameters"] = {"r": m.r, "alpha": m.alpha}
        out["responses"] = {"theta": {"kind": "constant", "value": m.theta},
                            "gamma": {"kind": "constant", "value": m.gamma}}
        initial = {"x": sc.initial[0], "y": sc.initial[1]}
    elif isinstance(m, LocalModel):
        p = m.params
        if not isinstance(p, DimensionalParams) or m.reduced:
            raise ValueError("only dimensional local models can be written to a configuration")
        out["model"] = "local"
        out["parameters"] = {k: float(getattr(p, k)) for k in DIM_KEYS}
        out["responses"] = {"theta": _response_dict(p.theta), "gamma": _response_dict(p.gamma)}
        initial = dict(zip(("u", "n", "c"), sc.initial))
    else:
        n0 = m.nodes[0]
        out["model"] = "regional"
        out["parameters"] = {"r1": m.r1, "r2": m.r2, "K": n0.K, "alpha": n0.alpha, "phi": n0.phi,
                             "beta": m.beta, "q1": m.q1, "q2": m.q2}
        out["responses"] = {"theta": _response_dict(m.theta), "gamma": _response_dict(m.gamma)}
        ref = m.nodes[1]
        lat = {"ell": m.ell, "eta": ref.eta, "node_K": ref.K, "node_alpha": ref.alpha, "q_L": ref.q_L,
               "q_R": ref.q_R, "node_phi": ref.phi, "full_oxygenation": m.full_oxygenation}
        nodes = {}
        base0 = dict(K=n0.K, alpha=n0.alpha, eta=ref.eta, q_L=0.0, q_R=1.0, phi=n0.phi)
        for i, nd in enumerate(m.nodes):
            want = base0 if i == 0 else dict(K=ref.K, alpha=ref.alpha, eta=ref.eta, q_L=ref.q_L,
                                             q_R=ref.q_R, phi=ref.phi)
            diff = {k: float(getattr(nd, k)) for k in NODE_KEYS if getattr(nd, k) != want[k]}
            if nd.lam != calibrate_lambda(nd.K):
                raise ValueError("custom spreading shapes cannot be written to a configuration")
            if diff:
                nodes[i] = diff
        if nodes:
            lat["nodes"] = nodes
        out["lattice"] = {k: (float(v) if isinstance(v, (float, np.floating)) else v) for k, v in lat.items()}
        arr = np.array(sc.initial).reshape(-1, 3)
        initial = {"u": arr[:, 0].tolist(), "n": arr[:, 1].tolist(), "c": arr[:, 2].tolist()}
    out["scenario"] = {"name": sc.name, "horizon": float(sc.horizon), "outputs": list(sc.outputs),
                       "initial": {k: (float(v) if not isinstance(v, list) else v) for k, v in initial.items()}}
    if sc.output_step is not None:
        out["scenario"]["output_step"] = float(sc.output_step)
    ic = cfg.integrator
    out["integrator"] = {"rtol": ic.rtol, "atol": ic.atol, "h_max": ic.h_max}
    h = cfg.heatmap
    out["heatmap"] = {"n": h.n, "step": h.step, "horizon": h.horizon, "rtol": h.rtol, "atol": h.atol}
    out["phase"] = {"resolution": cfg.phase_resolution}
    return out


def dump_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=False, default_flow_style=None)


def config_from_scenario(sc: Scenario, integrator: Optional[IntegratorConfig] = None) -> RunConfig:
    integ = integrator or IntegratorConfig(t_end=sc.horizon, settle_norm=None)
    return RunConfig(dataclasses.replace(sc, source="config"), integ)


def parameter_hash(cfg: RunConfig) -> str:
    """SHA-256 of the canonical JSON form of the configuration."""
    blob = json.dumps(config_to_dict(cfg), sort_keys=True, default=float)
    return hashlib.sha256(blob.encode()).hexdigest()
