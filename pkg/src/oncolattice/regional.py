"""Lymph-node lattice model: a primary tumour (node 0) drained by a chain of nodes.

Each node carries uninfected cells ``u``, infected cells ``n`` and oxygen
``c``.  Cells leave node ``i`` at the saturating rate
``P_i(u_i + n_i) = eta_i (1 - exp(-lambda_i (u_i + n_i)))`` and are routed to
the neighbours with probabilities ``q_L`` / ``q_R``.  The boundary stencils
are kept as written for the model:

* node 0 loses ``q_{0,R} P_0`` and only receives from node 1 (weight ``q_{1,L}``);
* interior nodes lose the full ``P_i`` and receive from both neighbours;
* the terminal node ``l`` loses only ``q_{l,L} P_l``.  Its right-going share is
  not transported anywhere, so those cells stay at the terminal node.

State vectors are laid out per node, ``[u_0, n_0, c_0, u_1, n_1, c_1, ...]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from typing import Optional

import numpy as np

from .core import Constant, OxygenResponse, Sigmoid, DEFAULT_PARAMS, INITIAL_C, INITIAL_N, INITIAL_U
from .equilibria import bisect
from .linalg import MAX_DIM, GershgorinDisc, discs_all_negative, eigenvalues, gershgorin_discs

__all__ = [
    "SPREAD_FRACTION",
    "NodeParams",
    "LatticeModel",
    "RegionalState",
    "calibrate_lambda",
    "spreading_rate",
    "rhs_regional",
    "transport_terms",
    "tumour_dominant_regional",
    "CertificateReport",
    "prop5_certificate",
    "regional_jacobian",
    "SteadyStateError",
    "chain_lattice",
    "lattice_preset",
    "LATTICE_PRESETS",
    "forward_only",
    "default_initial_state",
    "LYMPH_NODE_C0",
]

# fraction of eta_i reached when a node sits at its carrying capacity
SPREAD_FRACTION = 0.7
LYMPH_NODE_C0 = 4.375
# relative slack used when comparing the two sides of a certificate inequality
CERT_RTOL = 1e-9


class SteadyStateError(RuntimeError):
    """No admissible root for one node of the tumour-dominant recursion."""

    def __init__(self, node: int, message: str):
        super().__init__(f"node {node}: {message}")
        self.node = node


def calibrate_lambda(K: float) -> float:
    """Shape constant with ``1 - exp(-lambda K) = 0.7``, i.e. ``-ln(0.3)/K``."""
    if not K > 0:
        raise ValueError(f"carrying capacity must be > 0, got {K}")
    return -math.log(1.0 - SPREAD_FRACTION) / K


@dataclass(frozen=True)
class NodeParams:
    """Per-node constants.

    ``q_L``/``q_R`` are the probabilities that a cell leaving this node moves
    toward node 0 or away from it.  ``lam=None`` calibrates the spreading
    shape from ``K``.
    """

    K: float
    alpha: float
    eta: float
    q_L: float
    q_R: float
    phi: float = 0.0
    lam: Optional[float] = None

    def __post_init__(self):
        if self.lam is None:
            object.__setattr__(self, "lam", calibrate_lambda(self.K))
        for f in fields(self):
            v = getattr(self, f.name)
            if not v >= 0:
                raise ValueError(f"node {f.name} must be >= 0, got {v}")
        if not self.K > 0:
            raise ValueError("node K must be > 0")
        if not self.alpha > 0:
            raise ValueError("node alpha must be > 0")
        if self.q_L > 1 or self.q_R > 1:
            raise ValueError("routing probabilities must be <= 1")

    def replace(self, **changes) -> "NodeParams":
        if "K" in changes and "lam" not in changes:
            changes["lam"] = None
        return replace(self, **changes)


def spreading_rate(node: NodeParams, total):
    """``P(total) = eta (1 - exp(-lambda total))`` for ``total >= 0``."""
    total = np.asarray(total, dtype=float)
    if np.any(total < 0):
        raise ValueError("total density must be >= 0")
    out = node.eta * -np.expm1(-node.lam * total)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class LatticeModel:
    """A linear chain ``0 - 1 - ... - l`` sharing growth, decay and response terms.

    ``full_oxygenation`` must be set for any lymph node to receive oxygen.
    """

    nodes: tuple
    r1: float
    r2: float
    beta: float
    q1: float
    q2: float
    theta: OxygenResponse
    gamma: OxygenResponse
    full_oxygenation: bool = False
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        if len(self.nodes) < 2:
            raise ValueError("a lattice needs the primary site and at least one lymph node")
        for name in ("r1", "r2", "beta", "q1", "q2"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0")
        if abs(self.nodes[0].q_R - 1.0) > 1e-12:
            raise ValueError(f"node 0 must route everything forward (q_R = 1), got {self.nodes[0].q_R}")
        for i, nd in enumerate(self.nodes[1:-1], start=1):
            if abs(nd.q_L + nd.q_R - 1.0) > 1e-12:
                raise ValueError(f"node {i}: q_L + q_R must equal 1, got {nd.q_L + nd.q_R}")
        if not self.full_oxygenation:
            for i, nd in enumerate(self.nodes[1:], start=1):
                if nd.phi != 0:
                    raise ValueError(f"node {i} has phi = {nd.phi} but full_oxygenation is not set")
        arr = lambda attr: np.array([getattr(nd, attr) for nd in self.nodes], dtype=float)
        m = len(self.nodes)
        out_w = np.ones(m)
        out_w[0] = self.nodes[0].q_R
        out_w[-1] = self.nodes[-1].q_L
        right = arr("q_R")
        right[-1] = 0.0  # the terminal node sends nothing further
        left = arr("q_L")
        left[0] = 0.0
        object.__setattr__(self, "_K", arr("K"))
        object.__setattr__(self, "_alpha", arr("alpha"))
        object.__setattr__(self, "_eta", arr("eta"))
        object.__setattr__(self, "_lam", arr("lam"))
        object.__setattr__(self, "_phi", arr("phi"))
        object.__setattr__(self, "_out_w", out_w)
        object.__setattr__(self, "_right_w", right)
        object.__setattr__(self, "_left_w", left)
        # routing matrix: (W @ flux)[i] is the net migration into node i
        W = -np.diag(out_w)
        W[np.arange(1, m), np.arange(m - 1)] += right[:-1]
        W[np.arange(m - 1), np.arange(1, m)] += left[1:]
        object.__setattr__(self, "_routing", W)
        object.__setattr__(self, "_r12", np.array([self.r1, self.r2]))

    @property
    def ell(self) -> int:
        return len(self.nodes) - 1

    @property
    def size(self) -> int:
        return 3 * len(self.nodes)

    def replace(self, **changes) -> "LatticeModel":
        kw = {f.name: getattr(self, f.name) for f in fields(self)}
        kw.update(changes)
        return LatticeModel(**kw)

    def with_nodes(self, **changes) -> "LatticeModel":
        """Apply the same node-level change to every node."""
        return self.replace(nodes=tuple(nd.replace(**changes) for nd in self.nodes))

    def rhs(self, s) -> np.ndarray:
        return rhs_regional(s, self)

    def local_dimensional(self, i: int = 0):
        """Parameters of node ``i`` seen as an isolated local model."""
        from .core import DimensionalParams

        nd = self.nodes[i]
        return DimensionalParams(r1=self.r1, r2=self.r2, K=nd.K, alpha=nd.alpha, phi=nd.phi,
                                 beta=self.beta, q1=self.q1, q2=self.q2,
                                 theta=self.theta, gamma=self.gamma)


@dataclass(frozen=True)
class RegionalState:
    u: np.ndarray
    n: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        for name in ("u", "n", "c"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if not (self.u.shape == self.n.shape == self.c.shape) or self.u.ndim != 1:
            raise ValueError("u, n and c must be 1-D vectors of equal length")
        if min(self.u.min(), self.n.min(), self.c.min()) < 0:
            raise ValueError("regional state must be non-negative")

    def as_array(self) -> np.ndarray:
        return np.stack([self.u, self.n, self.c], axis=-1).reshape(-1)

    @classmethod
    def from_array(cls, s) -> "RegionalState":
        s = np.asarray(s, dtype=float).reshape(-1, 3)
        return cls(s[:, 0], s[:, 1], s[:, 2])


def _nodes_view(s, m: int) -> np.ndarray:
    if isinstance(s, RegionalState):
        s = s.as_array()
    s = np.asarray(s, dtype=float)
    if s.shape[-1] != 3 * m:
        raise ValueError(f"state has {s.shape[-1]} components, lattice needs {3 * m}")
    return s.reshape(s.shape[:-1] + (m, 3))


def transport_terms(u, n, m: LatticeModel):
    """Net migration into every node for uninfected and infected cells.

    ``u`` and ``n`` have the node index on the last axis.  Returns
    ``(du, dn)`` with the same shapes.
    """
    u = np.asarray(u, dtype=float)
    n = np.asarray(n, dtype=float)
    P = m._eta * -np.expm1(-m._lam * (u + n))
    W = m._routing
    return (P * u) @ W.T, (P * n) @ W.T


def rhs_regional(s, m: LatticeModel) -> np.ndarray:
    """Time derivative of a regional state (or a stack of states)."""
    X = _nodes_view(s, len(m.nodes))
    u, n, c = X[..., 0], X[..., 1], X[..., 2]
    un = X[..., :2]
    tot = u + n
    infection = m.theta.rate(c) * n * u / (m._alpha + n)
    P = m._eta * -np.expm1(-m._lam * tot)
    out = np.empty_like(X)
    # logistic growth and migration of both species at once: (..., nodes, 2)
    np.multiply(un, ((1.0 - tot / m._K)[..., None] * m._r12), out=out[..., :2])
    out[..., :2] += m._routing @ (P[..., None] * un)
    out[..., 0] -= infection
    out[..., 1] += infection - m.gamma.rate(c) * n
    out[..., 2] = m._phi - c * (m.beta + m.q1 * u + m.q2 * n)
    return out.reshape(X.shape[:-2] + (3 * len(m.nodes),))


# Tumour-dominant steady state ------------------------------------------------------------


def _check_forward_regime(m: LatticeModel):
    if any(nd.phi != 0 for nd in m.nodes):
        raise ValueError("tumour-dominant state needs phi = 0 at every node")
    if any(nd.q_L != 0 for nd in m.nodes) or any(nd.q_R != 1 for nd in m.nodes[:-1]):
        raise ValueError("tumour-dominant state needs forward-only routing (q_R = 1, q_L = 0)")


def tumour_dominant_regional(m: LatticeModel, scan: int = 2000) -> RegionalState:
    """Virus-free steady state ``(u_i*, 0, 0)`` with forward-only routing and no oxygen supply.

    ``u_0*`` solves ``r1 (1 - u/K_0) = eta_0 p_0(u)`` on ``(0, K_0]``.  Every
    later node balances growth, inflow from its predecessor and its own
    outflow; the root is searched on ``[K_i, 20 K_i]``.
    """
    _check_forward_regime(m)
    nodes = m.nodes
    n0 = nodes[0]
    r1 = m.r1

    def f0(u):
        return r1 * (1.0 - u / n0.K) - n0.eta * -math.expm1(-n0.lam * u)

    if f0(n0.K) > 0:
        raise SteadyStateError(0, "no root of the primary-site balance on (0, K_0]")
    u = [bisect(f0, 0.0, n0.K, xtol=1e-15)]

    for i in range(1, len(nodes)):
        nd, prev = nodes[i], nodes[i - 1]
        inflow = prev.eta * u[i - 1] * -math.expm1(-prev.lam * u[i - 1])
        out = nd.eta if i < len(nodes) - 1 else nd.q_L * nd.eta

        def g(x, nd=nd, inflow=inflow, out=out):
            return r1 * x * (1.0 - x / nd.K) + inflow - out * x * -np.expm1(-nd.lam * x)

        grid = np.linspace(nd.K, 20.0 * nd.K, scan + 1)
        vals = g(grid)
        if vals[0] == 0.0:
            u.append(float(nd.K))
            continue
        idx = np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)
        if idx.size == 0:
            raise SteadyStateError(i, f"no root of the balance equation on [K_{i}, 20 K_{i}]")
        k = idx[0]
        u.append(bisect(lambda x: float(g(x)), grid[k], grid[k + 1], xtol=1e-15, flo=vals[k]))

    u = np.array(u)
    z = np.zeros_like(u)
    return RegionalState(u, z, z.copy())


# Linearization and the Gershgorin certificate --------------------------------------------


def regional_jacobian(s, m: LatticeModel, rel_step: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian of :func:`rhs_regional`.

    Component ``k`` is perturbed by ``rel_step * max(1, |s_k|)``.
    """
    y = s.as_array() if isinstance(s, RegionalState) else np.asarray(s, dtype=float)
    dim = y.size
    if dim > MAX_DIM:
        raise ValueError(f"Jacobian dimension {dim} exceeds {MAX_DIM}")
    steps = rel_step * np.maximum(1.0, np.abs(y))
    E = np.diag(steps)
    fp = rhs_regional(y[None, :] + E, m)
    fm = rhs_regional(y[None, :] - E, m)
    return ((fp - fm) / (2.0 * steps[:, None])).T


@dataclass
class CertificateReport:
    """Outcome of the three-part sufficient condition for stability of ``E_u``.

    ``cond1_margin`` and friends are ``lhs - rhs`` of each inequality written
    as ``lhs > rhs``; an inequality counts as satisfied only when its margin
    exceeds ``CERT_RTOL`` times the size of its terms.
    """

    state: RegionalState
    cond1: bool
    cond2: list
    cond3: list
    cond1_margin: float
    cond2_margin: list
    cond3_margin: list
    discs: list = field(default_factory=list)
    discs_negative: bool = False
    max_real_eigenvalue: float = math.nan
    theta0: float = math.nan
    gamma0: float = math.nan

    @property
    def certified(self) -> bool:
        return self.cond1 and all(self.cond2) and all(self.cond3)

    @property
    def worst_disc(self) -> Optional[GershgorinDisc]:
        return max(self.discs, key=lambda d: d.rightmost) if self.discs else None

    def lines(self) -> list[str]:
        out = [f"u* = {', '.join(f'{v:.10g}' for v in self.state.u)}",
               f"theta(0) = {self.theta0:.6g}, gamma(0) = {self.gamma0:.6g}",
               f"cond1 (primary spreading speed): {self.cond1} (margin {self.cond1_margin:.6g})"]
        for i, (ok, mg) in enumerate(zip(self.cond2, self.cond2_margin), start=1):
            out.append(f"cond2 node {i} (capacity bound): {ok} (margin {mg:.6g})")
        for i, (ok, mg) in enumerate(zip(self.cond3, self.cond3_margin), start=1):
            out.append(f"cond3 node {i} (death rate bound): {ok} (margin {mg:.6g})")
        out.append(f"certified: {self.certified}")
        w = self.worst_disc
        if w is not None:
            out.append(f"gershgorin discs in open left half-plane: {self.discs_negative} "
                       f"(rightmost edge {w.rightmost:.6g})")
        out.append(f"max real eigenvalue: {self.max_real_eigenvalue:.6g}")
        return out


def _holds(lhs: float, rhs: float, scale: float) -> tuple[bool, float]:
    margin = lhs - rhs
    return bool(margin > CERT_RTOL * max(abs(lhs), abs(rhs), scale)), float(margin)


def prop5_certificate(m: LatticeModel, with_spectrum: bool = True) -> CertificateReport:
    """Evaluate the sufficient conditions for local stability of ``E_u``.

    1. ``eta_0 p_0(u_0*) > r1 (1 - u_0*/K_0) + theta_0 u_0*/alpha_0``
    2. ``K_i`` below both ``(10 eta_{i-1}/(7 eta_i)) u_{i-1}* p_{i-1}(u_{i-1}*)``
       and ``r1 u_i* / (r1 + theta_0 u_i*/alpha_i + eta_{i-1}[p_{i-1} + 2 lambda_{i-1} u_{i-1}* e^{-lambda_{i-1} u_{i-1}*}])``
    3. ``gamma_0 > theta_0 u_i*/alpha_i + eta_{i-1} p_{i-1}(u_{i-1}*)``

    ``theta_0``/``gamma_0`` are the responses at zero oxygen.  Condition 1 is
    tested in its multiplied-out form, which is equivalent because
    ``p_0(u_0*) > 0``.  With ``with_spectrum`` the report also carries the
    Gershgorin discs and eigenvalues of the finite-difference Jacobian at
    ``E_u``.
    """
    E = tumour_dominant_regional(m)
    u = E.u
    nodes = m.nodes
    r1 = m.r1
    th0 = float(m.theta.rate(0.0))
    ga0 = float(m.gamma.rate(0.0))
    p = [-math.expm1(-nd.lam * ui) for nd, ui in zip(nodes, u)]

    n0 = nodes[0]
    growth0 = r1 * (1.0 - u[0] / n0.K)
    c1, m1 = _holds(n0.eta * p[0], growth0 + th0 * u[0] / n0.alpha, r1)

    c2, m2, c3, m3 = [], [], [], []
    for i in range(1, len(nodes)):
        nd, prev = nodes[i], nodes[i - 1]
        spread_prev = prev.eta * (p[i - 1] + 2.0 * prev.lam * u[i - 1] * math.exp(-prev.lam * u[i - 1]))
        bound_a = (10.0 * prev.eta / (7.0 * nd.eta)) * u[i - 1] * p[i - 1] if nd.eta > 0 else math.inf
        bound_b = r1 * u[i] / (r1 + th0 * u[i] / nd.alpha + spread_prev)
        ok, mg = _holds(min(bound_a, bound_b), nd.K, nd.K)
        c2.append(ok)
        m2.append(mg)
        ok, mg = _holds(ga0, th0 * u[i] / nd.alpha + prev.eta * p[i - 1], r1)
        c3.append(ok)
        m3.append(mg)

    rep = CertificateReport(E, c1, c2, c3, m1, m2, m3, theta0=th0, gamma0=ga0)
    if with_spectrum:
        J = regional_jacobian(E, m)
        rep.discs = gershgorin_discs(J)
        rep.discs_negative = bool(discs_all_negative(rep.discs))
        rep.max_real_eigenvalue = float(np.max(eigenvalues(J).real))
    return rep


# Presets -------------------------------------------------------------------------------


def chain_lattice(theta: OxygenResponse, gamma: OxygenResponse, ell: int = 3, eta: float = 2e-4,
                     q_L: float = 0.05, q_R: float = 0.95, phi0: float = 1e4,
                     node_phi: float = 0.0, name: str = "") -> LatticeModel:
    """Chain with the primary site from the parameter table and scaled lymph nodes.

    Lymph nodes get ``K = K_0/10`` and ``alpha = alpha_0/10``; every node has
    spreading speed ``eta``.  The primary site routes everything forward.
    """
    K0, a0 = DEFAULT_PARAMS.K, DEFAULT_PARAMS.alpha
    nodes = [NodeParams(K=K0, alpha=a0, eta=eta, q_L=0.0, q_R=1.0, phi=phi0)]
    for _ in range(ell):
        nodes.append(NodeParams(K=K0 / 10, alpha=a0 / 10, eta=eta, q_L=q_L, q_R=q_R, phi=node_phi))
    return LatticeModel(nodes=tuple(nodes), r1=DEFAULT_PARAMS.r1, r2=DEFAULT_PARAMS.r2, beta=DEFAULT_PARAMS.beta,
                        q1=DEFAULT_PARAMS.q1, q2=0.5 * DEFAULT_PARAMS.q1, theta=theta, gamma=gamma,
                        full_oxygenation=node_phi != 0, name=name)


def forward_only(m: LatticeModel) -> LatticeModel:
    """Same lattice with pure forward routing and no oxygen supply anywhere."""
    nodes = tuple(nd.replace(q_L=0.0, q_R=1.0, phi=0.0) for nd in m.nodes)
    return m.replace(nodes=nodes, full_oxygenation=False)


THETA_BASE = Sigmoid(0.005115, 2.115, 0.016)
GAMMA_BASE = Sigmoid(0.1, 0.9, 0.08)
THETA_FIG10 = Sigmoid(0.005115, 1.0, 0.08)
GAMMA_FIG10 = Sigmoid(0.1, 0.9, 0.08)

LATTICE_PRESETS = {
    "baseline": dict(theta=THETA_BASE, gamma=GAMMA_BASE),
    "fig10": dict(theta=THETA_FIG10, gamma=GAMMA_FIG10),
    "fig11": dict(theta=Sigmoid(0.05115, 2.115, 0.016), gamma=Constant(0.005115)),
    "fig14": dict(theta=THETA_FIG10, gamma=GAMMA_FIG10, node_phi=1e4),
}


def lattice_preset(name: str, **overrides) -> LatticeModel:
    """Named lattice: ``baseline``, ``fig10``, ``fig11``, ``fig14`` or ``forward``.

    ``forward`` is the baseline lattice with forward-only routing and no
    oxygen supply, the regime of the stability certificate.
    """
    if name == "forward":
        return forward_only(lattice_preset("baseline", **overrides)).replace(name="forward")
    if name not in LATTICE_PRESETS:
        raise KeyError(f"unknown lattice preset {name!r}; choose from {sorted(LATTICE_PRESETS) + ['forward']}")
    kw = dict(LATTICE_PRESETS[name])
    kw.update(overrides)
    return chain_lattice(name=name, **kw)


def default_initial_state(m: LatticeModel, u0: float = INITIAL_U, n0: float = INITIAL_N,
                          c0: float = INITIAL_C, c_nodes: float = LYMPH_NODE_C0) -> RegionalState:
    """Tumour and virus at the primary site only; lymph nodes start empty but oxygenated."""
    k = len(m.nodes)
    u = np.zeros(k)
    n = np.zeros(k)
    c = np.full(k, c_nodes)
    u[0], n[0], c[0] = u0, n0, c0
    return RegionalState(u, n, c)
