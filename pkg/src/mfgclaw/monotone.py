"""Sampled checks of the monotonicity condition ``d_sigma Sigma0 <= c0 < 1``
and of its anti-monotone mirror ``d_sigma Sigma0 >= c0 > 1``."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .equilibrium import sigma_map
from .errors import NonDifferentiableSigma0, PresetRequired
from .hjb import dsigma_optimal_points, optimal_points, sensitivity_matrices
from .measure import EmpiricalMeasure
from .model import GameModel

FD_STEP = 1e-5


def _require_differentiable(model):
    if not model.sigma0.differentiable:
        raise NonDifferentiableSigma0("sigma0 has jumps; Sigma0 is not differentiable in sigma")


def dsigma_chain(model: GameModel, sigma, t, m: EmpiricalMeasure):
    """Chain-rule value ``int D_m sigma0(m_{t,sigma})(x*) . d_sigma x* dm``,
    vectorized over ``sigma``."""
    _require_differentiable(model)
    sig = np.asarray(sigma, dtype=float)
    flat = sig.reshape(-1)
    X = np.broadcast_to(m.atoms, (flat.size,) + m.atoms.shape)
    S = np.broadcast_to(flat[:, None], X.shape[:-1])
    Y, _, _ = optimal_points(model, t, X, S)
    dx = dsigma_optimal_points(model, t, X, S, Y=Y)
    grad = model.sigma0.gradient_atoms(Y, m.weights)
    out = np.einsum("kn,n->k", np.sum(grad * dx, axis=-1), m.weights).reshape(sig.shape)
    return out if out.ndim else float(out)


def dsigma_fd(model: GameModel, sigma, t, m: EmpiricalMeasure, h=FD_STEP):
    _require_differentiable(model)
    sig = np.asarray(sigma, dtype=float)
    step = h * np.maximum(1.0, np.abs(sig))
    out = (np.asarray(sigma_map(model, sig + step, t, m)) - np.asarray(sigma_map(model, sig - step, t, m))) / (2 * step)
    return out if np.ndim(out) else float(out)


def dsigma_sigma_map(model: GameModel, sigma, t, m: EmpiricalMeasure, method="chain"):
    """``d_sigma Sigma0`` by ``"chain"`` (chain rule), ``"fd"`` (central
    difference) or ``"both"`` (returns the pair)."""
    if method == "chain":
        return dsigma_chain(model, sigma, t, m)
    if method == "fd":
        return dsigma_fd(model, sigma, t, m)
    if method == "both":
        return dsigma_chain(model, sigma, t, m), dsigma_fd(model, sigma, t, m)
    raise ValueError(f"unknown method {method!r}")


def preset_case(model: GameModel) -> int:
    """1 for ``int psi`` with ``g = phi G(sigma)``, 2 for ``G(int psi)`` with ``g = phi sigma``."""
    if model.cost.kind != "separable":
        raise PresetRequired("pointwise criterion needs a separable terminal cost phi(x) G(sigma)")
    if model.sigma0.kind == "moment":
        return 1
    if model.sigma0.kind == "composed":
        return 2
    raise PresetRequired(f"pointwise criterion undefined for sigma0 kind {model.sigma0.kind!r}")


def pointwise_criterion(model: GameModel, y, t, sigma, s=None):
    """``Dpsi(y) . G'(.) M(t, y, sigma) Dphi(y)``.

    In the first case ``G'`` is the cost factor's derivative at ``sigma``; in
    the second it is the derivative of the outer function of ``sigma_0`` at
    the inner moment ``s`` (required).  ``y`` has shape ``(..., d)``.
    """
    case = preset_case(model)
    Y = np.asarray(y, dtype=float)
    if Y.ndim == 0:
        Y = Y.reshape(1)
    S = np.broadcast_to(np.asarray(sigma, dtype=float), Y.shape[:-1])
    M = sensitivity_matrices(model, t, Y, S)
    dphi = model.cost.dphi(Y)
    dpsi = model.sigma0.dpsi(Y)
    core = np.einsum("...i,...ij,...j->...", dpsi, M, dphi)
    if case == 1:
        gain = np.asarray(model.cost.dG(S))
    else:
        if s is None:
            raise PresetRequired("the composed case needs the inner moment s")
        gain = np.asarray(model.sigma0.dG(np.asarray(s, dtype=float)))
    out = gain * core
    return out if np.ndim(out) else float(out)


@dataclass
class MonotonicityReport:
    sup_dSigma0: float
    inf_dSigma0: float
    verdict: str
    c0: float | None
    samples: int
    pointwise_criterion_sup: float | None
    pointwise_criterion_inf: float | None
    sigma_grid: list
    t_grid: list
    measures: list = field(repr=False)
    values: list = field(repr=False)
    method: str = "chain"

    def to_dict(self) -> dict:
        return {
            "sup_dSigma0": self.sup_dSigma0,
            "inf_dSigma0": self.inf_dSigma0,
            "verdict": self.verdict,
            "c0": self.c0,
            "samples": self.samples,
            "pointwise_criterion_sup": self.pointwise_criterion_sup,
            "pointwise_criterion_inf": self.pointwise_criterion_inf,
            "method": self.method,
            "sigma_grid": self.sigma_grid,
            "t_grid": self.t_grid,
            "measures": self.measures,
            "values": self.values,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def default_grids(model: GameModel, T=1.0, n_sigma=41, n_t=21, n_measures=10, n_atoms=8, seed=0):
    lo, hi = model.sigma0.value_range()
    pad = 0.1 * (hi - lo if hi > lo else 1.0)
    sigma_grid = np.linspace(lo - pad, hi + pad, n_sigma)
    t_grid = np.linspace(0.0, T, n_t)
    rng = np.random.default_rng(seed)
    measures = [
        EmpiricalMeasure(rng.normal(size=(n_atoms, model.dim)), rng.dirichlet(np.ones(n_atoms)))
        for _ in range(n_measures)
    ]
    return sigma_grid, t_grid, measures


def _verdict(sup, inf, c0):
    if c0 is None:
        if sup < 1:
            return "MONOTONE", sup
        if inf > 1:
            return "ANTI_MONOTONE", inf
        return "NEITHER", None
    if c0 < 1 and sup <= c0:
        return "MONOTONE", c0
    if c0 > 1 and inf >= c0:
        return "ANTI_MONOTONE", c0
    return "NEITHER", c0


def check_monotonicity(model: GameModel, sigma_grid=None, t_grid=None, measures=None,
                       c0=None, T=1.0, seed=0, method="auto") -> MonotonicityReport:
    """Sample ``d_sigma Sigma0`` over ``sigma_grid x t_grid x measures``.

    With ``c0 < 1`` the verdict is MONOTONE when every sample is at most
    ``c0``; with ``c0 > 1`` it is ANTI_MONOTONE when every sample is at least
    ``c0``.  Without ``c0`` the sampled sup (or inf) is used as the constant.
    For separable presets the pointwise criterion is also evaluated at every
    image point as a sufficient certificate.
    """
    _require_differentiable(model)
    dg, dt_, dm = default_grids(model, T=T, seed=seed)
    sigma_grid = dg if sigma_grid is None else np.asarray(sigma_grid, dtype=float)
    t_grid = dt_ if t_grid is None else np.asarray(t_grid, dtype=float)
    measures = dm if measures is None else list(measures)
    if sigma_grid.size == 0 or t_grid.size == 0 or not measures:
        raise ValueError("monotonicity grids must be non-empty")
    if method == "auto":
        method = "chain"
    fn = dsigma_chain if method == "chain" else dsigma_fd

    try:
        case = preset_case(model)
    except PresetRequired:
        case = None
    values = np.empty((len(measures), t_grid.size, sigma_grid.size))
    crit_sup, crit_inf = -np.inf, np.inf
    for i, m in enumerate(measures):
        for j, t in enumerate(t_grid):
            values[i, j] = fn(model, sigma_grid, float(t), m)
            if case is not None:
                X = np.broadcast_to(m.atoms, (sigma_grid.size,) + m.atoms.shape)
                S = np.broadcast_to(sigma_grid[:, None], X.shape[:-1])
                Y, _, _ = optimal_points(model, float(t), X, S)
                inner = None
                if case == 2:
                    inner = (np.asarray(model.sigma0.psi(Y)) @ m.weights)[:, None]
                c = pointwise_criterion(model, Y, float(t), S, s=inner)
                crit_sup = max(crit_sup, float(np.max(c)))
                crit_inf = min(crit_inf, float(np.min(c)))
    sup, inf = float(values.max()), float(values.min())
    verdict, c_used = _verdict(sup, inf, c0)
    return MonotonicityReport(
        sup_dSigma0=sup,
        inf_dSigma0=inf,
        verdict=verdict,
        c0=c_used,
        samples=int(values.size),
        pointwise_criterion_sup=None if case is None else crit_sup,
        pointwise_criterion_inf=None if case is None else crit_inf,
        sigma_grid=sigma_grid.tolist(),
        t_grid=t_grid.tolist(),
        measures=[{"atoms": m.atoms.tolist(), "weights": m.weights.tolist()} for m in measures],
        values=values.tolist(),
        method=method,
    )
