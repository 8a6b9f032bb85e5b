"""Fixed-point formulation of the equilibrium problem.

A Nash equilibrium at time horizon ``t`` for an initial measure ``m`` is a
root of ``rho(sigma) = sigma - Sigma0(sigma, t, m)`` where ``Sigma0``
evaluates ``sigma_0`` on the image of ``m`` under the optimal-point map.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import (
    AmbiguousEquilibrium,
    BadScan,
    NewtonDiverged,
    NoEquilibrium,
    StencilCrossesSingularity,
)
from .hjb import hopf_lax_value, hopf_lax_values, optimal_points
from .measure import EmpiricalMeasure
from .model import GameModel

ROOT_TOL = 1e-8
BISECT_TOL = 1e-10
DISTINCT_TOL = 1e-6
H_FD = 1e-4


def sigma_map(model: GameModel, sigma, t, m: EmpiricalMeasure):
    """``Sigma0(sigma, t, m)``, vectorized over ``sigma``."""
    sig = np.asarray(sigma, dtype=float)
    flat = sig.reshape(-1)
    X = np.broadcast_to(m.atoms, (flat.size,) + m.atoms.shape)
    S = np.broadcast_to(flat[:, None], X.shape[:-1])
    try:
        Y, _, _ = optimal_points(model, t, X, S)
    except NewtonDiverged as exc:
        atom = None if exc.atom is None else exc.atom % m.size
        raise NewtonDiverged(f"{exc} (atom {atom})", atom=atom) from exc
    out = np.asarray(model.sigma0.evaluate_atoms(Y, m.weights), dtype=float).reshape(sig.shape)
    return out if out.ndim else float(out)


def rho(model, sigma, t, m):
    return np.asarray(sigma, dtype=float) - sigma_map(model, sigma, t, m)


@dataclass(frozen=True)
class Root:
    sigma: float
    residual: float
    dSigma0: float
    at_discontinuity: bool = False


@dataclass
class EquilibriumReport:
    roots: list
    jump_crossings: list
    classification: str
    scan_range: tuple
    t: float
    mean: list
    measure_id: str
    n_scan: int
    warnings: list = field(default_factory=list)

    @property
    def sigmas(self) -> list:
        return [r.sigma for r in self.roots]

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "mean": list(self.mean),
            "measure_id": self.measure_id,
            "scan_range": list(self.scan_range),
            "n_scan": self.n_scan,
            "roots": [asdict(r) for r in self.roots],
            "jump_crossings": [list(j) for j in self.jump_crossings],
            "classification": self.classification,
            "warnings": list(self.warnings),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def default_sigma_range(model: GameModel, pad=0.1):
    lo, hi = model.sigma0.value_range()
    width = hi - lo if hi > lo else 1.0
    return lo - pad * width, hi + pad * width


def find_equilibria(model: GameModel, t, m: EmpiricalMeasure, sigma_range=None,
                    n_scan=2001) -> EquilibriumReport:
    """All roots of ``rho`` visible on a uniform scan of ``sigma_range``.

    Every sign change is bisected to width ``1e-10`` and polished by a secant
    step.  A bracket whose residual does not vanish is a jump of ``Sigma0``
    crossing the diagonal; it is reported separately and produces a root
    only if one of the two one-sided limits is a fixed point.
    """
    if n_scan < 3:
        raise BadScan(f"scan needs at least 3 points, got {n_scan}")
    notes = []
    if sigma_range is None:
        sigma_range = default_sigma_range(model)
    else:
        try:
            lo_r, hi_r = model.sigma0.value_range()
            if sigma_range[0] > lo_r or sigma_range[1] < hi_r:
                msg = f"scan range {sigma_range} does not cover the range of sigma0 [{lo_r}, {hi_r}]"
                warnings.warn(msg, stacklevel=2)
                notes.append(msg)
        except Exception:
            pass
    a, b = (float(v) for v in sigma_range)
    if not a < b:
        raise BadScan(f"empty scan range [{a}, {b}]")
    grid = np.linspace(a, b, n_scan)
    r = rho(model, grid, t, m)

    candidates = []
    for i in np.flatnonzero(r == 0.0):
        candidates.append((grid[i], grid[i]))
    idx = np.flatnonzero(r[:-1] * r[1:] < 0)
    lo, hi = grid[idx].copy(), grid[idx + 1].copy()
    rlo = r[idx].copy()
    while idx.size and np.max(hi - lo) > BISECT_TOL:
        mid = 0.5 * (lo + hi)
        rm = rho(model, mid, t, m)
        left = np.sign(rm) == np.sign(rlo)
        lo = np.where(left, mid, lo)
        rlo = np.where(left, rm, rlo)
        hi = np.where(left, hi, mid)
        zero = rm == 0
        lo = np.where(zero, mid, lo)
        hi = np.where(zero, mid, hi)
    candidates.extend(zip(lo, hi))

    roots, jumps = [], []
    for blo, bhi in candidates:
        sig = _polish(model, t, m, blo, bhi)
        res = abs(float(rho(model, sig, t, m)))
        if res <= ROOT_TOL:
            roots.append(Root(float(sig), res, _dsigma_fd(model, t, m, sig)))
            continue
        jumps.append((float(blo), float(bhi)))
        # a jump crossing is still an equilibrium if a one-sided limit is fixed
        for side in (blo, bhi):
            lim = float(sigma_map(model, side, t, m))
            if abs(sig - lim) <= ROOT_TOL:
                roots.append(Root(float(sig), abs(sig - lim), 0.0, at_discontinuity=True))
                break

    roots.sort(key=lambda q: q.sigma)
    unique = []
    for q in roots:
        if not unique or q.sigma - unique[-1].sigma > DISTINCT_TOL:
            unique.append(q)
    cls = "NONE" if not unique else "UNIQUE" if len(unique) == 1 else "MULTIPLE"
    return EquilibriumReport(unique, jumps, cls, (a, b), float(t),
                             [float(v) for v in m.mean], m.fingerprint(), int(n_scan), notes)


def _polish(model, t, m, lo, hi):
    if lo == hi:
        return lo
    rl, rh = (float(v) for v in rho(model, np.array([lo, hi]), t, m))
    best = lo if abs(rl) <= abs(rh) else hi
    best_r = min(abs(rl), abs(rh))
    if rh != rl:
        c = hi - rh * (hi - lo) / (rh - rl)
        if lo <= c <= hi:
            rc = abs(float(rho(model, c, t, m)))
            if rc < best_r:
                best = c
    return float(best)


def _dsigma_fd(model, t, m, sig, h=H_FD):
    step = h * max(1.0, abs(sig))
    vals = sigma_map(model, np.array([sig - step, sig + step]), t, m)
    return float((vals[1] - vals[0]) / (2 * step))


def verify_nash(model: GameModel, t, m: EmpiricalMeasure, sigma_star, tol=ROOT_TOL,
                return_details=False):
    """Check that ``sigma_star`` is a Nash equilibrium for ``(t, m)``.

    Two things are checked: the image measure reproduces ``sigma_star``,
    and every image point attains the Hopf-Lax minimum (compared with
    perturbed candidates at several scales).  Returns ``(ok, residual)``
    where ``residual = |sigma_star - sigma0(image)|``.
    """
    s = float(sigma_star)
    details = {"fixed_point_residual": np.inf, "optimality_gap": np.inf}
    if not np.isfinite(s):
        return (False, float("inf"), details) if return_details else (False, float("inf"))
    X = m.atoms
    Y, _, res = optimal_points(model, t, X, s)
    image = float(model.sigma0.evaluate_atoms(Y, m.weights))
    residual = abs(s - image)
    gap = 0.0
    if t > 0:
        def obj(Z):
            return t * model.hamiltonian.L((X[:, None, :] - Z) / t) + model.cost.g(Z, s)

        base = obj(Y[:, None, :])[:, 0]
        d = X.shape[1]
        dirs = np.concatenate([np.eye(d), -np.eye(d)])
        scales = np.array([1e-4, 1e-2, 1e-1, 1.0])
        trial = Y[:, None, :] + (scales[:, None, None] * dirs[None]).reshape(-1, d)[None]
        gap = float(np.max(base - obj(trial).min(axis=1)))
        gap = max(gap, 0.0)
    details = {"fixed_point_residual": residual, "optimality_gap": gap,
               "newton_residual": float(np.max(res)), "image_sigma": image}
    ok = residual <= tol and gap <= tol
    return (ok, residual, details) if return_details else (ok, residual)


def master_field(model: GameModel, t, x, m: EmpiricalMeasure, root_index=None,
                 report: EquilibriumReport | None = None, **scan) -> float:
    """``u(t, x, m) = v(t, x, sigma(t, m))``.

    When the equilibrium is not unique the caller must say which root to
    use; there is no default choice.
    """
    sig = equilibrium_sigma(model, t, m, root_index=root_index, report=report, **scan)
    return hopf_lax_value(model, t, x, sig)


def equilibrium_sigma(model, t, m, root_index=None, report=None, **scan) -> float:
    rep = report if report is not None else find_equilibria(model, t, m, **scan)
    if rep.classification == "NONE":
        raise NoEquilibrium(f"no equilibrium at t={t}, mean={rep.mean}")
    if rep.classification == "MULTIPLE" and root_index is None:
        raise AmbiguousEquilibrium(
            f"{len(rep.roots)} equilibria at t={t}; pass root_index to choose one"
        )
    return rep.roots[0 if root_index is None else root_index].sigma


def _stencil_sigma(model, t, m, **scan):
    rep = find_equilibria(model, t, m, **scan)
    if rep.classification != "UNIQUE":
        raise StencilCrossesSingularity(
            f"equilibrium is {rep.classification} at t={t}, mean={rep.mean}"
        )
    return rep.roots[0].sigma


def _uniform(atoms):
    atoms = np.asarray(atoms, dtype=float)
    if atoms.ndim == 1:
        atoms = atoms[:, None]
    return atoms, EmpiricalMeasure.uniform(atoms)


def _time_derivative(fn, t, h):
    if t >= h:
        return (fn(t + h) - fn(t - h)) / (2 * h)
    # one-sided second-order stencil near t = 0
    return (-3 * fn(t) + 4 * fn(t + h) - fn(t + 2 * h)) / (2 * h)


def nplayer_residual(model: GameModel, t, atoms, h_fd=H_FD, **scan) -> float:
    """Residual of the projected equation for ``sigma_N(t, x_1..x_N)``.

    For a linear terminal cost this is the divergence form
    ``d_t sigma_N + div F_N(sigma_N)`` with ``F' = DH o f``; otherwise the
    transport form ``d_t sigma_N + sum_i D_{x_i} sigma_N . DH(D_x v(t, x_i))``
    is used.  All derivatives are central differences with step ``h_fd``.
    """
    X, m = _uniform(atoms)
    N, d = X.shape
    sig_fn = lambda tt, XX: _stencil_sigma(model, tt, EmpiricalMeasure.uniform(XX), **scan)
    dt = _time_derivative(lambda tt: sig_fn(tt, X), float(t), h_fd)
    sig = sig_fn(float(t), X)
    total = dt
    if model.cost.kind == "linear":
        flux = _vector_primitive(model)
    for i in range(N):
        for j in range(d):
            step = h_fd * max(1.0, abs(X[i, j]))
            Xp, Xm = X.copy(), X.copy()
            Xp[i, j] += step
            Xm[i, j] -= step
            sp, sm = sig_fn(t, Xp), sig_fn(t, Xm)
            if model.cost.kind == "linear":
                total += (flux(sp)[j] - flux(sm)[j]) / (2 * step)
            else:
                y = optimal_points(model, t, X[i][None], sig)[0][0]
                vel = model.hamiltonian.DH(model.cost.grad(y, sig))
                total += (sp - sm) / (2 * step) * vel[j]
    return float(abs(total))


def _vector_primitive(model):
    """``F: R -> R^d`` with ``F' = DH(f(s))``."""
    flux = model.flux
    if flux is not None:
        return lambda s: float(flux.F(s)) * flux.zeta
    from scipy import integrate

    def F(s):
        d = model.dim
        return np.array([
            integrate.quad(lambda u: float(model.hamiltonian.DH(model.cost.f(np.asarray(u)))[..., j]),
                           0.0, s, epsabs=1e-13, epsrel=1e-13)[0]
            for j in range(d)
        ])
    return F


def master_residual(model: GameModel, t, x, atoms, h_fd=H_FD, **scan) -> float:
    """Finite-difference residual of the master equation at ``(t, x, m^N)``.

    ``D_m u(m^N)(x_i)`` is taken as ``N D_{x_i} u_N``, so the nonlocal term is
    ``sum_i D_{x_i} u_N . DH(D_x u(t, x_i, m^N))``.
    """
    X, m = _uniform(atoms)
    N, d = X.shape
    x = np.atleast_1d(np.asarray(x, dtype=float))
    t = float(t)

    cache = {}

    def u(tt, xx, XX):
        key = (tt, XX.tobytes())
        if key not in cache:
            cache[key] = _stencil_sigma(model, tt, EmpiricalMeasure.uniform(XX), **scan)
        s = cache[key]
        return float(hopf_lax_values(model, tt, np.asarray(xx)[None], s)[0])

    def grad_x(tt, xx, XX):
        g = np.empty(d)
        for j in range(d):
            step = h_fd * max(1.0, abs(xx[j]))
            e = np.zeros(d)
            e[j] = step
            g[j] = (u(tt, xx + e, XX) - u(tt, xx - e, XX)) / (2 * step)
        return g

    total = _time_derivative(lambda tt: u(tt, x, X), t, h_fd)
    total += float(model.hamiltonian.H(grad_x(t, x, X)))
    for i in range(N):
        vel = model.hamiltonian.DH(grad_x(t, X[i], X))
        for j in range(d):
            step = h_fd * max(1.0, abs(X[i, j]))
            Xp, Xm = X.copy(), X.copy()
            Xp[i, j] += step
            Xm[i, j] -= step
            total += (u(t, x, Xp) - u(t, x, Xm)) / (2 * step) * vel[j]
    return float(abs(total))
