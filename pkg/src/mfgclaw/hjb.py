"""Value function, optimal initial points and their sensitivity in sigma.

For a fixed parameter ``sigma`` the control problem is a Hamilton-Jacobi
equation with terminal data ``g(., sigma)``.  Its Hopf-Lax minimizer
``x*`` solves ``x* + t DH(D_x g(x*, sigma)) = x``; everything below is
built on that implicit equation.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import MinimizationFailed, NewtonDiverged, SingularSensitivity
from .model import GameModel

RESIDUAL_TOL = 1e-10
MAX_NEWTON = 100
COND_LIMIT = 1e14


@dataclass(frozen=True)
class OptimalPointResult:
    x_star: np.ndarray
    value: float
    jacobian_dx: np.ndarray
    newton_iterations: int
    residual: float


def _residual(model, t, Y, X, S):
    p = model.cost.grad(Y, S)
    return Y + t * model.hamiltonian.DH(p) - X


def _jacobian(model, t, Y, S):
    d = Y.shape[-1]
    p = model.cost.grad(Y, S)
    return np.eye(d) + t * model.hamiltonian.D2H(p) @ model.cost.hess(Y, S)


def _check_conditioning(J):
    cond = np.linalg.cond(J.reshape(-1, J.shape[-2], J.shape[-1]))
    bad = ~np.isfinite(cond) | (cond > COND_LIMIT)
    if bad.any():
        raise SingularSensitivity(
            f"I + t D2H D2g is singular (condition number {np.max(cond):.3g})"
        )


def optimal_points(model: GameModel, t, X, sigma, tol=RESIDUAL_TOL, max_iter=MAX_NEWTON):
    """Batched optimal initial points.

    ``X`` has shape ``(..., d)`` and ``sigma`` broadcasts against ``X[..., 0]``.
    Returns ``(x_star, iterations, residual)`` where ``residual`` is the
    norm of the implicit-equation residual per point.
    """
    t = float(t)
    X = np.asarray(X, dtype=float)
    S = np.broadcast_to(np.asarray(sigma, dtype=float), X.shape[:-1])
    if t == 0.0:
        return X.copy(), 0, np.zeros(X.shape[:-1])
    if model.cost.kind == "linear":
        Y = X - t * model.hamiltonian.DH(model.cost.f(S))
        res = np.linalg.norm(_residual(model, t, Y, X, S), axis=-1)
        return Y, 0, res

    Y = X.copy()
    r = _residual(model, t, Y, X, S)
    rn = np.linalg.norm(r, axis=-1)
    scale = 1.0 + np.linalg.norm(X, axis=-1)
    it = 0
    # iterate a little past the tolerance so the reported residual has headroom
    target = 1e-3 * tol * scale
    while it < max_iter and np.any(rn > target):
        it += 1
        J = _jacobian(model, t, Y, S)
        _check_conditioning(J)
        step = -np.linalg.solve(J, r[..., None])[..., 0]
        lam = np.ones(rn.shape)
        active = rn > target
        for _ in range(40):
            Yn = Y + lam[..., None] * step
            rnew = _residual(model, t, Yn, X, S)
            rnn = np.linalg.norm(rnew, axis=-1)
            ok = ~active | (rnn < rn) | (rnn <= target)
            if ok.all():
                break
            lam = np.where(ok, lam, 0.5 * lam)
        improved = active & (rnn < rn)
        Y = np.where(improved[..., None], Yn, Y)
        r = np.where(improved[..., None], rnew, r)
        rn = np.where(improved, rnn, rn)
        if not improved.any():
            break
    failed = rn > tol * scale
    if failed.any():
        Y, rn = _fallback(model, t, X, S, Y, rn, failed, tol * scale)
    return Y, it, rn


def _fallback(model, t, X, S, Y, rn, failed, limits):
    """Direct minimization of the Hopf-Lax objective for stubborn points."""
    Y = Y.copy()
    rn = rn.copy()
    flatY = Y.reshape(-1, Y.shape[-1])
    flatX = X.reshape(-1, X.shape[-1])
    flatS = S.reshape(-1)
    flatR = rn.reshape(-1)
    lim = np.broadcast_to(limits, rn.shape).reshape(-1)
    for k in np.flatnonzero(failed.reshape(-1)):
        x, s = flatX[k], flatS[k]

        def obj(y):
            y = np.atleast_1d(y)
            return float(t * model.hamiltonian.L((x - y) / t) + model.cost.g(y, s))

        if x.size == 1:
            width = 1.0 + abs(x[0]) + abs(flatY[k, 0] - x[0])
            sol = optimize.minimize_scalar(obj, bracket=(x[0] - width, x[0], x[0] + width))
            y = np.array([sol.x])
        else:
            grid = x + np.linspace(-3, 3, 13)[:, None] * (1 + np.linalg.norm(x))
            start = grid[np.argmin([obj(g) for g in grid])]
            y = optimize.minimize(obj, start, method="BFGS", options={"gtol": 1e-12}).x
        # one more Newton polish from the minimizer
        for _ in range(20):
            r = _residual(model, t, y, x, s)
            if np.linalg.norm(r) <= 1e-3 * lim[k]:
                break
            J = _jacobian(model, t, y, s)
            y = y - np.linalg.solve(J, r)
        res = float(np.linalg.norm(_residual(model, t, y, x, s)))
        if not np.isfinite(res) or res > lim[k]:
            raise NewtonDiverged(
                f"optimal point equation unsolved at x={x.tolist()}, sigma={s}: residual {res:.3g}",
                atom=int(k),
            )
        flatY[k] = y
        flatR[k] = res
    return flatY.reshape(Y.shape), flatR.reshape(rn.shape)


def optimal_point(model: GameModel, t, x, sigma) -> OptimalPointResult:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    Y, it, res = optimal_points(model, t, x[None, :], sigma)
    y = Y[0]
    J = _jacobian(model, float(t), y, float(sigma))
    _check_conditioning(J)
    return OptimalPointResult(
        x_star=y,
        value=float(_hopf_lax_at(model, float(t), x, y, float(sigma))),
        jacobian_dx=np.linalg.inv(J),
        newton_iterations=int(it),
        residual=float(res[0]),
    )


def _hopf_lax_at(model, t, X, Y, S):
    if t == 0.0:
        return model.cost.g(X, S)
    return t * model.hamiltonian.L((X - Y) / t) + model.cost.g(Y, S)


def hopf_lax_values(model: GameModel, t, X, sigma):
    """Vectorized ``v(t, x, sigma)`` for ``X`` of shape ``(..., d)``."""
    X = np.asarray(X, dtype=float)
    S = np.broadcast_to(np.asarray(sigma, dtype=float), X.shape[:-1])
    if not model.cost.convex:
        warnings.warn("terminal cost is not declared convex; Hopf-Lax minimizer may be spurious",
                      stacklevel=2)
    Y, _, _ = optimal_points(model, t, X, S)
    return _hopf_lax_at(model, float(t), X, Y, S)


def hopf_lax_value(model: GameModel, t, x, sigma) -> float:
    """``v(t, x, sigma) = min_y t L((x - y)/t) + g(y, sigma)``."""
    if t < 0:
        raise MinimizationFailed("negative time")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return float(hopf_lax_values(model, t, x[None, :], sigma)[0])


def sensitivity_matrices(model: GameModel, t, Z, sigma):
    """``M(t, z, sigma) = -t (I + t D2H D2g)^{-1} D2H`` batched over ``Z``."""
    Z = np.asarray(Z, dtype=float)
    S = np.broadcast_to(np.asarray(sigma, dtype=float), Z.shape[:-1])
    d = Z.shape[-1]
    if float(t) == 0.0:
        return np.zeros(Z.shape[:-1] + (d, d))
    p = model.cost.grad(Z, S)
    D2H = np.broadcast_to(model.hamiltonian.D2H(p), Z.shape[:-1] + (d, d))
    J = np.eye(d) + t * D2H @ model.cost.hess(Z, S)
    _check_conditioning(J)
    return -t * np.linalg.solve(J, D2H)


def sensitivity_matrix(model: GameModel, t, z, sigma) -> np.ndarray:
    z = np.atleast_1d(np.asarray(z, dtype=float))
    return sensitivity_matrices(model, t, z[None, :], sigma)[0]


def dsigma_optimal_points(model: GameModel, t, X, sigma, Y=None):
    """``d x*/d sigma = M(t, x*, sigma) d_sigma D_x g(x*, sigma)`` batched."""
    X = np.asarray(X, dtype=float)
    S = np.broadcast_to(np.asarray(sigma, dtype=float), X.shape[:-1])
    if float(t) == 0.0:
        return np.zeros_like(X)
    if Y is None:
        Y, _, _ = optimal_points(model, t, X, S)
    M = sensitivity_matrices(model, t, Y, S)
    return (M @ model.cost.dsigma_grad(Y, S)[..., None])[..., 0]


def dsigma_optimal(model: GameModel, t, x, sigma) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return dsigma_optimal_points(model, t, x[None, :], sigma)[0]
