"""Problem data: Hamiltonian/Lagrangian pairs, terminal costs, the scalar
functional of the terminal distribution, and the reduced flux.

All callables follow one array convention: points in R^d are arrays of
shape ``(..., d)``, parameters ``sigma`` broadcast against the leading
axes, and scalar outputs have shape ``(...)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial import Polynomial
from scipy import integrate, optimize

from ._numerics import invert_monotone
from .errors import BadInput, EmptyInterval, NonconvexFlux
from .measure import EmpiricalMeasure

CONVEXITY_TOL = 1e-10


# ---------------------------------------------------------------------------
# Legendre transform


class Conjugate:
    """Numerical convex conjugate ``F*(a) = sup_{u in [lo, hi]} (a u - F(u))``.

    With the derivative ``dF`` the maximizer is found by inverting ``dF``
    (bisection to adjacent floats); without it a grid search is refined by
    golden-section iterations.
    """

    def __init__(self, F, domain, dF=None, n_samples=2001):
        lo, hi = (float(v) for v in domain)
        if not lo < hi:
            raise EmptyInterval(f"degenerate domain [{lo}, {hi}]")
        u = np.linspace(lo, hi, n_samples)
        Fu = np.asarray(F(u), dtype=float)
        second = Fu[2:] - 2.0 * Fu[1:-1] + Fu[:-2]
        scale = np.maximum(1.0, np.abs(Fu[1:-1])) * CONVEXITY_TOL
        if np.any(second < -scale):
            k = int(np.argmin(second + scale))
            raise NonconvexFlux(f"function is not convex near u={u[k + 1]:.6g}")
        self.F = F
        self.dF = dF
        self.domain = (lo, hi)
        self._u = u
        self._Fu = Fu

    def argmax(self, alpha):
        alpha = np.asarray(alpha, dtype=float)
        lo, hi = self.domain
        if self.dF is not None:
            return invert_monotone(self.dF, alpha, lo, hi)
        flat = alpha.reshape(-1)
        out = np.empty_like(flat)
        u, Fu = self._u, self._Fu
        for start in range(0, flat.size, 512):
            a = flat[start:start + 512]
            k = np.argmax(a[:, None] * u[None, :] - Fu[None, :], axis=1)
            left = u[np.maximum(k - 1, 0)]
            right = u[np.minimum(k + 1, u.size - 1)]
            out[start:start + 512] = _golden_max(lambda v: a * v - self.F(v), left, right)
        out = out.reshape(alpha.shape)
        return out if out.ndim else float(out)

    gradient = argmax

    def __call__(self, alpha):
        alpha = np.asarray(alpha, dtype=float)
        u = np.asarray(self.argmax(alpha))
        val = alpha * u - np.asarray(self.F(u), dtype=float)
        return val if val.ndim else float(val)


def _golden_max(fn, lo, hi, iters=90):
    ratio = (np.sqrt(5.0) - 1.0) / 2.0
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    c = hi - ratio * (hi - lo)
    d = lo + ratio * (hi - lo)
    fc, fd = fn(c), fn(d)
    for _ in range(iters):
        left = fc >= fd
        hi = np.where(left, d, hi)
        lo = np.where(left, lo, c)
        new_c = hi - ratio * (hi - lo)
        new_d = lo + ratio * (hi - lo)
        c_next = np.where(left, new_c, d)
        d_next = np.where(left, c, new_d)
        fc_next = np.where(left, fn(new_c), fd)
        fd_next = np.where(left, fc, fn(new_d))
        c, d, fc, fd = c_next, d_next, fc_next, fd_next
    return 0.5 * (lo + hi)


def legendre_1d(F, domain, dF=None, n_samples=2001) -> Conjugate:
    return Conjugate(F, domain, dF=dF, n_samples=n_samples)


# ---------------------------------------------------------------------------
# Hamiltonians


@dataclass(frozen=True, eq=False)
class Hamiltonian:
    """``H`` with gradient, Hessian, and its Lagrangian ``L = H*``."""

    H: Callable
    DH: Callable
    D2H: Callable
    L: Callable
    DL: Callable
    dim: int
    kind: str = "custom"


def quadratic_hamiltonian(dim: int = 1) -> Hamiltonian:
    eye = np.eye(dim)

    def D2H(p):
        p = np.asarray(p, dtype=float)
        return np.broadcast_to(eye, p.shape[:-1] + (dim, dim))

    half_sq = lambda p: 0.5 * np.sum(np.asarray(p, dtype=float) ** 2, axis=-1)
    ident = lambda p: np.asarray(p, dtype=float)
    return Hamiltonian(half_sq, ident, D2H, half_sq, ident, dim, "quadratic")


def convex_hamiltonian_1d(H, dH, d2H, domain=(-50.0, 50.0)) -> Hamiltonian:
    """Scalar convex ``H(p)`` with its Lagrangian computed numerically."""
    conj = legendre_1d(H, domain, dF=dH)

    def _h(p):
        return np.asarray(H(np.asarray(p, dtype=float)[..., 0]), dtype=float)

    def _dh(p):
        return np.asarray(dH(np.asarray(p, dtype=float)[..., 0]), dtype=float)[..., None]

    def _d2h(p):
        return np.asarray(d2H(np.asarray(p, dtype=float)[..., 0]), dtype=float)[..., None, None]

    def _l(q):
        return np.asarray(conj(np.asarray(q, dtype=float)[..., 0]), dtype=float)

    def _dl(q):
        return np.asarray(conj.argmax(np.asarray(q, dtype=float)[..., 0]), dtype=float)[..., None]

    return Hamiltonian(_h, _dh, _d2h, _l, _dl, 1, "convex_1d")


def fenchel_young_gap(ham: Hamiltonian, p, q) -> np.ndarray:
    """``L(q) + H(p) - p.q`` for every pair (broadcast); nonnegative in theory."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    return ham.L(q) + ham.H(p) - np.sum(p * q, axis=-1)


# ---------------------------------------------------------------------------
# terminal costs g(x, sigma)


@dataclass(frozen=True, eq=False)
class TerminalCost:
    """Terminal cost together with the derivatives the solvers use.

    ``kind`` is ``"linear"`` for ``g = f(sigma).x`` and ``"separable"`` for
    ``g = phi(x) G(sigma)``.
    """

    kind: str
    g: Callable
    grad: Callable
    hess: Callable
    dsigma_grad: Callable
    dsigma: Callable
    dim: int
    convex: bool = True
    f: Callable | None = None
    df: Callable | None = None
    phi: Callable | None = None
    dphi: Callable | None = None
    d2phi: Callable | None = None
    G: Callable | None = None
    dG: Callable | None = None


def _vector_valued(fn, dim):
    def wrapped(s):
        out = np.asarray(fn(np.asarray(s, dtype=float)), dtype=float)
        if dim == 1 and (out.ndim == 0 or out.shape[-1:] != (1,) or out.shape == np.shape(s)):
            out = out[..., None]
        return out
    return wrapped


def linear_cost(f, df=None, dim: int = 1) -> TerminalCost:
    """``g(x, sigma) = f(sigma).x`` with ``f: R -> R^d``."""
    fv = _vector_valued(f, dim)
    if df is None:
        def dfv(s):
            s = np.asarray(s, dtype=float)
            h = 1e-6 * np.maximum(1.0, np.abs(s))[..., None]
            return (fv(s + h[..., 0]) - fv(s - h[..., 0])) / (2.0 * h)
    else:
        dfv = _vector_valued(df, dim)

    def g(x, s):
        return np.sum(fv(s) * np.asarray(x, dtype=float), axis=-1)

    def grad(x, s):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(fv(s), np.broadcast_shapes(x.shape, fv(s).shape)).copy()

    def hess(x, s):
        x = np.asarray(x, dtype=float)
        shape = np.broadcast_shapes(x.shape[:-1], np.shape(s))
        return np.zeros(shape + (dim, dim))

    def dsigma_grad(x, s):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(dfv(s), np.broadcast_shapes(x.shape, dfv(s).shape)).copy()

    def dsigma(x, s):
        return np.sum(dfv(s) * np.asarray(x, dtype=float), axis=-1)

    return TerminalCost("linear", g, grad, hess, dsigma_grad, dsigma, dim, True, f=fv, df=dfv)


def separable_cost(phi, dphi, d2phi, G=None, dG=None, dim: int = 1, convex=True) -> TerminalCost:
    """``g(x, sigma) = phi(x) G(sigma)``; ``G`` defaults to the identity."""
    if G is None:
        G = lambda s: np.asarray(s, dtype=float)
        dG = lambda s: np.ones_like(np.asarray(s, dtype=float))

    def g(x, s):
        return phi(x) * G(s)

    def grad(x, s):
        return dphi(x) * np.asarray(G(s))[..., None]

    def hess(x, s):
        return d2phi(x) * np.asarray(G(s))[..., None, None]

    def dsigma_grad(x, s):
        return dphi(x) * np.asarray(dG(s))[..., None]

    def dsigma(x, s):
        return phi(x) * dG(s)

    return TerminalCost("separable", g, grad, hess, dsigma_grad, dsigma, dim, convex,
                        phi=phi, dphi=dphi, d2phi=d2phi, G=G, dG=dG)


def half_square(x):
    return 0.5 * np.sum(np.asarray(x, dtype=float) ** 2, axis=-1)


def half_square_grad(x):
    return np.asarray(x, dtype=float)


def half_square_hess(x):
    x = np.asarray(x, dtype=float)
    return np.broadcast_to(np.eye(x.shape[-1]), x.shape + (x.shape[-1],))


def arctan_square(y):
    return np.arctan(np.sum(np.asarray(y, dtype=float) ** 2, axis=-1))


def arctan_square_grad(y):
    y = np.asarray(y, dtype=float)
    r2 = np.sum(y ** 2, axis=-1)
    return 2.0 * y / (1.0 + r2 ** 2)[..., None]


def min_cost_curvature(cost: TerminalCost, xs, sigmas) -> float:
    """Smallest Hessian eigenvalue of ``g(., sigma)`` over the sample pairs."""
    xs = np.asarray(xs, dtype=float)
    sig = np.asarray(sigmas, dtype=float)
    X = np.broadcast_to(xs[:, None, :], (xs.shape[0], sig.size, xs.shape[-1]))
    S = np.broadcast_to(sig[None, :], X.shape[:-1])
    hess = cost.hess(X, S)
    hess = 0.5 * (hess + np.swapaxes(hess, -1, -2))
    return float(np.min(np.linalg.eigvalsh(hess)))


# ---------------------------------------------------------------------------
# 1-D profiles and the functional sigma_0


@dataclass(frozen=True)
class Jump:
    at: float
    left: float
    right: float


@dataclass(frozen=True, eq=False)
class Profile:
    """Scalar initial profile ``s0`` along the mean direction.

    At a jump the profile takes its right limit.  ``primitive`` returns
    ``int_0^y s0``.
    """

    func: Callable
    derivative: Callable | None = None
    primitive_fn: Callable | None = None
    jumps: tuple = ()
    bounds: tuple | None = None
    name: str = "profile"

    def __call__(self, y):
        out = np.asarray(self.func(np.asarray(y, dtype=float)), dtype=float)
        return out if out.ndim else float(out)

    @property
    def continuous(self) -> bool:
        return not self.jumps

    def one_sided(self, y, window=1e-12):
        """Left and right limits of the profile at ``y``."""
        y = np.asarray(y, dtype=float)
        left = np.array(self(y), dtype=float, ndmin=1).reshape(y.shape) if y.ndim else np.array(self(y))
        right = left.copy()
        for jmp in self.jumps:
            near = np.abs(y - jmp.at) <= window
            left = np.where(near, jmp.left, left)
            right = np.where(near, jmp.right, right)
        return left, right

    def jump_near(self, y, window):
        best = None
        for jmp in self.jumps:
            if abs(y - jmp.at) <= window and (best is None or abs(y - jmp.at) < abs(y - best.at)):
                best = jmp
        return best

    def primitive(self, y):
        if self.primitive_fn is not None:
            out = np.asarray(self.primitive_fn(np.asarray(y, dtype=float)), dtype=float)
            return out if out.ndim else float(out)
        pts = [j.at for j in self.jumps]

        def one(v):
            lo, hi = (0.0, v) if v >= 0 else (v, 0.0)
            inner = [p for p in pts if lo < p < hi] or None
            val = integrate.quad(lambda s: float(self.func(np.asarray(s))), lo, hi,
                                 points=inner, limit=200, epsabs=1e-13, epsrel=1e-13)[0]
            return val if v >= 0 else -val

        out = np.vectorize(one, otypes=[float])(np.asarray(y, dtype=float))
        return out if out.ndim else float(out)

    def value_range(self):
        if self.bounds is not None:
            return tuple(float(b) for b in self.bounds)
        raise BadInput(f"profile {self.name!r} has no declared value range")

    def lipschitz(self, a, b, n=20001, window=None) -> float:
        """Sampled Lipschitz constant on ``[a, b]``, ignoring declared jumps."""
        y = np.linspace(a, b, n)
        s = np.asarray(self(y), dtype=float)
        slope = np.abs(np.diff(s)) / np.diff(y)
        window = (b - a) / (n - 1) if window is None else window
        for jmp in self.jumps:
            cell = (y[:-1] <= jmp.at + window) & (y[1:] >= jmp.at - window)
            slope[cell] = 0.0
        return float(slope.max()) if slope.size else 0.0


def step_profile(left, right, at=0.0) -> Profile:
    left, right, at = float(left), float(right), float(at)

    def func(y):
        return np.where(np.asarray(y) < at, left, right)

    def raw(y):
        y = np.asarray(y, dtype=float)
        return left * np.minimum(y, at) + right * np.maximum(y - at, 0.0)

    def primitive(y):
        return raw(y) - raw(0.0)

    return Profile(func, derivative=lambda y: np.zeros_like(np.asarray(y, dtype=float)),
                   primitive_fn=primitive, jumps=(Jump(at, left, right),),
                   bounds=(min(left, right), max(left, right)),
                   name=f"step({left:g},{right:g})@{at:g}")


def tanh_profile(amplitude=1.0, scale=1.0, shift=0.0, offset=0.0) -> Profile:
    """``offset + amplitude * tanh((y - shift) / scale)``."""
    A, w, c, b = float(amplitude), float(scale), float(shift), float(offset)

    def func(y):
        return b + A * np.tanh((np.asarray(y, dtype=float) - c) / w)

    def derivative(y):
        return A / w / np.cosh((np.asarray(y, dtype=float) - c) / w) ** 2

    def logcosh(z):
        return np.logaddexp(z, -z) - np.log(2.0)

    def primitive(y):
        y = np.asarray(y, dtype=float)
        return b * y + A * w * (logcosh((y - c) / w) - logcosh(-c / w))

    return Profile(func, derivative, primitive, (), (b - abs(A), b + abs(A)),
                   name=f"tanh(A={A:g},w={w:g},c={c:g},b={b:g})")


def callable_profile(func, derivative=None, bounds=None, jumps=(), name="custom") -> Profile:
    return Profile(func, derivative, None, tuple(jumps), bounds, name)


@dataclass(frozen=True, eq=False)
class SigmaFunctional:
    """The scalar functional ``sigma_0`` of the terminal distribution.

    ``moment``: ``int psi dm``; ``composed``: ``G(int psi dm)``;
    ``mean_profile``: ``s0(mean(m).zeta)``.
    """

    kind: str
    psi: Callable | None = None
    dpsi: Callable | None = None
    G: Callable | None = None
    dG: Callable | None = None
    profile: Profile | None = None
    zeta: np.ndarray | None = None
    bounds: tuple | None = None

    def __call__(self, m: EmpiricalMeasure) -> float:
        return float(self.evaluate_atoms(m.atoms, m.weights))

    def evaluate_atoms(self, atoms, weights):
        """Evaluate on measures with atoms ``(..., n, d)`` and shared weights."""
        atoms = np.asarray(atoms, dtype=float)
        w = np.asarray(weights, dtype=float)
        if self.kind == "moment":
            return np.asarray(self.psi(atoms)) @ w
        if self.kind == "composed":
            return np.asarray(self.G(np.asarray(self.psi(atoms)) @ w))
        if self.kind == "mean_profile":
            mean = np.einsum("n,...nd->...d", w, atoms)
            return np.asarray(self.profile(mean @ self.zeta))
        raise BadInput(f"unknown sigma0 kind {self.kind!r}")

    def gradient_atoms(self, atoms, weights):
        """Wasserstein gradient ``D_m sigma0(m)(y_i)`` at every atom."""
        atoms = np.asarray(atoms, dtype=float)
        w = np.asarray(weights, dtype=float)
        if self.kind == "moment":
            return np.asarray(self.dpsi(atoms))
        if self.kind == "composed":
            inner = np.asarray(self.psi(atoms)) @ w
            return np.asarray(self.dG(inner))[..., None, None] * np.asarray(self.dpsi(atoms))
        if self.kind == "mean_profile":
            if not self.profile.continuous or self.profile.derivative is None:
                from .errors import NonDifferentiableSigma0
                raise NonDifferentiableSigma0(f"profile {self.profile.name} is not differentiable")
            mean = np.einsum("n,...nd->...d", w, atoms)
            slope = np.asarray(self.profile.derivative(mean @ self.zeta))
            grad = slope[..., None] * self.zeta
            return np.broadcast_to(grad[..., None, :], atoms.shape).copy()
        raise BadInput(f"unknown sigma0 kind {self.kind!r}")

    @property
    def differentiable(self) -> bool:
        if self.kind == "mean_profile":
            return self.profile.continuous and self.profile.derivative is not None
        return self.dpsi is not None

    def value_range(self):
        if self.bounds is not None:
            return tuple(float(b) for b in self.bounds)
        if self.kind == "mean_profile":
            return self.profile.value_range()
        raise BadInput("sigma0 has no declared range; pass sigma_range explicitly")


def moment_sigma(psi, dpsi=None, bounds=None) -> SigmaFunctional:
    return SigmaFunctional("moment", psi=psi, dpsi=dpsi, bounds=bounds)


def composed_sigma(psi, dpsi, G, dG, bounds=None) -> SigmaFunctional:
    return SigmaFunctional("composed", psi=psi, dpsi=dpsi, G=G, dG=dG, bounds=bounds)


def mean_profile_sigma(profile: Profile, zeta=(1.0,)) -> SigmaFunctional:
    return SigmaFunctional("mean_profile", profile=profile, zeta=_unit(zeta))


def _unit(zeta):
    z = np.asarray(zeta, dtype=float).reshape(-1)
    n = np.linalg.norm(z)
    if n == 0 or not np.isfinite(n):
        raise BadInput("direction must be a nonzero finite vector")
    z = z / n
    z.setflags(write=False)
    return z


# ---------------------------------------------------------------------------
# reduced flux


def flux_primitive(fbar) -> Callable:
    """``F(u) = int_0^u fbar``: exact for polynomials, adaptive quadrature otherwise."""
    if isinstance(fbar, Polynomial):
        return fbar.integ(lbnd=0.0)

    def F(u):
        u = np.asarray(u, dtype=float)
        one = lambda v: integrate.quad(lambda s: float(fbar(s)), 0.0, v,
                                       epsabs=1e-13, epsrel=1e-13, limit=200)[0]
        out = np.vectorize(one, otypes=[float])(u)
        return out if out.ndim else float(out)

    return F


@dataclass(frozen=True, eq=False)
class ReducedFlux:
    """Wave speed ``fbar`` in the unit direction ``zeta`` and its primitive ``F``."""

    fbar: Callable
    F: Callable
    dfbar: Callable
    zeta: np.ndarray
    poly: Polynomial | None = None
    name: str = "flux"

    @classmethod
    def polynomial(cls, coeffs, zeta=(1.0,), name=None):
        """Flux with ``fbar(u) = sum_k coeffs[k] u**k`` (ascending order)."""
        p = Polynomial(np.asarray(coeffs, dtype=float))
        return cls(p, flux_primitive(p), p.deriv(), _unit(zeta), p,
                   name or f"poly{list(map(float, coeffs))}")

    @classmethod
    def from_callable(cls, fbar, dfbar=None, zeta=(1.0,), name="flux"):
        if dfbar is None:
            def dfbar(u):
                u = np.asarray(u, dtype=float)
                h = 1e-6 * np.maximum(1.0, np.abs(u))
                return (fbar(u + h) - fbar(u - h)) / (2.0 * h)
        return cls(fbar, flux_primitive(fbar), dfbar, _unit(zeta), None, name)

    @classmethod
    def from_model(cls, hamiltonian: Hamiltonian, cost: TerminalCost, zeta=None,
                   sample=(-3.0, 3.0), tol=1e-12):
        """Project ``DH(f(u))`` on its (one-dimensional) range direction.

        For a quadratic Hamiltonian and a polynomial ``f`` in d = 1 the result
        is an exact polynomial flux.
        """
        if cost.kind != "linear":
            from .errors import ReducedRegimeRequired
            raise ReducedRegimeRequired("reduced flux needs a linear terminal cost")
        u = np.linspace(*sample, 401)
        speeds = np.asarray(hamiltonian.DH(cost.f(u)), dtype=float)
        if zeta is None:
            k = int(np.argmax(np.linalg.norm(speeds, axis=-1)))
            zeta = speeds[k]
        z = _unit(zeta)
        proj = speeds @ z
        off = speeds - proj[:, None] * z
        if np.max(np.linalg.norm(off, axis=-1)) > tol * (1.0 + np.max(np.abs(speeds))):
            raise BadInput("DH(f(u)) does not have a one-dimensional range")

        def fbar(s):
            s = np.asarray(s, dtype=float)
            out = np.asarray(hamiltonian.DH(cost.f(s)), dtype=float) @ z
            return out if out.ndim else float(out)

        return cls.from_callable(fbar, zeta=z, name="from_hf")

    def critical_points(self, a, b) -> np.ndarray:
        """Zeros of ``fbar`` (critical points of ``F``) inside ``[a, b]``."""
        if self.poly is not None:
            if self.poly.degree() < 1:
                return np.array([])
            r = self.poly.roots()
            r = np.real(r[np.abs(np.imag(r)) < 1e-9])
            return np.sort(r[(r >= a) & (r <= b)])
        u = np.linspace(a, b, 4001)
        v = np.asarray(self.fbar(u), dtype=float)
        roots = list(u[v == 0])
        for i in np.flatnonzero(v[:-1] * v[1:] < 0):
            roots.append(optimize.brentq(self.fbar, u[i], u[i + 1], xtol=1e-15))
        return np.sort(np.asarray(roots, dtype=float))

    def max_speed(self, a, b) -> float:
        u = np.concatenate([np.linspace(a, b, 2001), self._dfbar_zeros(a, b)])
        return float(np.max(np.abs(np.asarray(self.fbar(u), dtype=float))))

    def _dfbar_zeros(self, a, b):
        if self.poly is not None:
            d = self.poly.deriv()
            if d.degree() < 1:
                return np.array([])
            r = d.roots()
            r = np.real(r[np.abs(np.imag(r)) < 1e-9])
            return r[(r >= a) & (r <= b)]
        return np.array([])

    def speed_conditions(self, a, b, n=2001) -> dict:
        """Both growth conditions on ``fbar`` over ``[a, b]``.

        ``min_dfbar > 0`` is uniform increase of the speed (convex flux);
        ``min_fbar > 0`` is a uniformly positive speed.  They are reported
        separately because existence and selection results use different
        ones.
        """
        u = np.concatenate([np.linspace(a, b, n), self._dfbar_zeros(a, b)])
        d = np.asarray(self.dfbar(u), dtype=float)
        v = np.asarray(self.fbar(u), dtype=float)
        return {
            "interval": [float(a), float(b)],
            "min_dfbar": float(d.min()),
            "min_fbar": float(v.min()),
            "uniformly_increasing": bool(d.min() > 0),
            "uniformly_positive": bool(v.min() > 0),
        }


# ---------------------------------------------------------------------------
# convex / concave envelopes


@dataclass(frozen=True)
class EnvelopePiece:
    kind: str  # "curve" (envelope == F) or "chord"
    lo: float
    hi: float


@dataclass(frozen=True, eq=False)
class Envelope:
    """Lower convex (or upper concave) envelope of ``F`` on ``[a, b]``."""

    F: Callable
    a: float
    b: float
    pieces: tuple
    upper: bool = False
    dF: Callable | None = None

    @property
    def vertices(self) -> np.ndarray:
        pts = {self.a, self.b}
        for p in self.pieces:
            if p.kind == "chord":
                pts.update((p.lo, p.hi))
        return np.array(sorted(pts))

    @property
    def chords(self) -> list:
        return [(p.lo, p.hi) for p in self.pieces if p.kind == "chord"]

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        out = np.asarray(self.F(u), dtype=float).copy()
        for p in self.pieces:
            if p.kind == "chord":
                m = (u >= p.lo) & (u <= p.hi)
                if m.any():
                    Flo, Fhi = float(self.F(p.lo)), float(self.F(p.hi))
                    out = np.where(m, Flo + (Fhi - Flo) * (u - p.lo) / (p.hi - p.lo), out)
        return out if out.ndim else float(out)

    def chord_slope(self, piece: EnvelopePiece) -> float:
        return (float(self.F(piece.hi)) - float(self.F(piece.lo))) / (piece.hi - piece.lo)


def _lower_hull(x, y):
    hull = []
    for i in range(x.size):
        while len(hull) >= 2:
            i0, i1 = hull[-2], hull[-1]
            cross = (x[i1] - x[i0]) * (y[i] - y[i0]) - (y[i1] - y[i0]) * (x[i] - x[i0])
            if cross <= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    return hull


def convex_envelope(F, a, b, n_samples=4001, dF=None, upper=False) -> Envelope:
    """Envelope of ``F`` on ``[a, b]`` from a monotone-chain hull of samples.

    With ``dF`` given, every tangency point of a chord is then solved to full
    precision from the tangent condition, so chord endpoints are not limited
    to the sample spacing.
    """
    a, b = float(a), float(b)
    if not a < b:
        raise EmptyInterval(f"degenerate interval [{a}, {b}]")
    if n_samples < 3:
        raise BadInput("convex_envelope needs at least 3 samples")
    sgn = -1.0 if upper else 1.0
    G = lambda u: sgn * np.asarray(F(u), dtype=float)
    dG = None if dF is None else (lambda u: sgn * np.asarray(dF(u), dtype=float))
    u = np.linspace(a, b, n_samples)
    hull = _lower_hull(u, G(u))

    raw = []
    for i, j in zip(hull[:-1], hull[1:]):
        kind = "curve" if j == i + 1 else "chord"
        if raw and raw[-1][0] == kind == "curve":
            raw[-1][2] = u[j]
        else:
            raw.append([kind, u[i], u[j]])

    if dG is not None:
        step = (b - a) / (n_samples - 1)
        for k, (kind, lo, hi) in enumerate(raw):
            if kind != "chord":
                continue
            lo_new, hi_new = _refine_chord(G, dG, lo, hi, a, b, step)
            raw[k][1], raw[k][2] = lo_new, hi_new
            if k > 0:
                raw[k - 1][2] = lo_new
            if k + 1 < len(raw):
                raw[k + 1][1] = hi_new
    pieces = tuple(EnvelopePiece(kind, float(lo), float(hi)) for kind, lo, hi in raw if hi > lo)
    return Envelope(F, a, b, pieces, upper, dF)


def _refine_chord(G, dG, p, q, a, b, step):
    tiny = 1e-14 * max(1.0, abs(a), abs(b))
    free_p = p > a + tiny
    free_q = q < b - tiny
    if free_p and free_q:
        def eqs(z):
            pp, qq = z
            slope = (G(qq) - G(pp)) / (qq - pp)
            return [float(dG(pp) - slope), float(dG(qq) - slope)]
        sol = optimize.root(eqs, [p, q], tol=1e-15)
        if sol.success and a <= sol.x[0] < sol.x[1] <= b:
            return float(sol.x[0]), float(sol.x[1])
        return p, q
    if free_p:
        fn = lambda v: float(dG(v) * (q - v) - (G(q) - G(v)))
        return _bracket_root(fn, p, step, a, q), q
    if free_q:
        fn = lambda v: float(dG(v) * (v - p) - (G(v) - G(p)))
        return p, _bracket_root(fn, q, step, p, b)
    return p, q


def _bracket_root(fn, guess, step, lo_lim, hi_lim):
    for width in (2, 4, 8, 16):
        lo = max(lo_lim, guess - width * step)
        hi = min(hi_lim - 1e-15 * max(1.0, abs(hi_lim)), guess + width * step)
        if lo < hi and fn(lo) * fn(hi) < 0:
            return optimize.brentq(fn, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=200)
    return guess


# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GameModel:
    """Bundle of all problem data.

    The model is in the reduced regime when the terminal cost is linear and
    a reduced flux is attached.
    """

    hamiltonian: Hamiltonian
    cost: TerminalCost
    sigma0: SigmaFunctional
    flux: ReducedFlux | None = None
    name: str = "model"
    meta: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.hamiltonian.dim

    @property
    def reduced(self) -> bool:
        return self.cost.kind == "linear" and self.flux is not None
