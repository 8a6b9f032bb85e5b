"""The one-dimensional conservation law ``d_t s + d_x F(s) = 0`` obtained by
reducing the equilibrium transport equation to the mean direction.

Exact Riemann fans come from convex/concave envelopes of ``F``; general data
is handled by the Lax-Oleinik formula (convex ``F``) or a Godunov finite
volume scheme whose interface fluxes are exact Riemann fluxes.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import integrate, optimize

from ._numerics import invert_monotone
from .errors import (
    BadInput,
    EmptyInterval,
    NonconvexFlux,
    ProfileConstructionFailed,
    RefineGrid,
)
from .model import Profile, ReducedFlux, convex_envelope

SQRT3 = float(np.sqrt(3.0))


# ---------------------------------------------------------------------------
# grids and fields


@dataclass(frozen=True)
class Grid1D:
    x_min: float
    x_max: float
    n_cells: int

    def __post_init__(self):
        if self.n_cells < 2:
            raise BadInput("a grid needs at least 2 cells")
        if not (np.isfinite(self.x_min) and np.isfinite(self.x_max)) or self.x_max <= self.x_min:
            raise BadInput(f"bad grid bounds [{self.x_min}, {self.x_max}]")

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / self.n_cells

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_cells + 1)

    @property
    def centers(self) -> np.ndarray:
        e = self.edges
        return 0.5 * (e[:-1] + e[1:])


@dataclass(frozen=True, eq=False)
class EntropyField:
    """Cell averages ``values[k]`` of the solution at ``times[k]``."""

    grid: Grid1D
    times: np.ndarray
    values: np.ndarray
    method: str

    def at_time(self, t, atol=1e-9) -> np.ndarray:
        k = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[k] - t) > atol:
            raise BadInput(f"time {t} not stored (nearest {self.times[k]})")
        return self.values[k]

    def value_at(self, t, x):
        """Piecewise-linear interpolation between cell centers at a stored time."""
        return np.interp(x, self.grid.centers, self.at_time(t))

    def total_variation(self) -> np.ndarray:
        return np.abs(np.diff(self.values, axis=1)).sum(axis=1)

    def to_csv(self, path) -> None:
        xs = self.grid.centers
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "x", "sigma"])
            for t, row in zip(self.times, self.values):
                for x, v in zip(xs, row):
                    w.writerow([repr(float(t)), repr(float(x)), repr(float(v))])


# ---------------------------------------------------------------------------
# Riemann problems


@dataclass(frozen=True)
class Shock:
    speed: float
    left: float
    right: float

    kind = "shock"

    def to_dict(self):
        return {"type": "SHOCK", "speed": self.speed, "left": self.left, "right": self.right}


@dataclass(frozen=True, eq=False)
class Rarefaction:
    speed_lo: float
    speed_hi: float
    start: float
    end: float
    fbar: Callable = field(repr=False)

    kind = "rarefaction"

    def state(self, xi):
        """State ``u`` between ``start`` and ``end`` with ``fbar(u) = xi``."""
        xi = np.asarray(xi, dtype=float)
        poly = getattr(self.fbar, "coef", None)
        if poly is not None and len(poly) == 2 and poly[1] != 0:
            out = (xi - poly[0]) / poly[1]
        else:
            lo, hi = min(self.start, self.end), max(self.start, self.end)
            out = invert_monotone(self.fbar, xi, lo, hi)
        return out

    def to_dict(self):
        return {"type": "RAREFACTION", "speed_lo": self.speed_lo, "speed_hi": self.speed_hi,
                "start": self.start, "end": self.end}


@dataclass(frozen=True, eq=False)
class RiemannFan:
    left: float
    right: float
    waves: tuple
    flux: ReducedFlux = field(repr=False)

    def value(self, xi):
        xi = np.asarray(xi, dtype=float)
        out = np.full(xi.shape, float(self.left))
        for w in self.waves:
            if w.kind == "shock":
                out = np.where(xi > w.speed, w.right, out)
            else:
                out = np.where(xi > w.speed_hi, w.end, out)
                inside = (xi >= w.speed_lo) & (xi <= w.speed_hi)
                if inside.any():
                    out[inside] = w.state(xi[inside])
        return out if out.ndim else float(out)

    @property
    def shocks(self) -> list:
        return [w for w in self.waves if w.kind == "shock"]

    @property
    def rarefactions(self) -> list:
        return [w for w in self.waves if w.kind == "rarefaction"]

    def validate(self, n_states=64, tol=1e-10) -> dict:
        """Check ordering of speeds, Rankine-Hugoniot and the Oleinik chord
        condition; returns the worst violations."""
        speeds = []
        for w in self.waves:
            speeds.extend([w.speed] if w.kind == "shock" else [w.speed_lo, w.speed_hi])
        ordering = float(max([0.0] + [a - b for a, b in zip(speeds[:-1], speeds[1:])]))
        rh, chord = 0.0, 0.0
        for s in self.shocks:
            rh = max(rh, rankine_hugoniot_residual(self.flux, s.left, s.right, s.speed))
            chord = max(chord, oleinik_violation(self.flux, s.left, s.right, n_states))
        return {"ordering": ordering, "rankine_hugoniot": rh, "oleinik": chord,
                "ok": ordering <= tol and rh <= tol and chord <= tol}

    def to_dict(self):
        return {"left": self.left, "right": self.right, "waves": [w.to_dict() for w in self.waves]}


def rh_speed(flux: ReducedFlux, left, right) -> float:
    left, right = float(left), float(right)
    if left == right:
        return float(flux.fbar(left))
    return (float(flux.F(right)) - float(flux.F(left))) / (right - left)


def rankine_hugoniot_residual(flux, left, right, speed) -> float:
    return abs(rh_speed(flux, left, right) - speed)


def oleinik_violation(flux: ReducedFlux, left, right, n_states=64) -> float:
    """How far ``F`` crosses the chord between ``left`` and ``right``.

    An admissible shock has ``F`` above the chord when ``left < right`` and
    below it when ``left > right``; zero means admissible.
    """
    left, right = float(left), float(right)
    if left == right:
        return 0.0
    u = np.linspace(left, right, n_states + 2)[1:-1]
    Fl, Fr = float(flux.F(left)), float(flux.F(right))
    chord = Fl + (Fr - Fl) * (u - left) / (right - left)
    gap = np.asarray(flux.F(u)) - chord
    if left > right:
        gap = -gap
    return float(max(0.0, -gap.min()))


def riemann_fan(flux: ReducedFlux, left, right, n_samples=4001) -> RiemannFan:
    """Entropy solution of the Riemann problem as an ordered list of waves.

    ``left < right`` uses the lower convex envelope of ``F`` on
    ``[left, right]``; ``left > right`` the upper concave envelope on
    ``[right, left]`` traversed from ``left`` down to ``right``.
    """
    left, right = float(left), float(right)
    if not (np.isfinite(left) and np.isfinite(right)):
        raise BadInput("Riemann states must be finite")
    if left == right:
        return RiemannFan(left, right, (), flux)
    upper = left > right
    a, b = min(left, right), max(left, right)
    env = convex_envelope(flux.F, a, b, n_samples=n_samples, dF=flux.fbar, upper=upper)
    pieces = env.pieces[::-1] if upper else env.pieces
    waves = []
    for p in pieces:
        start, end = (p.hi, p.lo) if upper else (p.lo, p.hi)
        if p.kind == "chord":
            waves.append(Shock(env.chord_slope(p), start, end))
        else:
            waves.append(Rarefaction(float(flux.fbar(start)), float(flux.fbar(end)),
                                     start, end, flux.fbar))
    return RiemannFan(left, right, tuple(waves), flux)


def riemann_exact(flux: ReducedFlux, left, right, xi, fan: RiemannFan | None = None):
    """Self-similar entropy solution at ``xi = x / t``."""
    fan = fan if fan is not None else riemann_fan(flux, left, right)
    return fan.value(xi)


# ---------------------------------------------------------------------------
# Godunov scheme


def cell_averages(profile, grid: Grid1D, n_gauss=8) -> np.ndarray:
    """Exact averages from the primitive when available, else Gauss-Legendre
    per cell with cells split at the profile's jumps."""
    e = grid.edges
    if getattr(profile, "primitive_fn", None) is not None:
        P = np.asarray(profile.primitive(e), dtype=float)
        return np.diff(P) / grid.h
    nodes, wts = np.polynomial.legendre.leggauss(n_gauss)
    lo, hi = e[:-1], e[1:]
    cuts = [j.at for j in getattr(profile, "jumps", ())]

    def integrate_cells(a, b):
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        pts = mid[:, None] + half[:, None] * nodes[None, :]
        return half * (np.asarray(profile(pts), dtype=float) @ wts)

    total = integrate_cells(lo, hi)
    for c in cuts:
        k = np.flatnonzero((lo < c) & (hi > c))
        if k.size:
            total[k] = integrate_cells(lo[k], np.full(k.size, c)) + integrate_cells(np.full(k.size, c), hi[k])
    return total / grid.h


def godunov_flux(flux: ReducedFlux, ul, ur, crit=None):
    """Exact Godunov flux ``F(u(0))`` of the Riemann problem ``(ul, ur)``.

    Equal to ``min F`` on ``[ul, ur]`` when ``ul <= ur`` and ``max F`` on
    ``[ur, ul]`` otherwise; the extrema are taken over the endpoints and the
    critical points ``crit`` of ``F``.
    """
    ul = np.asarray(ul, dtype=float)
    ur = np.asarray(ur, dtype=float)
    FL, FR = np.asarray(flux.F(ul)), np.asarray(flux.F(ur))
    fmin, fmax = np.minimum(FL, FR), np.maximum(FL, FR)
    if crit is None:
        lo_all, hi_all = float(min(ul.min(), ur.min())), float(max(ul.max(), ur.max()))
        crit = flux.critical_points(lo_all, hi_all)
    if len(crit):
        crit = np.asarray(crit, dtype=float)
        Fc = np.asarray(flux.F(crit), dtype=float)
        lo, hi = np.minimum(ul, ur), np.maximum(ul, ur)
        inside = (crit > lo[..., None]) & (crit < hi[..., None])
        fmin = np.minimum(fmin, np.where(inside, Fc, np.inf).min(axis=-1))
        fmax = np.maximum(fmax, np.where(inside, Fc, -np.inf).max(axis=-1))
    return np.where(ul <= ur, fmin, fmax)


def _check_data(u):
    u = np.asarray(u, dtype=float)
    if u.ndim != 1 or u.size < 2:
        raise BadInput("initial data needs at least 2 cells")
    if not np.all(np.isfinite(u)):
        raise BadInput("initial data must be finite")
    return u


class _Stepper:
    """Conservative update with exact Godunov fluxes and optional diffusion."""

    def __init__(self, flux, grid, u0, cfl, eps=0.0, max_steps=5_000_000):
        if not 0 < cfl <= 1:
            raise BadInput(f"cfl must lie in (0, 1], got {cfl}")
        self.flux, self.grid, self.eps = flux, grid, float(eps)
        self.u = _check_data(u0).copy()
        lo, hi = float(self.u.min()), float(self.u.max())
        self.crit = flux.critical_points(lo, hi)
        self.lam = flux.max_speed(lo, hi) if hi > lo else abs(float(flux.fbar(lo)))
        h = grid.h
        rate = self.lam / h + 2.0 * self.eps / h ** 2
        self.dt_max = cfl / rate if rate > 0 else np.inf
        self.max_steps = max_steps
        self.boundary_flux = 0.0  # time integral of (flux in at left - flux out at right)

    def advance(self, T):
        if T <= 0:
            return
        h = self.grid.h
        n = int(np.ceil(T / self.dt_max)) if np.isfinite(self.dt_max) else 1
        if n > self.max_steps:
            from .errors import StiffnessError
            raise StiffnessError(f"{n} time steps needed (dt={self.dt_max:.3g}); coarsen or reduce eps")
        dt = T / n
        for _ in range(n):
            u = self.u
            ext = np.concatenate(([u[0]], u, [u[-1]]))
            F = godunov_flux(self.flux, ext[:-1], ext[1:], self.crit)
            if self.eps:
                F = F - self.eps * np.diff(ext) / h
            self.boundary_flux += dt * (F[0] - F[-1])
            self.u = u - dt / h * np.diff(F)


def godunov(flux: ReducedFlux, u0, grid: Grid1D, T, cfl=0.9, times=None) -> EntropyField:
    """Godunov finite volumes with constant extrapolation at the boundary.

    ``u0`` is an array of cell averages or a profile (averaged exactly).
    ``times`` lists output times in ``[0, T]``; ``T`` is always included.
    """
    if isinstance(u0, Profile) or callable(u0):
        u0 = cell_averages(u0, grid)
    u0 = _check_data(u0)
    if u0.size != grid.n_cells:
        raise BadInput(f"{u0.size} values for {grid.n_cells} cells")
    out_t = sorted(set([0.0, float(T)] + ([] if times is None else [float(t) for t in times])))
    stepper = _Stepper(flux, grid, u0, cfl)
    vals, now = [], 0.0
    for t in out_t:
        stepper.advance(t - now)
        now = t
        vals.append(stepper.u.copy())
    return EntropyField(grid, np.array(out_t), np.array(vals), "GODUNOV")


def riemann_field(flux, left, right, grid: Grid1D, times, x0=0.0) -> EntropyField:
    """Exact Riemann solution sampled at cell centers."""
    fan = riemann_fan(flux, left, right)
    x = grid.centers
    vals = []
    for t in times:
        vals.append(np.where(x < x0, left, right).astype(float) if t == 0 else fan.value((x - x0) / t))
    return EntropyField(grid, np.asarray(times, dtype=float), np.array(vals), "RIEMANN_EXACT")


# ---------------------------------------------------------------------------
# Lax-Oleinik


def _require_convex(flux, lo, hi):
    u = np.linspace(lo, hi, 2001)
    if np.min(np.asarray(flux.dfbar(u), dtype=float)) < -1e-12:
        raise NonconvexFlux("Lax-Oleinik needs a convex flux on the data range; use godunov")


def lax_oleinik(flux: ReducedFlux, profile: Profile, t, x, n_grid=4001):
    """Entropy solution at ``(t, x)`` for convex ``F``.

    Minimizes ``t F*(a) + Phi0(x - t a)`` with ``Phi0' = s0``.  The search is
    parametrized by the state ``u`` with ``a = fbar(u)``, so ``F*`` is never
    formed explicitly; the first-order condition ``u = s0(x - t fbar(u))``
    is solved by Brent's method around the best grid point.
    """
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    if t <= 0:
        out = np.asarray(profile(x_arr), dtype=float)
        return out if np.ndim(x) else float(out[0])
    lo, hi = profile.value_range()
    if hi <= lo:
        out = np.full(x_arr.shape, lo)
        return out if np.ndim(x) else float(lo)
    _require_convex(flux, lo, hi)
    u = np.linspace(lo, hi, n_grid)
    a = np.asarray(flux.fbar(u), dtype=float)
    conj = u * a - np.asarray(flux.F(u), dtype=float)
    out = np.empty(x_arr.shape)
    for i, xv in enumerate(x_arr):
        J = t * conj + np.asarray(profile.primitive(xv - t * a), dtype=float)
        k = int(np.argmin(J))
        out[i] = _refine_lo(flux, profile, t, xv, u, k)
    return out if np.ndim(x) else float(out[0])


def _refine_lo(flux, profile, t, x, u, k):
    R = lambda v: v - float(profile(x - t * float(flux.fbar(v))))
    a, b = u[max(k - 1, 0)], u[min(k + 1, u.size - 1)]
    ra, rb = R(a), R(b)
    if ra == 0:
        return a
    if rb == 0:
        return b
    if ra < 0 < rb:
        return optimize.brentq(R, a, b, xtol=1e-15, rtol=1e-15, maxiter=200)
    if k == 0 and R(u[0]) >= 0:
        return u[0]
    if k == u.size - 1 and R(u[-1]) <= 0:
        return u[-1]

    def J(v):
        return t * (v * float(flux.fbar(v)) - float(flux.F(v))) + float(profile.primitive(x - t * float(flux.fbar(v))))

    return float(optimize.minimize_scalar(J, bounds=(a, b), method="bounded",
                                          options={"xatol": 1e-13}).x)


# ---------------------------------------------------------------------------
# fronts, characteristics, reachability


@dataclass(frozen=True)
class Front:
    x: float
    left: float
    right: float
    index: int
    speed: float

    @property
    def strength(self) -> float:
        return self.right - self.left


def detect_fronts(u, grid: Grid1D, flux: ReducedFlux | None = None, factor=5.0, offset=4,
                  min_jump=0.0) -> list:
    """Locate discontinuities in cell averages.

    An interface is flagged when its jump exceeds ``factor`` times the larger
    of ``h`` and the jumps ``offset`` interfaces away on either side.  Runs of
    flagged interfaces form one front, positioned by conservation of the
    transition; its states are read one cell outside the run.  A run whose
    jumps change sign holds two fronts inside one stencil and raises
    :class:`RefineGrid`.
    """
    u = np.asarray(u, dtype=float)
    h = grid.h
    d = np.diff(u)
    a = np.abs(d)
    pad = np.concatenate((np.zeros(offset), a, np.zeros(offset)))
    ref = np.maximum(pad[: a.size], pad[2 * offset:])
    flag = (a > factor * np.maximum(h, ref)) & (a > min_jump)
    idx = np.flatnonzero(flag)
    fronts = []
    if idx.size == 0:
        return fronts
    groups = np.split(idx, np.flatnonzero(np.diff(idx) > 2) + 1)
    edges = grid.edges
    for g in groups:
        i0, i1 = int(g[0]), int(g[-1])
        signs = np.sign(d[i0:i1 + 1])
        signs = signs[np.abs(d[i0:i1 + 1]) > factor * h]
        if np.any(signs != signs[0]):
            raise RefineGrid(f"two fronts within cells {i0}..{i1 + 1}; refine the grid")
        left = u[max(i0 - 1, 0)]
        right = u[min(i1 + 2, u.size - 1)]
        cells = np.arange(max(i0 - 1, 0), min(i1 + 2, u.size - 1) + 1)
        if right != left:
            frac = np.clip((u[cells] - right) / (left - right), 0.0, 1.0)
            x = edges[cells[0]] + h * frac.sum()
        else:
            x = edges[i0 + 1]
        speed = rh_speed(flux, left, right) if flux is not None else float("nan")
        fronts.append(Front(float(x), float(left), float(right), i0, speed))
    return fronts


@dataclass
class ShockCurve:
    times: list
    positions: list
    left: list
    right: list
    rh_speed: list

    def rh_residuals(self) -> np.ndarray:
        """``|observed speed - Rankine-Hugoniot speed|`` at interior points."""
        t, x = np.asarray(self.times), np.asarray(self.positions)
        if t.size < 3:
            return np.zeros(0)
        observed = (x[2:] - x[:-2]) / (t[2:] - t[:-2])
        return np.abs(observed - np.asarray(self.rh_speed)[1:-1])

    def to_list(self):
        return [[float(a), float(b)] for a, b in zip(self.times, self.positions)]


def track_fronts(field: EntropyField, flux: ReducedFlux, window=None, max_jump_speed=None,
                 **detect) -> list:
    """Link fronts detected at consecutive stored times into shock curves."""
    h = field.grid.h
    curves: list[ShockCurve] = []
    open_curves: list[ShockCurve] = []
    prev_t = None
    for t, u in zip(field.times, field.values):
        if t == 0:
            prev_t = t
            continue
        fronts = detect_fronts(u, field.grid, flux, **detect)
        if window is not None:
            fronts = [f for f in fronts if window[0] <= f.x <= window[1]]
        dt = 0.0 if prev_t is None else t - prev_t
        lam = max_jump_speed if max_jump_speed is not None else flux.max_speed(
            float(field.values[0].min()), float(field.values[0].max()))
        still_open = []
        used = set()
        for c in open_curves:
            pred = c.positions[-1] + dt * c.rh_speed[-1]
            best, dist = None, np.inf
            for j, f in enumerate(fronts):
                if j in used:
                    continue
                dd = abs(f.x - pred)
                if dd < dist:
                    best, dist = j, dd
            if best is not None and dist <= 0.5 * lam * dt + 4 * h:
                f = fronts[best]
                used.add(best)
                c.times.append(float(t)); c.positions.append(f.x)
                c.left.append(f.left); c.right.append(f.right); c.rh_speed.append(f.speed)
                still_open.append(c)
        for j, f in enumerate(fronts):
            if j not in used:
                c = ShockCurve([float(t)], [f.x], [f.left], [f.right], [f.speed])
                curves.append(c)
                still_open.append(c)
        open_curves = still_open
        prev_t = t
    return curves


@dataclass
class Diagram:
    characteristics: list
    characteristic_ends: list
    shocks: list
    rarefactions: list
    t_max: float
    landmarks: dict | None = None

    def max_rh_residual(self) -> float:
        vals = [float(np.max(c.rh_residuals())) for c in self.shocks if len(c.times) >= 3]
        return max(vals) if vals else 0.0

    def to_dict(self):
        out = {
            "t_max": self.t_max,
            "characteristics": [[float(a), float(b)] for a, b in self.characteristics],
            "characteristic_ends": [float(v) for v in self.characteristic_ends],
            "shocks": [c.to_list() for c in self.shocks],
            "shock_states": [
                [[float(l), float(r)] for l, r in zip(c.left, c.right)] for c in self.shocks
            ],
            "rarefactions": self.rarefactions,
        }
        if self.landmarks is not None:
            out["landmarks"] = self.landmarks
        return out

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def fan_wedges(profile: Profile, flux: ReducedFlux) -> list:
    """Rarefaction wedges emanating from the jumps of the initial profile."""
    wedges = []
    for j in profile.jumps:
        fan = riemann_fan(flux, j.left, j.right)
        for w in fan.rarefactions:
            wedges.append({"apex": [float(j.at), 0.0], "speed_lo": w.speed_lo, "speed_hi": w.speed_hi,
                           "states": [w.start, w.end]})
    return wedges


def trace_characteristics(profile: Profile, flux: ReducedFlux, t_max, seeds=None, grid=None,
                          n_times=40, wedges=None, min_strength=1e-3, landmarks=None) -> Diagram:
    """Characteristic lines, shock curves and rarefaction wedges.

    Shock curves come from fronts of a Godunov field on ``grid``;
    characteristics ``x0 + t fbar(s0(x0))`` end where they first meet one.
    """
    if grid is None:
        raise BadInput("trace_characteristics needs the Godunov grid")
    if seeds is None:
        seeds = np.linspace(grid.x_min, grid.x_max, 41)
    seeds = np.asarray(seeds, dtype=float)
    times = np.linspace(0.0, t_max, n_times + 1)
    fld = godunov(flux, profile, grid, t_max, times=times)
    curves = [c for c in track_fronts(fld, flux)
              if np.max(np.abs(np.asarray(c.right) - np.asarray(c.left))) >= min_strength]
    slopes = np.asarray(flux.fbar(np.asarray(profile(seeds), dtype=float)), dtype=float)
    ends = []
    for x0, sl in zip(seeds, slopes):
        t_end = float(t_max)
        for c in curves:
            ct, cx = np.asarray(c.times), np.asarray(c.positions)
            if ct.size < 2:
                continue
            gap = x0 + sl * ct - cx
            cross = np.flatnonzero(np.sign(gap[:-1]) * np.sign(gap[1:]) <= 0)
            if cross.size:
                k = cross[0]
                g0, g1 = gap[k], gap[k + 1]
                tc = ct[k] if g0 == g1 else ct[k] + (ct[k + 1] - ct[k]) * g0 / (g0 - g1)
                t_end = min(t_end, float(tc))
        ends.append(t_end)
    rare = fan_wedges(profile, flux) + list(wedges or [])
    return Diagram([(float(a), float(b)) for a, b in zip(seeds, slopes)], ends, curves, rare,
                   float(t_max), landmarks)


@dataclass(frozen=True)
class Apex:
    x: float
    t: float
    left: float
    right: float


@dataclass(frozen=True)
class Reachability:
    kind: str  # REACHED | RAREFACTION | AMBIGUOUS
    x0: tuple
    residual: float
    apex: tuple | None = None


def jump_aware_residual(profile: Profile, sigma, y, window=1e-9) -> float:
    """``|sigma - s0(y)|``, using the nearer one-sided limit at a jump."""
    j = profile.jump_near(float(y), window)
    if j is not None:
        return float(min(abs(sigma - j.left), abs(sigma - j.right)))
    return float(abs(sigma - float(profile(y))))


def backward_reachability(profile: Profile, flux: ReducedFlux, T, x, sigma_e, tol=1e-6,
                          fan_tol=None, h=0.0, apexes=()) -> Reachability:
    """Is ``sigma_e`` at ``(T, x)`` carried by a characteristic from ``t = 0``?

    REACHED when ``sigma_e = s0(x - T fbar(sigma_e))`` within ``tol``;
    RAREFACTION when ``(T, x)`` sits inside a rarefaction fan centred at a
    jump of ``s0`` (or at an extra ``Apex``) with matching speed; AMBIGUOUS
    otherwise.
    """
    fan_tol = max(1e-6, 10 * h) if fan_tol is None else fan_tol
    window = max(1e-9, h)
    x0 = float(x - T * float(flux.fbar(sigma_e)))
    res = jump_aware_residual(profile, sigma_e, x0, window)
    if res <= tol:
        return Reachability("REACHED", (x0,), res)
    centres = [Apex(j.at, 0.0, j.left, j.right) for j in profile.jumps] + list(apexes)
    speed = float(flux.fbar(sigma_e))
    for c in centres:
        if T <= c.t:
            continue
        xi = (x - c.x) / (T - c.t)
        for w in riemann_fan(flux, c.left, c.right).rarefactions:
            if w.speed_lo - fan_tol <= xi <= w.speed_hi + fan_tol and abs(speed - xi) <= fan_tol:
                return Reachability("RAREFACTION", (), res, (c.x, c.t))
    return Reachability("AMBIGUOUS", (x0,), res)


# ---------------------------------------------------------------------------
# focusing construction with quartic flux F(r) = r^4/12 - r^2/2

QUARTIC = ReducedFlux.polynomial([0.0, -1.0, 0.0, 1.0 / 3.0], name="quartic")


@dataclass
class QuarticLandmarks:
    xi: float
    t_xi: float
    focusing_point: tuple
    s1_states: tuple
    s1_initial_speed: float
    s2_states: tuple
    s2_initial_speed: float
    t_star: float
    x_star: float
    sigma_star: float
    r1: float
    s3_speed: float
    rarefaction_forms: bool
    wedge: tuple | None
    t_star_method: str

    def apex(self) -> Apex:
        """Centre of the Riemann problem created when the two shocks merge."""
        return Apex(0.0, self.t_star, self.sigma_star, 1.0)

    def to_dict(self):
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}


def _invert(target, lo, hi):
    """Root of ``r^3/3 - r = target`` on the monotone branch ``[lo, hi]``.

    Closed form ``r = 2 cos((arccos(3c/2) - 2 pi k)/3)``; bisection would lose
    half the digits at ``r = +-1`` where ``fbar'`` vanishes.
    """
    k = {1.0: 0, -1.0: 1, -SQRT3: 2}.get(float(lo))
    if k is None:
        raise ProfileConstructionFailed(f"no cubic branch starts at {lo}")
    c = np.asarray(target, dtype=float)
    if np.any(np.abs(c) > 2 / 3 + 1e-12):
        raise ProfileConstructionFailed("target outside the range of the monotone branch")
    theta = np.arccos(np.clip(1.5 * c, -1.0, 1.0))
    r = np.clip(2.0 * np.cos((theta - 2 * np.pi * k) / 3.0), lo, hi)
    err = np.max(np.abs(np.asarray(QUARTIC.fbar(r)) - c)) if r.size else 0.0
    if not np.isfinite(err) or err > 1e-10:
        raise ProfileConstructionFailed(f"fbar inversion failed on [{lo}, {hi}] (error {err:.3g})")
    return r if r.ndim else float(r)


def _quartic_func(xi, x_star):
    sig_star = float(_invert(2 * x_star + 2, -SQRT3, -1.0))

    def s0(x):
        x = np.asarray(x, dtype=float)
        out = np.empty(x.shape)
        parts = [
            (x < x_star, lambda y: np.full(y.shape, sig_star)),
            ((x >= x_star) & (x < -2 / 3), lambda y: _invert(2 * y + 2, -SQRT3, -1.0)),
            ((x >= -2 / 3) & (x <= 2 / 3), lambda y: _invert(-y, -1.0, 1.0)),
            ((x > 2 / 3) & (x <= 1), lambda y: _invert(2 * y - 2, 1.0, SQRT3)),
            ((x > 1) & (x <= xi), lambda y: _invert(-(2 / 3) * (y - 1) / (xi - 1), 1.0, SQRT3)),
            (x > xi, lambda y: np.ones(y.shape)),
        ]
        for mask, fn in parts:
            if mask.any():
                out[mask] = fn(x[mask])
        return out if out.ndim else float(out)

    def ds0(x):
        x = np.asarray(x, dtype=float)
        r = np.asarray(s0(x), dtype=float)
        slope = np.select(
            [(x >= x_star) & (x < -2 / 3), (x >= -2 / 3) & (x <= 2 / 3), (x > 2 / 3) & (x <= 1),
             (x > 1) & (x <= xi)],
            [2.0, -1.0, 2.0, -(2 / 3) / (xi - 1)], 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(slope == 0, 0.0, slope / (r ** 2 - 1))
        return out

    return s0, ds0, sig_star


def _s2_ode(t, s, xi):
    x0 = (s[0] + 2 * t) / (1 + 2 * t)
    left = float(_invert(2 * x0 - 2, 1.0, SQRT3))
    return [rh_speed(QUARTIC, left, 1.0)]


def quartic_collision_time(xi) -> float:
    """Time ``t*`` at which the shock born at ``(t_xi, 1)`` reaches ``x = 0``.

    Left of that shock the state is carried by characteristics from
    ``[2/3, 1]`` (for ``t >= 1``), so its path solves the Rankine-Hugoniot
    ODE with a closed-form left state.  Needs ``t_xi >= 1``, i.e. ``xi >= 5/3``.
    """
    t_xi = 1.5 * (xi - 1)
    if t_xi < 1:
        raise ProfileConstructionFailed("closed-form shock path needs xi >= 5/3")
    hit = lambda t, s, xi: s[0]
    hit.terminal, hit.direction = True, -1
    sol = integrate.solve_ivp(_s2_ode, (t_xi, t_xi + 1e4), [1.0], args=(xi,), events=hit,
                              rtol=1e-12, atol=1e-13, method="DOP853")
    if not sol.t_events[0].size:
        raise ProfileConstructionFailed("shock never reached x = 0")
    return float(sol.t_events[0][0])


def quartic_collision_time_godunov(xi, n_cells=8000, dt_out=0.05):
    """Estimate ``t*`` from shock fronts of a Godunov run.

    The far-left constant is irrelevant before the collision, so a
    provisional profile with ``x* = -0.999`` is used.  The path of the moving
    shock is tracked until it is within a few cells of ``x = 0`` and a
    quadratic fit is extrapolated to ``x = 0``.
    """
    s0, _, _ = _quartic_func(xi, -0.999)
    prof = Profile(s0, bounds=(-SQRT3, SQRT3), name="quartic-provisional")
    grid = Grid1D(-1.5, xi + 1.0, n_cells)
    u = cell_averages(prof, grid)
    st = _Stepper(QUARTIC, grid, u, 0.9)
    t_xi = 1.5 * (xi - 1)
    st.advance(t_xi + dt_out)
    t = t_xi + dt_out
    ts, xs = [], []
    while t < 1e3:
        fr = [f for f in detect_fronts(st.u, grid, QUARTIC) if -0.5 < f.x < 1.2 and f.left > 1.0]
        if not fr or fr[-1].x < 10 * grid.h:
            break
        ts.append(t)
        xs.append(fr[-1].x)
        st.advance(dt_out)
        t += dt_out
    if len(ts) < 4:
        raise ProfileConstructionFailed("moving shock not tracked")
    c = np.polyfit(ts[-6:], xs[-6:], 2)
    roots = np.roots(c)
    roots = np.real(roots[np.isreal(roots)])
    roots = roots[roots >= ts[-1] - 1e-9]
    if not roots.size:
        return float(ts[-1] - xs[-1] / np.polyval(np.polyder(c), ts[-1]))
    return float(roots.min())


def build_quartic_profile(xi=2.0, t_star_method="ode"):
    """Initial profile whose characteristics focus at ``(x, t) = (0, 1)``.

    On ``[-2/3, 2/3]`` ``fbar(s0(x)) = -x``; on ``[2/3, 1]`` and ``[x*, -2/3]``
    the states in ``[1, sqrt3]`` and ``[-sqrt3, -1]`` satisfy
    ``fbar = 2x - 2`` and ``fbar = 2x + 2``; on ``[1, xi]`` the states fall from
    ``sqrt3`` to ``1`` so that their characteristics focus at ``(1, t_xi)``.
    Outside, ``s0`` is constant.  ``x* = -2t*/(1 + 2t*)`` is tied to the time
    ``t*`` at which the two shocks merge.
    """
    xi = float(xi)
    if not xi > 1:
        raise ProfileConstructionFailed("xi must exceed 1")
    if t_star_method == "ode":
        t_star = quartic_collision_time(xi)
    elif t_star_method == "godunov":
        t_star = quartic_collision_time_godunov(xi)
    else:
        raise BadInput(f"unknown t_star_method {t_star_method!r}")
    x_star = -2 * t_star / (1 + 2 * t_star)
    s0, ds0, sig_star = _quartic_func(xi, x_star)
    profile = Profile(s0, derivative=ds0, bounds=(sig_star, SQRT3), name=f"quartic(xi={xi:g})")

    env = convex_envelope(QUARTIC.F, -SQRT3, 1.0, dF=QUARTIC.fbar)
    chord = [p for p in env.pieces if p.kind == "chord"]
    r1 = float(chord[0].lo) if chord else float("nan")
    fan = riemann_fan(QUARTIC, sig_star, 1.0)
    rare = fan.rarefactions
    wedge = (rare[0].speed_lo, rare[0].speed_hi) if rare else None
    left_s1, right_s1 = float(s0(-2 / 3)), float(s0(2 / 3))
    s2_left, s2_right = float(s0(1.0)), float(s0(xi))
    landmarks = QuarticLandmarks(
        xi=xi,
        t_xi=1.5 * (xi - 1),
        focusing_point=(0.0, 1.0),
        s1_states=(left_s1, right_s1),
        s1_initial_speed=rh_speed(QUARTIC, left_s1, right_s1),
        s2_states=(s2_left, s2_right),
        s2_initial_speed=rh_speed(QUARTIC, s2_left, s2_right),
        t_star=t_star,
        x_star=x_star,
        sigma_star=sig_star,
        r1=r1,
        s3_speed=float(QUARTIC.fbar(r1)),
        rarefaction_forms=bool(rare),
        wedge=wedge,
        t_star_method=t_star_method,
    )
    return profile, landmarks


def track_shock(field: EntropyField, flux, x_start, t_from, window=None, max_step=None):
    """Follow the front nearest ``x_start`` through the stored times ``>= t_from``.

    Returns arrays ``(times, positions, left, right)``.
    """
    ts, xs, ls, rs = [], [], [], []
    pos = x_start
    for t, u in zip(field.times, field.values):
        if t < t_from:
            continue
        fronts = detect_fronts(u, field.grid, flux)
        if window is not None:
            fronts = [f for f in fronts if window[0] <= f.x <= window[1]]
        if not fronts:
            break
        f = min(fronts, key=lambda f: abs(f.x - pos))
        if max_step is not None and abs(f.x - pos) > max_step:
            break
        ts.append(float(t)); xs.append(f.x); ls.append(f.left); rs.append(f.right)
        pos = f.x
    return np.array(ts), np.array(xs), np.array(ls), np.array(rs)
