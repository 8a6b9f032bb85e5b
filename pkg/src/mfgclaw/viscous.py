"""Viscous regularization ``d_t s + d_x F(s) = eps d_xx s`` and the
vanishing-viscosity limit.

The scheme is explicit: exact Godunov (upwind) advection fluxes plus a
centred diffusive flux, with ``dt = cfl / (lam/h + 2 eps/h^2)``.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .claw import EntropyField, Grid1D, _Stepper, cell_averages, godunov, riemann_fan
from .errors import BadInput
from .model import Profile, ReducedFlux

DEFAULT_MAX_STEPS = 2_000_000


@dataclass(frozen=True, eq=False)
class ViscousField:
    """Cell averages of the viscous solution on the padded grid.

    ``core`` is the caller's grid; ``mass_defect`` is the largest mismatch
    between the change of total mass and the time-integrated boundary flux.
    """

    grid: Grid1D
    eps: float
    times: np.ndarray
    values: np.ndarray
    core: Grid1D
    mass_defect: float = 0.0
    steps: int = 0
    scheme: str = "godunov+centred-diffusion"

    def as_entropy_field(self) -> EntropyField:
        return EntropyField(self.grid, self.times, self.values, "VISCOUS")

    def at_time(self, t, atol=1e-9):
        return self.as_entropy_field().at_time(t, atol)

    def value_at(self, t, x):
        return self.as_entropy_field().value_at(t, x)

    def max_jump(self, t=None) -> float:
        u = self.values[-1] if t is None else self.at_time(t)
        return float(np.max(np.abs(np.diff(u))))


def padded_grid(grid: Grid1D, pad: float) -> Grid1D:
    """Extend ``grid`` by a whole number of cells of the same width on both sides."""
    k = int(np.ceil(max(pad, 0.0) / grid.h))
    h = grid.h
    return Grid1D(grid.x_min - k * h, grid.x_max + k * h, grid.n_cells + 2 * k)


def _speed_bound(flux, lo, hi):
    return flux.max_speed(lo, hi) if hi > lo else abs(float(flux.fbar(lo)))


def viscous_solve(flux: ReducedFlux, profile, eps, T, grid: Grid1D, cfl=0.9, times=None,
                  max_steps=DEFAULT_MAX_STEPS, pad=None) -> ViscousField:
    """Solve the viscous law on ``grid`` padded by ``lam T + 6 sqrt(eps T)``.

    Constant extrapolation is used at the padded boundary.  Raises
    ``StiffnessError`` when more than ``max_steps`` steps would be needed.
    """
    if not eps > 0:
        raise BadInput(f"eps must be positive, got {eps}")
    if not T > 0:
        raise BadInput(f"T must be positive, got {T}")
    if isinstance(profile, Profile):
        lo, hi = profile.value_range()
    else:
        vals = np.asarray(profile(grid.centers), dtype=float)
        lo, hi = float(vals.min()), float(vals.max())
    if pad is None:
        pad = _speed_bound(flux, lo, hi) * T + 6.0 * np.sqrt(eps * T)
    big = padded_grid(grid, pad)
    u0 = cell_averages(profile, big) if isinstance(profile, Profile) else np.asarray(profile(big.centers), dtype=float)
    stepper = _Stepper(flux, big, u0, cfl, eps=eps, max_steps=max_steps)
    h = big.h
    mass0 = float(u0.sum() * h)
    out_t = sorted(set([0.0, float(T)] + ([] if times is None else [float(t) for t in times])))
    vals, now, defect = [], 0.0, 0.0
    for t in out_t:
        stepper.advance(t - now)
        now = t
        vals.append(stepper.u.copy())
        defect = max(defect, abs(float(stepper.u.sum() * h) - mass0 - stepper.boundary_flux))
    steps = int(np.ceil(T / stepper.dt_max)) if np.isfinite(stepper.dt_max) else 0
    return ViscousField(big, float(eps), np.array(out_t), np.array(vals), grid, defect, steps)


# ---------------------------------------------------------------------------


@dataclass
class ConvergenceRow:
    epsilon: float
    l1_distance: float
    runtime_ms: float
    mass_defect: float


@dataclass
class ConvergenceReport:
    rows: list
    reference: str
    window: tuple
    T: float
    slack: float = 0.1
    notes: list = field(default_factory=list)

    @property
    def distances(self) -> np.ndarray:
        return np.array([r.l1_distance for r in self.rows])

    @property
    def monotone(self) -> bool:
        """Distances non-increasing as eps decreases, within relative slack."""
        d = self.distances
        return bool(np.all(d[1:] <= (1.0 + self.slack) * d[:-1]))

    def to_dict(self):
        return {
            "reference": self.reference,
            "window": list(self.window),
            "T": self.T,
            "slack": self.slack,
            "monotone": self.monotone,
            "rows": [r.__dict__ for r in self.rows],
            "notes": list(self.notes),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_csv(self, path, with_runtime=True):
        """``epsilon, l1_distance, runtime_ms``; ``with_runtime=False`` writes
        zeros for the timing column so repeated runs are byte-identical."""
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["epsilon", "l1_distance", "runtime_ms"])
            for r in self.rows:
                w.writerow([repr(r.epsilon), repr(r.l1_distance),
                            repr(r.runtime_ms if with_runtime else 0.0)])


def _single_step(profile):
    """``(left, right, at)`` when the profile is one constant-state jump."""
    if not isinstance(profile, Profile) or len(profile.jumps) != 1:
        return None
    j = profile.jumps[0]
    probe = np.array([j.at - 10.0, j.at - 1e-6, j.at + 1e-6, j.at + 10.0])
    v = np.asarray(profile(probe), dtype=float)
    if np.allclose(v[:2], j.left, atol=0) and np.allclose(v[2:], j.right, atol=0):
        return j.left, j.right, j.at
    return None


def _exact_cell_averages(fan, x0, T, grid, n_sub=16):
    """Cell averages of a self-similar fan by midpoint sub-sampling."""
    e = grid.edges
    sub = e[:-1, None] + (np.arange(n_sub) + 0.5)[None, :] * (grid.h / n_sub)
    return fan.value((sub - x0) / T).mean(axis=1)


def vanishing_viscosity_study(flux: ReducedFlux, profile, eps_list, T, grid: Grid1D,
                              reference=None, window_fraction=0.8, cfl=0.9,
                              slack=0.1, max_steps=DEFAULT_MAX_STEPS) -> ConvergenceReport:
    """L1 distance at time ``T`` between viscous and entropy solutions.

    The reference is the exact Riemann fan for single-step data and a Godunov
    run on a 4x finer grid otherwise (``reference`` may force either:
    ``"riemann"`` or ``"godunov"``).  Distances are measured on the central
    ``window_fraction`` of the padded domain, which is shared by all eps.
    """
    eps_list = [float(e) for e in eps_list]
    if not eps_list:
        raise BadInput("eps_list is empty")
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise BadInput("eps_list must be strictly decreasing")
    lo, hi = profile.value_range()
    pad = _speed_bound(flux, lo, hi) * T + 6.0 * np.sqrt(eps_list[0] * T)
    big = padded_grid(grid, pad)
    width = big.x_max - big.x_min
    mid = 0.5 * (big.x_min + big.x_max)
    window = (mid - 0.5 * window_fraction * width, mid + 0.5 * window_fraction * width)
    inside = (big.centers >= window[0]) & (big.centers <= window[1])

    step = _single_step(profile)
    kind = reference or ("riemann" if step is not None else "godunov")
    if kind == "riemann":
        if step is None:
            raise BadInput("the Riemann reference needs single-step data")
        left, right, at = step
        ref = _exact_cell_averages(riemann_fan(flux, left, right), at, T, big)
    elif kind == "godunov":
        fine = Grid1D(big.x_min, big.x_max, 4 * big.n_cells)
        u = godunov(flux, profile, fine, T, cfl=cfl).at_time(T)
        ref = u.reshape(big.n_cells, 4).mean(axis=1)
    else:
        raise BadInput(f"unknown reference {reference!r}")

    rows = []
    for eps in eps_list:
        t0 = time.perf_counter()
        vf = viscous_solve(flux, profile, eps, T, grid, cfl=cfl, max_steps=max_steps, pad=pad)
        ms = 1e3 * (time.perf_counter() - t0)
        d = float(np.sum(np.abs(vf.values[-1] - ref)[inside]) * big.h)
        rows.append(ConvergenceRow(eps, d, ms, vf.mass_defect))
    rep = ConvergenceReport(rows, kind, tuple(float(w) for w in window), float(T), slack)
    if not rep.monotone:
        rep.notes.append("distances are not monotone in eps within the slack")
    return rep
