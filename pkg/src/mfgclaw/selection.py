"""Does the entropy solution pick out a Nash equilibrium?

In the reduced regime the entropy value ``s_e`` at ``(T, x)`` selects an
equilibrium exactly when it satisfies the fixed-point relation
``s_e = s0(x - T fbar(s_e))``.  Each point is classified as SELECTED,
NO_EQUILIBRIUM or NOT_SELECTED.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .claw import (
    Apex,
    EntropyField,
    backward_reachability,
    jump_aware_residual,
    lax_oleinik,
    riemann_fan,
)
from .equilibrium import find_equilibria
from .errors import BadInput, NonconvexFlux, ReducedRegimeRequired
from .measure import EmpiricalMeasure
from .model import GameModel

SELECTED = "SELECTED"
NO_EQUILIBRIUM = "NO_EQUILIBRIUM"
NOT_SELECTED = "NOT_SELECTED"


# ---------------------------------------------------------------------------
# where the entropy value comes from


@dataclass(frozen=True, eq=False)
class RiemannSource:
    """Exact Riemann solution centred at ``(x_c, t_c)``."""

    flux: object
    left: float
    right: float
    x_c: float = 0.0
    t_c: float = 0.0
    h: float = 0.0
    name: str = "riemann"

    def __post_init__(self):
        object.__setattr__(self, "fan", riemann_fan(self.flux, self.left, self.right))

    def __call__(self, T, x):
        if T <= self.t_c:
            raise BadInput("Riemann source evaluated before its centre time")
        return self.fan.value((np.asarray(x, dtype=float) - self.x_c) / (T - self.t_c))

    def apexes(self):
        return (Apex(self.x_c, self.t_c, self.left, self.right),)


@dataclass(frozen=True, eq=False)
class LaxOleinikSource:
    flux: object
    profile: object
    h: float = 0.0
    name: str = "lax_oleinik"

    def __call__(self, T, x):
        return lax_oleinik(self.flux, self.profile, T, x)

    def apexes(self):
        return ()


@dataclass(frozen=True, eq=False)
class FieldSource:
    field: EntropyField
    name: str = "field"

    @property
    def h(self):
        return self.field.grid.h

    def __call__(self, T, x):
        return self.field.value_at(T, x)

    def apexes(self):
        return ()


def auto_source(model: GameModel):
    """Exact source for the model: the merged-shock Riemann problem for the
    quartic construction, a Riemann fan for single-jump constant profiles,
    Lax-Oleinik for convex fluxes."""
    prof = model.sigma0.profile
    marks = model.meta.get("landmarks")
    if marks is not None:
        a = marks.apex()
        return RiemannSource(model.flux, a.left, a.right, a.x, a.t)
    if len(prof.jumps) == 1 and prof.derivative is not None:
        j = prof.jumps[0]
        probe = np.array([j.at - 1.0, j.at - 1e-3, j.at + 1e-3, j.at + 1.0])
        vals = np.asarray(prof(probe))
        if np.allclose(vals[:2], j.left) and np.allclose(vals[2:], j.right):
            return RiemannSource(model.flux, j.left, j.right, j.at, 0.0)
    lo, hi = prof.value_range()
    u = np.linspace(lo, hi, 2001)
    if np.min(model.flux.dfbar(u)) >= -1e-12:
        return LaxOleinikSource(model.flux, prof)
    raise NonconvexFlux("no exact entropy source for this model; pass a Godunov field")


# ---------------------------------------------------------------------------


@dataclass
class SelectionEntry:
    T: float
    x: float
    sigma_entropy: float
    residual: float
    classification: str
    equilibria: list
    ambiguous: bool = False
    at_discontinuity: bool = False

    def to_dict(self):
        return dict(self.__dict__)


@dataclass
class SelectionReport:
    entries: list
    model_id: str
    tol: float
    source: str
    regions: list = field(default_factory=list)
    h: float = 0.0

    @property
    def ambiguous(self) -> bool:
        return any(e.ambiguous for e in self.entries)

    def region(self, classification) -> list:
        return [(lo, hi) for c, lo, hi in self.regions if c == classification]

    def to_dict(self):
        return {
            "model_id": self.model_id,
            "tol": self.tol,
            "source": self.source,
            "grid_spacing": self.h,
            "regions": [{"classification": c, "x_lo": lo, "x_hi": hi} for c, lo, hi in self.regions],
            "entries": [e.to_dict() for e in self.entries],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_csv(self, path):
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["T", "x", "sigma_entropy", "residual", "classification", "equilibria"])
            for e in self.entries:
                w.writerow([repr(e.T), repr(e.x), repr(e.sigma_entropy), repr(e.residual),
                            e.classification, ";".join(repr(s) for s in e.equilibria)])


def _require_reduced(model):
    if not model.reduced or model.sigma0.kind != "mean_profile":
        raise ReducedRegimeRequired("selection needs a linear cost, a reduced flux and a mean-profile sigma0")


def default_tol(model: GameModel, h: float, span=None) -> float:
    """``max(1e-6, 10 h Lip(s0))`` with the Lipschitz constant sampled away
    from jumps.

    For a Godunov field this only accounts for smearing of smooth data; the
    corners of rarefaction fans converge like ``sqrt(h)``, so scans over
    fans with a field source should pass a tolerance matched to the scheme.
    """
    if h <= 0:
        return 1e-6
    prof = model.sigma0.profile
    if span is None:
        span = (-5.0, 5.0)
    lip = prof.lipschitz(span[0], span[1], n=max(2001, int((span[1] - span[0]) / h) + 1))
    return max(1e-6, 10 * h * lip)


def classify_point(model: GameModel, T, m, source=None, tol=None, equilibria=None,
                   **scan) -> SelectionEntry:
    """Classify the initial measure ``m`` (or its mean, a float) at horizon ``T``.

    Decision table: residual within ``tol`` and ``s_e`` within ``tol`` of a
    root -> SELECTED; no equilibrium -> NO_EQUILIBRIUM; otherwise NOT_SELECTED.
    Residuals within a factor two of ``tol`` are flagged as ambiguous.
    """
    _require_reduced(model)
    if not isinstance(m, EmpiricalMeasure):
        m = EmpiricalMeasure.dirac(np.atleast_1d(np.asarray(m, dtype=float)) * model.flux.zeta)
    source = auto_source(model) if source is None else source
    tol = default_tol(model, source.h) if tol is None else tol
    zeta = model.flux.zeta
    x = float(m.mean @ zeta)
    prof = model.sigma0.profile
    s_e = float(source(T, x))
    x0 = x - T * float(model.flux.fbar(s_e))
    window = max(1e-9, source.h)
    residual = jump_aware_residual(prof, s_e, x0, window)
    rep = equilibria if equilibria is not None else find_equilibria(model, T, m, **scan)
    sigmas = rep.sigmas
    near = any(abs(s_e - s) <= tol for s in sigmas)
    if residual <= tol and near:
        cls = SELECTED
    elif not sigmas:
        cls = NO_EQUILIBRIUM
    else:
        cls = NOT_SELECTED
    # a small residual with no nearby root means the scan missed something
    ambiguous = 0.5 * tol < residual <= 2 * tol or (residual <= tol and bool(sigmas) and not near)
    at_disc = any(r.at_discontinuity for r in rep.roots) or prof.jump_near(x0, window) is not None
    return SelectionEntry(float(T), x, s_e, float(residual), cls, [float(s) for s in sigmas],
                          bool(ambiguous), bool(at_disc))


def region_scan(model: GameModel, T, x_grid, source=None, tol=None, **scan) -> SelectionReport:
    """Classify every mean in ``x_grid`` and merge runs into regions.

    A region ``(lo, hi)`` spans the first and last grid points of a run, so
    its boundaries are accurate to one grid spacing.
    """
    _require_reduced(model)
    x_grid = np.asarray(x_grid, dtype=float)
    source = auto_source(model) if source is None else source
    tol = default_tol(model, source.h) if tol is None else tol
    entries = [classify_point(model, T, float(x), source=source, tol=tol, **scan) for x in x_grid]
    regions = []
    for e in entries:
        if regions and regions[-1][0] == e.classification:
            regions[-1][2] = e.x
        else:
            regions.append([e.classification, e.x, e.x])
    h = float(np.min(np.diff(x_grid))) if x_grid.size > 1 else 0.0
    return SelectionReport(entries, model.name, float(tol), getattr(source, "name", "custom"),
                           [tuple(r) for r in regions], h)


def reachability_of(model: GameModel, entry: SelectionEntry, source=None, tol=None):
    """Backward reachability of an entry's point, with the same tolerance."""
    source = auto_source(model) if source is None else source
    tol = default_tol(model, source.h) if tol is None else tol
    return backward_reachability(model.sigma0.profile, model.flux, entry.T, entry.x,
                                 entry.sigma_entropy, tol=tol, h=source.h,
                                 apexes=source.apexes())
