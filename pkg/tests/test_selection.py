import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mfgclaw.claw import Grid1D, backward_reachability, godunov
from mfgclaw.equilibrium import find_equilibria
from mfgclaw.errors import ReducedRegimeRequired
from mfgclaw.measure import EmpiricalMeasure
from mfgclaw.presets import burgers, cubic, quartic, separable_example, smooth
from mfgclaw.selection import (
    NO_EQUILIBRIUM,
    NOT_SELECTED,
    SELECTED,
    FieldSource,
    auto_source,
    classify_point,
    reachability_of,
    region_scan,
)


def test_burgers_fan_point():
    e = classify_point(burgers(), 1.0, 0.5)
    assert e.sigma_entropy == pytest.approx(0.5)
    assert e.residual == pytest.approx(0.5)
    assert e.classification == NO_EQUILIBRIUM and e.equilibria == []


def test_cubic_fan_point():
    e = classify_point(cubic(), 1.0, EmpiricalMeasure.uniform([0.2, 0.8]))
    assert e.sigma_entropy == pytest.approx(np.sqrt(0.5), abs=1e-12)
    assert e.equilibria == [pytest.approx(-1.0, abs=1e-10)]
    assert e.classification == NOT_SELECTED


def test_non_reduced_model_rejected():
    with pytest.raises(ReducedRegimeRequired):
        classify_point(separable_example(), 1.0, 0.0)


@given(st.floats(0.05, 3.0), st.floats(-4.0, 5.0))
def test_smooth_increasing_profile_is_selected(T, x):
    e = classify_point(smooth(), T, x)
    assert e.classification == SELECTED


@given(st.sampled_from(["burgers", "cubic"]), st.floats(-0.5, 1.5))
def test_decision_table_invariants(name, x):
    model = burgers() if name == "burgers" else cubic()
    e = classify_point(model, 1.0, x)
    tol = 1e-6
    if e.classification == SELECTED:
        assert e.residual <= tol
        assert min(abs(e.sigma_entropy - s) for s in e.equilibria) <= tol
    if e.classification == NO_EQUILIBRIUM:
        assert find_equilibria(model, 1.0, EmpiricalMeasure.dirac([x])).classification == "NONE"
    reach = reachability_of(model, e)
    if e.classification == SELECTED:
        assert reach.kind == "REACHED"
    if reach.kind == "RAREFACTION":
        assert e.classification in (NO_EQUILIBRIUM, NOT_SELECTED)


def test_translation_covariance():
    b = 0.37
    x = np.linspace(-0.5, 1.5, 81)
    base = region_scan(cubic(), 1.0, x)
    shifted = region_scan(cubic(at=b), 1.0, x + b)
    assert [e.classification for e in base.entries] == [e.classification for e in shifted.entries]
    for (c1, lo1, hi1), (c2, lo2, hi2) in zip(base.regions, shifted.regions):
        assert c1 == c2
        assert lo2 - lo1 == pytest.approx(b, abs=1e-12)
        assert hi2 - hi1 == pytest.approx(b, abs=1e-12)


def test_quartic_wedge_is_not_selected():
    model = quartic(6.0)
    marks = model.meta["landmarks"]
    h = 2e-3
    rep = region_scan(model, marks.t_star + 1.0, np.arange(0.05, 0.17, h))
    (lo, hi), = rep.region(NOT_SELECTED)
    assert lo == pytest.approx(marks.wedge[0], abs=5 * h)
    assert hi == pytest.approx(marks.wedge[1], abs=5 * h)


def test_quartic_source_is_merged_shock_riemann_problem():
    src = auto_source(quartic(2.0))
    marks = quartic(2.0).meta["landmarks"]
    assert (src.x_c, src.t_c, src.left, src.right) == (0.0, marks.t_star, marks.sigma_star, 1.0)


def test_godunov_field_source_reproduces_cubic_regions():
    grid = Grid1D(-2.0, 2.0, 1000)
    model = cubic()
    field = godunov(model.flux, model.sigma0.profile, grid, 1.0)
    h = grid.h
    # a first-order field smears the fan corner at x = 1 over many cells, so
    # the tolerance has to match the scheme error rather than the default
    rep = region_scan(model, 1.0, np.arange(-0.5, 1.5, 0.01), source=FieldSource(field), tol=5e-3)
    (lo, hi), = rep.region(NOT_SELECTED)
    assert lo == pytest.approx(0.25, abs=5 * h + 0.01)
    assert hi == pytest.approx(1.0, abs=5 * h + 0.01)


class _Offset:
    """Exact smooth-model entropy value pushed off by a fixed amount."""

    h = 0.0
    name = "offset"

    def __init__(self, model, delta):
        self.inner, self.delta = auto_source(model), delta

    def __call__(self, T, x):
        return self.inner(T, x) + self.delta

    def apexes(self):
        return ()


def test_near_threshold_residual_is_flagged():
    model = smooth()
    e = classify_point(model, 1.0, 0.3, source=_Offset(model, 1e-6), tol=1e-6)
    assert e.ambiguous
    assert e.classification == NOT_SELECTED
    e = classify_point(model, 1.0, 0.3, source=_Offset(model, 1e-4), tol=1e-6)
    assert not e.ambiguous


def test_report_outputs(tmp_path):
    rep = region_scan(burgers(), 1.0, np.linspace(-0.5, 1.5, 21))
    d = json.loads(rep.to_json())
    assert [r["classification"] for r in d["regions"]] == [SELECTED, NO_EQUILIBRIUM, SELECTED]
    p = tmp_path / "sel.csv"
    rep.to_csv(p)
    lines = p.read_text().splitlines()
    assert lines[0] == "T,x,sigma_entropy,residual,classification,equilibria"
    assert len(lines) == 22
