import numpy as np
import pytest

from mfgclaw.errors import NonDifferentiableSigma0, PresetRequired
from mfgclaw.measure import EmpiricalMeasure
from mfgclaw.model import callable_profile
from mfgclaw.monotone import (
    check_monotonicity,
    dsigma_sigma_map,
    pointwise_criterion,
    preset_case,
)
from mfgclaw.presets import composed_example, cubic, reduced_model, separable_example, smooth


def test_separable_pointwise_value():
    # Dpsi(1) = 1, G'(0) = 1, M = -1/(1 + 2), Dphi(1) = 1
    assert pointwise_criterion(separable_example(), [1.0], 1.0, 0.0) == pytest.approx(-1.0 / 3.0)


@pytest.mark.parametrize("factory", [separable_example, composed_example, smooth])
def test_chain_rule_matches_finite_difference(factory, rng):
    model = factory()
    m = EmpiricalMeasure(rng.normal(size=(5, 1)), rng.dirichlet(np.ones(5)))
    s = np.linspace(0.0, 1.5, 7)
    chain, fd = dsigma_sigma_map(model, s, 0.7, m, method="both")
    assert np.allclose(chain, fd, atol=1e-7)


def test_separable_is_monotone_with_c0_zero():
    rep = check_monotonicity(separable_example(), c0=0.0)
    assert rep.verdict == "MONOTONE"
    assert rep.sup_dSigma0 <= 0.0
    assert rep.pointwise_criterion_sup <= 0.0


def test_anti_monotone_mirror():
    # s0(y) = -3y with fbar(r) = r gives d_sigma Sigma0 = 3t
    prof = callable_profile(lambda y: -3.0 * np.asarray(y), lambda y: -3.0 + 0 * np.asarray(y),
                            bounds=(-3.0, 3.0))
    model = reduced_model([0.0, 1.0], prof, "linear")
    ms = [EmpiricalMeasure.dirac([0.2])]
    rep = check_monotonicity(model, sigma_grid=np.linspace(-1, 1, 5), t_grid=[1.0, 2.0],
                             measures=ms, c0=2.0)
    assert rep.verdict == "ANTI_MONOTONE"
    assert rep.inf_dSigma0 == pytest.approx(3.0)
    rep = check_monotonicity(model, sigma_grid=np.linspace(-1, 1, 5), t_grid=[0.0, 2.0],
                             measures=ms)
    assert rep.verdict == "NEITHER"


def test_errors():
    with pytest.raises(NonDifferentiableSigma0):
        check_monotonicity(cubic())
    with pytest.raises(PresetRequired):
        preset_case(smooth())
    with pytest.raises(PresetRequired):
        pointwise_criterion(composed_example(), [1.0], 1.0, 0.5)


def test_report_serializes():
    import json
    rep = check_monotonicity(separable_example(), sigma_grid=[0.0, 1.0], t_grid=[0.5],
                             measures=[EmpiricalMeasure.dirac([1.0])])
    assert json.loads(rep.to_json())["samples"] == 2
