import numpy as np
import pytest
from scipy.special import erf

from mfgclaw.claw import Grid1D
from mfgclaw.errors import BadInput, StiffnessError
from mfgclaw.model import ReducedFlux, step_profile, tanh_profile
from mfgclaw.viscous import padded_grid, vanishing_viscosity_study, viscous_solve

BURGERS = ReducedFlux.polynomial([0.0, 1.0])
CUBIC = ReducedFlux.polynomial([0.0, 0.0, 1.0])


def test_heat_equation_matches_erf():
    flux = ReducedFlux.polynomial([0.0])
    eps, t = 0.01, 0.1
    vf = viscous_solve(flux, step_profile(0.0, 1.0), eps, t, Grid1D(-1, 1, 400))
    x = vf.grid.centers
    exact = 0.5 * (1 + erf(x / np.sqrt(4 * eps * t)))
    assert np.max(np.abs(vf.values[-1] - exact)) <= 1e-3


def test_constant_data_stays_constant():
    vf = viscous_solve(CUBIC, step_profile(0.4, 0.4), 0.05, 0.5, Grid1D(-1, 1, 100))
    # averages come from primitive differences, so 0.4 only up to rounding
    assert np.max(np.abs(vf.values - 0.4)) <= 1e-13
    assert np.ptp(vf.values[-1]) <= np.ptp(vf.values[0])


@pytest.mark.parametrize("flux", [BURGERS, CUBIC])
def test_maximum_principle_and_mass_balance(flux):
    vf = viscous_solve(flux, step_profile(-1.0, 1.0), 0.02, 1.0, Grid1D(-2, 2, 400),
                       times=[0.25, 0.5])
    assert vf.values.min() >= -1 - 1e-8 and vf.values.max() <= 1 + 1e-8
    assert vf.mass_defect <= 1e-6


def test_burgers_small_eps_close_to_fan():
    vf = viscous_solve(BURGERS, step_profile(0.0, 1.0), 1e-3, 1.0, Grid1D(-2, 2, 2000))
    x = vf.grid.centers
    inside = (x >= -2) & (x <= 2)
    err = np.sum(np.abs(vf.values[-1] - np.clip(x, 0, 1))[inside]) * vf.grid.h
    assert err <= 0.05


def test_profiles_get_smoother_with_more_viscosity():
    grid = Grid1D(-2, 2, 400)
    jumps = [viscous_solve(CUBIC, step_profile(-1, 1), e, 1.0, grid).max_jump() for e in (0.1, 0.01)]
    assert jumps[0] < jumps[1]


def test_stiffness_error():
    with pytest.raises(StiffnessError):
        viscous_solve(BURGERS, step_profile(0, 1), 1.0, 1.0, Grid1D(-1, 1, 4000), max_steps=1000)


def test_bad_inputs():
    with pytest.raises(BadInput):
        viscous_solve(BURGERS, step_profile(0, 1), 0.0, 1.0, Grid1D(-1, 1, 10))
    with pytest.raises(BadInput):
        vanishing_viscosity_study(BURGERS, step_profile(0, 1), [0.01, 0.1], 1.0, Grid1D(-1, 1, 10))


def test_padded_grid_keeps_spacing():
    g = Grid1D(-1, 1, 100)
    big = padded_grid(g, 0.5)
    assert big.h == pytest.approx(g.h)
    assert big.x_min <= -1.5 and big.x_max >= 1.5


def test_study_with_godunov_reference(tmp_path):
    rep = vanishing_viscosity_study(BURGERS, tanh_profile(), [0.2, 0.1, 0.05], 1.0,
                                    Grid1D(-3, 3, 300))
    assert rep.reference == "godunov"
    assert rep.monotone
    p = tmp_path / "conv.csv"
    rep.to_csv(p)
    assert p.read_text().splitlines()[0] == "epsilon,l1_distance,runtime_ms"


def test_grid_refinement_stabilizes_distance():
    d = [vanishing_viscosity_study(BURGERS, step_profile(0, 1), [0.05], 1.0, Grid1D(-2, 2, n)).distances[0]
         for n in (200, 400, 800)]
    assert abs(d[2] - d[1]) < abs(d[1] - d[0])


def test_cubic_distance_keeps_falling_below_smallest_study_eps():
    # the sonic-shock tail decays slowly; the distance still drops with eps
    rep = vanishing_viscosity_study(CUBIC, step_profile(-1.0, 1.0), [0.0125, 0.00625], 1.0,
                                    Grid1D(-2, 2, 800))
    d = rep.distances
    assert d[1] < 0.8 * d[0]
