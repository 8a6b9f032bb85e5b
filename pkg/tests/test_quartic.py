import numpy as np
import pytest

from mfgclaw.claw import (
    QUARTIC,
    build_quartic_profile,
    quartic_collision_time,
    quartic_collision_time_godunov,
)
from mfgclaw.errors import BadInput, ProfileConstructionFailed

SQ3 = np.sqrt(3.0)


@pytest.fixture(scope="module")
def built():
    return build_quartic_profile(2.0)


def test_landmark_values(built):
    prof, _ = built
    assert prof(2 / 3) == pytest.approx(1.0, abs=1e-10)
    assert prof(-2 / 3) == pytest.approx(-1.0, abs=1e-10)
    assert prof(1.0) == pytest.approx(SQ3, abs=1e-10)
    assert prof(5.0) == 1.0


def test_middle_characteristics_focus_at_origin_time_one(built):
    prof, marks = built
    x = np.linspace(-2 / 3, 2 / 3, 101)
    assert np.allclose(x + QUARTIC.fbar(prof(x)), 0.0, atol=1e-12)
    assert marks.focusing_point == (0.0, 1.0)


def test_right_characteristics_focus_at_t_xi(built):
    prof, marks = built
    x = np.linspace(1.0, 2.0, 51)
    assert marks.t_xi == 1.5
    assert np.allclose(x + marks.t_xi * QUARTIC.fbar(prof(x)), 1.0, atol=1e-12)


def test_shock_speeds(built):
    _, marks = built
    assert marks.s1_initial_speed == pytest.approx(0.0, abs=1e-12)
    assert marks.s2_initial_speed == pytest.approx(-1.0 / (3.0 * (SQ3 - 1.0)), abs=1e-6)
    assert marks.r1 == pytest.approx(-5.0 / 3.0, abs=1e-8)
    assert marks.s3_speed == pytest.approx(10.0 / 81.0, abs=1e-8)


def test_x_star_and_sigma_star_consistent(built):
    prof, marks = built
    assert marks.x_star == pytest.approx(-2 * marks.t_star / (1 + 2 * marks.t_star))
    assert QUARTIC.fbar(marks.sigma_star) == pytest.approx(2 * marks.x_star + 2, abs=1e-12)
    # characteristic from x* reaches x = 0 exactly at t*
    assert marks.x_star + marks.t_star * QUARTIC.fbar(marks.sigma_star) == pytest.approx(0.0, abs=1e-9)


def test_no_rarefaction_for_xi_two(built):
    _, marks = built
    assert marks.sigma_star > -5.0 / 3.0
    assert not marks.rarefaction_forms and marks.wedge is None


def test_rarefaction_for_large_xi():
    _, marks = build_quartic_profile(6.0)
    assert marks.rarefaction_forms
    lo, hi = marks.wedge
    assert lo == pytest.approx(float(QUARTIC.fbar(marks.sigma_star)), abs=1e-12)
    assert hi == pytest.approx(10.0 / 81.0, abs=1e-8)


def test_collision_time_cross_check():
    t_ode = quartic_collision_time(2.0)
    t_fv = quartic_collision_time_godunov(2.0, n_cells=4000)
    assert abs(t_ode - t_fv) <= 5e-3


def test_construction_errors():
    with pytest.raises(ProfileConstructionFailed):
        build_quartic_profile(1.0)
    with pytest.raises(ProfileConstructionFailed):
        quartic_collision_time(1.5)
    with pytest.raises(BadInput):
        build_quartic_profile(2.0, t_star_method="guess")


def test_landmarks_serialize(built):
    import json
    d = json.loads(json.dumps(built[1].to_dict()))
    assert d["focusing_point"] == [0.0, 1.0]
