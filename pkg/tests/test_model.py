import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import optimize

from mfgclaw.errors import EmptyInterval, NonconvexFlux, NonDifferentiableSigma0
from mfgclaw.measure import EmpiricalMeasure
from mfgclaw.model import (
    ReducedFlux,
    convex_envelope,
    convex_hamiltonian_1d,
    fenchel_young_gap,
    legendre_1d,
    linear_cost,
    mean_profile_sigma,
    quadratic_hamiltonian,
    step_profile,
    tanh_profile,
)
from mfgclaw.presets import QUARTIC_COEFFS

# --- Legendre transform ----------------------------------------------------


def test_conjugate_of_exponential_closed_form():
    # sup_u (a u - e^u) = a log a - a for a > 0
    conj = legendre_1d(np.exp, (-20.0, 5.0), dF=np.exp)
    a = np.array([0.1, 0.5, 1.0, 3.0, 20.0])
    assert np.allclose(conj(a), a * np.log(a) - a, atol=1e-10)


def test_conjugate_without_derivative_uses_search():
    conj = legendre_1d(lambda u: 0.5 * u ** 2, (-5.0, 5.0))
    a = np.linspace(-4, 4, 9)
    assert np.allclose(conj(a), 0.5 * a ** 2, atol=1e-10)
    assert np.allclose(conj.argmax(a), a, atol=1e-6)


def test_conjugate_rejects_nonconvex():
    with pytest.raises(NonconvexFlux):
        legendre_1d(np.sin, (0.0, 3.0))
    with pytest.raises(EmptyInterval):
        legendre_1d(np.exp, (1.0, 1.0))


@given(st.floats(-1.5, 1.5))
def test_biconjugation_recovers_convex_function(u):
    # F(u) = cosh(u); F* on a slope interval containing F'([-2, 2]); F** = F
    F, dF = np.cosh, np.sinh
    star = legendre_1d(F, (-4.0, 4.0), dF=dF)
    dstar = lambda a: star.argmax(a)
    starstar = legendre_1d(star, (float(np.sinh(-2.5)), float(np.sinh(2.5))), dF=dstar)
    assert starstar(u) == pytest.approx(float(F(u)), abs=1e-7)


# --- Hamiltonians ------------------------------------------------------------


def _cosh_hamiltonian():
    return convex_hamiltonian_1d(lambda p: np.cosh(p) - 1.0, np.sinh, np.cosh)


def test_cosh_lagrangian_closed_form():
    # L(q) = q asinh(q) - sqrt(1 + q^2) + 1
    ham = _cosh_hamiltonian()
    q = np.linspace(-5, 5, 11)[:, None]
    expected = q[:, 0] * np.arcsinh(q[:, 0]) - np.sqrt(1 + q[:, 0] ** 2) + 1
    assert np.allclose(ham.L(q), expected, atol=1e-10)


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_fenchel_young_inequality(p, q):
    for ham in (quadratic_hamiltonian(1), _cosh_hamiltonian()):
        gap = float(fenchel_young_gap(ham, np.array([p]), np.array([q])))
        assert gap >= -1e-8


@given(st.floats(-3, 3))
def test_fenchel_young_equality_on_graph(p):
    for ham in (quadratic_hamiltonian(1), _cosh_hamiltonian()):
        P = np.array([p])
        gap = float(fenchel_young_gap(ham, P, ham.DH(P)))
        assert abs(gap) <= 1e-8


def test_quadratic_hamiltonian_vector():
    ham = quadratic_hamiltonian(3)
    p = np.array([[1.0, 2.0, 2.0]])
    assert ham.H(p)[0] == pytest.approx(4.5)
    assert ham.D2H(p).shape == (1, 3, 3)


# --- costs and sigma0 ------------------------------------------------------


def test_linear_cost_derivatives():
    cost = linear_cost(lambda s: s ** 2, lambda s: 2 * s)
    x = np.array([[3.0]])
    assert cost.g(x, 2.0)[0] == pytest.approx(12.0)
    assert cost.grad(x, 2.0)[0, 0] == pytest.approx(4.0)
    assert cost.dsigma(x, 2.0)[0] == pytest.approx(12.0)
    assert np.all(cost.hess(x, 2.0) == 0)


def test_linear_cost_fd_derivative():
    cost = linear_cost(np.sin)
    assert float(cost.df(np.array(0.3))[0]) == pytest.approx(np.cos(0.3), abs=1e-8)


def test_tanh_primitive_matches_quadrature():
    from scipy.integrate import quad
    prof = tanh_profile(1.3, 0.7, shift=0.4, offset=0.2)
    for y in (-3.0, -0.5, 0.0, 2.0, 40.0):
        exact = quad(lambda s: float(prof(s)), 0.0, y, epsabs=1e-13, limit=200)[0]
        assert prof.primitive(y) == pytest.approx(exact, abs=1e-9)


def test_step_profile_limits():
    prof = step_profile(-1.0, 2.0, at=0.5)
    assert prof(0.4) == -1.0 and prof(0.5) == 2.0
    assert prof.primitive(1.5) == pytest.approx(-0.5 + 2.0)
    assert prof.jump_near(0.5 + 1e-12, 1e-9).left == -1.0
    assert prof.lipschitz(-2, 2) == 0.0


def test_mean_profile_sigma_and_gradient():
    sig = mean_profile_sigma(tanh_profile())
    m = EmpiricalMeasure([0.0, 1.0], [0.5, 0.5])
    assert sig(m) == pytest.approx(np.tanh(0.5))
    g = sig.gradient_atoms(m.atoms, m.weights)
    assert np.allclose(g, 1.0 / np.cosh(0.5) ** 2)
    with pytest.raises(NonDifferentiableSigma0):
        mean_profile_sigma(step_profile(0, 1)).gradient_atoms(m.atoms, m.weights)


# --- flux and envelopes --------------------------------------------------------


def test_polynomial_flux_primitive():
    flux = ReducedFlux.polynomial([0.0, 0.0, 1.0])
    assert flux.F(1.5) == pytest.approx(1.5 ** 3 / 3)
    assert np.allclose(flux.critical_points(-1, 1), [0.0])


def test_from_model_matches_polynomial():
    cost = linear_cost(lambda s: s ** 2 + 1.0)
    flux = ReducedFlux.from_model(quadratic_hamiltonian(1), cost)
    assert float(flux.fbar(2.0)) == pytest.approx(5.0)
    assert float(flux.F(1.0)) == pytest.approx(1.0 / 3.0 + 1.0, abs=1e-12)


def test_speed_conditions_reported_separately():
    c = ReducedFlux.polynomial([2.0, 1.0]).speed_conditions(-1.0, 1.0)
    assert c["uniformly_increasing"] and c["uniformly_positive"]
    c = ReducedFlux.polynomial([0.0, 1.0]).speed_conditions(-1.0, 1.0)
    assert c["uniformly_increasing"] and not c["uniformly_positive"]


def _max_slope_tangent(F, b, lo, hi):
    """Brute-force oracle: the lower-envelope chord ending at ``b`` touches F
    where the secant slope to ``b`` is largest."""
    u = np.linspace(lo, hi, 200001)
    S = (F(b) - F(u)) / (b - u)
    k = int(np.argmax(S))
    res = optimize.minimize_scalar(lambda v: -(F(b) - F(v)) / (b - v),
                                   bounds=(u[max(k - 1, 0)], u[min(k + 1, u.size - 1)]),
                                   method="bounded", options={"xatol": 1e-13})
    return res.x


def test_quartic_envelope_tangency_against_oracle():
    flux = ReducedFlux.polynomial(QUARTIC_COEFFS)
    env = convex_envelope(flux.F, -1.7, 1.0, dF=flux.fbar)
    (lo, hi), = env.chords
    assert hi == 1.0
    oracle = _max_slope_tangent(flux.F, 1.0, -1.7, 0.9)
    assert lo == pytest.approx(oracle, abs=1e-6)
    assert lo == pytest.approx(-5.0 / 3.0, abs=1e-8)


def test_envelope_below_function_and_convex():
    flux = ReducedFlux.polynomial([0.0, -1.0, 0.0, 1.0])
    env = convex_envelope(flux.F, -2.0, 2.0, dF=flux.fbar)
    u = np.linspace(-2, 2, 2001)
    e = env(u)
    assert np.all(e <= flux.F(u) + 1e-12)
    assert np.all(np.diff(e, 2) >= -1e-9)
    upper = convex_envelope(flux.F, -2.0, 2.0, dF=flux.fbar, upper=True)
    assert np.all(upper(u) >= flux.F(u) - 1e-12)


def test_envelope_of_convex_function_is_itself():
    env = convex_envelope(lambda u: u ** 2, -1.0, 1.0)
    assert env.chords == []
