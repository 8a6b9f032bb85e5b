"""Ready-made models for the worked examples.

Reduced presets use ``H(p) = p^2/2`` in one dimension, so ``DH(f) = f`` and
the wave speed is ``f`` itself.
"""

from __future__ import annotations

import numpy as np

from .errors import BadInput
from .model import (
    GameModel,
    ReducedFlux,
    arctan_square,
    arctan_square_grad,
    composed_sigma,
    half_square,
    half_square_grad,
    half_square_hess,
    linear_cost,
    mean_profile_sigma,
    moment_sigma,
    quadratic_hamiltonian,
    separable_cost,
    step_profile,
    tanh_profile,
)


def reduced_model(flux_coeffs, profile, name="reduced") -> GameModel:
    """Linear terminal cost ``f(sigma) x`` with polynomial ``f`` (ascending
    coefficients) and ``sigma_0(m) = s0(mean(m))``."""
    flux = ReducedFlux.polynomial(flux_coeffs, name=name)
    cost = linear_cost(flux.fbar, flux.dfbar)
    return GameModel(quadratic_hamiltonian(1), cost, mean_profile_sigma(profile), flux, name)


def burgers(left=0.0, right=1.0, at=0.0) -> GameModel:
    """``fbar(r) = r`` with step data; equilibria fail to exist in the fan."""
    return reduced_model([0.0, 1.0], step_profile(left, right, at), "burgers")


def cubic(left=-1.0, right=1.0, at=0.0) -> GameModel:
    """``fbar(r) = r^2`` (flux ``r^3/3``) with step data."""
    return reduced_model([0.0, 0.0, 1.0], step_profile(left, right, at), "cubic")


QUARTIC_COEFFS = [0.0, -1.0, 0.0, 1.0 / 3.0]


def quartic(xi=2.0) -> GameModel:
    """``fbar(r) = r^3/3 - r`` (flux ``r^4/12 - r^2/2``) with the focusing
    profile built by :func:`mfgclaw.claw.build_quartic_profile`."""
    from .claw import build_quartic_profile

    profile, landmarks = build_quartic_profile(xi)
    model = reduced_model(QUARTIC_COEFFS, profile, "quartic")
    model.meta["landmarks"] = landmarks
    return model


def smooth(amplitude=1.0, scale=1.0, speed_offset=2.0) -> GameModel:
    """``s0 = tanh`` with ``fbar(r) = r + 2``: uniformly increasing and positive speed."""
    profile = tanh_profile(amplitude, scale)
    return reduced_model([speed_offset, 1.0], profile, "smooth")


def separable_example(dim=1) -> GameModel:
    """Monotone example: ``phi = |x|^2/2``, ``G(s) = 1 + e^s``, ``psi = arctan(|y|^2)``."""
    cost = separable_cost(half_square, half_square_grad, half_square_hess,
                          G=lambda s: 1.0 + np.exp(s), dG=np.exp, dim=dim)
    sigma0 = moment_sigma(arctan_square, arctan_square_grad, bounds=(0.0, np.pi / 2))
    return GameModel(quadratic_hamiltonian(dim), cost, sigma0, None, "separable")


def composed_example(gain=1.0, dim=1) -> GameModel:
    """Composed functional ``sigma_0 = G(int psi)`` with ``g = phi(x) sigma``.

    ``G(s) = gain * (1 + tanh(s))`` is nonnegative, bounded and increasing.
    """
    G = lambda s: gain * (1.0 + np.tanh(s))
    dG = lambda s: gain / np.cosh(s) ** 2
    cost = separable_cost(half_square, half_square_grad, half_square_hess, dim=dim)
    sigma0 = composed_sigma(arctan_square, arctan_square_grad, G, dG, bounds=(gain, gain * (1 + np.tanh(np.pi / 2))))
    return GameModel(quadratic_hamiltonian(dim), cost, sigma0, None, "composed")


PRESETS = {
    "burgers": burgers,
    "cubic": cubic,
    "quartic": quartic,
    "smooth": smooth,
    "separable": separable_example,
    "composed": composed_example,
}


def get_preset(name, **params) -> GameModel:
    try:
        factory = PRESETS[name]
    except KeyError:
        raise BadInput(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return factory(**params)
