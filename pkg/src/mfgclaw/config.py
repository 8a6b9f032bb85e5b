"""Run configuration: a versioned JSON document naming a model and the
parameters of each command.

A model is either ``{"preset": name, "params": {...}}`` or explicit
components::

    {"hamiltonian": "quadratic", "dim": 1,
     "cost": {"type": "linear", "f_coeffs": [0, 1]},
     "sigma0": {"type": "mean_profile", "profile": {"type": "step", "left": 0, "right": 1}}}
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .claw import Grid1D
from .errors import BadInput, ConfigError
from .measure import EmpiricalMeasure, read_measure_csv
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
from .presets import PRESETS, get_preset

SCHEMA_VERSION = 1
COMMANDS = ("riemann", "characteristics", "equilibrium", "monotonicity", "select", "viscosity", "nproj")

_PHI = {"half_square": (half_square, half_square_grad, half_square_hess)}
_PSI = {"arctan_square": (arctan_square, arctan_square_grad, (0.0, np.pi / 2)),
        "half_square": (half_square, half_square_grad, None)}
_GAIN = {
    "identity": (None, None),
    "one_plus_exp": (lambda s: 1.0 + np.exp(s), np.exp),
    "one_plus_tanh": (lambda s: 1.0 + np.tanh(s), lambda s: 1.0 / np.cosh(s) ** 2),
}


@dataclass
class RunConfig:
    raw: dict
    path: Path | None = None
    seed: int = 0
    base: Path | None = None

    @property
    def digest(self) -> str:
        """SHA-256 of the canonical JSON form (sorted keys, no whitespace)."""
        text = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    def section(self, name) -> dict:
        sec = self.raw.get(name, {})
        if not isinstance(sec, dict):
            raise ConfigError(f"section {name!r} must be an object")
        return sec

    def model(self) -> GameModel:
        return build_model(self.raw.get("model"))


def load_config(path, seed=None) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return parse_config(raw, path=path, seed=seed)


def parse_config(raw, path=None, seed=None) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    if "schema_version" not in raw:
        raise ConfigError("config is missing 'schema_version'")
    if raw["schema_version"] != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {raw['schema_version']!r} (expected {SCHEMA_VERSION})")
    if "model" not in raw:
        raise ConfigError("config is missing 'model'")
    base = path.parent if path is not None else Path.cwd()
    return RunConfig(raw, path, int(raw.get("seed", 0) if seed is None else seed), base)


# ---------------------------------------------------------------------------
# models


def _num(d, key, default=None, lo=None, hi=None, kind=float):
    if key not in d:
        if default is None:
            raise ConfigError(f"missing numeric field {key!r}")
        return default
    try:
        v = kind(d[key])
    except (TypeError, ValueError):
        raise ConfigError(f"field {key!r} must be a number, got {d[key]!r}") from None
    if not np.isfinite(v):
        raise ConfigError(f"field {key!r} must be finite")
    if lo is not None and v < lo or hi is not None and v > hi:
        raise ConfigError(f"field {key!r}={v} outside [{lo}, {hi}]")
    return v


def build_profile(spec):
    if not isinstance(spec, dict) or "type" not in spec:
        raise ConfigError("profile must be an object with a 'type'")
    kind = spec["type"]
    if kind == "step":
        return step_profile(_num(spec, "left"), _num(spec, "right"), _num(spec, "at", 0.0))
    if kind == "tanh":
        return tanh_profile(_num(spec, "amplitude", 1.0), _num(spec, "scale", 1.0, lo=1e-12),
                            _num(spec, "shift", 0.0), _num(spec, "offset", 0.0))
    raise ConfigError(f"unknown profile type {kind!r} (step, tanh)")


def _coeffs(spec, key):
    c = spec.get(key)
    if not isinstance(c, list) or not c or not all(isinstance(v, (int, float)) for v in c):
        raise ConfigError(f"{key!r} must be a non-empty list of numbers (ascending powers)")
    return [float(v) for v in c]


def build_model(spec) -> GameModel:
    if not isinstance(spec, dict):
        raise ConfigError("'model' must be an object")
    if "preset" in spec:
        name = spec["preset"]
        if name not in PRESETS:
            raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
        params = spec.get("params", {})
        if not isinstance(params, dict):
            raise ConfigError("preset 'params' must be an object")
        try:
            return get_preset(name, **params)
        except TypeError as exc:
            raise ConfigError(f"bad parameters for preset {name!r}: {exc}") from None
    if spec.get("hamiltonian", "quadratic") != "quadratic":
        raise ConfigError("only the 'quadratic' Hamiltonian can be configured from JSON")
    dim = int(_num(spec, "dim", 1, lo=1, kind=int))
    ham = quadratic_hamiltonian(dim)
    cost_spec, sig_spec = spec.get("cost"), spec.get("sigma0")
    if not isinstance(cost_spec, dict) or not isinstance(sig_spec, dict):
        raise ConfigError("explicit models need 'cost' and 'sigma0' objects")

    flux = None
    if cost_spec.get("type") == "linear":
        if dim != 1:
            raise ConfigError("linear costs are configurable in one dimension only")
        flux = ReducedFlux.polynomial(_coeffs(cost_spec, "f_coeffs"), name="configured")
        cost = linear_cost(flux.fbar, flux.dfbar)
    elif cost_spec.get("type") == "separable":
        phi = _PHI.get(cost_spec.get("phi", "half_square"))
        gain = _GAIN.get(cost_spec.get("G", "identity"))
        if phi is None or gain is None:
            raise ConfigError(f"unknown phi/G; phi in {sorted(_PHI)}, G in {sorted(_GAIN)}")
        cost = separable_cost(*phi, G=gain[0], dG=gain[1], dim=dim)
    else:
        raise ConfigError("cost 'type' must be 'linear' or 'separable'")

    kind = sig_spec.get("type")
    if kind == "mean_profile":
        sigma0 = mean_profile_sigma(build_profile(sig_spec.get("profile")))
    elif kind in ("moment", "composed"):
        psi = _PSI.get(sig_spec.get("psi", "arctan_square"))
        if psi is None:
            raise ConfigError(f"unknown psi; choose from {sorted(_PSI)}")
        if kind == "moment":
            sigma0 = moment_sigma(psi[0], psi[1], bounds=psi[2])
        else:
            gain = _GAIN.get(sig_spec.get("G", "one_plus_tanh"))
            if gain is None or gain[0] is None:
                raise ConfigError(f"composed sigma0 needs G in {sorted(k for k in _GAIN if k != 'identity')}")
            lo, hi = psi[2] if psi[2] is not None else (0.0, 1.0)
            sigma0 = composed_sigma(psi[0], psi[1], gain[0], gain[1],
                                    bounds=(float(gain[0](lo)), float(gain[0](hi))))
    else:
        raise ConfigError("sigma0 'type' must be mean_profile, moment or composed")
    if flux is not None and kind != "mean_profile":
        flux = None
    return GameModel(ham, cost, sigma0, flux, spec.get("name", "configured"))


# ---------------------------------------------------------------------------
# shared parameter blocks


def build_grid(spec, default=None) -> Grid1D:
    spec = default if spec is None else spec
    if not isinstance(spec, dict):
        raise ConfigError("grid must be an object with x_min, x_max, n_cells")
    try:
        return Grid1D(_num(spec, "x_min"), _num(spec, "x_max"),
                      _num(spec, "n_cells", lo=2, hi=2_000_000, kind=int))
    except BadInput as exc:
        raise ConfigError(str(exc)) from None


def build_measures(spec, dim, seed, base=None) -> list:
    """Measures from ``{"atoms": [...], "weights": [...]}``, ``{"csv": path}``
    or ``{"random": {"count": k, "atoms": n, "scale": s}}`` entries."""
    if spec is None:
        spec = [{"random": {"count": 5}}]
    if isinstance(spec, dict):
        spec = [spec]
    rng = np.random.default_rng(seed)
    out = []
    for item in spec:
        if not isinstance(item, dict):
            raise ConfigError("each measure entry must be an object")
        try:
            if "csv" in item:
                p = Path(item["csv"])
                if not p.is_absolute() and base is not None:
                    p = base / p
                if not p.exists():
                    raise ConfigError(f"measure file {p} does not exist")
                out.append(read_measure_csv(p))
            elif "atoms" in item:
                atoms = np.asarray(item["atoms"], dtype=float)
                atoms = atoms.reshape(-1, 1) if atoms.ndim == 1 else atoms
                w = item.get("weights")
                out.append(EmpiricalMeasure.uniform(atoms) if w is None else EmpiricalMeasure(atoms, w))
            elif "random" in item:
                r = item["random"]
                n = int(_num(r, "atoms", 8, lo=1, kind=int))
                scale = _num(r, "scale", 1.0, lo=0.0)
                loc = _num(r, "loc", 0.0)
                for _ in range(int(_num(r, "count", 1, lo=1, kind=int))):
                    out.append(EmpiricalMeasure(loc + scale * rng.normal(size=(n, dim)),
                                                rng.dirichlet(np.ones(n))))
            else:
                raise ConfigError("measure entries need 'atoms', 'csv' or 'random'")
        except (BadInput, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad measure entry: {exc}") from None
    return out
