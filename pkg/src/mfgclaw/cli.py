"""``mfgclaw <command> --config CONFIG [--out DIR] [--seed N] [--strict]``

Every command writes data files (CSV/JSON) plus ``manifest.json`` into the
output directory.  Exit codes: 0 success, 2 configuration error, 3 solver
error, 4 ambiguous classification under ``--strict``.  Failures are printed
to stderr as a JSON object.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import platform
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .claw import (
    Grid1D,
    build_quartic_profile,
    godunov,
    riemann_field,
    riemann_fan,
    trace_characteristics,
)
from .config import COMMANDS, RunConfig, build_grid, build_measures, load_config, _num
from .equilibrium import find_equilibria, master_residual, nplayer_residual, verify_nash
from .errors import ConfigError, MfgClawError
from .monotone import check_monotonicity
from .selection import region_scan
from .viscous import vanishing_viscosity_study

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_AMBIGUOUS = 0, 2, 3, 4


def _plain(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (tuple, set)):
        return list(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_plain) + "\n"


class Output:
    """Collects written files so the manifest can list their digests."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.files = []

    def path(self, name) -> Path:
        self.files.append(name)
        return self.root / name

    def json(self, name, obj):
        self.path(name).write_text(_dump(obj))

    def manifest(self, cfg: RunConfig, command, tolerances, extra=None):
        digests = {}
        for name in self.files:
            digests[name] = hashlib.sha256((self.root / name).read_bytes()).hexdigest()
        body = {
            "command": command,
            "config_sha256": cfg.digest,
            "seed": cfg.seed,
            "versions": {
                "mfgclaw": __version__,
                "numpy": np.__version__,
                "scipy": scipy.__version__,
                "python": platform.python_version(),
            },
            "tolerances": tolerances,
            "outputs": digests,
        }
        if extra:
            body.update(extra)
        (self.root / "manifest.json").write_text(_dump(body))


def _require_flux(model):
    if model.flux is None:
        raise ConfigError(f"model {model.name!r} has no reduced flux (needs a linear cost and a mean-profile sigma0)")
    return model.flux


def _times(sec, T):
    times = sec.get("times")
    if times is None:
        return [T]
    if not isinstance(times, list) or any(not 0 <= float(t) <= T for t in times):
        raise ConfigError("'times' must be a list of values in [0, T]")
    return sorted(set(float(t) for t in times) | {T})


# ---------------------------------------------------------------------------
# commands


def cmd_riemann(cfg: RunConfig, out: Output):
    model = cfg.model()
    flux = _require_flux(model)
    sec = cfg.section("riemann")
    jumps = model.sigma0.profile.jumps
    default = jumps[0] if len(jumps) == 1 else None
    left = _num(sec, "left", None if default is None else default.left)
    right = _num(sec, "right", None if default is None else default.right)
    x0 = _num(sec, "at", 0.0 if default is None else default.at)
    T = _num(sec, "T", 1.0, lo=1e-12)
    grid = build_grid(sec.get("grid"), {"x_min": -2.0, "x_max": 2.0, "n_cells": 400})
    times = [t for t in _times(sec, T) if t > 0]

    fan = riemann_fan(flux, left, right)
    check = fan.validate()
    out.json("fan.json", {**fan.to_dict(), "at": x0, "validation": check})
    riemann_field(flux, left, right, grid, times, x0=x0).to_csv(out.path("field_exact.csv"))
    if sec.get("godunov", True):
        u0 = np.where(grid.centers < x0, left, right).astype(float)
        godunov(flux, u0, grid, T, cfl=_num(sec, "cfl", 0.9, lo=1e-6, hi=1.0), times=times).to_csv(
            out.path("field_godunov.csv"))
    return {"riemann_validation_tol": 1e-10}, False


def cmd_characteristics(cfg: RunConfig, out: Output):
    model = cfg.model()
    flux = _require_flux(model)
    sec = cfg.section("characteristics")
    landmarks = model.meta.get("landmarks")
    profile = model.sigma0.profile
    if landmarks is None and "xi" in sec:
        profile, landmarks = build_quartic_profile(_num(sec, "xi", lo=5.0 / 3.0))
    t_max = _num(sec, "t_max", 1.2 * landmarks.t_star if landmarks is not None else 1.0, lo=1e-12)
    grid = build_grid(sec.get("grid"), {"x_min": -2.0, "x_max": 3.0, "n_cells": 2000})
    seeds = sec.get("seeds")
    if seeds is not None:
        seeds = np.asarray(seeds, dtype=float)
    diagram = trace_characteristics(profile, flux, t_max, seeds=seeds, grid=grid,
                                    n_times=int(_num(sec, "n_times", 40, lo=2, kind=int)),
                                    landmarks=None if landmarks is None else landmarks.to_dict())
    out.json("diagram.json", diagram.to_dict())
    if landmarks is not None:
        out.json("landmarks.json", landmarks.to_dict())
    return {"max_rh_residual": diagram.max_rh_residual()}, False


def cmd_equilibrium(cfg: RunConfig, out: Output):
    model = cfg.model()
    sec = cfg.section("equilibrium")
    times = [float(t) for t in sec.get("times", [1.0])]
    measures = build_measures(sec.get("measures"), model.dim, cfg.seed, cfg.base)
    n_scan = int(_num(sec, "n_scan", 2001, lo=3, kind=int))
    rng = sec.get("sigma_range")
    entries = []
    for t in times:
        for m in measures:
            rep = find_equilibria(model, t, m, sigma_range=None if rng is None else tuple(rng), n_scan=n_scan)
            checks = [verify_nash(model, t, m, s) for s in rep.sigmas]
            d = rep.to_dict()
            d["nash_checks"] = [{"ok": bool(ok), "residual": float(r)} for ok, r in checks]
            entries.append(d)
    out.json("equilibria.json", {"model": model.name, "entries": entries})
    ambiguous = any(e["classification"] == "MULTIPLE" for e in entries)
    return {"root_tol": 1e-10, "nash_tol": 1e-8}, ambiguous


def cmd_monotonicity(cfg: RunConfig, out: Output):
    model = cfg.model()
    sec = cfg.section("monotonicity")
    c0 = sec.get("c0")
    T = _num(sec, "T", 1.0, lo=1e-12)
    measures = None
    if "measures" in sec:
        measures = build_measures(sec["measures"], model.dim, cfg.seed, cfg.base)
    sigma_grid = sec.get("sigma_grid")
    t_grid = sec.get("t_grid")
    rep = check_monotonicity(model, sigma_grid=sigma_grid, t_grid=t_grid, measures=measures,
                             c0=None if c0 is None else float(c0), T=T, seed=cfg.seed,
                             method=sec.get("method", "auto"))
    out.json("monotonicity.json", rep.to_dict())
    return {"c0": rep.c0}, rep.verdict == "NEITHER"


def cmd_select(cfg: RunConfig, out: Output):
    model = cfg.model()
    sec = cfg.section("select")
    T = _num(sec, "T", 1.0, lo=1e-12)
    xs = sec.get("x_grid", {"start": -0.5, "stop": 1.5, "num": 401})
    if isinstance(xs, dict):
        x_grid = np.linspace(_num(xs, "start"), _num(xs, "stop"), int(_num(xs, "num", lo=1, kind=int)))
    else:
        x_grid = np.asarray(xs, dtype=float)
    tol = sec.get("tol")
    rep = region_scan(model, T, x_grid, tol=None if tol is None else float(tol))
    out.json("selection.json", rep.to_dict())
    rep.to_csv(out.path("selection.csv"))
    return {"selection_tol": rep.tol, "ambiguity_band": [0.5 * rep.tol, 2 * rep.tol]}, rep.ambiguous


def cmd_viscosity(cfg: RunConfig, out: Output):
    model = cfg.model()
    flux = _require_flux(model)
    sec = cfg.section("viscosity")
    eps_list = [float(e) for e in sec.get("eps_list", [0.1, 0.05, 0.025, 0.0125])]
    T = _num(sec, "T", 1.0, lo=1e-12)
    grid = build_grid(sec.get("grid"), {"x_min": -2.0, "x_max": 2.0, "n_cells": 800})
    rep = vanishing_viscosity_study(flux, model.sigma0.profile, eps_list, T, grid,
                                    reference=sec.get("reference"),
                                    slack=_num(sec, "slack", 0.1, lo=0.0))
    # wall-clock time is the only non-deterministic output; keep it out of the
    # JSON so that file stays byte-identical across runs
    rep.to_csv(out.path("convergence.csv"), with_runtime=bool(sec.get("record_runtime", True)))
    body = rep.to_dict()
    for row in body["rows"]:
        row.pop("runtime_ms")
    out.json("convergence.json", body)
    return {"slack": rep.slack, "mass_tol": 1e-6}, False


def cmd_nproj(cfg: RunConfig, out: Output):
    model = cfg.model()
    sec = cfg.section("nproj")
    Ns = [int(n) for n in sec.get("N", [1, 2, 3])]
    times = [float(t) for t in sec.get("times", [0.3])]
    samples = int(_num(sec, "samples", 3, lo=1, kind=int))
    h_fd = _num(sec, "h_fd", 1e-4, lo=1e-12)
    scale = _num(sec, "scale", 0.3, lo=0.0)
    loc = _num(sec, "loc", 0.0)
    rng = np.random.default_rng(cfg.seed)
    rows = []
    for N in Ns:
        for t in times:
            for _ in range(samples):
                atoms = loc + scale * rng.normal(size=(N, model.dim))
                x = loc + scale * rng.normal(size=model.dim)
                rows.append({
                    "N": N,
                    "t": t,
                    "atoms": atoms.tolist(),
                    "x": x.tolist(),
                    "nplayer_residual": nplayer_residual(model, t, atoms, h_fd=h_fd),
                    "master_residual": master_residual(model, t, x, atoms, h_fd=h_fd),
                })
    with out.path("nproj.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["N", "t", "nplayer_residual", "master_residual"])
        for r in rows:
            w.writerow([r["N"], repr(r["t"]), repr(float(r["nplayer_residual"])), repr(float(r["master_residual"]))])
    out.json("nproj.json", {"model": model.name, "h_fd": h_fd, "rows": rows})
    return {"h_fd": h_fd}, False


HANDLERS = {
    "riemann": cmd_riemann,
    "characteristics": cmd_characteristics,
    "equilibrium": cmd_equilibrium,
    "monotonicity": cmd_monotonicity,
    "select": cmd_select,
    "viscosity": cmd_viscosity,
    "nproj": cmd_nproj,
}


def build_parser():
    p = argparse.ArgumentParser(prog="mfgclaw", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--out", default="out", help="output directory (default: ./out)")
    p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    p.add_argument("--strict", action="store_true", help="exit 4 when a result is flagged ambiguous")
    return p


def _fail(code, exc, command):
    err = {"error": type(exc).__name__, "message": str(exc), "command": command, "exit_code": code}
    sys.stderr.write(json.dumps(err, sort_keys=True) + "\n")
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, seed=args.seed)
        out = Output(Path(args.out))
        with np.errstate(all="ignore"):
            tolerances, ambiguous = HANDLERS[args.command](cfg, out)
        out.manifest(cfg, args.command, tolerances, {"ambiguous": bool(ambiguous)})
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, exc, args.command)
    except (MfgClawError, ArithmeticError, ValueError, RuntimeError) as exc:
        return _fail(EXIT_SOLVER, exc, args.command)
    if ambiguous and args.strict:
        sys.stderr.write(json.dumps({"warning": "ambiguous", "command": args.command}) + "\n")
        return EXIT_AMBIGUOUS
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
