"""Finitely supported probability measures on R^d.

A measure is a set of weighted atoms.  Everything the solvers need from a
measure -- its mean, the centered part, images under maps, and the 1-D
Wasserstein distance -- is exact for such measures.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidMeasure, NonFiniteImage, UnsupportedDimension

WEIGHT_TOL = 1e-12
RENORMALIZE_TOL = 1e-9


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class EmpiricalMeasure:
    """Weighted atoms ``atoms[i]`` in R^d with weights summing to one.

    ``atoms`` may be given as a flat sequence for d = 1.  Weights within
    ``1e-9`` of summing to one are renormalized; anything further off is
    rejected.
    """

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=float)
        if atoms.ndim == 0:
            atoms = atoms.reshape(1, 1)
        elif atoms.ndim == 1:
            atoms = atoms[:, None]
        if atoms.ndim != 2 or atoms.shape[0] == 0:
            raise InvalidMeasure("atom list must be a non-empty (n, d) array")
        if not np.all(np.isfinite(atoms)):
            raise InvalidMeasure("atoms must be finite")
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if weights.shape[0] != atoms.shape[0]:
            raise InvalidMeasure(
                f"{atoms.shape[0]} atoms but {weights.shape[0]} weights"
            )
        if not np.all(np.isfinite(weights)) or np.any(weights < 0):
            raise InvalidMeasure("weights must be finite and nonnegative")
        total = weights.sum()
        if abs(total - 1.0) > RENORMALIZE_TOL:
            raise InvalidMeasure(f"weights sum to {total!r}, not 1")
        if abs(total - 1.0) > WEIGHT_TOL:
            weights = weights / total
        object.__setattr__(self, "atoms", _frozen(atoms))
        object.__setattr__(self, "weights", _frozen(weights))

    @classmethod
    def uniform(cls, atoms):
        atoms = np.asarray(atoms, dtype=float)
        n = atoms.shape[0] if atoms.ndim else 1
        return cls(atoms, np.full(n, 1.0 / n))

    @classmethod
    def dirac(cls, point):
        return cls(np.atleast_1d(np.asarray(point, dtype=float))[None, :], [1.0])

    @property
    def dim(self) -> int:
        return self.atoms.shape[1]

    @property
    def size(self) -> int:
        return self.atoms.shape[0]

    @property
    def mean(self) -> np.ndarray:
        return self.weights @ self.atoms

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.atoms).tobytes())
        h.update(np.ascontiguousarray(self.weights).tobytes())
        return h.hexdigest()[:16]

    def __eq__(self, other):
        if not isinstance(other, EmpiricalMeasure):
            return NotImplemented
        return (
            self.atoms.shape == other.atoms.shape
            and np.array_equal(self.atoms, other.atoms)
            and np.array_equal(self.weights, other.weights)
        )

    __hash__ = None

    def __repr__(self):
        return f"EmpiricalMeasure(n={self.size}, d={self.dim}, mean={self.mean})"


@dataclass(frozen=True, eq=False)
class MeanDecomposition:
    """A measure written as its mean plus a zero-mean part."""

    mean: np.ndarray
    centered: EmpiricalMeasure

    def recompose(self) -> EmpiricalMeasure:
        return translate(self.centered, self.mean)


def decompose(m: EmpiricalMeasure) -> MeanDecomposition:
    mean = m.mean
    return MeanDecomposition(_frozen(mean), EmpiricalMeasure(m.atoms - mean, m.weights))


def translate(m: EmpiricalMeasure, b) -> EmpiricalMeasure:
    b = np.asarray(b, dtype=float).reshape(-1)
    if not np.all(np.isfinite(b)):
        raise InvalidMeasure("translation vector must be finite")
    return EmpiricalMeasure(m.atoms + b, m.weights)


def pushforward(m: EmpiricalMeasure, fn) -> EmpiricalMeasure:
    """Image measure of ``m`` under ``fn``.

    ``fn`` is called once with the full ``(n, d)`` atom array and must return
    an array of the same shape.
    """
    images = np.asarray(fn(m.atoms), dtype=float).reshape(m.atoms.shape)
    bad = ~np.all(np.isfinite(images), axis=1)
    if bad.any():
        raise NonFiniteImage(f"map is not finite at atoms {np.flatnonzero(bad).tolist()}")
    return EmpiricalMeasure(images, m.weights)


def wasserstein2_1d(m: EmpiricalMeasure, other: EmpiricalMeasure) -> float:
    """Exact W2 distance between two measures on the real line.

    Uses the monotone (quantile) coupling: both CDFs are merged on the union
    of their breakpoints and the squared displacement is integrated exactly.
    """
    if m.dim != 1 or other.dim != 1:
        raise UnsupportedDimension("wasserstein2_1d needs one-dimensional measures")
    xa, wa = _sorted(m)
    xb, wb = _sorted(other)
    ca = np.cumsum(wa)
    cb = np.cumsum(wb)
    ca[-1] = cb[-1] = 1.0
    levels = np.union1d(ca, cb)
    lower = np.concatenate(([0.0], levels[:-1]))
    mass = levels - lower
    keep = mass > 0
    mid = 0.5 * (lower + levels)[keep]
    ia = np.minimum(np.searchsorted(ca, mid), xa.size - 1)
    ib = np.minimum(np.searchsorted(cb, mid), xb.size - 1)
    return float(np.sqrt(np.sum(mass[keep] * (xa[ia] - xb[ib]) ** 2)))


def _sorted(m):
    order = np.argsort(m.atoms[:, 0], kind="stable")
    return m.atoms[order, 0], m.weights[order]


def read_measure_csv(path) -> EmpiricalMeasure:
    """Read a measure from CSV with header ``x_1,...,x_d,weight``."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise InvalidMeasure(f"{path}: empty file") from None
        if not header or header[-1] != "weight" or any(
            h != f"x_{i + 1}" for i, h in enumerate(header[:-1])
        ):
            raise InvalidMeasure(f"{path}: header must be x_1..x_d,weight, got {header}")
        rows = [[float(v) for v in row] for row in reader if row]
    if not rows:
        raise InvalidMeasure(f"{path}: no atoms")
    data = np.asarray(rows)
    return EmpiricalMeasure(data[:, :-1], data[:, -1])


def write_measure_csv(m: EmpiricalMeasure, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"x_{i + 1}" for i in range(m.dim)] + ["weight"])
        for atom, w in zip(m.atoms, m.weights):
            writer.writerow([repr(float(v)) for v in atom] + [repr(float(w))])
