"""Atomic probability measures on R^d, norms and data ingestion."""

from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import EmptyError, FormatError, InvalidDirection

WEIGHT_TOL = 1e-12
COLLINEAR_TOL = 1e-9


class NormKind(str, enum.Enum):
    EUCLIDEAN = "euclidean"
    L1 = "l1"
    LINF = "linf"


def norm(v, kind: NormKind | str = NormKind.EUCLIDEAN, axis=-1):
    """Norm of ``v`` along ``axis`` (vectorised over the remaining axes)."""
    kind = NormKind(kind)
    v = np.asarray(v, dtype=float)
    if kind is NormKind.EUCLIDEAN:
        return np.linalg.norm(v, axis=axis)
    if kind is NormKind.L1:
        return np.abs(v).sum(axis=axis)
    return np.abs(v).max(axis=axis)


@dataclass(frozen=True, eq=False)
class AtomicMeasure:
    """Finite weighted sum of point masses in R^d.

    Duplicate atoms are kept as given; their multiplicity matters for the
    subdifferential at an atom.

    Parameters
    ----------
    atoms : array_like, shape (m, d)
    weights : array_like, shape (m,), optional
        Nonnegative, summing to one. Uniform weights when omitted.
    """

    atoms: np.ndarray
    weights: np.ndarray = None
    dim: int = field(init=False)

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=float)
        if atoms.ndim == 1:
            atoms = atoms[:, None]
        if atoms.ndim != 2:
            raise FormatError("atoms must be a 2-D array of shape (m, d)")
        m, d = atoms.shape
        if m == 0:
            raise EmptyError("a measure needs at least one atom")
        if d == 0:
            raise FormatError("atoms must have positive dimension")
        if not np.all(np.isfinite(atoms)):
            raise ValueError("atoms contain non-finite values")
        if self.weights is None:
            weights = np.full(m, 1.0 / m)
        else:
            weights = np.asarray(self.weights, dtype=float).reshape(-1)
            if weights.shape != (m,):
                raise FormatError(f"expected {m} weights, got {weights.shape[0]}")
            if not np.all(np.isfinite(weights)):
                raise ValueError("weights contain non-finite values")
            if np.any(weights < 0):
                raise ValueError("weights must be nonnegative")
            if abs(weights.sum() - 1.0) > WEIGHT_TOL:
                raise ValueError(f"weights sum to {weights.sum()!r}, not 1")
        atoms.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "dim", d)

    @classmethod
    def from_unnormalized(cls, atoms, weights) -> AtomicMeasure:
        weights = np.asarray(weights, dtype=float)
        if np.any(weights < 0):
            raise ValueError("weights must be nonnegative")
        total = weights.sum()
        if not total > 0:
            raise ValueError("weights must have positive total mass")
        return cls(atoms, weights / total)

    @classmethod
    def dirac(cls, point) -> AtomicMeasure:
        return cls(np.atleast_2d(np.asarray(point, dtype=float)))

    @property
    def size(self) -> int:
        return self.atoms.shape[0]

    def scaled(self, s: float) -> AtomicMeasure:
        return AtomicMeasure(self.atoms * s, self.weights)

    def shifted(self, t) -> AtomicMeasure:
        return AtomicMeasure(self.atoms + np.asarray(t, dtype=float), self.weights)

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "atoms": self.atoms.tolist(),
            "weights": self.weights.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> AtomicMeasure:
        mu = cls(np.asarray(data["atoms"], dtype=float).reshape(-1, int(data["dim"])),
                 data.get("weights"))
        return mu


@dataclass(frozen=True, eq=False)
class QuantileDirection:
    """Vector ``ell`` with Euclidean norm strictly below one."""

    vector: np.ndarray
    norm_kind: NormKind = NormKind.EUCLIDEAN

    def __post_init__(self):
        v = np.atleast_1d(np.asarray(self.vector, dtype=float))
        if v.ndim != 1 or not np.all(np.isfinite(v)):
            raise InvalidDirection("direction must be a finite 1-D vector")
        if np.linalg.norm(v) >= 1.0:
            raise InvalidDirection(f"||ell|| = {np.linalg.norm(v)!r} must be < 1")
        v.setflags(write=False)
        object.__setattr__(self, "vector", v)
        object.__setattr__(self, "norm_kind", NormKind(self.norm_kind))

    @classmethod
    def zero(cls, dim: int) -> QuantileDirection:
        return cls(np.zeros(dim))

    @property
    def dim(self) -> int:
        return self.vector.shape[0]

    @property
    def size(self) -> float:
        return float(np.linalg.norm(self.vector))


def load_measure(path, format: str = "csv") -> AtomicMeasure:
    """Read an atomic measure from a CSV file.

    Rows are comma-separated floats. An optional header row may name the
    last column ``weight``; weights are then renormalised to sum to one.
    Without a weight column every row gets weight 1/n.
    """
    if format != "csv":
        raise FormatError(f"unsupported format {format!r}")
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row and any(c.strip() for c in row)]
    if not rows:
        raise EmptyError(f"{path}: no rows")

    has_weight = False
    first = [c.strip() for c in rows[0]]
    try:
        [float(c) for c in first]
    except ValueError:
        rows = rows[1:]
        has_weight = first[-1].lower() == "weight"
    if not rows:
        raise EmptyError(f"{path}: header but no data rows")

    width = len(rows[0])
    values = []
    for lineno, row in enumerate(rows, start=1):
        if len(row) != width:
            raise FormatError(f"{path}: row {lineno} has {len(row)} columns, expected {width}")
        try:
            values.append([float(c) for c in row])
        except ValueError as exc:
            raise FormatError(f"{path}: row {lineno}: {exc}") from None
    data = np.array(values, dtype=float)
    if not np.all(np.isfinite(data)):
        raise ValueError(f"{path}: non-finite values")

    if has_weight:
        if width < 2:
            raise FormatError(f"{path}: weight column without coordinates")
        return AtomicMeasure.from_unnormalized(data[:, :-1], data[:, -1])
    return AtomicMeasure(data)


def save_measure(mu: AtomicMeasure, path) -> None:
    """Write ``mu`` as CSV with a header and a weight column."""
    header = [f"x{k}" for k in range(mu.dim)] + ["weight"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for x, w in zip(mu.atoms, mu.weights):
            writer.writerow([repr(float(c)) for c in x] + [repr(float(w))])


def measure_to_json(mu: AtomicMeasure, path=None) -> str:
    text = json.dumps(mu.to_dict())
    if path is not None:
        Path(path).write_text(text)
    return text


def measure_from_json(text_or_path) -> AtomicMeasure:
    p = Path(text_or_path) if not str(text_or_path).lstrip().startswith("{") else None
    text = p.read_text() if p is not None else str(text_or_path)
    return AtomicMeasure.from_dict(json.loads(text))


class LineWitness(NamedTuple):
    point: np.ndarray
    direction: np.ndarray | None  # None when the witness is a single atom


def _merge_duplicates(mu: AtomicMeasure):
    pts, inverse = np.unique(mu.atoms, axis=0, return_inverse=True)
    w = np.bincount(inverse.reshape(-1), weights=mu.weights, minlength=pts.shape[0])
    return pts, w


def line_mass_sup(mu: AtomicMeasure, tol: float = COLLINEAR_TOL) -> tuple[float, LineWitness]:
    """Largest mass that ``mu`` puts on a single affine line.

    For an atomic measure the supremum is attained on a line through two
    support points (or on the lone atom). Lines are enumerated from each
    anchor atom; a point joins the line when the sine of the angle between
    its offset and the line direction is at most ``tol``.

    Returns
    -------
    mass : float
    witness : LineWitness
    """
    pts, w = _merge_duplicates(mu)
    m = pts.shape[0]
    if m == 1:
        return 1.0, LineWitness(pts[0].copy(), None)
    if mu.dim == 1:
        return 1.0, LineWitness(pts[0].copy(), np.ones(1))

    best = -1.0
    witness = None
    for i in range(m - 1):
        # lines through i and a later point; earlier points were anchors already
        offsets = pts[i + 1:] - pts[i]
        lengths = np.linalg.norm(offsets, axis=1)
        units = offsets / lengths[:, None]
        remaining = np.arange(units.shape[0])
        while remaining.size:
            u = units[remaining[0]]
            cand = units[remaining]
            cos = cand @ u
            sin = np.linalg.norm(cand - cos[:, None] * u, axis=1)
            on_line = sin <= tol
            mass = w[i] + w[i + 1 + remaining[on_line]].sum()
            if mass > best:
                best = float(mass)
                witness = LineWitness(pts[i].copy(), u.copy())
            remaining = remaining[~on_line]
    return min(best, 1.0), witness


def in_line_family(mu: AtomicMeasure, tol: float = COLLINEAR_TOL) -> bool:
    """True when ``mu`` is concentrated on one affine line."""
    mass, _ = line_mass_sup(mu, tol)
    return math.isclose(mass, 1.0, rel_tol=0.0, abs_tol=WEIGHT_TOL)
