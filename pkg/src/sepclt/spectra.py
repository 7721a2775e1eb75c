"""Finite discrete spectral measures and exact integrals against them."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from .errors import EmptyList, NonFiniteKernel

__all__ = ["SpectralMeasure", "integrate", "moment", "from_eigenvalues", "MERGE_TOL"]

MERGE_TOL = 1e-12


@dataclass(frozen=True)
class SpectralMeasure:
    """Probability measure with finitely many atoms.

    ``values`` are sorted ascending and ``weights`` sum to one. Construct via
    :meth:`from_atoms` or :func:`from_eigenvalues` unless the inputs are
    already normalized.
    """

    values: tuple[float, ...]
    weights: tuple[float, ...]
    label: str = ""
    _v: np.ndarray = field(init=False, repr=False, compare=False)
    _w: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if v.ndim != 1 or v.shape != w.shape or v.size == 0:
            raise ValueError("values and weights must be nonempty 1-d sequences of equal length")
        if not np.all(np.isfinite(v)):
            raise ValueError("atom values must be finite")
        if np.any(w <= 0.0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be strictly positive")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {w.sum()!r}, expected 1")
        if np.any(np.diff(v) <= 0.0):
            raise ValueError("atoms must be strictly increasing")
        v.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "_v", v)
        object.__setattr__(self, "_w", w)

    @classmethod
    def from_atoms(cls, atoms: Iterable[Sequence[float]], label: str = "") -> "SpectralMeasure":
        """Build from ``(value, weight)`` pairs; weights are normalized and duplicates merged."""
        pairs = [(float(v), float(w)) for v, w in atoms]
        if not pairs:
            raise EmptyList("measure needs at least one atom")
        vals = np.array([p[0] for p in pairs])
        wts = np.array([p[1] for p in pairs])
        if np.any(wts <= 0.0):
            raise ValueError("weights must be strictly positive")
        return _merge(vals, wts / wts.sum(), label)

    @classmethod
    def point_mass(cls, value: float = 1.0, label: str = "") -> "SpectralMeasure":
        return cls((float(value),), (1.0,), label)

    @property
    def atoms(self) -> list[tuple[float, float]]:
        return list(zip(self.values, self.weights))

    @property
    def v(self) -> np.ndarray:
        return self._v

    @property
    def w(self) -> np.ndarray:
        return self._w

    @property
    def min(self) -> float:
        return self.values[0]

    @property
    def max(self) -> float:
        return self.values[-1]

    def to_dict(self) -> dict[str, Any]:
        return {"atoms": [[v, w] for v, w in self.atoms], "label": self.label}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SpectralMeasure":
        return cls.from_atoms(data["atoms"], label=data.get("label", ""))


def _merge(vals: np.ndarray, wts: np.ndarray, label: str) -> SpectralMeasure:
    order = np.argsort(vals, kind="stable")
    vals, wts = vals[order], wts[order]
    out_v: list[float] = [float(vals[0])]
    out_w: list[float] = [float(wts[0])]
    for v, w in zip(vals[1:], wts[1:]):
        if abs(v - out_v[-1]) <= MERGE_TOL:
            out_w[-1] += float(w)
        else:
            out_v.append(float(v))
            out_w.append(float(w))
    total = sum(out_w)
    return SpectralMeasure(tuple(out_v), tuple(w / total for w in out_w), label)


def from_eigenvalues(values: Iterable[float], label: str = "") -> SpectralMeasure:
    """Empirical spectral distribution: equal weights, duplicate atoms merged."""
    vals = np.asarray(list(values), dtype=float)
    if vals.size == 0:
        raise EmptyList("cannot build a spectral measure from an empty list")
    return _merge(vals, np.full(vals.size, 1.0 / vals.size), label)


def integrate(measure: SpectralMeasure, kernel: Callable[[np.ndarray], Any]) -> complex:
    """Exact weighted sum of ``kernel`` over the atoms.

    ``kernel`` receives the array of atom values and must return an array of
    the same shape (real or complex).
    """
    vals = np.asarray(kernel(measure.v))
    if vals.shape != measure.v.shape:
        vals = np.broadcast_to(vals, measure.v.shape)
    if not np.all(np.isfinite(vals)):
        bad = measure.v[~np.isfinite(vals)]
        raise NonFiniteKernel(f"kernel is not finite at atoms {bad.tolist()}")
    return complex(np.dot(measure.w, vals))


def moment(measure: SpectralMeasure, k: int) -> float:
    if k < 0:
        raise ValueError("moment order must be nonnegative")
    if k == 0:
        return 1.0
    return float(np.dot(measure.w, measure.v**k))


def expand_to_values(measure: SpectralMeasure, size: int) -> np.ndarray:
    """Spread a measure over ``size`` eigenvalues, rounding counts by largest remainder."""
    if size < 1:
        raise ValueError("size must be positive")
    raw = np.asarray(measure.w) * size
    counts = np.floor(raw).astype(int)
    short = size - counts.sum()
    if short > 0:
        counts[np.argsort(-(raw - counts), kind="stable")[:short]] += 1
    return np.repeat(measure.v, counts)
