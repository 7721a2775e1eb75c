"""Rectangular contours with panel Gauss-Legendre quadrature.

Each edge is cut into panels no longer than twice their distance to the
real interval the contour has to avoid, so every panel sees its nearest
singularity at a fixed relative distance and the rule converges
geometrically in the per-panel order. Panels on the vertical edges that
straddle the real axis are symmetric about it, so no node sits on or very
near the axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import BranchCutCrossing, NonConvergedQuadrature

__all__ = ["RectContour", "auto_contour", "converge", "V_MIN"]

V_MIN = 1e-4
PANEL_RATIO = 2.0
MAX_ORDER = 256


@lru_cache(maxsize=32)
def _gauss(order: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(order)


def _seg_point_dist(a: complex, b: complex, p: complex) -> float:
    d = b - a
    t = ((p - a) * d.conjugate()).real / abs(d) ** 2
    t = min(1.0, max(0.0, t))
    return abs(a + t * d - p)


def _seg_interval_dist(a: complex, b: complex, lo: float, hi: float) -> float:
    return min(
        _seg_point_dist(a, b, complex(lo)),
        _seg_point_dist(a, b, complex(hi)),
        _seg_point_dist(complex(lo), complex(hi), a),
        _seg_point_dist(complex(lo), complex(hi), b),
    )


def _split(a: complex, b: complex, avoid: tuple[float, float] | None, out: list[tuple[complex, complex]]) -> None:
    if avoid is None or abs(b - a) <= PANEL_RATIO * _seg_interval_dist(a, b, *avoid):
        out.append((a, b))
        return
    mid = 0.5 * (a + b)
    _split(a, mid, avoid, out)
    _split(mid, b, avoid, out)


@dataclass(frozen=True)
class RectContour:
    """Positively oriented rectangle with corners ``x_l +- i v0`` and ``x_r +- i v0``.

    ``nodes_per_edge`` is the Gauss-Legendre order of each panel. With
    ``avoid`` unset every edge is a single panel.
    """

    x_l: float
    x_r: float
    v0: float
    nodes_per_edge: int = 64
    avoid: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        if not self.x_l < self.x_r:
            raise ValueError("x_l must be below x_r")
        if not self.v0 > 0.0:
            raise ValueError("v0 must be positive")
        if self.nodes_per_edge < 2 or self.nodes_per_edge % 2:
            raise ValueError("nodes_per_edge must be an even integer >= 2")
        if self.avoid is not None and not (self.x_l < self.avoid[0] <= self.avoid[1] < self.x_r):
            raise ValueError("avoid interval must lie strictly inside the contour")

    def doubled(self) -> "RectContour":
        return replace(self, nodes_per_edge=2 * self.nodes_per_edge)

    def encloses(self, lo: float, hi: float) -> bool:
        return self.x_l < lo and hi < self.x_r

    def _vertical_halfwidth(self, x: float) -> float:
        if self.avoid is None:
            return self.v0
        lo, hi = self.avoid
        gap = x - hi if x > hi else lo - x
        return min(self.v0, gap * PANEL_RATIO / 2.0)

    def _upper_panels(self) -> list[tuple[complex, complex]]:
        """Panels of the upper half path, oriented along the contour."""
        panels: list[tuple[complex, complex]] = []
        h_r = self._vertical_halfwidth(self.x_r)
        h_l = self._vertical_halfwidth(self.x_l)
        if h_r < self.v0:
            _split(complex(self.x_r, h_r), complex(self.x_r, self.v0), self.avoid, panels)
        _split(complex(self.x_r, self.v0), complex(self.x_l, self.v0), self.avoid, panels)
        if h_l < self.v0:
            _split(complex(self.x_l, self.v0), complex(self.x_l, h_l), self.avoid, panels)
        return panels

    @lru_cache(maxsize=4)
    def upper_nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """Nodes with ``Im z > 0`` and their complex weights ``dz``, in contour order."""
        t, wt = _gauss(self.nodes_per_edge)
        zs: list[np.ndarray] = []
        ws: list[np.ndarray] = []
        half = t > 0
        h_r = self._vertical_halfwidth(self.x_r)
        h_l = self._vertical_halfwidth(self.x_l)
        # right straddling panel, upward: z = x_r + i h t
        zs.append(self.x_r + 1j * h_r * t[half])
        ws.append(1j * h_r * wt[half])
        for a, b in self._upper_panels():
            zs.append(0.5 * (a + b) + 0.5 * (b - a) * t)
            ws.append(0.5 * (b - a) * wt)
        # left straddling panel, downward; take its upper nodes in travel order
        zl = self.x_l - 1j * h_l * t
        keep = zl.imag > 0
        zs.append(zl[keep])
        ws.append((-1j * h_l * wt)[keep])
        z = np.concatenate(zs)
        w = np.concatenate(ws)
        z.setflags(write=False)
        w.setflags(write=False)
        return z, w

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """All nodes: the upper half followed by its mirror image.

        The lower half is the conjugate path traversed in reverse, hence
        weights ``-conj(w)``.
        """
        zu, wu = self.upper_nodes()
        return np.concatenate([zu, zu.conj()]), np.concatenate([wu, -wu.conj()])

    @property
    def size(self) -> int:
        return 2 * self.upper_nodes()[0].size

    def integrate(self, fn: Callable[[np.ndarray], np.ndarray]) -> complex:
        z, w = self.nodes()
        return complex(np.sum(fn(z) * w))

    def min_abs_imag(self) -> float:
        return float(np.min(np.abs(self.upper_nodes()[0].imag)))


def auto_contour(
    lo: float,
    hi: float,
    margin: float,
    v0: float,
    functions: Sequence = (),
    nodes_per_edge: int = 32,
) -> RectContour:
    """Contour around ``[lo, hi]`` with horizontal margins ``margin * width``.

    A margin is pulled in when a test function has its branch point on that
    side, staying a fixed fraction of the gap away from it.
    """
    width = hi - lo
    if width <= 0.0:
        width = max(abs(hi), 1.0)
    x_l = lo - margin * width
    x_r = hi + margin * width
    share = margin / (margin + 0.25)
    for f in functions:
        p = f.branch_point()
        if p is None:
            continue
        if f.scale > 0:
            if p >= lo:
                raise BranchCutCrossing(f"{f.label}: branch point {p:g} lies at or right of the spectrum edge {lo:g}")
            x_l = max(x_l, lo - share * (lo - p))
        else:
            if p <= hi:
                raise BranchCutCrossing(f"{f.label}: branch point {p:g} lies at or left of the spectrum edge {hi:g}")
            x_r = min(x_r, hi + share * (p - hi))
    return RectContour(x_l, x_r, v0, nodes_per_edge, avoid=(lo, hi))


def converge(
    once: Callable[[RectContour], float],
    contour: RectContour,
    tol: float,
    max_order: int = MAX_ORDER,
) -> tuple[float, dict]:
    """Double the per-panel order until two successive values agree.

    Agreement means ``|delta| <= tol * max(1, |value|)``; the relative part
    only matters for large values, where round-off in the sums dominates.
    """
    ct = contour
    prev = once(ct)
    history = [(ct.nodes_per_edge, prev)]
    while ct.nodes_per_edge * 2 <= max_order:
        ct = ct.doubled()
        val = once(ct)
        history.append((ct.nodes_per_edge, val))
        delta = abs(val - prev)
        if delta <= tol * max(1.0, abs(val)):
            return val, {"order": ct.nodes_per_edge, "nodes": ct.size, "delta": delta}
        prev = val
    raise NonConvergedQuadrature(
        f"quadrature did not settle to {tol:g}; history {[(o, float(v)) for o, v in history]}"
    )
