"""Coupled Stieltjes-transform system for the separable sample covariance model.

For ``z`` off the real axis the limit spectral distribution ``F`` of
``B = (1/N) T2^{1/2} X T1 X' T2^{1/2}`` has Stieltjes transform ``m(z)``,
determined together with two companion functions ``g1, g2`` by

    z g1 = -c  * int x / (1 + g2 x) dH1(x)
    z g2 = -     int y / (1 + g1 y) dH2(y)
    m    = -1/z * int 1 / (1 + g1 y) dH2(y)

inside the set ``Im m > 0, Im(z g1) > 0, Im g2 > 0`` (for ``Im z > 0``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Any, Sequence

import numpy as np

from .errors import (
    BranchCutCrossing,
    ContourTooTight,
    ImaginaryResidue,
    LeftSolutionSet,
    NoConvergence,
    NonFiniteKernel,
    PathSolveError,
)
from .spectra import SpectralMeasure

__all__ = [
    "ModelParams",
    "StieltjesTriple",
    "SolverConfig",
    "solve_at",
    "solve_along",
    "density",
    "density_grid",
    "support_bounds",
    "enclosing_interval",
    "residuals",
    "functional",
    "contour_values",
]

POLE_GUARD = 1e-10
MIN_DAMPING = 1.0 / 2**30


@dataclass(frozen=True)
class ModelParams:
    c: float
    h1: SpectralMeasure
    h2: SpectralMeasure

    def __post_init__(self) -> None:
        if not (self.c > 0.0 and math.isfinite(self.c)):
            raise ValueError("c must be positive and finite")
        if self.h2.min < 0.0:
            raise ValueError("h2 must be supported on [0, inf)")
        if self.h2.max <= 0.0:
            raise ValueError("h2 must not be the point mass at zero")
        if self.h1.max <= 0.0:
            raise ValueError("h1 must have a positive largest atom")

    def to_dict(self) -> dict[str, Any]:
        return {"c": self.c, "h1": self.h1.to_dict(), "h2": self.h2.to_dict()}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ModelParams":
        return cls(
            float(data["c"]),
            SpectralMeasure.from_dict(data["h1"]),
            SpectralMeasure.from_dict(data["h2"]),
        )


@dataclass(frozen=True)
class StieltjesTriple:
    z: complex
    m: complex
    g1: complex
    g2: complex
    m_under: complex
    residual: float
    iterations: int

    def conj(self) -> "StieltjesTriple":
        return StieltjesTriple(
            self.z.conjugate(),
            self.m.conjugate(),
            self.g1.conjugate(),
            self.g2.conjugate(),
            self.m_under.conjugate(),
            self.residual,
            self.iterations,
        )


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-12
    max_iter: int = 20000
    damping: float = 0.5
    warm_start: StieltjesTriple | None = None
    newton: bool = True

    def __post_init__(self) -> None:
        if not self.tol > 0.0:
            raise ValueError("tol must be positive")
        if not 0.0 < self.damping <= 1.0:
            raise ValueError("damping must lie in (0, 1]")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")


def _phi1(p: ModelParams, z: complex, g2: complex) -> complex:
    den = 1.0 + g2 * p.h1.v
    if np.min(np.abs(den)) < POLE_GUARD:
        raise NonFiniteKernel("1 + g2 x vanishes at an atom of H1")
    return -(p.c / z) * complex(np.dot(p.h1.w, p.h1.v / den))


def _phi2(p: ModelParams, z: complex, g1: complex) -> complex:
    den = 1.0 + g1 * p.h2.v
    if np.min(np.abs(den)) < POLE_GUARD:
        raise NonFiniteKernel("1 + g1 y vanishes at an atom of H2")
    return -(1.0 / z) * complex(np.dot(p.h2.w, p.h2.v / den))


def _m_from(p: ModelParams, z: complex, g1: complex) -> complex:
    return -(1.0 / z) * complex(np.dot(p.h2.w, 1.0 / (1.0 + g1 * p.h2.v)))


def residuals(p: ModelParams, z: complex, m: complex, g1: complex, g2: complex) -> tuple[float, float, float]:
    """Absolute deviations of the three defining identities at ``(m, g1, g2)``."""
    m_under = (m + (1.0 - p.c) / z) / p.c
    r1 = m_under + (1.0 / z) * complex(np.dot(p.h1.w, 1.0 / (1.0 + g2 * p.h1.v)))
    r2 = m + (1.0 / z) * complex(np.dot(p.h2.w, 1.0 / (1.0 + g1 * p.h2.v)))
    r3 = m + 1.0 / z + g1 * g2
    # m_under carries a 1/c factor; for small c measure that identity in units of m
    return abs(r1) * min(1.0, p.c), abs(r2), abs(r3)


def _in_u(z: complex, m: complex, g1: complex, g2: complex) -> bool:
    return m.imag > 0.0 and (z * g1).imag > 0.0 and g2.imag > 0.0


def _evaluate(p: ModelParams, z: complex, g1: complex, g2: complex) -> tuple[complex, float]:
    m = _m_from(p, z, g1)
    return m, max(residuals(p, z, m, g1, g2))


def _newton_step(p: ModelParams, z: complex, g1: complex, g2: complex) -> tuple[complex, complex]:
    x, wx = p.h1.v, p.h1.w
    y, wy = p.h2.v, p.h2.w
    d1 = 1.0 + g2 * x
    d2 = 1.0 + g1 * y
    f1 = g1 + (p.c / z) * complex(np.dot(wx, x / d1))
    f2 = g2 + (1.0 / z) * complex(np.dot(wy, y / d2))
    # d(phi1)/d(g2) and d(phi2)/d(g1)
    a = (p.c / z) * complex(np.dot(wx, x**2 / d1**2))
    b = (1.0 / z) * complex(np.dot(wy, y**2 / d2**2))
    det = 1.0 - a * b
    if abs(det) < 1e-300:
        raise ZeroDivisionError
    dg1 = (-f1 - a * f2) / det
    dg2 = (-f2 - b * f1) / det
    return g1 + dg1, g2 + dg2


def _solve_upper(p: ModelParams, z: complex, cfg: SolverConfig) -> StieltjesTriple:
    if cfg.warm_start is not None:
        ws = cfg.warm_start if cfg.warm_start.z.imag > 0 else cfg.warm_start.conj()
        g1, g2 = ws.g1, ws.g2
    else:
        g2 = -1.0 / z
        try:
            g1 = _phi1(p, z, g2)
        except NonFiniteKernel:
            g2 = 1j
            g1 = _phi1(p, z, g2)

    try:
        m, res = _evaluate(p, z, g1, g2)
    except NonFiniteKernel:
        m, res = 1j, math.inf
    if not _in_u(z, m, g1, g2):
        if cfg.warm_start is not None:
            return _solve_upper(p, z, replace(cfg, warm_start=None))
        res = math.inf

    damping = cfg.damping
    it = 0
    while it < cfg.max_iter:
        if res <= cfg.tol and _in_u(z, m, g1, g2):
            m_under = (m + (1.0 - p.c) / z) / p.c
            return StieltjesTriple(z, m, g1, g2, m_under, res, it)
        it += 1

        if cfg.newton and math.isfinite(res):
            try:
                n1, n2 = _newton_step(p, z, g1, g2)
                nm, nres = _evaluate(p, z, n1, n2)
                if _in_u(z, nm, n1, n2) and nres < res:
                    g1, g2, m, res = n1, n2, nm, nres
                    continue
            except (NonFiniteKernel, ZeroDivisionError, FloatingPointError):
                pass

        while True:
            try:
                c1 = (1.0 - damping) * g1 + damping * _phi1(p, z, g2)
                c2 = (1.0 - damping) * g2 + damping * _phi2(p, z, c1)
                cm, cres = _evaluate(p, z, c1, c2)
                ok = _in_u(z, cm, c1, c2) or not _in_u(z, m, g1, g2)
            except NonFiniteKernel:
                ok = False
            if ok:
                break
            damping *= 0.5
            if damping < MIN_DAMPING:
                raise LeftSolutionSet(
                    f"iterate left the solution set at z={z} and halving the damping did not recover it"
                )
        g1, g2, m, res = c1, c2, cm, cres

    raise NoConvergence(res, it, z)


def solve_at(params: ModelParams, z: complex, cfg: SolverConfig | None = None) -> StieltjesTriple:
    """Solve the system at one point ``z`` with ``Im z != 0``.

    The lower half-plane is handled through conjugate symmetry, so
    ``solve_at(p, conj(z))`` is exactly the conjugate triple.
    """
    cfg = cfg or SolverConfig()
    z = complex(z)
    if z.imag == 0.0:
        raise ValueError("z must lie off the real axis")
    if z.imag > 0.0:
        return _solve_upper(params, z, cfg)
    return _solve_upper(params, z.conjugate(), cfg).conj()


def solve_along(
    params: ModelParams, points: Sequence[complex], cfg: SolverConfig | None = None
) -> list[StieltjesTriple]:
    """Continuation solve: each point is warm-started from its predecessor."""
    cfg = cfg or SolverConfig()
    out: list[StieltjesTriple] = []
    prev: StieltjesTriple | None = None
    for k, z in enumerate(points):
        try:
            t = solve_at(params, z, replace(cfg, warm_start=prev) if prev is not None else cfg)
        except (NoConvergence, LeftSolutionSet, NonFiniteKernel) as exc:
            raise PathSolveError(k, exc) from exc
        out.append(t)
        prev = t
    return out


def density(params: ModelParams, x: float, v_probe: float = 1e-6, cfg: SolverConfig | None = None) -> float:
    """Limit density at ``x`` via ``Im m(x + i v_probe) / pi``.

    The probe point is reached by continuation down from ``x + i``.
    """
    if not v_probe > 0.0:
        raise ValueError("v_probe must be positive")
    cfg = cfg or SolverConfig()
    heights = [1.0]
    while heights[-1] / 4.0 > v_probe:
        heights.append(heights[-1] / 4.0)
    heights.append(v_probe)
    t = solve_along(params, [complex(x, v) for v in heights], cfg)[-1]
    val = t.m.imag / math.pi
    return 0.0 if val < 1e-9 else val


def density_grid(
    params: ModelParams, xs: Sequence[float], v_probe: float = 1e-6, cfg: SolverConfig | None = None
) -> np.ndarray:
    return np.array([density(params, float(x), v_probe, cfg) for x in xs])


def support_bounds(c: float, t1: SpectralMeasure, t2: SpectralMeasure) -> tuple[float, float]:
    """Deterministic bracket for the spectrum built from extreme eigenvalues of T1, T2."""
    s_n, s_1 = t1.min, t1.max
    if s_1 <= 0.0:
        raise ValueError("t1 must have a positive largest atom")
    root = math.sqrt(c)
    upper = s_1 * t2.max * (1.0 + root) ** 2
    if s_n >= 0.0:
        indicator = 1.0 if 0.0 < c < 1.0 else 0.0
        lower = s_n * t2.min * indicator * (1.0 - root) ** 2
    else:
        lower = s_n * t2.max * (1.0 + root) ** 2
    return lower, upper


def enclosing_interval(params: ModelParams) -> tuple[float, float]:
    """Interval a contour must enclose: the support bracket widened to contain 0.

    For ``c < 1`` the limit law has an atom of mass ``1 - c`` at zero which
    the bracket alone does not cover.
    """
    lo, hi = support_bounds(params.c, params.h1, params.h2)
    return min(lo, 0.0), max(hi, 0.0)


def contour_values(params: ModelParams, contour, cfg: SolverConfig | None = None) -> dict[str, np.ndarray]:
    """Solve on the upper half of ``contour`` and mirror to the lower half.

    Returns arrays aligned with ``contour.nodes()`` for ``m``, ``g1``, ``g2``
    plus the upper-half triples under ``"triples"``.
    """
    zu, _ = contour.upper_nodes()
    triples = solve_along(params, zu, cfg)
    out: dict[str, Any] = {"triples": triples}
    for name in ("m", "g1", "g2", "m_under"):
        up = np.array([getattr(t, name) for t in triples])
        out[name] = np.concatenate([up, up.conj()])
    return out


def functional(params: ModelParams, f, contour=None, cfg: SolverConfig | None = None) -> float:
    """``int f dF`` for the limit law, as ``-(1/2 pi i) oint f(z) m(z) dz``.

    With no contour one is built around :func:`enclosing_interval` and the
    quadrature order is doubled until two successive values agree.
    """
    from .contour import RectContour, auto_contour, converge

    cfg = cfg or SolverConfig()
    lo, hi = enclosing_interval(params)
    if contour is None:
        contour = auto_contour(lo, hi, margin=0.25, v0=1.0, functions=[f])
    else:
        if not (contour.x_l < lo and contour.x_r > hi):
            raise ContourTooTight(f"contour [{contour.x_l}, {contour.x_r}] does not enclose [{lo}, {hi}]")
        f.check_region(contour.x_l, contour.x_r)

    def once(ct: RectContour) -> float:
        z, w = ct.nodes()
        m = contour_values(params, ct, cfg)["m"]
        val = complex(np.sum(f(z) * m * w)) * (-1.0 / (2j * math.pi))
        if abs(val.imag) > 1e-8:
            raise ImaginaryResidue(f"functional has imaginary part {val.imag:.3e}")
        return val.real

    value, _ = converge(once, contour, tol=1e-10)
    return value
