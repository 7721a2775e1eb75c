"""Asymptotic mean and covariance of centered linear spectral statistics.

Both are contour integrals over the triples ``(m, g1, g2)`` produced by the
solver. The covariance double integral is integrated by parts twice so that
only ``f'``, ``g'`` and ``log(1 - k(z1, z2))`` are sampled, which needs no
numerical differentiation of the two-point kernel ``k``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .contour import RectContour, auto_contour, converge
from .errors import (
    BranchViolation,
    CoincidentPoints,
    ContourTooTight,
    DegenerateDenominator,
    ImaginaryResidue,
    OverlappingContours,
    SepCltError,
)
from .functions import TestFunction
from .solver import ModelParams, SolverConfig, StieltjesTriple, contour_values, enclosing_interval

__all__ = [
    "CltSummary",
    "d1",
    "d2",
    "kernel_f",
    "mean_integrand",
    "clt_mean",
    "clt_cov",
    "clt_summary",
    "default_contours",
    "kernel_matrix",
    "CltEntryError",
]

IMAG_TOL = 1e-8
QUAD_TOL = 1e-9
INNER_MARGIN, OUTER_MARGIN = 0.25, 0.40
INNER_V0, OUTER_V0 = 1.0, 1.5


class CltEntryError(SepCltError):
    """Failure while filling one entry of a summary; names the functions involved."""

    def __init__(self, labels: tuple[str, ...], cause: Exception):
        self.labels = labels
        self.cause = cause
        super().__init__(f"{' x '.join(labels)}: {type(cause).__name__}: {cause}")


def _h_int(measure, g: np.ndarray, power: int, order: int) -> np.ndarray:
    """``int t^power / (1 + g t)^order dH(t)`` for every entry of ``g``."""
    t = measure.v
    den = 1.0 + np.asarray(g)[..., None] * t
    return (measure.w * t**power / den**order).sum(axis=-1)


def _mean_parts(params: ModelParams, z, g1, g2) -> dict[str, np.ndarray]:
    z, g1, g2 = (np.asarray(a, dtype=complex) for a in (z, g1, g2))
    c, h1, h2 = params.c, params.h1, params.h2
    a12 = _h_int(h1, g2, 1, 2)
    a22 = _h_int(h1, g2, 2, 2)
    a23 = _h_int(h1, g2, 2, 3)
    a33 = _h_int(h1, g2, 3, 3)
    t12 = _h_int(h2, g1, 1, 2)
    t22 = _h_int(h2, g1, 2, 2)
    t23 = _h_int(h2, g1, 2, 3)
    bracket = 1.0 - c * z**-2 * a22 * t22
    if np.min(np.abs(bracket)) < 1e-12:
        raise DegenerateDenominator("1 - c z^-2 A22 T22 vanishes")
    if np.min(np.abs(a12)) < 1e-12:
        raise DegenerateDenominator("int x/(1+x g2)^2 dH1 vanishes")
    d1 = (-c * z**-3 * a22 * t23 - c * z**-4 * a33 * t12 * t22) / bracket
    d2 = -c * z**-4 * a23 * t22 * a22 * t12 / (a12 * bracket)
    outer = 1.0 - a22 * t12 / (z * a12)
    if np.min(np.abs(outer)) < 1e-12:
        raise DegenerateDenominator("mean denominator vanishes")
    return {"d1": d1, "d2": d2, "outer": outer}


def d1(params: ModelParams, triple: StieltjesTriple) -> complex:
    return complex(_mean_parts(params, triple.z, triple.g1, triple.g2)["d1"])


def d2(params: ModelParams, triple: StieltjesTriple) -> complex:
    return complex(_mean_parts(params, triple.z, triple.g1, triple.g2)["d2"])


def mean_integrand(params: ModelParams, z, g1, g2) -> np.ndarray:
    """Mean of the limiting process ``M(z)``: ``(d1 - d2) / (1 - z^-1 A12^-1 A22 T12)``."""
    parts = _mean_parts(params, z, g1, g2)
    return (parts["d1"] - parts["d2"]) / parts["outer"]


def _kernel(z1, g11, g21, z2, g12, g22) -> np.ndarray:
    den2 = g21 - g22
    den1 = g11 - g12
    if np.min(np.abs(den1)) < 1e-10 or np.min(np.abs(den2)) < 1e-10:
        raise CoincidentPoints("g1 or g2 takes (numerically) equal values at the two points")
    return (z1 * g11 - z2 * g12) / den2 * (z1 * g21 - z2 * g22) / den1 / (z1 * z2)


def kernel_f(params: ModelParams, t1: StieltjesTriple, t2: StieltjesTriple) -> complex:
    """Two-point kernel ``k(z1, z2)`` whose log generates the covariance."""
    return complex(_kernel(t1.z, t1.g1, t1.g2, t2.z, t2.g1, t2.g2))


def _real(val: complex, what: str) -> float:
    if abs(val.imag) > IMAG_TOL:
        raise ImaginaryResidue(f"{what} has imaginary residue {val.imag:.3e}")
    return val.real


class _Values:
    """Memo of solver output per contour so several functions share one solve."""

    def __init__(self, params: ModelParams, cfg: SolverConfig | None):
        self.params = params
        self.cfg = cfg
        self._store: dict[RectContour, dict[str, Any]] = {}

    def __call__(self, ct: RectContour) -> dict[str, Any]:
        if ct not in self._store:
            vals = contour_values(self.params, ct, self.cfg)
            vals["mean"] = mean_integrand(self.params, ct.nodes()[0], vals["g1"], vals["g2"])
            self._store[ct] = vals
        return self._store[ct]


def default_contours(params: ModelParams, functions: Sequence[TestFunction] = (), scale: float = 1.0):
    """Nested inner/outer contours around the spectrum, margins scaled by ``scale``."""
    lo, hi = enclosing_interval(params)
    inner = auto_contour(lo, hi, INNER_MARGIN * scale, INNER_V0, functions)
    outer = auto_contour(lo, hi, OUTER_MARGIN * scale, OUTER_V0, functions)
    return inner, outer


def _check_encloses(params: ModelParams, ct: RectContour) -> None:
    lo, hi = enclosing_interval(params)
    if not ct.encloses(lo, hi):
        raise ContourTooTight(f"contour [{ct.x_l:g}, {ct.x_r:g}] does not strictly enclose [{lo:g}, {hi:g}]")


def clt_mean(
    params: ModelParams,
    f: TestFunction,
    contour: RectContour | None = None,
    cfg: SolverConfig | None = None,
    *,
    _values: _Values | None = None,
    meta: dict | None = None,
) -> float:
    """Limit mean ``E X_f = -(1/2 pi i) oint f(z) E M(z) dz``."""
    if contour is None:
        contour = default_contours(params, [f])[0]
    _check_encloses(params, contour)
    f.check_region(contour.x_l, contour.x_r)
    values = _values or _Values(params, cfg)

    def once(ct: RectContour) -> float:
        z, w = ct.nodes()
        total = complex(np.sum(f(z) * values(ct)["mean"] * w)) * (-1.0 / (2j * math.pi))
        return _real(total, f"mean of {f.label}")

    val, info = converge(once, contour, QUAD_TOL)
    if meta is not None:
        meta.update(info)
    return val


def _log_kernel(params: ModelParams, v1: dict, z1: np.ndarray, v2: dict, z2: np.ndarray) -> np.ndarray:
    k = _kernel(
        z1[:, None], v1["g1"][:, None], v1["g2"][:, None],
        z2[None, :], v2["g1"][None, :], v2["g2"][None, :],
    )
    worst = float(np.max(np.abs(k)))
    if not worst < 1.0:
        raise BranchViolation(f"max |k(z1, z2)| = {worst:.6f} >= 1 on the contour product")
    return np.log1p(-k)


def kernel_matrix(params: ModelParams, inner: RectContour, outer: RectContour, cfg: SolverConfig | None = None) -> np.ndarray:
    """``k(z1, z2)`` for ``z1`` on ``outer`` and ``z2`` on ``inner`` (rows, columns)."""
    vo = contour_values(params, outer, cfg)
    vi = contour_values(params, inner, cfg)
    zo, zi = outer.nodes()[0], inner.nodes()[0]
    return _kernel(
        zo[:, None], vo["g1"][:, None], vo["g2"][:, None],
        zi[None, :], vi["g1"][None, :], vi["g2"][None, :],
    )


def _check_nested(inner: RectContour, outer: RectContour) -> None:
    if not (outer.x_l < inner.x_l and inner.x_r < outer.x_r and inner.v0 < outer.v0):
        raise OverlappingContours("outer contour must strictly enclose the inner one")


def clt_cov(
    params: ModelParams,
    f: TestFunction,
    g: TestFunction,
    inner: RectContour | None = None,
    outer: RectContour | None = None,
    cfg: SolverConfig | None = None,
    *,
    _values: _Values | None = None,
    meta: dict | None = None,
) -> float:
    """Limit covariance ``Cov(X_f, X_g) = (1/2 pi^2) oint oint f'(z1) g'(z2) log(1 - k(z1, z2)) dz1 dz2``."""
    if inner is None or outer is None:
        d_in, d_out = default_contours(params, [f, g])
        inner, outer = inner or d_in, outer or d_out
    _check_nested(inner, outer)
    for ct in (inner, outer):
        _check_encloses(params, ct)
        f.check_region(ct.x_l, ct.x_r)
        g.check_region(ct.x_l, ct.x_r)
    values = _values or _Values(params, cfg)
    state = {"outer": outer}

    def once(ct_in: RectContour) -> float:
        ct_out = state["outer"]
        zo, wo = ct_out.nodes()
        zi, wi = ct_in.nodes()
        logk = _log_kernel(params, values(ct_out), zo, values(ct_in), zi)
        a = f.derivative(zo) * wo
        b = g.derivative(zi) * wi
        fg = complex(a @ logk @ b) / (2.0 * math.pi**2)
        gf = complex((g.derivative(zo) * wo) @ logk @ (f.derivative(zi) * wi)) / (2.0 * math.pi**2)
        if abs(fg - gf) > 1e-9 * max(1.0, abs(fg)):
            raise ImaginaryResidue(f"cov({f.label}, {g.label}) not symmetric: {fg} vs {gf}")
        state["outer"] = ct_out.doubled()
        return _real(fg, f"cov({f.label}, {g.label})")

    val, info = converge(once, inner, QUAD_TOL, max_order=128)
    if meta is not None:
        meta.update(info)
    return val


@dataclass
class CltSummary:
    functions: list[TestFunction]
    mean: list[float]
    cov: list[list[float]]
    contour_meta: dict[str, Any] = field(default_factory=dict)

    @property
    def labels(self) -> list[str]:
        return [f.label for f in self.functions]

    def validate(self) -> None:
        k = len(self.functions)
        if k == 0:
            return
        cov = np.asarray(self.cov, dtype=float)
        if cov.shape != (k, k):
            raise ValueError("cov has the wrong shape")
        if np.max(np.abs(cov - cov.T)) > 1e-10:
            raise ValueError("cov is not symmetric")
        if np.min(np.diag(cov)) < -1e-9:
            raise ValueError("cov has a negative diagonal entry")
        if np.min(np.linalg.eigvalsh(cov)) < -1e-8:
            raise ValueError("cov is not positive semidefinite")

    def to_dict(self) -> dict[str, Any]:
        return {
            "functions": self.labels,
            "function_specs": [f.to_dict() for f in self.functions],
            "mean": list(self.mean),
            "cov": [list(r) for r in self.cov],
            "contour_meta": self.contour_meta,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "CltSummary":
        specs = data.get("function_specs")
        if specs is None:
            from .functions import parse_function

            funcs = [parse_function(s) for s in data["functions"]]
        else:
            funcs = [TestFunction.from_dict(s) for s in specs]
        return cls(funcs, [float(v) for v in data["mean"]], [[float(v) for v in r] for r in data["cov"]], data.get("contour_meta", {}))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["f_label", "g_label", "mean_f", "mean_g", "cov"])
        for i, fi in enumerate(self.functions):
            for j, fj in enumerate(self.functions):
                w.writerow([fi.label, fj.label, repr(self.mean[i]), repr(self.mean[j]), repr(self.cov[i][j])])
        return buf.getvalue()


def _calibration(ct: RectContour, a: float) -> dict[str, float]:
    zero = ct.integrate(lambda z: np.ones_like(z))
    res = ct.integrate(lambda z: 1.0 / (z - a))
    return {"oint_one": abs(zero), "oint_pole_error": abs(res - 2j * math.pi)}


def clt_summary(
    params: ModelParams,
    functions: Sequence[TestFunction],
    cfg: SolverConfig | None = None,
    *,
    margin_scale: float = 1.0,
) -> CltSummary:
    """Mean vector and covariance matrix for a list of test functions."""
    functions = list(functions)
    if not functions:
        return CltSummary([], [], [], {})
    inner, outer = default_contours(params, functions, margin_scale)
    values = _Values(params, cfg)
    lo, hi = enclosing_interval(params)
    meta: dict[str, Any] = {
        "inner": {"x_l": inner.x_l, "x_r": inner.x_r, "v0": inner.v0},
        "outer": {"x_l": outer.x_l, "x_r": outer.x_r, "v0": outer.v0},
        "calibration": {
            "inner": _calibration(inner, 0.5 * (lo + hi)),
            "outer": _calibration(outer, 0.5 * (lo + hi)),
        },
        "mean": {},
        "cov": {},
    }
    k = len(functions)
    mean = [0.0] * k
    cov = [[0.0] * k for _ in range(k)]
    for i, f in enumerate(functions):
        info: dict[str, Any] = {}
        try:
            mean[i] = clt_mean(params, f, inner, cfg, _values=values, meta=info)
        except SepCltError as exc:
            raise CltEntryError((f.label,), exc) from exc
        meta["mean"][f.label] = info
    for i in range(k):
        for j in range(i, k):
            info = {}
            try:
                v = clt_cov(params, functions[i], functions[j], inner, outer, cfg, _values=values, meta=info)
            except SepCltError as exc:
                raise CltEntryError((functions[i].label, functions[j].label), exc) from exc
            cov[i][j] = cov[j][i] = v
            meta["cov"][f"{functions[i].label},{functions[j].label}"] = info
    summary = CltSummary(functions, mean, cov, meta)
    summary.validate()
    return summary
