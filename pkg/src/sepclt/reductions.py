"""Closed-form special cases used to cross-check the general CLT formulas.

When one of the two covariance factors is the identity, the model collapses
to an ordinary sample covariance matrix and the Stieltjes transforms solve
a single scalar equation. Clearing denominators turns that equation into a
polynomial, so ``m`` comes from :func:`numpy.roots` instead of the coupled
fixed-point solver. Mean integrands and kernels are then the classical
one-sided expressions.

``T2 = I``: ``m`` is the Stieltjes transform of the limit law itself and
solves ``z m + (1 - c) + c int 1/(1 + m x) dH1 = 0``.

``T1 = I``: ``B_n`` is ``c`` times a standard sample covariance matrix with
aspect ratio ``y = 1/c`` and population spectrum ``H2``. Its companion
transform ``mu(w)`` at ``w = z/c`` solves
``w = -1/mu + y int t/(1 + t mu) dH2``.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.polynomial import polynomial as P

from .contour import RectContour, converge
from .errors import BranchViolation, NoConvergence
from .functions import TestFunction
from .solver import ModelParams

__all__ = [
    "is_t2_identity",
    "is_t1_identity",
    "t2_identity_m",
    "t2_identity_mean_integrand",
    "t2_identity_kernel",
    "t2_identity_mean",
    "t1_identity_mu",
    "t1_identity_mean_integrand",
    "t1_identity_kernel",
    "t1_identity_mean",
    "reduced_cov",
]

ROOT_TOL = 1e-9


def is_t2_identity(params: ModelParams) -> bool:
    return params.h2.values == (1.0,)


def is_t1_identity(params: ModelParams) -> bool:
    return params.h1.values == (1.0,)


def _pick(roots: np.ndarray, ok, resid) -> complex:
    cands = [r for r in roots if ok(r)]
    if not cands:
        raise NoConvergence(float("nan"), 0, None)
    best = min(cands, key=lambda r: abs(resid(r)))
    if abs(resid(best)) > ROOT_TOL * max(1.0, abs(best)):
        raise NoConvergence(abs(resid(best)), 0, None)
    return complex(best)


def _upper(z):
    """Map to the upper half plane; returns the mapped array and a conjugation mask."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    flip = z.imag < 0
    return np.where(flip, z.conj(), z), flip


def t2_identity_m(params: ModelParams, z) -> np.ndarray:
    """Stieltjes transform of the limit law when ``H2`` is a point mass at 1."""
    c, h1 = params.c, params.h1
    zu, flip = _upper(z)
    # prod_k (1 + m x_k) and its k-th deleted products
    factors = [np.array([1.0, x]) for x in h1.v]
    full = np.array([1.0])
    for fac in factors:
        full = P.polymul(full, fac)
    rest = np.array([0.0])
    for k, wk in enumerate(h1.w):
        others = np.array([1.0])
        for j, fac in enumerate(factors):
            if j != k:
                others = P.polymul(others, fac)
        rest = P.polyadd(rest, wk * others)
    out = np.empty(zu.shape, dtype=complex)
    for i, zi in enumerate(zu):
        poly = P.polyadd(P.polymul([0.0, zi], full), (1.0 - c) * full)
        poly = P.polyadd(poly, c * rest)
        roots = np.roots(poly[::-1])

        def resid(m, zi=zi):
            return zi * m + (1.0 - c) + c * np.sum(h1.w / (1.0 + m * h1.v))

        def ok(m, zi=zi):
            return m.imag > 0 and m.imag / abs(m) ** 2 > zi.imag

        out[i] = _pick(roots, ok, resid)
    return np.where(flip, out.conj(), out)


def _moment_int(measure, m: np.ndarray, power: int, order: int) -> np.ndarray:
    x = measure.v[None, :]
    return (measure.w * x**power / (1.0 + m[:, None] * x) ** order).sum(axis=1)


def _one_sided_mean(y: float, h, m: np.ndarray) -> np.ndarray:
    """``y m^3 int x^2/(1+xm)^3 dH / (1 - y m^2 int x^2/(1+xm)^2 dH)^2``."""
    num = y * m**3 * _moment_int(h, m, 2, 3)
    den = 1.0 - y * m**2 * _moment_int(h, m, 2, 2)
    return num / den**2


def _one_sided_kernel(m1: np.ndarray, m2: np.ndarray, z1: np.ndarray, z2: np.ndarray) -> np.ndarray:
    return 1.0 + m1 * m2 * (z1 - z2) / (m2 - m1)


def t2_identity_mean_integrand(params: ModelParams, z) -> np.ndarray:
    m = t2_identity_m(params, z)
    return _one_sided_mean(params.c, params.h1, m)


def t2_identity_kernel(params: ModelParams, z1, z2) -> np.ndarray:
    """Kernel on the grid ``z1 x z2`` (rows, columns)."""
    z1 = np.atleast_1d(np.asarray(z1, dtype=complex))
    z2 = np.atleast_1d(np.asarray(z2, dtype=complex))
    m1 = t2_identity_m(params, z1)
    m2 = t2_identity_m(params, z2)
    return _one_sided_kernel(m1[:, None], m2[None, :], z1[:, None], z2[None, :])


def t1_identity_mu(params: ModelParams, z) -> np.ndarray:
    """Companion transform of ``B_n / c`` at ``w = z / c`` when ``H1`` is a point mass at 1."""
    c, h2 = params.c, params.h2
    y = 1.0 / c
    wu, flip = _upper(np.asarray(z, dtype=complex) / c)
    factors = [np.array([1.0, t]) for t in h2.v]
    full = np.array([1.0])
    for fac in factors:
        full = P.polymul(full, fac)
    # y * mu * sum_k w_k t_k prod_{j != k}(1 + t_j mu)
    rest = np.array([0.0])
    for k, (tk, wk) in enumerate(zip(h2.v, h2.w)):
        others = np.array([0.0, 1.0])
        for j, fac in enumerate(factors):
            if j != k:
                others = P.polymul(others, fac)
        rest = P.polyadd(rest, y * wk * tk * others)
    out = np.empty(wu.shape, dtype=complex)
    for i, wi in enumerate(wu):
        # w mu prod + prod - rest = 0
        poly = P.polyadd(P.polymul([0.0, wi], full), full)
        poly = P.polysub(poly, rest)
        roots = np.roots(np.trim_zeros(poly[::-1], "f"))

        def resid(mu, wi=wi):
            return wi + 1.0 / mu - y * np.sum(h2.w * h2.v / (1.0 + h2.v * mu))

        def ok(mu, wi=wi):
            m_own = (mu + (1.0 - y) / wi) / y
            return mu.imag > 0 and m_own.imag > 0

        out[i] = _pick(roots, ok, resid)
    return np.where(flip, out.conj(), out)


def t1_identity_mean_integrand(params: ModelParams, z) -> np.ndarray:
    c = params.c
    mu = t1_identity_mu(params, z)
    return _one_sided_mean(1.0 / c, params.h2, mu) / c


def t1_identity_kernel(params: ModelParams, z1, z2) -> np.ndarray:
    c = params.c
    z1 = np.atleast_1d(np.asarray(z1, dtype=complex))
    z2 = np.atleast_1d(np.asarray(z2, dtype=complex))
    mu1 = t1_identity_mu(params, z1)
    mu2 = t1_identity_mu(params, z2)
    return _one_sided_kernel(mu1[:, None], mu2[None, :], z1[:, None] / c, z2[None, :] / c)


def _reduced_mean(integrand, params: ModelParams, f: TestFunction, contour: RectContour, tol: float) -> float:
    def once(ct: RectContour) -> float:
        z, w = ct.nodes()
        val = complex(np.sum(f(z) * integrand(params, z) * w)) * (-1.0 / (2j * math.pi))
        return val.real

    return converge(once, contour, tol)[0]


def t2_identity_mean(params: ModelParams, f: TestFunction, contour: RectContour, tol: float = 1e-9) -> float:
    if not is_t2_identity(params):
        raise ValueError("H2 must be a point mass at 1")
    return _reduced_mean(t2_identity_mean_integrand, params, f, contour, tol)


def t1_identity_mean(params: ModelParams, f: TestFunction, contour: RectContour, tol: float = 1e-9) -> float:
    if not is_t1_identity(params):
        raise ValueError("H1 must be a point mass at 1")
    return _reduced_mean(t1_identity_mean_integrand, params, f, contour, tol)


def reduced_cov(
    params: ModelParams,
    f: TestFunction,
    g: TestFunction,
    inner: RectContour,
    outer: RectContour,
) -> float:
    """Covariance from whichever one-sided kernel applies, at fixed quadrature order."""
    kern = t2_identity_kernel if is_t2_identity(params) else t1_identity_kernel
    zo, wo = outer.nodes()
    zi, wi = inner.nodes()
    k = kern(params, zo, zi)
    if not np.max(np.abs(k)) < 1.0:
        raise BranchViolation("one-sided kernel reaches modulus 1")
    val = (f.derivative(zo) * wo) @ np.log1p(-k) @ (g.derivative(zi) * wi)
    return float(np.real(val) / (2.0 * math.pi**2))
