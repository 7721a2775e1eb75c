"""Analytic test functions with closed-form derivatives."""

from __future__ import annotations

import ast
import re
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import BranchCutCrossing

__all__ = ["TestFunction", "parse_function", "polynomial", "monomial"]

_KINDS = ("polynomial", "log", "exp")


@dataclass(frozen=True)
class TestFunction:
    """``outer(scale * x + shift)`` with ``outer`` a polynomial, ``log`` or ``exp``."""

    __test__ = False  # keep pytest from collecting this class

    kind: str
    coefficients: tuple[float, ...] = ()
    scale: float = 1.0
    shift: float = 0.0
    label: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"unknown test function kind {self.kind!r}")
        if self.kind == "polynomial" and not self.coefficients:
            raise ValueError("polynomial needs at least one coefficient")
        if self.scale == 0.0:
            raise ValueError("scale must be nonzero")
        if not self.label:
            object.__setattr__(self, "label", self._default_label())

    def _default_label(self) -> str:
        inner = _affine_str(self.scale, self.shift)
        if self.kind == "polynomial":
            nz = [(k, a) for k, a in enumerate(self.coefficients) if a != 0.0]
            if len(nz) == 1 and nz[0][1] == 1.0 and inner == "x":
                k = nz[0][0]
                return "1" if k == 0 else ("x" if k == 1 else f"x^{k}")
            return "poly[" + ",".join(repr(float(a)) for a in self.coefficients) + "]" + (
                "" if inner == "x" else f"({inner})"
            )
        return f"{self.kind}({inner})" if inner != "x" else self.kind

    def __call__(self, z: Any) -> Any:
        u = self.scale * np.asarray(z) + self.shift
        if self.kind == "polynomial":
            return P.polyval(u, self.coefficients)
        if self.kind == "log":
            return np.log(u)
        return np.exp(u)

    def derivative(self, z: Any) -> Any:
        u = self.scale * np.asarray(z) + self.shift
        if self.kind == "polynomial":
            d = P.polyder(self.coefficients) if len(self.coefficients) > 1 else (0.0,)
            return self.scale * P.polyval(u, d) + 0.0 * u
        if self.kind == "log":
            return self.scale / u
        return self.scale * np.exp(u)

    def branch_point(self) -> float | None:
        """Real point where analyticity ends (log only)."""
        if self.kind == "log":
            return -self.shift / self.scale + 0.0  # avoid printing -0
        return None

    def analytic_on(self, x_l: float, x_r: float) -> bool:
        """Whether the function is analytic on every rectangle with real extent ``[x_l, x_r]``."""
        p = self.branch_point()
        if p is None:
            return True
        return x_l > p if self.scale > 0 else x_r < p

    def check_region(self, x_l: float, x_r: float) -> None:
        if not self.analytic_on(x_l, x_r):
            raise BranchCutCrossing(
                f"{self.label}: branch cut at x={self.branch_point():g} meets the region [{x_l:g}, {x_r:g}]"
            )

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "coefficients": list(self.coefficients),
            "scale": self.scale,
            "shift": self.shift,
            "label": self.label,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "TestFunction":
        return cls(
            data["kind"],
            tuple(float(a) for a in data.get("coefficients", ())),
            float(data.get("scale", 1.0)),
            float(data.get("shift", 0.0)),
            data.get("label", ""),
        )


def _affine_str(a: float, b: float) -> str:
    if a == 1.0 and b == 0.0:
        return "x"
    left = "x" if a == 1.0 else f"{a:g}*x"
    if b == 0.0:
        return left
    return f"{left}{'+' if b > 0 else '-'}{abs(b):g}"


def polynomial(coefficients, label: str = "") -> TestFunction:
    """Polynomial with coefficients in increasing degree."""
    return TestFunction("polynomial", tuple(float(a) for a in coefficients), label=label)


def monomial(k: int) -> TestFunction:
    return polynomial([0.0] * k + [1.0])


_OPS = (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.USub, ast.UAdd)


def _eval_expr(node: ast.AST, x: float) -> float:
    if isinstance(node, ast.Expression):
        return _eval_expr(node.body, x)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return float(node.value)
    if isinstance(node, ast.Name) and node.id == "x":
        return x
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, _OPS):
        v = _eval_expr(node.operand, x)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.BinOp) and isinstance(node.op, _OPS):
        a, b = _eval_expr(node.left, x), _eval_expr(node.right, x)
        if isinstance(node.op, ast.Add):
            return a + b
        if isinstance(node.op, ast.Sub):
            return a - b
        if isinstance(node.op, ast.Mult):
            return a * b
        return a / b
    raise ValueError("unsupported syntax in affine expression")


def _parse_affine(text: str) -> tuple[float, float]:
    tree = ast.parse(text, mode="eval")
    f0, f1, f2 = (_eval_expr(tree, x) for x in (0.0, 1.0, 2.0))
    a, b = f1 - f0, f0
    if abs((f2 - f1) - a) > 1e-12 * max(1.0, abs(a)):
        raise ValueError(f"{text!r} is not affine in x")
    return a, b


_MONO = re.compile(r"^x(?:\^|\*\*)(\d+)$")
_POLY = re.compile(r"^poly\[([^\]]*)\]$")
_OUTER = re.compile(r"^(log|exp)(?:\((.*)\))?$")


def parse_function(spec: str | dict[str, Any]) -> TestFunction:
    """Parse a label such as ``x``, ``x^3``, ``poly[1,0,2]``, ``exp``, ``log(1+x)``, ``exp(0.5*x)``.

    Dicts are taken as the serialized form.
    """
    if isinstance(spec, dict):
        return TestFunction.from_dict(spec)
    text = spec.replace(" ", "")
    if text == "1":
        return monomial(0)
    if text == "x":
        return monomial(1)
    if m := _MONO.match(text):
        return monomial(int(m.group(1)))
    if m := _POLY.match(text):
        return polynomial([float(s) for s in m.group(1).split(",") if s], label=text)
    if m := _OUTER.match(text):
        a, b = _parse_affine(m.group(2)) if m.group(2) else (1.0, 0.0)
        return TestFunction(m.group(1), (), a, b, label=text)
    raise ValueError(f"cannot parse test function {spec!r}")
