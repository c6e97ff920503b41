"""Closed-form coefficient expressions.

Coefficients (a, lambda0, g) are written in a tiny arithmetic grammar so that
problem specs serialize to plain text::

    "100"                  constant
    "|x|^2"                power of the Euclidean norm
    "0.5*|x|^0.3 + 2"      sums and products
    "1 + x1^2 - x2"        coordinates x1, x2

Accepted tokens: numbers, ``x1``, ``x2``, ``r`` (alias of ``|x|``), the operators
``+ - * / ^`` and parentheses.  ``^`` and ``**`` both mean power.
"""
from __future__ import annotations

import ast
import re
from dataclasses import dataclass, field

import numpy as np

_NAMES = ("x1", "x2", "r")
_BINOPS = (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)


class ExpressionError(ValueError):
    pass


def _normalize(text: str) -> str:
    out = re.sub(r"\|\s*x\s*\|", "r", text)
    return out.replace("^", "**")


def _check(node: ast.AST) -> None:
    if isinstance(node, ast.Expression):
        _check(node.body)
    elif isinstance(node, ast.BinOp):
        if not isinstance(node.op, _BINOPS):
            raise ExpressionError(f"operator {type(node.op).__name__} not allowed")
        _check(node.left)
        _check(node.right)
    elif isinstance(node, ast.UnaryOp):
        if not isinstance(node.op, (ast.USub, ast.UAdd)):
            raise ExpressionError("only unary +/- allowed")
        _check(node.operand)
    elif isinstance(node, ast.Constant):
        if not isinstance(node.value, (int, float)) or isinstance(node.value, bool):
            raise ExpressionError(f"bad constant {node.value!r}")
    elif isinstance(node, ast.Name):
        if node.id not in _NAMES:
            raise ExpressionError(f"unknown symbol {node.id!r}")
    else:
        raise ExpressionError(f"syntax {type(node).__name__} not allowed")


def _eval(node: ast.AST, env: dict[str, np.ndarray]):
    if isinstance(node, ast.Expression):
        return _eval(node.body, env)
    if isinstance(node, ast.Constant):
        return float(node.value)
    if isinstance(node, ast.Name):
        return env[node.id]
    if isinstance(node, ast.UnaryOp):
        v = _eval(node.operand, env)
        return -v if isinstance(node.op, ast.USub) else v
    left = _eval(node.left, env)
    right = _eval(node.right, env)
    op = node.op
    if isinstance(op, ast.Add):
        return left + right
    if isinstance(op, ast.Sub):
        return left - right
    if isinstance(op, ast.Mult):
        return left * right
    if isinstance(op, ast.Div):
        return left / right
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.power(left, right)


class _Substitute(ast.NodeTransformer):
    def __init__(self, mapping: dict[str, ast.AST]):
        self.mapping = mapping

    def visit_Name(self, node: ast.Name) -> ast.AST:
        return self.mapping.get(node.id, node)


@dataclass(frozen=True)
class Expr:
    """A parsed coefficient expression, callable on points of shape (..., n)."""

    text: str
    _tree: ast.Expression = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        try:
            tree = ast.parse(_normalize(str(self.text)), mode="eval")
        except SyntaxError as exc:
            raise ExpressionError(f"cannot parse {self.text!r}: {exc.msg}") from None
        _check(tree)
        object.__setattr__(self, "_tree", tree)

    @classmethod
    def coerce(cls, value) -> "Expr":
        if isinstance(value, Expr):
            return value
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return cls(repr(float(value)))
        return cls(str(value))

    def __call__(self, x) -> np.ndarray | float:
        x = np.asarray(x, dtype=float)
        if x.ndim == 0:
            x = x.reshape(1)
        env = {
            "x1": x[..., 0],
            "x2": x[..., 1] if x.shape[-1] > 1 else np.zeros(x.shape[:-1]),
            "r": np.sqrt(np.sum(x * x, axis=-1)),
        }
        val = _eval(self._tree, env)
        out = np.broadcast_to(np.asarray(val, dtype=float), x.shape[:-1])
        if out.ndim == 0:
            return float(out)
        return np.array(out)

    @property
    def is_constant(self) -> bool:
        return not any(isinstance(n, ast.Name) for n in ast.walk(self._tree))

    def compose_affine(self, scale: float, center, rho: float) -> "Expr":
        """Return ``x -> scale * self(center + rho * x)``."""
        center = np.atleast_1d(np.asarray(center, dtype=float))
        c1 = float(center[0])
        c2 = float(center[1]) if center.size > 1 else 0.0
        rho = float(rho)
        x1 = ast.parse(f"({c1!r} + {rho!r}*x1)", mode="eval").body
        x2 = ast.parse(f"({c2!r} + {rho!r}*x2)", mode="eval").body
        r = ast.parse(
            f"((({c1!r} + {rho!r}*x1)**2 + ({c2!r} + {rho!r}*x2)**2)**0.5)", mode="eval"
        ).body
        tree = _Substitute({"x1": x1, "x2": x2, "r": r}).visit(
            ast.parse(_normalize(self.text), mode="eval")
        )
        body = ast.unparse(tree)
        return Expr(f"{float(scale)!r}*({body})")

    def __str__(self) -> str:
        return self.text
