"""Closed-form expressions for exponent fields, coefficients and nonlinearities.

Grammar: numbers, the coordinates ``x`` and ``y``, the nonlinearity argument
``tau`` (alias ``u``), the constant ``pi``, names of declared fields, the
operators ``+ - * / ^`` (``**`` is accepted as a synonym), parentheses, and
the functions ``sin cos exp log abs sign``.
"""

import functools
import re
from dataclasses import dataclass

import numpy as np
import sympy
from sympy.parsing.sympy_parser import convert_xor, parse_expr, standard_transformations
from sympy.printing.str import StrPrinter

from .errors import ConfigError

FUNCTIONS = {
    "sin": sympy.sin,
    "cos": sympy.cos,
    "exp": sympy.exp,
    "log": sympy.log,
    "abs": sympy.Abs,
    "sign": sympy.sign,
}
COORDINATES = ("x", "y")
ARGUMENT = "tau"

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/^(),])"
    r")"
)
_TRANSFORMATIONS = standard_transformations + (convert_xor,)


class _GrammarPrinter(StrPrinter):
    """Prints sympy expressions back into the input grammar."""

    def _print_Abs(self, expr):
        return f"abs({self._print(expr.args[0])})"

    def _print_Exp1(self, expr):
        return "exp(1)"

    def _print_Pi(self, expr):
        return "pi"


def symbol(name: str) -> sympy.Symbol:
    return sympy.Symbol(name, real=True)


def _tokens(text: str) -> list[tuple[str, str]]:
    tokens = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        match = _TOKEN.match(text, pos)
        if not match or match.end() == pos:
            raise ConfigError(f"unexpected character {text[pos:].strip()[:1]!r} in expression {text!r}")
        kind = match.lastgroup
        tokens.append((kind, match.group(kind)))
        pos = match.end()
    return tokens


@dataclass(frozen=True, eq=False)
class Expression:
    text: str
    expr: sympy.Expr

    @classmethod
    def parse(cls, text: str | float | int, names: tuple[str, ...] | list[str] = ()) -> "Expression":
        """Parse ``text`` allowing the grammar names plus ``names``."""
        if isinstance(text, (int, float)) and not isinstance(text, bool):
            text = repr(float(text))
        if not isinstance(text, str) or not text.strip():
            raise ConfigError(f"expression must be a non-empty string, got {text!r}")

        allowed = set(FUNCTIONS) | set(COORDINATES) | {ARGUMENT, "u", "pi"} | set(names)
        unknown = sorted({value for kind, value in _tokens(text) if kind == "name" and value not in allowed})
        if unknown:
            raise ConfigError(f"unknown name(s) {', '.join(unknown)} in expression {text!r}")

        local = {name: symbol(name) for name in (*COORDINATES, ARGUMENT, *names)}
        local["u"] = local[ARGUMENT]
        local["pi"] = sympy.pi
        local.update(FUNCTIONS)
        try:
            expr = parse_expr(text, local_dict=local, global_dict={"Integer": sympy.Integer, "Float": sympy.Float, "Rational": sympy.Rational}, transformations=_TRANSFORMATIONS)
        except (SyntaxError, TypeError, ValueError, sympy.SympifyError) as e:
            raise ConfigError(f"cannot parse expression {text!r}: {e}") from e
        if not isinstance(expr, sympy.Expr):
            raise ConfigError(f"expression {text!r} does not denote a number")
        return cls(text.strip(), expr)

    @classmethod
    def from_sympy(cls, expr: sympy.Expr) -> "Expression":
        return cls(_GrammarPrinter().doprint(expr), expr)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(sorted(s.name for s in self.expr.free_symbols))

    @property
    def is_constant(self) -> bool:
        return not self.expr.free_symbols

    @functools.cached_property
    def _compiled(self):
        return sympy.lambdify([symbol(n) for n in self.names], self.expr, modules="numpy")

    def evaluate(self, shape: tuple[int, ...], **values) -> np.ndarray:
        """Evaluate elementwise; every free name must be supplied."""
        missing = [n for n in self.names if n not in values]
        if missing:
            raise ConfigError(f"expression {self.text!r} needs values for {', '.join(missing)}")
        with np.errstate(all="ignore"):
            result = self._compiled(*(np.asarray(values[n], dtype=float) for n in self.names))
        return np.broadcast_to(np.asarray(result, dtype=float), shape).copy()

    def diff(self, name: str) -> "Expression":
        return Expression.from_sympy(sympy.diff(self.expr, symbol(name)))

    def substitute(self, name: str, replacement: "Expression") -> "Expression":
        return Expression.from_sympy(self.expr.subs(symbol(name), replacement.expr))

    def __str__(self) -> str:
        return self.text
