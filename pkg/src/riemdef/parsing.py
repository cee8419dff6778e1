"""Expression grammar and canonical text/JSON rendering for jet polynomials.

The surface language covers sums of products of exact rationals, the
symbols `u`, `u1 u2 ...` (jet variables, with `ux uxx uxxx` accepted as
aliases), `eps`, declared parameter names, parenthesized subexpressions,
integer powers with `^`, division by numeric constants, the derivation
marker `dx(...)`, and a top-level `int(...)` wrapper that turns a density
into a local functional. Rendering emits a canonical form that parses
back to an equal object.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Mapping, Union

from .diffpoly import DEFAULT_U_CAP, DiffPoly, dx
from .errors import ExprSyntaxError, UnknownParameter
from .exactmath import ParamExpr
from .functionals import LocalFunctional, integrate

__all__ = [
    "parse_expression",
    "render_poly",
    "render_functional",
    "render_coefficient",
    "poly_json_terms",
]

_JET_ALIASES = {"ux": 1, "uxx": 2, "uxxx": 3}
_RESERVED = {"u", "eps", "int", "dx"} | set(_JET_ALIASES)


class _Token:
    __slots__ = ("kind", "value", "pos")

    def __init__(self, kind: str, value, pos: int):
        self.kind = kind
        self.value = value
        self.pos = pos


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            tokens.append(_Token("num", int(text[i:j]), i))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(_Token("ident", text[i:j], i))
            i = j
            continue
        if ch in "+-*/^()":
            tokens.append(_Token(ch, ch, i))
            i += 1
            continue
        raise ExprSyntaxError(f"unexpected character {ch!r}", i)
    tokens.append(_Token("end", None, n))
    return tokens


class _Parser:
    """Recursive-descent parser producing DiffPoly values directly."""

    def __init__(
        self,
        tokens: list[_Token],
        eps_cap: int,
        u_cap: int,
        params: Mapping[str, Union[Fraction, None]],
    ):
        self.tokens = tokens
        self.pos = 0
        self.eps_cap = eps_cap
        self.u_cap = u_cap
        self.params = params

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def take(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str) -> _Token:
        tok = self.peek()
        if tok.kind != kind:
            raise ExprSyntaxError(f"expected {kind!r}", tok.pos)
        return self.take()

    def constant(self, value) -> DiffPoly:
        return DiffPoly.constant(Fraction(value), self.eps_cap, self.u_cap)

    # expr := ['+'|'-'] term (('+'|'-') term)*
    def expr(self) -> DiffPoly:
        value = self.signed_term()
        while self.peek().kind in "+-":
            op = self.take().kind
            rhs = self.term()
            value = value + rhs if op == "+" else value - rhs
        return value

    def signed_term(self) -> DiffPoly:
        sign = 1
        while self.peek().kind in "+-":
            if self.take().kind == "-":
                sign = -sign
        value = self.term()
        return value if sign > 0 else -value

    # term := factor (('*' factor) | ('/' numeric-factor) | factor)*
    def term(self) -> DiffPoly:
        value = self.factor()
        while True:
            tok = self.peek()
            if tok.kind == "*":
                self.take()
                value = value * self.factor()
            elif tok.kind == "/":
                self.take()
                divisor = self.factor()
                q = _numeric_value(divisor)
                if q is None or q == 0:
                    raise ExprSyntaxError(
                        "divisor must be a nonzero numeric constant", tok.pos
                    )
                value = value.scale(Fraction(1, 1) / q)
            elif tok.kind in ("ident", "("):
                value = value * self.factor()
            else:
                return value

    # factor := atom ['^' integer]
    def factor(self) -> DiffPoly:
        value = self.atom()
        if self.peek().kind == "^":
            mark = self.take()
            tok = self.peek()
            if tok.kind != "num":
                raise ExprSyntaxError("exponent must be a nonnegative integer", tok.pos)
            power = self.take().value
            value = _poly_pow(value, power, mark.pos)
        return value

    def atom(self) -> DiffPoly:
        tok = self.take()
        if tok.kind == "num":
            return self.constant(tok.value)
        if tok.kind == "(":
            value = self.expr()
            self.expect(")")
            return value
        if tok.kind == "ident":
            return self.named(tok)
        raise ExprSyntaxError("expected a value", tok.pos)

    def named(self, tok: _Token) -> DiffPoly:
        name = tok.value
        if name == "u":
            return DiffPoly.u(self.eps_cap, self.u_cap)
        if name == "eps":
            return DiffPoly.eps(self.eps_cap, self.u_cap)
        if name in _JET_ALIASES:
            return DiffPoly.jet(_JET_ALIASES[name], self.eps_cap, self.u_cap)
        if name == "dx":
            self.expect("(")
            inner = self.expr()
            self.expect(")")
            return dx(inner)
        if name == "int":
            raise ExprSyntaxError("int(...) is only allowed at the top level", tok.pos)
        if name[0] == "u" and name[1:].isdigit():
            order = int(name[1:])
            if order < 1:
                raise ExprSyntaxError("jet order must be at least 1", tok.pos)
            return DiffPoly.jet(order, self.eps_cap, self.u_cap)
        if name.startswith("_"):
            raise ExprSyntaxError("names starting with underscore are reserved", tok.pos)
        if name not in self.params:
            raise UnknownParameter(f"undeclared parameter {name!r}")
        return DiffPoly.constant(ParamExpr(0, {name: 1}), self.eps_cap, self.u_cap)


def _numeric_value(p: DiffPoly):
    """The Fraction value of a constant polynomial, else None."""
    if p.is_zero():
        return Fraction(0)
    if len(p.terms) != 1:
        return None
    (eps, mono), coeff = next(iter(p.terms.items()))
    if eps != 0 or mono.u_pow != 0 or mono.jets or not coeff.is_numeric:
        return None
    return coeff.numeric_value()


def _poly_pow(value: DiffPoly, power: int, pos: int) -> DiffPoly:
    if power < 0:
        raise ExprSyntaxError("exponent must be a nonnegative integer", pos)
    out = DiffPoly.constant(Fraction(1), value.eps_cap, value.u_cap)
    for _ in range(power):
        out = out * value
    return out


def parse_expression(
    text: str,
    eps_cap: int,
    u_cap: int = DEFAULT_U_CAP,
    params: Mapping[str, Union[Fraction, None]] | None = None,
) -> Union[DiffPoly, LocalFunctional]:
    """Parse source text into a polynomial, or a functional when wrapped in int(...).

    `params` maps declared parameter names to an optional numeric binding;
    bound names are substituted in the result.
    """
    tokens = _tokenize(text)
    params = dict(params or {})
    parser = _Parser(tokens, eps_cap, u_cap, params)
    wrap = False
    first = parser.peek()
    if first.kind == "ident" and first.value == "int":
        parser.take()
        parser.expect("(")
        value = parser.expr()
        parser.expect(")")
        wrap = True
    else:
        value = parser.expr()
    tail = parser.peek()
    if tail.kind != "end":
        raise ExprSyntaxError("unexpected trailing input", tail.pos)
    bindings = {n: v for n, v in params.items() if v is not None}
    if bindings:
        value = value.substitute_params(bindings)
    if wrap:
        return integrate(value)
    return value


# -- rendering -------------------------------------------------------------


def render_coefficient(c: ParamExpr) -> str:
    """Parseable text for a coefficient; rationals stay exact fractions."""
    parts: list[tuple[int, str]] = []
    if c.const:
        q = c.const
        parts.append((1 if q > 0 else -1, str(abs(q))))
    for name in sorted(c.terms):
        q = c.terms[name]
        mag = abs(q)
        body = name if mag == 1 else f"{mag}*{name}"
        parts.append((1 if q > 0 else -1, body))
    if not parts:
        return "0"
    out = parts[0][1] if parts[0][0] > 0 else f"-{parts[0][1]}"
    for sign, body in parts[1:]:
        out += f" + {body}" if sign > 0 else f" - {body}"
    return out


def _split_sign(c: ParamExpr) -> tuple[int, str, bool]:
    """(sign, magnitude text, is_unit) for use as a multiplicative coefficient."""
    if c.is_numeric:
        q = c.numeric_value()
        sign = 1 if q >= 0 else -1
        mag = abs(q)
        return sign, str(mag), mag == 1
    if not c.const and len(c.terms) == 1:
        name, q = next(iter(c.terms.items()))
        sign = 1 if q > 0 else -1
        mag = abs(q)
        text = name if mag == 1 else f"{mag}*{name}"
        return sign, text, False
    return 1, f"({render_coefficient(c)})", False


def _render_body(eps: int, mono) -> str:
    parts = []
    if eps:
        parts.append("eps" if eps == 1 else f"eps^{eps}")
    if mono.u_pow:
        parts.append("u" if mono.u_pow == 1 else f"u^{mono.u_pow}")
    for order, exp in sorted(mono.jets):
        parts.append(f"u{order}" if exp == 1 else f"u{order}^{exp}")
    return "*".join(parts)


def render_poly(p: DiffPoly) -> str:
    """Canonical text form; parses back to an equal polynomial."""
    terms = p.sorted_terms()
    if not terms:
        return "0"
    chunks: list[str] = []
    for (eps, mono), coeff in terms:
        sign, mag, unit = _split_sign(coeff)
        body = _render_body(eps, mono)
        if body and unit:
            text = body
        elif body:
            text = f"{mag}*{body}"
        else:
            text = mag
        if not chunks:
            chunks.append(text if sign > 0 else f"-{text}")
        else:
            chunks.append(f" + {text}" if sign > 0 else f" - {text}")
    return "".join(chunks)


def render_functional(f: LocalFunctional) -> str:
    return f"int({render_poly(f.density)})"


def poly_json_terms(p: DiffPoly) -> list:
    """Stable JSON encoding: one entry [eps, u_power, {jet: exp}, coeff] per term."""
    out = []
    for (eps, mono), coeff in p.sorted_terms():
        jets = {str(order): exp for order, exp in sorted(mono.jets)}
        out.append([eps, mono.u_pow, jets, render_coefficient(coeff)])
    return out
