"""Closed-form rational constants for deformations of the dispersionless hierarchy.

Everything here is table arithmetic over exact fractions: leading
coefficients of the order-2g corrections, a two-variable generating
polynomial computed by two independent routes, special values of
intersection-type sums, and the Bernoulli identities tying them together.
No jet-space computation happens in this module; the few functions that
return differential polynomials only package constants produced here.
"""

from __future__ import annotations

from fractions import Fraction
from math import factorial
from typing import Iterable, Mapping

from .diffpoly import DEFAULT_U_CAP, DiffPoly, Monomial
from .errors import MissingStructure, OutOfRange
from .exactmath import ParamExpr, as_paramexpr, bernoulli, double_factorial_odd
from .functionals import LocalFunctional

__all__ = [
    "DRParams",
    "BivariatePoly",
    "alpha",
    "beta",
    "gamma",
    "c2g_head",
    "a_2g_head",
    "bssz_recursive",
    "bssz_closed",
    "hodge_values",
    "kdv_p1",
    "delta_g1",
    "vanishing_combination",
]


def _abs_bernoulli(n: int) -> Fraction:
    return abs(bernoulli(n))


class DRParams:
    """Coupling data of a rank-one deformation family.

    `G` is the overall normalization (a parameter expression, nonzero when
    numeric) and `r` lists the exponents r_1, r_2, ... of the family's
    generating series. The restricted subfamily has every even exponent
    equal to zero; its alternative coordinates s_1, s_2, ... are recovered
    from the odd exponents by s_i = r_{2i-1} * (2i)! / B_{2i} with the
    signed Bernoulli number.
    """

    __slots__ = ("G", "r")

    def __init__(self, G, r: Iterable = ()):
        g_expr = as_paramexpr(G)
        if g_expr.is_numeric and g_expr.numeric_value() == 0:
            raise OutOfRange("normalization constant must be nonzero")
        object.__setattr__(self, "G", g_expr)
        object.__setattr__(self, "r", tuple(Fraction(x) for x in r))

    def __setattr__(self, name, value):
        raise AttributeError("DRParams is immutable")

    def r_at(self, i: int) -> Fraction:
        """Exponent r_i (1-indexed); zero beyond the stored list."""
        if i < 1:
            raise OutOfRange("exponent index starts at 1")
        if i <= len(self.r):
            return self.r[i - 1]
        return Fraction(0)

    @property
    def is_restricted(self) -> bool:
        """True when every even-indexed exponent vanishes."""
        return all(x == 0 for x in self.r[1::2])

    def s_values(self) -> tuple:
        """Coordinates s_i of the restricted subfamily, one per stored odd exponent."""
        if not self.is_restricted:
            raise MissingStructure(
                "even exponents must vanish before the s-coordinates exist"
            )
        out = []
        i = 1
        while 2 * i - 1 <= len(self.r):
            out.append(self.r[2 * i - 2] * factorial(2 * i) / bernoulli(2 * i))
            i += 1
        return tuple(out)

    def __eq__(self, other):
        if not isinstance(other, DRParams):
            return NotImplemented
        return self.G == other.G and self.r == other.r

    def __hash__(self):
        return hash((self.G, self.r))

    def __repr__(self):
        return f"DRParams(G={self.G}, r={list(self.r)})"


class BivariatePoly:
    """Polynomial in two commuting variables a, b with exact coefficients."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Mapping[tuple, object] | None = None):
        clean = {}
        for key, value in (coeffs or {}).items():
            i, j = key
            if i < 0 or j < 0:
                raise OutOfRange("powers must be nonnegative")
            q = Fraction(value)
            if q:
                clean[(int(i), int(j))] = q
        object.__setattr__(self, "coeffs", clean)

    def __setattr__(self, name, value):
        raise AttributeError("BivariatePoly is immutable")

    @staticmethod
    def zero() -> "BivariatePoly":
        return BivariatePoly()

    @staticmethod
    def constant(value) -> "BivariatePoly":
        return BivariatePoly({(0, 0): Fraction(value)})

    @staticmethod
    def term(a_pow: int, b_pow: int, coeff=1) -> "BivariatePoly":
        return BivariatePoly({(a_pow, b_pow): Fraction(coeff)})

    def coefficient(self, a_pow: int, b_pow: int) -> Fraction:
        return self.coeffs.get((a_pow, b_pow), Fraction(0))

    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def degree(self) -> int:
        if not self.coeffs:
            return 0
        return max(i + j for i, j in self.coeffs)

    @property
    def is_symmetric(self) -> bool:
        return all(self.coefficient(j, i) == c for (i, j), c in self.coeffs.items())

    def __add__(self, other: "BivariatePoly") -> "BivariatePoly":
        if not isinstance(other, BivariatePoly):
            return NotImplemented
        out = dict(self.coeffs)
        for key, value in other.coeffs.items():
            s = out.get(key, Fraction(0)) + value
            if s:
                out[key] = s
            else:
                out.pop(key, None)
        return BivariatePoly(out)

    def __neg__(self) -> "BivariatePoly":
        return BivariatePoly({k: -v for k, v in self.coeffs.items()})

    def __sub__(self, other: "BivariatePoly") -> "BivariatePoly":
        if not isinstance(other, BivariatePoly):
            return NotImplemented
        return self + (-other)

    def __mul__(self, other: "BivariatePoly") -> "BivariatePoly":
        if not isinstance(other, BivariatePoly):
            return NotImplemented
        out: dict = {}
        for (i1, j1), c1 in self.coeffs.items():
            for (i2, j2), c2 in other.coeffs.items():
                key = (i1 + i2, j1 + j2)
                s = out.get(key, Fraction(0)) + c1 * c2
                if s:
                    out[key] = s
                else:
                    out.pop(key, None)
        return BivariatePoly(out)

    def scale(self, factor) -> "BivariatePoly":
        q = Fraction(factor)
        if not q:
            return BivariatePoly()
        return BivariatePoly({k: v * q for k, v in self.coeffs.items()})

    def pow(self, n: int) -> "BivariatePoly":
        if n < 0:
            raise OutOfRange("negative power")
        out = BivariatePoly.constant(1)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def antidiagonal(self) -> dict:
        """Coefficients of the one-variable polynomial obtained by b -> -a."""
        out: dict = {}
        for (i, j), c in self.coeffs.items():
            value = c if j % 2 == 0 else -c
            s = out.get(i + j, Fraction(0)) + value
            if s:
                out[i + j] = s
            else:
                out.pop(i + j, None)
        return out

    def __eq__(self, other):
        if not isinstance(other, BivariatePoly):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self):
        return hash(frozenset(self.coeffs.items()))

    def __str__(self):
        if not self.coeffs:
            return "0"
        parts = []
        for (i, j) in sorted(self.coeffs, key=lambda k: (k[0] + k[1], k[0])):
            c = self.coeffs[(i, j)]
            body = "".join(
                f"{name}^{p}" if p > 1 else name
                for name, p in (("a", i), ("b", j))
                if p
            )
            parts.append(f"{c}" if not body else f"{c}*{body}")
        return " + ".join(parts)

    def __repr__(self):
        return f"BivariatePoly({self.coeffs!r})"


def alpha(g: int) -> Fraction:
    """Leading coefficient of the order-2g dispersive correction, g >= 2."""
    if g < 2:
        raise OutOfRange("alpha is defined for g >= 2")
    return Fraction(2 * g, 4**g) / double_factorial_odd(2 * g + 1)


def beta(g: int) -> Fraction:
    """Second-jet head coefficient at order 2g, g >= 2."""
    if g < 2:
        raise OutOfRange("beta is defined for g >= 2")
    return Fraction((3 * g - 1) * (2 * g - 1)) * _abs_bernoulli(2 * g) / factorial(2 * g)


def gamma(g: int) -> Fraction:
    """Mixed-jet head coefficient at order 2g, g >= 2."""
    if g < 2:
        raise OutOfRange("gamma is defined for g >= 2")
    return Fraction(3 * g - 2) * _abs_bernoulli(2 * g) / (8 * factorial(2 * g - 3))


def c2g_head(g: int) -> ParamExpr:
    """Leading part of the order-2g density coefficient of u_{2g}.

    For g = 1 the value is the absolute constant 1/12. For g >= 2 only the
    top linear term alpha(g) * r_{g-1} is pinned down in closed form; the
    remaining polynomial tail in the lower exponents is not computed, so
    the returned expression is the head alone.
    """
    if g < 1:
        raise OutOfRange("index must be at least 1")
    if g == 1:
        return as_paramexpr(Fraction(1, 12))
    return ParamExpr(0, {f"r{g - 1}": alpha(g)})


def a_2g_head(g: int) -> Fraction:
    """Coefficient of s_{g-1} in the all-twos density entry at order 2g, g >= 2."""
    if g < 2:
        raise OutOfRange("index must be at least 2")
    sign = -1 if g % 2 else 1
    num = Fraction(3 * g - 2) * _abs_bernoulli(2 * g - 2) * _abs_bernoulli(2 * g)
    return sign * num / (4 * g * factorial(2 * g - 2) ** 2)


def _a_plus_b() -> BivariatePoly:
    return BivariatePoly({(1, 0): 1, (0, 1): 1})


def bssz_recursive(g: int) -> BivariatePoly:
    """Order-g correlator polynomial P_g(a, b) by the two-point recursion."""
    if g < 0:
        raise OutOfRange("index must be nonnegative")
    p = BivariatePoly.constant(1)
    quad = BivariatePoly({(2, 0): 1, (1, 1): -1, (0, 2): 1})
    a_plus_b = _a_plus_b()
    for k in range(1, g + 1):
        lead = a_plus_b.pow(2 * k).scale(
            Fraction(1, (2 * k + 1) * 24**k * factorial(k))
        )
        p = lead + quad.scale(Fraction(1, 12 * (2 * k + 1))) * p
    return p


def bssz_closed(g: int) -> BivariatePoly:
    """Order-g correlator polynomial P_g(a, b) from the closed generating series.

    Extracts the weight-2g slice of exp(z^2 (a+b)^2 / 24) multiplied by the
    alternating series over (a b / 4) with odd double factorials.
    """
    if g < 0:
        raise OutOfRange("index must be nonnegative")
    out = BivariatePoly.zero()
    square = _a_plus_b().pow(2)
    ab = BivariatePoly.term(1, 1)
    for m in range(g + 1):
        n = g - m
        exp_part = square.pow(m).scale(Fraction(1, 24**m * factorial(m)))
        sign = -1 if n % 2 else 1
        tail = ab.pow(n).scale(Fraction(sign, 4**n * double_factorial_odd(2 * n + 1)))
        out = out + exp_part * tail
    return out


_HODGE_KINDS = ("psi_dr", "dr1", "lambda_triple", "b_h", "b_convolution")


def hodge_values(kind: str, g: int) -> Fraction:
    """Special exact values of intersection-type sums, by family.

    psi_dr: coefficient of a^(2g) in the top-psi pairing, 1 / (24^g g!).
    dr1: the unique order-one value 1/24 (g must be 1).
    lambda_triple: triple product of the top three dual classes, g >= 2.
    b_h: the weight-h constant of the odd expansion of x / (2 sinh(x/2))
         rescaled form; b_0 = 1 by convention.
    b_convolution: the closed form (2g-1) |B_{2g}| / (2g)! of the
         convolution sum over b_{g1} b_{g2} with g1 + g2 = g, g >= 1.
    """
    if kind == "psi_dr":
        if g < 1:
            raise OutOfRange("psi_dr needs g >= 1")
        return Fraction(1, 24**g * factorial(g))
    if kind == "dr1":
        if g != 1:
            raise OutOfRange("dr1 is only defined at g = 1")
        return Fraction(1, 24)
    if kind == "lambda_triple":
        if g < 2:
            raise OutOfRange("lambda_triple needs g >= 2")
        return (
            Fraction(1, 2 * factorial(2 * g - 2))
            * (_abs_bernoulli(2 * g - 2) / (2 * g - 2))
            * (_abs_bernoulli(2 * g) / (2 * g))
        )
    if kind == "b_h":
        if g < 0:
            raise OutOfRange("b_h needs h >= 0")
        if g == 0:
            return Fraction(1)
        scale = Fraction(2 ** (2 * g - 1) - 1, 2 ** (2 * g - 1))
        return scale * _abs_bernoulli(2 * g) / factorial(2 * g)
    if kind == "b_convolution":
        if g < 1:
            raise OutOfRange("b_convolution needs g >= 1")
        return Fraction(2 * g - 1) * _abs_bernoulli(2 * g) / factorial(2 * g)
    raise OutOfRange(f"unknown value family: {kind!r}")


def kdv_p1(G, eps_cap: int = 2, u_cap: int = DEFAULT_U_CAP) -> DiffPoly:
    """First conserved density of the trivial-exponent family: u^2/2 + (G/12) eps^2 u_2.

    All higher corrections vanish because every coefficient beyond order two
    is a positive-degree polynomial in the exponents, which are all zero
    here. G rescales the formal parameter: kdv_p1(G) is kdv_p1(1) under
    eps^2 -> G eps^2.
    """
    g_expr = as_paramexpr(G)
    if g_expr.is_numeric and g_expr.numeric_value() == 0:
        raise OutOfRange("normalization constant must be nonzero")
    if eps_cap < 2:
        raise OutOfRange("order cap must be at least 2")
    head = DiffPoly.from_monomial(Fraction(1, 2), 0, Monomial(2), eps_cap, u_cap)
    disp = DiffPoly.from_monomial(
        g_expr * Fraction(1, 12), 2, Monomial(0, ((2, 1),)), eps_cap, u_cap
    )
    return head + disp


def delta_g1(k: int, eps_cap: int = 0, u_cap: int = DEFAULT_U_CAP) -> LocalFunctional:
    """Order-one correction functional at level k: a multiple of the integral of u u_2^(k+1).

    The normalization alpha(k+1) / (3k+2) makes the defining linear equation
    hold: alpha(k+1) times the derivation along dx(u_2^(k+1)) applied to the
    integral of u^3/6, plus the derivation along u u_1 applied to this
    functional, vanishes identically.
    """
    if k < 1:
        raise OutOfRange("level must be at least 1")
    coeff = alpha(k + 1) / (3 * k + 2)
    density = DiffPoly.from_monomial(
        coeff, 0, Monomial(1, ((2, k + 1),)), eps_cap, u_cap
    )
    return LocalFunctional(density)


def vanishing_combination(g: int) -> Fraction:
    """Alternating factorial sum that collapses in the head-coefficient computation.

    (-1)^(g-1)/g! - 1/g! + sum over i+j = g, i,j >= 1 of (-1)^(j+1)/(i! j!);
    identically zero for g >= 2.
    """
    if g < 2:
        raise OutOfRange("defined for g >= 2")
    total = Fraction((-1) ** (g - 1), factorial(g)) - Fraction(1, factorial(g))
    for i in range(1, g):
        j = g - i
        total += Fraction((-1) ** (j + 1), factorial(i) * factorial(j))
    return total
