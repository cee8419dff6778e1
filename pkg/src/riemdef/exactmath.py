"""Exact scalar layer: rationals, affine parameter expressions, partitions,
Bernoulli numbers and small combinatorial helpers.

Every quantity in the package bottoms out here; nothing is ever a float.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import comb, factorial
from typing import Iterable, Iterator, Mapping, Union

from .errors import NonlinearParameterProduct, OutOfRange

__all__ = [
    "Rational",
    "rational",
    "format_rational",
    "ParamExpr",
    "as_paramexpr",
    "Partition",
    "partitions_of",
    "bernoulli",
    "double_factorial_odd",
    "comb",
    "factorial",
]

# Reduced p/q with positive denominator and canonical 0/1 are exactly the
# invariants fractions.Fraction maintains, so Rational is that type.
Rational = Fraction

Numeric = Union[int, Fraction]


def rational(value: Union[int, str, Fraction], den: int | None = None) -> Fraction:
    """Build a Fraction from an int, a 'p/q' string, or a pair."""
    if den is not None:
        return Fraction(value, den)
    if isinstance(value, str):
        return Fraction(value.strip())
    return Fraction(value)


def format_rational(q: Fraction) -> str:
    """Render exactly, 'p/q' when the denominator is not 1."""
    return str(q)


class ParamExpr:
    """Affine expression ``c0 + sum_i c_i * name_i`` over exact rationals.

    Multiplication is defined only when at least one factor is numeric;
    a product of two parameter-carrying expressions raises
    NonlinearParameterProduct. Instances are immutable value objects.
    """

    __slots__ = ("const", "terms")

    def __init__(self, const: Numeric = 0, terms: Mapping[str, Numeric] | None = None):
        object.__setattr__(self, "const", Fraction(const))
        clean: dict[str, Fraction] = {}
        if terms:
            for name, coeff in terms.items():
                c = Fraction(coeff)
                if c:
                    clean[name] = c
        object.__setattr__(self, "terms", clean)

    def __setattr__(self, name, value):  # pragma: no cover - guard only
        raise AttributeError("ParamExpr is immutable")

    @property
    def is_numeric(self) -> bool:
        return not self.terms

    def is_zero(self) -> bool:
        return not self.terms and self.const == 0

    def numeric_value(self) -> Fraction:
        if self.terms:
            raise NonlinearParameterProduct(
                f"expression {self} still carries parameters {sorted(self.terms)}"
            )
        return self.const

    def parameters(self) -> set[str]:
        return set(self.terms)

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other) -> "ParamExpr":
        other = as_paramexpr(other)
        terms = dict(self.terms)
        for name, c in other.terms.items():
            s = terms.get(name, Fraction(0)) + c
            if s:
                terms[name] = s
            else:
                terms.pop(name, None)
        return ParamExpr(self.const + other.const, terms)

    __radd__ = __add__

    def __neg__(self) -> "ParamExpr":
        return ParamExpr(-self.const, {n: -c for n, c in self.terms.items()})

    def __sub__(self, other) -> "ParamExpr":
        return self + (-as_paramexpr(other))

    def __rsub__(self, other) -> "ParamExpr":
        return as_paramexpr(other) + (-self)

    def __mul__(self, other) -> "ParamExpr":
        other = as_paramexpr(other)
        if self.terms and other.terms:
            raise NonlinearParameterProduct(f"cannot multiply {self} by {other}")
        if other.terms:
            self, other = other, self
        k = other.const
        if k == 0:
            return ParamExpr(0)
        return ParamExpr(self.const * k, {n: c * k for n, c in self.terms.items()})

    __rmul__ = __mul__

    def __truediv__(self, other) -> "ParamExpr":
        other = as_paramexpr(other)
        k = other.numeric_value()
        if k == 0:
            raise ZeroDivisionError("division of ParamExpr by zero")
        return ParamExpr(self.const / k, {n: c / k for n, c in self.terms.items()})

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            return self.is_numeric and self.const == other
        if not isinstance(other, ParamExpr):
            return NotImplemented
        return self.const == other.const and self.terms == other.terms

    def __hash__(self) -> int:
        return hash((self.const, frozenset(self.terms.items())))

    def substitute(self, bindings: Mapping[str, object]) -> "ParamExpr":
        """Replace named parameters by exact values or other affine expressions;
        unknown names stay symbolic."""
        const = self.const
        terms: dict[str, Fraction] = {}
        for name, c in self.terms.items():
            if name not in bindings:
                terms[name] = terms.get(name, Fraction(0)) + c
                continue
            value = bindings[name]
            if isinstance(value, ParamExpr):
                const += c * value.const
                for n2, c2 in value.terms.items():
                    s = terms.get(n2, Fraction(0)) + c * c2
                    if s:
                        terms[n2] = s
                    else:
                        terms.pop(n2, None)
            else:
                const += c * Fraction(value)
        return ParamExpr(const, {n: c for n, c in terms.items() if c})

    def coefficient(self, name: str) -> Fraction:
        return self.terms.get(name, Fraction(0))

    def __str__(self) -> str:
        parts: list[str] = []
        if self.const or not self.terms:
            parts.append(format_rational(self.const))
        for name in sorted(self.terms):
            c = self.terms[name]
            if c == 1:
                s = name
            elif c == -1:
                s = f"-{name}"
            else:
                s = f"{format_rational(c)}*{name}"
            if parts and not s.startswith("-"):
                parts.append(f"+ {s}")
            elif parts:
                parts.append(f"- {s[1:]}")
            else:
                parts.append(s)
        return " ".join(parts)

    def __repr__(self) -> str:
        return f"ParamExpr({self})"


def as_paramexpr(value) -> ParamExpr:
    if isinstance(value, ParamExpr):
        return value
    if isinstance(value, (int, Fraction)):
        return ParamExpr(value)
    raise TypeError(f"cannot interpret {value!r} as a ParamExpr")


PARAM_ZERO = ParamExpr(0)
PARAM_ONE = ParamExpr(1)


class Partition:
    """Integer partition as a weakly decreasing tuple of positive parts.

    Ordering is lexicographic on the part tuples with missing parts read
    as 0, so (3,) < (3, 1) and (2, 2) < (3,).
    """

    __slots__ = ("parts",)

    def __init__(self, parts: Iterable[int]):
        p = tuple(sorted((int(x) for x in parts), reverse=True))
        if any(x <= 0 for x in p):
            raise ValueError(f"partition parts must be positive, got {p}")
        object.__setattr__(self, "parts", p)

    def __setattr__(self, name, value):  # pragma: no cover - guard only
        raise AttributeError("Partition is immutable")

    @property
    def size(self) -> int:
        return sum(self.parts)

    @property
    def length(self) -> int:
        return len(self.parts)

    def multiplicity(self, k: int) -> int:
        return self.parts.count(k)

    def is_circ(self) -> bool:
        """Length at least two with the two largest parts equal."""
        return len(self.parts) >= 2 and self.parts[0] == self.parts[1]

    def is_prime(self) -> bool:
        """Circ with every part at least 2."""
        return self.is_circ() and self.parts[-1] >= 2

    def __eq__(self, other) -> bool:
        return isinstance(other, Partition) and self.parts == other.parts

    def __hash__(self) -> int:
        return hash(self.parts)

    def __lt__(self, other: "Partition") -> bool:
        return self.parts < other.parts

    def __le__(self, other: "Partition") -> bool:
        return self.parts <= other.parts

    def __gt__(self, other: "Partition") -> bool:
        return self.parts > other.parts

    def __ge__(self, other: "Partition") -> bool:
        return self.parts >= other.parts

    def __iter__(self) -> Iterator[int]:
        return iter(self.parts)

    def __repr__(self) -> str:
        return f"Partition{self.parts}"


def _descending_partitions(n: int, max_part: int) -> Iterator[tuple[int, ...]]:
    if n == 0:
        yield ()
        return
    for first in range(min(n, max_part), 0, -1):
        for rest in _descending_partitions(n - first, first):
            yield (first,) + rest


def partitions_of(n: int, kind: str = "all") -> list[Partition]:
    """Partitions of n in descending lexicographic order.

    kind selects a family: 'all'; 'circ' (length >= 2, two largest parts
    equal); 'prime' (circ with all parts >= 2); 'parts_ge_2' (every part
    at least 2, any shape).
    """
    if n < 0:
        raise OutOfRange(f"cannot partition {n}")
    out: list[Partition] = []
    for parts in _descending_partitions(n, n if n else 1):
        if not parts:
            continue
        lam = Partition(parts)
        if kind == "all":
            out.append(lam)
        elif kind == "circ":
            if lam.is_circ():
                out.append(lam)
        elif kind == "prime":
            if lam.is_prime():
                out.append(lam)
        elif kind == "parts_ge_2":
            if parts[-1] >= 2:
                out.append(lam)
        else:
            raise ValueError(f"unknown partition kind {kind!r}")
    return out


@lru_cache(maxsize=None)
def bernoulli(n: int) -> Fraction:
    """Bernoulli number B_n in the convention B_1 = -1/2.

    Defined by the recurrence sum_{k=0}^{n} C(n+1, k) B_k = 0 with B_0 = 1.
    """
    if n < 0:
        raise OutOfRange("Bernoulli numbers need n >= 0")
    if n == 0:
        return Fraction(1)
    acc = Fraction(0)
    for k in range(n):
        acc += comb(n + 1, k) * bernoulli(k)
    return -acc / (n + 1)


def double_factorial_odd(n: int) -> int:
    """(2n+1)!! = 1*3*5*...*(2n+1)."""
    if n < 0:
        raise OutOfRange("odd double factorial needs n >= 0")
    out = 1
    for k in range(3, 2 * n + 2, 2):
        out *= k
    return out
