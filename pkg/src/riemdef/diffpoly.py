"""Differential polynomials in one dependent variable u with a formal
deformation parameter eps.

A value is a finite sum of terms  coeff * eps^a * u^p * u_{k1}^{e1} * ...
where u_k stands for the k-th x-derivative of u. The algebra is graded by
the differential degree deg(u_k) = k, deg(eps) = -1, and every value lives
in the quotient by eps^(E+1) for its own cap E. Binary operations combine
values by taking the minimum of the caps.

Coefficients are exact affine ParamExpr values; nothing here is ever
floating point.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence, Union

from .errors import UDegreeOverflow
from .exactmath import PARAM_ONE, ParamExpr, Partition, as_paramexpr

__all__ = [
    "Monomial",
    "DiffPoly",
    "DEFAULT_U_CAP",
    "dx",
    "partial",
    "evolutionary",
    "flow_bracket",
    "u_lambda",
    "eval_at",
    "term_sort_key",
]

DEFAULT_U_CAP = 64

Coeff = Union[int, Fraction, ParamExpr]


class Monomial:
    """u^p times a product of jet variables, immutable and hashable.

    jets is stored as a tuple of (order, exponent) pairs with order >= 1,
    exponent >= 1, sorted by descending order.
    """

    __slots__ = ("u_pow", "jets", "_hash")

    def __init__(self, u_pow: int = 0, jets: Iterable[tuple[int, int]] = ()):
        if u_pow < 0:
            raise ValueError("negative u power")
        merged: dict[int, int] = {}
        for order, exp in jets:
            if order <= 0:
                raise ValueError("jet order must be >= 1; use u_pow for order 0")
            if exp < 0:
                raise ValueError("negative jet exponent")
            if exp:
                merged[order] = merged.get(order, 0) + exp
        tup = tuple(sorted(merged.items(), reverse=True))
        object.__setattr__(self, "u_pow", u_pow)
        object.__setattr__(self, "jets", tup)
        object.__setattr__(self, "_hash", hash((u_pow, tup)))

    def __setattr__(self, name, value):  # pragma: no cover - guard only
        raise AttributeError("Monomial is immutable")

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Monomial)
            and self.u_pow == other.u_pow
            and self.jets == other.jets
        )

    def __hash__(self) -> int:
        return self._hash

    def mul(self, other: "Monomial") -> "Monomial":
        return Monomial(self.u_pow + other.u_pow, self.jets + other.jets)

    def diff_degree(self) -> int:
        return sum(order * exp for order, exp in self.jets)

    def u_degree(self) -> int:
        return self.u_pow + sum(exp for _, exp in self.jets)

    def jet_exponent(self, order: int) -> int:
        if order == 0:
            return self.u_pow
        for o, e in self.jets:
            if o == order:
                return e
        return 0

    def max_jet_order(self) -> int:
        return self.jets[0][0] if self.jets else 0

    def partition(self) -> tuple[int, ...]:
        """Jet orders with multiplicity, weakly decreasing."""
        out: list[int] = []
        for order, exp in self.jets:
            out.extend([order] * exp)
        return tuple(out)

    def is_constant(self) -> bool:
        return self.u_pow == 0 and not self.jets

    def derivative_terms(self) -> list[tuple[int, "Monomial"]]:
        """Total x-derivative by Leibniz: list of (integer coeff, monomial)."""
        out: list[tuple[int, Monomial]] = []
        if self.u_pow:
            out.append(
                (self.u_pow, Monomial(self.u_pow - 1, self.jets + ((1, 1),)))
            )
        for i, (order, exp) in enumerate(self.jets):
            rest = self.jets[:i] + ((order, exp - 1),) + self.jets[i + 1 :]
            out.append((exp, Monomial(self.u_pow, rest + ((order + 1, 1),))))
        return out

    def partial(self, order: int) -> tuple[int, "Monomial"] | None:
        """d/d(u_order); None when the variable is absent."""
        if order == 0:
            if not self.u_pow:
                return None
            return (self.u_pow, Monomial(self.u_pow - 1, self.jets))
        for i, (o, e) in enumerate(self.jets):
            if o == order:
                rest = self.jets[:i] + ((o, e - 1),) + self.jets[i + 1 :]
                return (e, Monomial(self.u_pow, rest))
        return None

    def sort_key(self):
        parts = self.partition()
        return (-self.u_pow, tuple(-p for p in parts) + (1,))

    def __repr__(self) -> str:
        bits = []
        if self.u_pow:
            bits.append(f"u^{self.u_pow}" if self.u_pow > 1 else "u")
        for order, exp in self.jets:
            bits.append(f"u{order}^{exp}" if exp > 1 else f"u{order}")
        return "*".join(bits) if bits else "1"


MONO_ONE = Monomial()
MONO_U = Monomial(1)


def term_sort_key(key: tuple[int, Monomial]):
    """Canonical term order: ascending eps, descending u power, descending
    lexicographic jet partition."""
    eps, mono = key
    return (eps,) + mono.sort_key()


class DiffPoly:
    """Sparse differential polynomial with an eps cap and a u-degree cap."""

    __slots__ = ("terms", "eps_cap", "u_cap", "series", "truncated")

    def __init__(
        self,
        terms: Mapping[tuple[int, Monomial], Coeff] | None = None,
        eps_cap: int = 0,
        u_cap: int = DEFAULT_U_CAP,
        series: bool = False,
        truncated: bool = False,
    ):
        if eps_cap < 0:
            raise ValueError("eps cap must be >= 0")
        clean: dict[tuple[int, Monomial], ParamExpr] = {}
        for (eps, mono), coeff in (terms or {}).items():
            if eps < 0:
                raise ValueError("negative eps power")
            if eps > eps_cap:
                continue
            c = as_paramexpr(coeff)
            if c.is_zero():
                continue
            if mono.u_degree() > u_cap:
                if series:
                    truncated = True
                    continue
                raise UDegreeOverflow(
                    f"monomial {mono!r} has u-degree {mono.u_degree()} > cap {u_cap}"
                )
            clean[(eps, mono)] = c
        object.__setattr__(self, "terms", clean)
        object.__setattr__(self, "eps_cap", eps_cap)
        object.__setattr__(self, "u_cap", u_cap)
        object.__setattr__(self, "series", series)
        object.__setattr__(self, "truncated", truncated)

    def __setattr__(self, name, value):  # pragma: no cover - guard only
        raise AttributeError("DiffPoly is immutable")

    # -- constructors -------------------------------------------------------

    @staticmethod
    def zero(eps_cap: int, u_cap: int = DEFAULT_U_CAP, series: bool = False) -> "DiffPoly":
        return DiffPoly({}, eps_cap, u_cap, series)

    @staticmethod
    def constant(value: Coeff, eps_cap: int, u_cap: int = DEFAULT_U_CAP) -> "DiffPoly":
        return DiffPoly({(0, MONO_ONE): value}, eps_cap, u_cap)

    @staticmethod
    def u(eps_cap: int, u_cap: int = DEFAULT_U_CAP) -> "DiffPoly":
        return DiffPoly({(0, MONO_U): 1}, eps_cap, u_cap)

    @staticmethod
    def jet(order: int, eps_cap: int, u_cap: int = DEFAULT_U_CAP) -> "DiffPoly":
        if order == 0:
            return DiffPoly.u(eps_cap, u_cap)
        return DiffPoly({(0, Monomial(0, ((order, 1),))): 1}, eps_cap, u_cap)

    @staticmethod
    def eps(eps_cap: int, u_cap: int = DEFAULT_U_CAP) -> "DiffPoly":
        return DiffPoly({(1, MONO_ONE): 1}, eps_cap, u_cap)

    @staticmethod
    def from_monomial(
        coeff: Coeff, eps: int, mono: Monomial, eps_cap: int, u_cap: int = DEFAULT_U_CAP
    ) -> "DiffPoly":
        return DiffPoly({(eps, mono): coeff}, eps_cap, u_cap)

    def with_caps(self, eps_cap: int | None = None, u_cap: int | None = None) -> "DiffPoly":
        return DiffPoly(
            self.terms,
            self.eps_cap if eps_cap is None else eps_cap,
            self.u_cap if u_cap is None else u_cap,
            self.series,
            self.truncated,
        )

    # -- inspection ----------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def sorted_terms(self) -> list[tuple[tuple[int, Monomial], ParamExpr]]:
        return sorted(self.terms.items(), key=lambda kv: term_sort_key(kv[0]))

    def coefficient(self, eps: int, mono: Monomial) -> ParamExpr:
        return self.terms.get((eps, mono), ParamExpr(0))

    def constant_term(self) -> ParamExpr:
        return self.coefficient(0, MONO_ONE)

    def max_jet_order(self) -> int:
        return max((m.max_jet_order() for _, m in self.terms), default=0)

    def max_u_degree(self) -> int:
        return max((m.u_degree() for _, m in self.terms), default=0)

    def eps_part(self, k: int) -> "DiffPoly":
        """Coefficient of eps^k as an eps-free polynomial with the same caps."""
        return DiffPoly(
            {(0, m): c for (a, m), c in self.terms.items() if a == k},
            self.eps_cap,
            self.u_cap,
            self.series,
        )

    def project(self, d: int) -> "DiffPoly":
        """Drop all eps powers above d and lower the cap accordingly."""
        if d < 0:
            raise ValueError("projection order must be >= 0")
        return DiffPoly(
            {(a, m): c for (a, m), c in self.terms.items() if a <= d},
            min(d, self.eps_cap),
            self.u_cap,
            self.series,
            self.truncated,
        )

    def differential_degree(self) -> int | None:
        """Common degree deg(u_k) = k, deg(eps) = -1, or None if mixed/zero."""
        degs = {m.diff_degree() - a for (a, m) in self.terms}
        if len(degs) == 1:
            return degs.pop()
        return None

    def parameters(self) -> set[str]:
        out: set[str] = set()
        for c in self.terms.values():
            out |= c.parameters()
        return out

    def substitute_params(self, bindings: Mapping[str, Fraction]) -> "DiffPoly":
        return DiffPoly(
            {k: c.substitute(bindings) for k, c in self.terms.items()},
            self.eps_cap,
            self.u_cap,
            self.series,
            self.truncated,
        )

    # -- algebra -------------------------------------------------------------

    def _merge_meta(self, other: "DiffPoly") -> tuple[int, int, bool, bool]:
        return (
            min(self.eps_cap, other.eps_cap),
            min(self.u_cap, other.u_cap),
            self.series or other.series,
            self.truncated or other.truncated,
        )

    def __add__(self, other: "DiffPoly") -> "DiffPoly":
        if not isinstance(other, DiffPoly):
            return NotImplemented
        eps_cap, u_cap, series, trunc = self._merge_meta(other)
        terms = dict(self.terms)
        for key, c in other.terms.items():
            s = terms.get(key)
            terms[key] = c if s is None else s + c
        return DiffPoly(terms, eps_cap, u_cap, series, trunc)

    def __sub__(self, other: "DiffPoly") -> "DiffPoly":
        return self + (-other)

    def __neg__(self) -> "DiffPoly":
        return DiffPoly(
            {k: -c for k, c in self.terms.items()},
            self.eps_cap,
            self.u_cap,
            self.series,
            self.truncated,
        )

    def scale(self, factor: Coeff) -> "DiffPoly":
        f = as_paramexpr(factor)
        if f.is_zero():
            return DiffPoly.zero(self.eps_cap, self.u_cap, self.series)
        return DiffPoly(
            {k: c * f for k, c in self.terms.items()},
            self.eps_cap,
            self.u_cap,
            self.series,
            self.truncated,
        )

    def mul_eps(self, power: int) -> "DiffPoly":
        """Multiply by eps^power (terms sliding past the cap vanish)."""
        return DiffPoly(
            {(a + power, m): c for (a, m), c in self.terms.items()},
            self.eps_cap,
            self.u_cap,
            self.series,
            self.truncated,
        )

    def __mul__(self, other) -> "DiffPoly":
        if not isinstance(other, DiffPoly):
            return self.scale(other)
        eps_cap, u_cap, series, trunc = self._merge_meta(other)
        acc: dict[tuple[int, Monomial], ParamExpr] = {}
        for (a1, m1), c1 in self.terms.items():
            if a1 > eps_cap:
                continue
            for (a2, m2), c2 in other.terms.items():
                a = a1 + a2
                if a > eps_cap:
                    continue
                key = (a, m1.mul(m2))
                c = c1 * c2
                s = acc.get(key)
                acc[key] = c if s is None else s + c
        return DiffPoly(acc, eps_cap, u_cap, series, trunc)

    def __rmul__(self, other) -> "DiffPoly":
        return self.scale(other)

    def __pow__(self, n: int) -> "DiffPoly":
        if n < 0:
            raise ValueError("negative power of a DiffPoly")
        out = DiffPoly.constant(1, self.eps_cap, self.u_cap)
        base = self
        k = n
        while k:
            if k & 1:
                out = out * base
            base = base * base if k > 1 else base
            k >>= 1
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, DiffPoly):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __repr__(self) -> str:
        if not self.terms:
            return "DiffPoly(0)"
        bits = []
        for (eps, mono), c in self.sorted_terms():
            piece = f"({c})"
            if eps:
                piece += f"*eps^{eps}" if eps > 1 else "*eps"
            if not mono.is_constant():
                piece += f"*{mono!r}"
            bits.append(piece)
        return "DiffPoly[" + " + ".join(bits) + "]"


def dx(p: DiffPoly) -> DiffPoly:
    """Total x-derivative."""
    acc: dict[tuple[int, Monomial], ParamExpr] = {}
    for (eps, mono), c in p.terms.items():
        for mult, dm in mono.derivative_terms():
            key = (eps, dm)
            add = c * mult
            s = acc.get(key)
            acc[key] = add if s is None else s + add
    return DiffPoly(acc, p.eps_cap, p.u_cap, p.series, p.truncated)


def dxn(p: DiffPoly, n: int) -> DiffPoly:
    for _ in range(n):
        p = dx(p)
    return p


def partial(p: DiffPoly, order: int) -> DiffPoly:
    """Formal partial derivative with respect to the jet variable u_order."""
    acc: dict[tuple[int, Monomial], ParamExpr] = {}
    for (eps, mono), c in p.terms.items():
        hit = mono.partial(order)
        if hit is None:
            continue
        mult, pm = hit
        key = (eps, pm)
        add = c * mult
        s = acc.get(key)
        acc[key] = add if s is None else s + add
    return DiffPoly(acc, p.eps_cap, p.u_cap, p.series, p.truncated)


def evolutionary(p: DiffPoly, q: DiffPoly) -> DiffPoly:
    """Evolutionary derivation D_p applied to q: sum_n dx^n(p) * dq/du_n."""
    eps_cap = min(p.eps_cap, q.eps_cap)
    out = DiffPoly.zero(eps_cap, min(p.u_cap, q.u_cap), p.series or q.series)
    deriv = p
    for n in range(q.max_jet_order() + 1):
        slot = partial(q, n)
        if not slot.is_zero():
            out = out + deriv * slot
        if n < q.max_jet_order():
            deriv = dx(deriv)
    return out


def flow_bracket(p: DiffPoly, q: DiffPoly) -> DiffPoly:
    """Commutator of the evolutionary flows: D_p(q) - D_q(p)."""
    return evolutionary(p, q) - evolutionary(q, p)


def u_lambda(
    lam: Partition | Sequence[int], eps_cap: int, u_cap: int = DEFAULT_U_CAP
) -> DiffPoly:
    """Product of jet variables u_{lam_1} * ... * u_{lam_l}."""
    parts = tuple(lam.parts if isinstance(lam, Partition) else lam)
    jets = [(k, 1) for k in parts if k > 0]
    if any(k <= 0 for k in parts):
        raise ValueError("u_lambda needs positive jet orders")
    return DiffPoly({(0, Monomial(0, jets)): 1}, eps_cap, u_cap)


def eval_at(p: DiffPoly, g: DiffPoly) -> DiffPoly:
    """Substitute u -> g, so u_n -> dx^n(g), into p.

    This is the unique differential-ring endomorphism sending u to g.
    """
    eps_cap = min(p.eps_cap, g.eps_cap)
    u_cap = min(p.u_cap, g.u_cap)
    series = p.series or g.series
    derivs: list[DiffPoly] = [g.with_caps(eps_cap, u_cap)]
    for _ in range(p.max_jet_order()):
        derivs.append(dx(derivs[-1]))
    pow_cache: dict[tuple[int, int], DiffPoly] = {}

    def power(order: int, exp: int) -> DiffPoly:
        key = (order, exp)
        hit = pow_cache.get(key)
        if hit is not None:
            return hit
        if exp == 1:
            val = derivs[order]
        else:
            val = power(order, exp - 1) * derivs[order]
        pow_cache[key] = val
        return val

    out = DiffPoly.zero(eps_cap, u_cap, series)
    for (eps, mono), c in p.terms.items():
        if eps > eps_cap:
            continue
        piece = DiffPoly({(eps, MONO_ONE): c}, eps_cap, u_cap, series)
        if mono.u_pow:
            piece = piece * power(0, mono.u_pow)
        for order, exp in mono.jets:
            piece = piece * power(order, exp)
        out = out + piece
    return out
