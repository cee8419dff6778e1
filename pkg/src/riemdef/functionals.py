"""Local functionals: differential polynomials modulo total x-derivatives
and constants.

Every class has a unique canonical density of the form
    f(u) + sum over jet monomials u^p * u_lambda with lambda_1 = lambda_2
    and length >= 2,   f(0) = 0.
Reduction to that shape is by integration by parts, always moving one dx
off the greatest jet order of a non-canonical monomial; the jet partition
strictly decreases lexicographically, so the rewrite terminates. The
decomposition of each monomial is cached globally, since it does not
depend on the coefficient or the eps power.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Union

from .diffpoly import DiffPoly, Monomial, dxn, partial
from .exactmath import ParamExpr

__all__ = [
    "LocalFunctional",
    "integrate",
    "var_derivative",
    "is_total_derivative",
    "is_variational",
    "du_functional",
]

# Monomial -> (density part, witness part, constant part), all with exact
# rational weights; M = sum(density) + dx(sum(witness)) + const.
_Decomp = tuple[dict[Monomial, Fraction], dict[Monomial, Fraction], Fraction]
_CACHE: dict[Monomial, _Decomp] = {}


def _is_canonical(mono: Monomial) -> bool:
    parts = mono.partition()
    if not parts:
        return mono.u_pow > 0
    return len(parts) >= 2 and parts[0] == parts[1]


def _lower_top(mono: Monomial, top: int) -> Monomial:
    jets = dict(mono.jets)
    jets[top] -= 1
    if not jets[top]:
        del jets[top]
    jets[top - 1] = jets.get(top - 1, 0) + 1
    return Monomial(mono.u_pow, jets.items())


def _decompose(mono: Monomial) -> _Decomp:
    hit = _CACHE.get(mono)
    if hit is not None:
        return hit
    one = Fraction(1)
    if mono.is_constant():
        out: _Decomp = ({}, {}, one)
    elif _is_canonical(mono):
        out = ({mono: one}, {}, Fraction(0))
    elif mono.partition() == (1,):
        # u^p u_x = dx(u^(p+1)/(p+1))
        out = ({}, {Monomial(mono.u_pow + 1): Fraction(1, mono.u_pow + 1)}, Fraction(0))
    else:
        top = mono.partition()[0]
        lowered = _lower_top(mono, top)
        e = Fraction(lowered.jet_exponent(top - 1))
        # mono = (1/e) dx(lowered) - (1/e) * (other Leibniz terms)
        density: dict[Monomial, Fraction] = {}
        witness: dict[Monomial, Fraction] = {lowered: 1 / e}
        const = Fraction(0)
        for mult, dm in lowered.derivative_terms():
            if dm == mono:
                continue
            sub_d, sub_w, sub_c = _decompose(dm)
            w = Fraction(mult) / e
            for m, q in sub_d.items():
                density[m] = density.get(m, Fraction(0)) - w * q
                if not density[m]:
                    del density[m]
            for m, q in sub_w.items():
                witness[m] = witness.get(m, Fraction(0)) - w * q
                if not witness[m]:
                    del witness[m]
            const -= w * sub_c
        out = (density, witness, const)
    _CACHE[mono] = out
    return out


def _reduce(p: DiffPoly) -> tuple[DiffPoly, DiffPoly, DiffPoly]:
    """Split p = density + dx(witness) + const exactly, density canonical."""
    density: dict[tuple[int, Monomial], ParamExpr] = {}
    witness: dict[tuple[int, Monomial], ParamExpr] = {}
    const: dict[tuple[int, Monomial], ParamExpr] = {}

    def put(acc, key, val):
        s = acc.get(key)
        s = val if s is None else s + val
        if s.is_zero():
            acc.pop(key, None)
        else:
            acc[key] = s

    const_key = Monomial()
    for (eps, mono), coeff in p.terms.items():
        sub_d, sub_w, sub_c = _decompose(mono)
        for m, q in sub_d.items():
            put(density, (eps, m), coeff * q)
        for m, q in sub_w.items():
            put(witness, (eps, m), coeff * q)
        if sub_c:
            put(const, (eps, const_key), coeff * sub_c)

    meta = (p.eps_cap, p.u_cap, p.series, p.truncated)
    return DiffPoly(density, *meta), DiffPoly(witness, *meta), DiffPoly(const, *meta)


class LocalFunctional:
    """Equivalence class int(h dx), stored through its canonical density."""

    __slots__ = ("density",)

    def __init__(self, p: DiffPoly):
        dens, _, _ = _reduce(p)
        object.__setattr__(self, "density", dens)

    def __setattr__(self, name, value):  # pragma: no cover - guard only
        raise AttributeError("LocalFunctional is immutable")

    @property
    def eps_cap(self) -> int:
        return self.density.eps_cap

    def is_zero(self) -> bool:
        return self.density.is_zero()

    def __add__(self, other: "LocalFunctional") -> "LocalFunctional":
        return LocalFunctional(self.density + other.density)

    def __sub__(self, other: "LocalFunctional") -> "LocalFunctional":
        return LocalFunctional(self.density - other.density)

    def __neg__(self) -> "LocalFunctional":
        return LocalFunctional(-self.density)

    def scale(self, factor) -> "LocalFunctional":
        return LocalFunctional(self.density.scale(factor))

    def __mul__(self, factor) -> "LocalFunctional":
        return self.scale(factor)

    __rmul__ = __mul__

    def mul_eps(self, power: int) -> "LocalFunctional":
        return LocalFunctional(self.density.mul_eps(power))

    def project(self, d: int) -> "LocalFunctional":
        return LocalFunctional(self.density.project(d))

    def eps_part(self, k: int) -> DiffPoly:
        return self.density.eps_part(k)

    def differential_degree(self) -> int | None:
        return self.density.differential_degree()

    def parameters(self) -> set[str]:
        return self.density.parameters()

    def substitute_params(self, bindings) -> "LocalFunctional":
        return LocalFunctional(self.density.substitute_params(bindings))

    def __eq__(self, other) -> bool:
        if not isinstance(other, LocalFunctional):
            return NotImplemented
        return self.density == other.density

    def __hash__(self) -> int:
        return hash(self.density)

    def __repr__(self) -> str:
        return f"int[{self.density!r}]"


def integrate(p: DiffPoly) -> LocalFunctional:
    """Class of p in the quotient by total derivatives and constants."""
    return LocalFunctional(p)


def var_derivative(f: Union[LocalFunctional, DiffPoly]) -> DiffPoly:
    """Variational derivative sum_n (-dx)^n (d/du_n) of the density.

    Vanishes on total derivatives, so any representative gives the same
    answer; the canonical density is used when given a functional.
    """
    p = f.density if isinstance(f, LocalFunctional) else f
    out = DiffPoly.zero(p.eps_cap, p.u_cap, p.series)
    for n in range(p.max_jet_order() + 1):
        slot = partial(p, n)
        if slot.is_zero():
            continue
        piece = dxn(slot, n)
        out = out + (piece if n % 2 == 0 else -piece)
    return out


def is_total_derivative(p: DiffPoly) -> tuple[bool, DiffPoly | None]:
    """Decide p = dx(W); on success the witness W satisfies dx(W) = p exactly."""
    dens, wit, const = _reduce(p)
    if dens.is_zero() and const.is_zero():
        return True, wit
    return False, None


def is_variational(p: DiffPoly) -> bool:
    """Decide membership in the image of the variational derivative.

    Criterion: the linearization of p is formally self-adjoint.
    """
    from .operators import dagger, linearize

    lin = linearize(p)
    return dagger(lin) == lin


def du_functional(f: LocalFunctional) -> LocalFunctional:
    """Partial d/du on the class; well defined because d/du commutes with dx."""
    return LocalFunctional(partial(f.density, 0))
