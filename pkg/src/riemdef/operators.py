"""Differential operators sum_i K_i(u_*, eps) dx^i and the functional
brackets they induce.

The composition rule dx^i o f = sum_s C(i, s) (dx^s f) dx^(i-s) is the only
identity used; adjoints, linearizations and conjugation by a change of
coordinates are all assembled from it.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Iterable, Sequence

from .diffpoly import DEFAULT_U_CAP, DiffPoly, dx, partial
from .exactmath import Partition, partitions_of
from .functionals import LocalFunctional, integrate, var_derivative

__all__ = [
    "DiffOperator",
    "identity_operator",
    "dx_operator",
    "apply_operator",
    "compose",
    "dagger",
    "linearize",
    "bracket",
    "is_poisson",
    "conjugate",
    "PoissonReport",
]


class DiffOperator:
    """Operator with DiffPoly coefficients, index = power of dx."""

    __slots__ = ("coeffs", "eps_cap", "u_cap")

    def __init__(self, coeffs: Sequence[DiffPoly], eps_cap: int | None = None,
                 u_cap: int | None = None):
        coeffs = list(coeffs)
        if not coeffs:
            raise ValueError("operator needs at least one coefficient")
        ec = min(c.eps_cap for c in coeffs) if eps_cap is None else eps_cap
        uc = min(c.u_cap for c in coeffs) if u_cap is None else u_cap
        coeffs = [c.with_caps(ec, uc) for c in coeffs]
        while len(coeffs) > 1 and coeffs[-1].is_zero():
            coeffs.pop()
        object.__setattr__(self, "coeffs", tuple(coeffs))
        object.__setattr__(self, "eps_cap", ec)
        object.__setattr__(self, "u_cap", uc)

    def __setattr__(self, name, value):  # pragma: no cover - guard only
        raise AttributeError("DiffOperator is immutable")

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def coefficient(self, i: int) -> DiffPoly:
        if 0 <= i < len(self.coeffs):
            return self.coeffs[i]
        return DiffPoly.zero(self.eps_cap, self.u_cap)

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.coeffs)

    def eps_part(self, k: int) -> "DiffOperator":
        return DiffOperator([c.eps_part(k) for c in self.coeffs],
                            self.eps_cap, self.u_cap)

    def project(self, d: int) -> "DiffOperator":
        return DiffOperator([c.project(d).with_caps(self.eps_cap) for c in self.coeffs],
                            self.eps_cap, self.u_cap)

    def __add__(self, other: "DiffOperator") -> "DiffOperator":
        n = max(len(self.coeffs), len(other.coeffs))
        return DiffOperator([self.coefficient(i) + other.coefficient(i) for i in range(n)])

    def __sub__(self, other: "DiffOperator") -> "DiffOperator":
        return self + (-other)

    def __neg__(self) -> "DiffOperator":
        return DiffOperator([-c for c in self.coeffs], self.eps_cap, self.u_cap)

    def scale(self, factor) -> "DiffOperator":
        return DiffOperator([c.scale(factor) for c in self.coeffs],
                            self.eps_cap, self.u_cap)

    def mul_eps(self, power: int) -> "DiffOperator":
        return DiffOperator([c.mul_eps(power) for c in self.coeffs],
                            self.eps_cap, self.u_cap)

    def __eq__(self, other) -> bool:
        if not isinstance(other, DiffOperator):
            return NotImplemented
        n = max(len(self.coeffs), len(other.coeffs))
        return all(self.coefficient(i) == other.coefficient(i) for i in range(n))

    def __repr__(self) -> str:
        bits = []
        for i, c in enumerate(self.coeffs):
            if c.is_zero():
                continue
            head = f"({c!r})"
            if i == 1:
                head += "*dx"
            elif i > 1:
                head += f"*dx^{i}"
            bits.append(head)
        return "DiffOperator[" + (" + ".join(bits) if bits else "0") + "]"


def identity_operator(eps_cap: int, u_cap: int = DEFAULT_U_CAP) -> DiffOperator:
    return DiffOperator([DiffPoly.constant(1, eps_cap, u_cap)])


def dx_operator(eps_cap: int, power: int = 1, u_cap: int = DEFAULT_U_CAP) -> DiffOperator:
    coeffs = [DiffPoly.zero(eps_cap, u_cap) for _ in range(power)]
    coeffs.append(DiffPoly.constant(1, eps_cap, u_cap))
    return DiffOperator(coeffs)


def apply_operator(k: DiffOperator, p: DiffPoly) -> DiffPoly:
    out = DiffPoly.zero(min(k.eps_cap, p.eps_cap), min(k.u_cap, p.u_cap), p.series)
    deriv = p
    for i, c in enumerate(k.coeffs):
        if not c.is_zero():
            out = out + c * deriv
        if i < k.order:
            deriv = dx(deriv)
    return out


def compose(a: DiffOperator, b: DiffOperator) -> DiffOperator:
    """Operator product a o b."""
    eps_cap = min(a.eps_cap, b.eps_cap)
    u_cap = min(a.u_cap, b.u_cap)
    n = a.order + b.order
    acc = [DiffPoly.zero(eps_cap, u_cap) for _ in range(n + 1)]
    for j, bj in enumerate(b.coeffs):
        if bj.is_zero():
            continue
        derivs = [bj]
        for _ in range(a.order):
            derivs.append(dx(derivs[-1]))
        for i, ai in enumerate(a.coeffs):
            if ai.is_zero():
                continue
            for s in range(i + 1):
                acc[i - s + j] = acc[i - s + j] + ai * derivs[s] * Fraction(comb(i, s))
    return DiffOperator(acc, eps_cap, u_cap)


def dagger(k: DiffOperator) -> DiffOperator:
    """Formal adjoint sum_i (-dx)^i o K_i."""
    eps_cap, u_cap = k.eps_cap, k.u_cap
    acc = [DiffPoly.zero(eps_cap, u_cap) for _ in range(k.order + 1)]
    for i, ki in enumerate(k.coeffs):
        if ki.is_zero():
            continue
        sign = 1 if i % 2 == 0 else -1
        derivs = [ki]
        for _ in range(i):
            derivs.append(dx(derivs[-1]))
        for j in range(i + 1):
            acc[j] = acc[j] + derivs[i - j] * (sign * comb(i, j))
    return DiffOperator(acc, eps_cap, u_cap)


def linearize(p: DiffPoly) -> DiffOperator:
    """Linearization L(p) = sum_n (dp/du_n) dx^n."""
    coeffs = [partial(p, n) for n in range(p.max_jet_order() + 1)]
    return DiffOperator(coeffs, p.eps_cap, p.u_cap)


def bracket(f: LocalFunctional, h: LocalFunctional, k: DiffOperator) -> LocalFunctional:
    """Functional bracket int( (delta f/delta u) K (delta h/delta u) ) dx."""
    df = var_derivative(f)
    dh = var_derivative(h)
    return integrate(df * apply_operator(k, dh))


@dataclass
class PoissonReport:
    skew_ok: bool
    jacobi_ok: bool
    samples: int
    triples_checked: int
    first_violation: str | None = None

    @property
    def ok(self) -> bool:
        return self.skew_ok and self.jacobi_ok


def default_samples(eps_cap: int, max_weight: int = 6,
                    u_cap: int = DEFAULT_U_CAP) -> list[LocalFunctional]:
    """Canonical monomial functionals int(u^p u_lambda) with |lambda|+p bounded.

    Only canonical classes are produced (lambda circ or empty), so the list
    has no duplicates modulo total derivatives.
    """
    out: list[LocalFunctional] = []
    for p in range(1, max_weight + 1):
        mono = DiffPoly.from_monomial(1, 0, _u_power_monomial(p), eps_cap, u_cap)
        out.append(LocalFunctional(mono))
    for n in range(2, max_weight + 1):
        for lam in partitions_of(n, "circ"):
            room = max_weight - n
            for p in range(room + 1):
                mono = _mono_from_partition(lam, p)
                out.append(LocalFunctional(
                    DiffPoly.from_monomial(1, 0, mono, eps_cap, u_cap)))
    return out


def _u_power_monomial(p: int):
    from .diffpoly import Monomial

    return Monomial(p)


def _mono_from_partition(lam: Partition, u_pow: int):
    from .diffpoly import Monomial

    return Monomial(u_pow, [(part, 1) for part in lam])


def is_poisson(k: DiffOperator, samples: Iterable[LocalFunctional] | None = None,
               max_weight: int = 6) -> PoissonReport:
    """Exact skew check plus Jacobi identity on sampled triples.

    Skewness is decided exactly. The Jacobi identity is verified on all
    unordered triples of distinct samples; with skewness established the
    Jacobiator is antisymmetric, so ordered and repeated triples add
    nothing. Sampling makes the Jacobi half a strong certificate rather
    than a proof; the sample weight ceiling is the caller's knob.
    """
    skew_ok = (dagger(k) + k).is_zero()
    if samples is None:
        sample_list = default_samples(k.eps_cap, max_weight, k.u_cap)
    else:
        sample_list = list(samples)
    if not skew_ok:
        return PoissonReport(False, False, len(sample_list), 0,
                             "operator is not skew-adjoint")

    n = len(sample_list)
    pair: dict[tuple[int, int], LocalFunctional] = {}

    def br(i: int, j: int) -> LocalFunctional:
        # brackets of samples are skew, so only i < j is ever computed
        if i > j:
            return -br(j, i)
        got = pair.get((i, j))
        if got is None:
            got = bracket(sample_list[i], sample_list[j], k)
            pair[(i, j)] = got
        return got

    checked = 0
    for i in range(n):
        for j in range(i + 1, n):
            for l in range(j + 1, n):
                jac = (bracket(br(i, j), sample_list[l], k)
                       + bracket(br(j, l), sample_list[i], k)
                       + bracket(br(l, i), sample_list[j], k))
                checked += 1
                if not jac.is_zero():
                    return PoissonReport(
                        True, False, n, checked,
                        f"Jacobi fails on samples ({i}, {j}, {l})")
    return PoissonReport(True, True, n, checked)


def conjugate(k: DiffOperator, transform) -> DiffOperator:
    """Push the bracket operator through a change of coordinates v = u + shift.

    Returns L(v) o K o L(v)^dagger with every coefficient rewritten in the
    new coordinate (by substituting the inverse change), which is again an
    operator polynomial in the new jet variables.
    """
    shift = transform.shift
    v = DiffPoly.u(shift.eps_cap, shift.u_cap) + shift
    lin = linearize(v)
    moved = compose(compose(lin, k), dagger(lin))
    coeffs = [transform.apply_to_poly(c) for c in moved.coeffs]
    return DiffOperator(coeffs, min(k.eps_cap, shift.eps_cap), k.u_cap)
