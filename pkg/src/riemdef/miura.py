"""Near-identity changes of the dependent variable and their actions.

A transformation is stored through its shift S, meaning the new variable is
v = u + S where S is a differential polynomial with no order-zero part in the
bookkeeping parameter and whose order-k slice is homogeneous of differential
degree k. All actions (on polynomials, flows, functionals, operators) follow
from substitution by the inverse map, computed as a fixed point.
"""

from __future__ import annotations

from fractions import Fraction

from .diffpoly import (
    DEFAULT_U_CAP,
    DiffPoly,
    Monomial,
    dx,
    dxn,
    eval_at,
    evolutionary,
    partial,
)
from .errors import (
    DegreeMismatch,
    MissingStructure,
    NoDxFactor,
    NotPoissonInput,
    OutOfRange,
)
from .exactmath import partitions_of
from .functionals import (
    LocalFunctional,
    integrate,
    is_total_derivative,
    var_derivative,
)
from .linsolve import solve_linear
from .operators import (
    DiffOperator,
    bracket,
    compose as compose_op,
    conjugate,
    dagger,
    dx_operator,
    is_poisson,
    linearize,
)

__all__ = [
    "MiuraTransformation",
    "compose",
    "phi_hamiltonian",
    "ad_apply",
    "normalize_poisson",
]

_MONO_U = Monomial(1)


class MiuraTransformation:
    """Invertible change of variable v = u + S with S of positive order."""

    __slots__ = ("shift", "_inverse_shift")

    def __init__(self, shift: DiffPoly):
        for (a, mono), _ in shift.terms.items():
            if a == 0:
                raise DegreeMismatch(
                    "transformation shift must vanish at order zero"
                )
            if mono.diff_degree() != a:
                raise DegreeMismatch(
                    f"shift slice at order {a} must have differential degree {a}, "
                    f"got a term of degree {mono.diff_degree()}"
                )
        object.__setattr__(self, "shift", shift)
        object.__setattr__(self, "_inverse_shift", None)

    def __setattr__(self, name, value):  # pragma: no cover - guard only
        raise AttributeError("MiuraTransformation is immutable")

    @staticmethod
    def identity(eps_cap: int, u_cap: int = DEFAULT_U_CAP) -> "MiuraTransformation":
        return MiuraTransformation(DiffPoly.zero(eps_cap, u_cap))

    @property
    def eps_cap(self) -> int:
        return self.shift.eps_cap

    @property
    def u_cap(self) -> int:
        return self.shift.u_cap

    def is_identity(self) -> bool:
        return self.shift.is_zero()

    def parameters(self) -> set[str]:
        return self.shift.parameters()

    def __eq__(self, other) -> bool:
        if not isinstance(other, MiuraTransformation):
            return NotImplemented
        return self.shift == other.shift

    def __hash__(self) -> int:
        return hash(("miura", self.shift))

    def __repr__(self) -> str:
        return f"MiuraTransformation(shift={self.shift!r})"

    # -- inverse ---------------------------------------------------------

    def inverse_shift(self) -> DiffPoly:
        """Shift T of the inverse map, so u = v + T(v)."""
        cached = self._inverse_shift
        if cached is not None:
            return cached
        s = self.shift
        u = DiffPoly.u(s.eps_cap, s.u_cap)
        t = DiffPoly.zero(s.eps_cap, s.u_cap)
        for _ in range(s.eps_cap):
            nxt = -eval_at(s, u + t)
            if nxt == t:
                break
            t = nxt
        object.__setattr__(self, "_inverse_shift", t)
        return t

    def invert(self) -> "MiuraTransformation":
        inv = MiuraTransformation(self.inverse_shift())
        object.__setattr__(inv, "_inverse_shift", self.shift)
        return inv

    # -- actions ---------------------------------------------------------

    def apply_to_poly(self, p: DiffPoly) -> DiffPoly:
        """Rewrite p, a polynomial in the old variable, in the new one.

        Returns R with R(v) = p(u) under v = u + S, obtained by substituting
        the inverse map into p.
        """
        t = self.inverse_shift()
        eps_cap = min(p.eps_cap, t.eps_cap)
        u_cap = min(p.u_cap, t.u_cap)
        u = DiffPoly.u(eps_cap, u_cap)
        return eval_at(p, u + t.with_caps(eps_cap=eps_cap, u_cap=u_cap))

    def transform_flow(self, q: DiffPoly) -> DiffPoly:
        """Push the evolutionary flow u_t = q forward: v_t = (result)(v)."""
        return self.apply_to_poly(q + evolutionary(q, self.shift))

    def transform_functional(self, f: LocalFunctional) -> LocalFunctional:
        return integrate(self.apply_to_poly(f.density))

    def transform_density(self, p: DiffPoly) -> DiffPoly:
        """Push the conservation-law density of u_t = dx(p) forward exactly.

        Requires every order slice of the shift to be a total x-derivative;
        with shift = dx(f) the pushed density is (p + D_{dx p} f) rewritten
        in the new variable, the unique representative with v_t = dx(result).
        """
        f = self._dx_witness()
        return self.apply_to_poly(p + evolutionary(dx(p), f))

    def _dx_witness(self) -> DiffPoly:
        s = self.shift
        total = DiffPoly.zero(s.eps_cap, s.u_cap)
        for k in range(1, s.eps_cap + 1):
            part = s.eps_part(k)
            if part.is_zero():
                continue
            ok, w = is_total_derivative(part)
            if not ok:
                raise MissingStructure(
                    f"shift slice at order {k} is not a total x-derivative"
                )
            total = total + w.mul_eps(k)
        return total

    def transform_operator(self, k: DiffOperator) -> DiffOperator:
        return conjugate(k, self)

    def is_normal(self) -> tuple[bool, DiffPoly | None]:
        """Check every order slice of the shift is a second x-derivative.

        Returns (True, w) with shift == dx(dx(w)) termwise on success.
        """
        s = self.shift
        total = DiffPoly.zero(s.eps_cap, s.u_cap)
        for k in range(1, s.eps_cap + 1):
            part = s.eps_part(k)
            if part.is_zero():
                continue
            ok, w1 = is_total_derivative(part)
            if not ok:
                return False, None
            ok, w2 = is_total_derivative(w1)
            if not ok:
                return False, None
            total = total + w2.mul_eps(k)
        return True, total


def compose(outer: MiuraTransformation, inner: MiuraTransformation) -> MiuraTransformation:
    """Composite transformation applying inner first, then outer."""
    s_in = inner.shift
    s_out = outer.shift
    eps_cap = min(s_in.eps_cap, s_out.eps_cap)
    u_cap = min(s_in.u_cap, s_out.u_cap)
    s_in = s_in.with_caps(eps_cap=eps_cap, u_cap=u_cap)
    s_out = s_out.with_caps(eps_cap=eps_cap, u_cap=u_cap)
    mid = DiffPoly.u(eps_cap, u_cap) + s_in
    return MiuraTransformation(s_in + eval_at(s_out, mid))


def phi_hamiltonian(
    g: LocalFunctional, k: int, eps_cap: int, u_cap: int = DEFAULT_U_CAP
) -> MiuraTransformation:
    """Exponential transformation generated by the functional g at order k.

    The shift is the sum over i >= 1 of eps^(k i)/i! X^i(u) where X is the
    evolutionary derivation of dx(delta g / delta u). Requires g free of the
    order parameter and homogeneous of differential degree k - 1.
    """
    if k < 1:
        raise OutOfRange("generator order must be at least 1")
    dens = g.density
    for (a, mono), _ in dens.terms.items():
        if a != 0:
            raise DegreeMismatch("generator functional must not carry order weights")
        if mono.diff_degree() != k - 1:
            raise DegreeMismatch(
                f"generator density must be homogeneous of degree {k - 1}"
            )
    x1 = dx(var_derivative(g)).with_caps(eps_cap=eps_cap, u_cap=u_cap)
    shift = DiffPoly.zero(eps_cap, u_cap)
    cur = x1
    fact = 1
    i = 1
    while k * i <= eps_cap:
        shift = shift + cur.scale(Fraction(1, fact)).mul_eps(k * i)
        i += 1
        fact *= i
        cur = evolutionary(x1, cur)
    return MiuraTransformation(shift)


def ad_apply(
    g: LocalFunctional, k: int, f: LocalFunctional, eps_cap: int | None = None
) -> LocalFunctional:
    """Exponential adjoint action of g at order k on the functional f.

    Computes the sum over i >= 0 of eps^(k i)/i! of the i-fold bracket
    {g, {g, ... {g, f}}} taken with the operator dx. Matches transporting f
    through phi_hamiltonian(g, k).
    """
    if k < 1:
        raise OutOfRange("generator order must be at least 1")
    cap = f.eps_cap if eps_cap is None else eps_cap
    if f.density.eps_cap != cap:
        f = LocalFunctional(f.density.with_caps(eps_cap=cap))
    if g.density.eps_cap != cap:
        g = LocalFunctional(g.density.with_caps(eps_cap=cap))
    kop = dx_operator(cap, 1, f.density.u_cap)
    out = f
    cur = out
    fact = 1
    i = 1
    while k * i <= cap:
        cur = bracket(g, cur, kop)
        fact *= i
        out = out + cur.mul_eps(k * i).scale(Fraction(1, fact))
        i += 1
    return out


# -- Poisson normalization -------------------------------------------------


def _operator_rows(op: DiffOperator) -> dict:
    rows = {}
    for j in range(op.order + 1):
        for (a, mono), c in op.coefficient(j).terms.items():
            rows[(j, a, mono)] = c
    return rows


def _degree_one_check(k: DiffOperator) -> None:
    for j in range(k.order + 1):
        for (a, mono), _ in k.coefficient(j).terms.items():
            if mono.diff_degree() + j != a + 1:
                raise DegreeMismatch(
                    "operator is not homogeneous of degree one: "
                    f"order-{a} coefficient of the {j}-th derivative has "
                    f"degree {mono.diff_degree()}"
                )


def _poly_degree_basis(degree: int, max_u: int) -> list[Monomial]:
    """Monomials u^p u_lambda of the given differential degree, u-degree <= max_u."""
    out: list[Monomial] = []
    if degree == 0:
        for p in range(1, max_u + 1):
            out.append(Monomial(p))
    else:
        for lam in partitions_of(degree):
            length = len(lam.parts)
            if length > max_u:
                continue
            jets = [(part, 1) for part in lam.parts]
            for p in range(max_u - length + 1):
                out.append(Monomial(p, jets))
    out.sort(key=lambda m: m.sort_key())
    return out


def _antiderivative_in_u(p: DiffPoly) -> DiffPoly:
    """Termwise u-antiderivative with all jet variables held fixed."""
    return DiffPoly(
        {
            (a, mono.mul(_MONO_U)): c * Fraction(1, mono.u_pow + 1)
            for (a, mono), c in p.terms.items()
        },
        p.eps_cap,
        p.u_cap,
    )


def normalize_poisson(
    k: DiffOperator, eps_order: int | None = None, precheck: bool = True
) -> tuple[MiuraTransformation, DiffOperator]:
    """Reduce a degree-one Poisson deformation of dx back to dx itself.

    Returns (phi, k_final) where phi is a normal transformation with
    conjugate(k, phi) == k_final == dx up to the working order. Raises
    NoDxFactor if the order-zero part is not dx, NotPoissonInput if the
    input fails the Poisson guard or some order proves non-removable.
    """
    cap = k.eps_cap if eps_order is None else eps_order
    u_cap = k.u_cap
    if cap != k.eps_cap:
        k = DiffOperator([c.with_caps(eps_cap=cap) for c in k.coeffs], cap, u_cap)
    if k.eps_part(0) != dx_operator(cap, 1, u_cap):
        raise NoDxFactor("order-zero part of the operator must be exactly dx")
    _degree_one_check(k)
    if precheck:
        report = is_poisson(k, max_weight=4)
        if not report.ok:
            raise NotPoissonInput(
                f"operator fails the Poisson check: {report.first_violation}"
            )

    phi = MiuraTransformation.identity(cap, u_cap)
    current = k
    dxo = dx_operator(cap, 1, u_cap)
    for i in range(1, cap + 1):
        ki = current.eps_part(i)
        if ki.is_zero():
            continue
        max_u = max((c.max_u_degree() for c in ki.coeffs), default=0)
        basis = _poly_degree_basis(i - 1, max_u + 1)
        columns = []
        for mono in basis:
            m = DiffPoly.from_monomial(1, 0, mono, cap, u_cap)
            lin = linearize(m)
            op = compose_op(compose_op(dxo, lin - dagger(lin)), dxo)
            columns.append(_operator_rows(op))
        target = _operator_rows(-ki)
        keys = sorted(
            {key for col in columns for key in col} | set(target),
            key=lambda key: (key[0], key[1]) + key[2].sort_key(),
        )
        rows = []
        for key in keys:
            coeffs = {}
            for idx, col in enumerate(columns):
                c = col.get(key)
                if c is not None and not c.is_zero():
                    coeffs[idx] = c.numeric_value()
            rows.append((coeffs, target.get(key, Fraction(0))))
        sol = solve_linear(rows, list(range(len(basis))))
        if sol.constraints:
            raise NotPoissonInput(
                f"order {i} of the operator is not removable; the input "
                "cannot be a Poisson deformation of dx"
            )
        f_tilde = DiffPoly.zero(cap, u_cap)
        for idx, mono in enumerate(basis):
            val = sol.solution[idx]
            if not val.is_zero():
                f_tilde = f_tilde + DiffPoly.from_monomial(
                    val.numeric_value(), 0, mono, cap, u_cap
                )
        r = _antiderivative_in_u(f_tilde)
        fprime = DiffPoly.zero(cap, u_cap)
        for s in range(1, r.max_jet_order() + 1):
            fprime = fprime + dxn(partial(r, s), s - 1).scale(Fraction((-1) ** (s - 1)))
        step = MiuraTransformation(dxn(fprime, 2).mul_eps(i))
        current = conjugate(current, step)
        if not current.eps_part(i).is_zero():
            raise NotPoissonInput(
                f"normalization step at order {i} failed to cancel the obstruction"
            )
        phi = compose(step, phi)
    return phi, current
