"""Dispersive deformations of the Riemann hierarchy u_t = u u_x.

This module reconstructs commuting flows and conserved quantities order by
order, reduces Hamiltonian densities to a standard form with constant
coefficients, brings conserved densities of a single flow to a normal form
with no first-jet dependence, extracts the compatibility constraints a
deformation must satisfy, and certifies tau-symmetry and the special
Hamiltonian shape. All arithmetic is exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from typing import Callable, Mapping, Sequence

from .diffpoly import (
    DEFAULT_U_CAP,
    DiffPoly,
    Monomial,
    dx,
    evolutionary,
    flow_bracket,
)
from .errors import (
    DegreeMismatch,
    MissingStructure,
    NoSolution,
    NotConstantCoefficients,
    OutOfRange,
)
from .exactmath import ParamExpr, Partition, partitions_of
from .functionals import (
    LocalFunctional,
    du_functional,
    integrate,
    var_derivative,
)
from .linsolve import solve_linear
from .miura import MiuraTransformation, ad_apply, compose, normalize_poisson, phi_hamiltonian
from .operators import DiffOperator, apply_operator, dx_operator

__all__ = [
    "riemann_flow",
    "riemann_hamiltonian",
    "Hierarchy",
    "riemann_hierarchy",
    "reconstruct_flow",
    "reconstruct_conserved",
    "commute_certificate",
    "check_special",
    "check_tau",
    "to_special_form",
    "standard_form_reduce",
    "normal_form",
    "extract_constraints",
    "bridge_check",
    "partition_param_name",
]

_UNKNOWN = "__q"


# -- undeformed hierarchy ----------------------------------------------------


def riemann_flow(d: int, eps_cap: int, u_cap: int = DEFAULT_U_CAP) -> DiffPoly:
    """Flow number d of the undeformed hierarchy: u^d/d! * u_x."""
    if d < 0:
        raise OutOfRange("flow index must be >= 0")
    mono = Monomial(d, ((1, 1),))
    return DiffPoly.from_monomial(Fraction(1, factorial(d)), 0, mono, eps_cap, u_cap)


def riemann_hamiltonian(d: int, eps_cap: int, u_cap: int = DEFAULT_U_CAP) -> LocalFunctional:
    """Hamiltonian generating flow d through dx: int u^(d+2)/(d+2)!."""
    if d < -1:
        raise OutOfRange("hamiltonian index must be >= -1")
    mono = Monomial(d + 2)
    return LocalFunctional(
        DiffPoly.from_monomial(Fraction(1, factorial(d + 2)), 0, mono, eps_cap, u_cap)
    )


# -- generic helpers ---------------------------------------------------------


def _jet_list(lam: Partition) -> list[tuple[int, int]]:
    return [(part, 1) for part in lam.parts]


def _flow_basis(k: int, max_u: int) -> list[Monomial]:
    """Monomials of differential degree 1 + k with u-degree at most max_u."""
    out: list[Monomial] = []
    for lam in partitions_of(1 + k):
        length = len(lam.parts)
        if length > max_u:
            continue
        jets = _jet_list(lam)
        for p in range(max_u - length + 1):
            out.append(Monomial(p, jets))
    out.sort(key=lambda m: m.sort_key())
    return out


def _density_basis(k: int, max_u: int) -> list[Monomial]:
    """Canonical density monomials of differential degree k, u-degree <= max_u."""
    out: list[Monomial] = []
    for lam in partitions_of(k, "circ"):
        length = len(lam.parts)
        if length > max_u:
            continue
        jets = _jet_list(lam)
        for p in range(max_u - length + 1):
            out.append(Monomial(p, jets))
    out.sort(key=lambda m: m.sort_key())
    return out


def _split_unknowns(expr: ParamExpr, prefix: str) -> tuple[dict, ParamExpr]:
    unknowns: dict[str, Fraction] = {}
    rest: dict[str, Fraction] = {}
    for name, c in expr.terms.items():
        if name.startswith(prefix):
            unknowns[name] = c
        else:
            rest[name] = c
    return unknowns, ParamExpr(expr.const, rest)


def _solve_correction(
    resid: DiffPoly, names: Sequence[str]
) -> tuple[dict, list[ParamExpr], list[str]]:
    """Solve resid == 0 for the given unknown coefficient names.

    Returns (values, parameter constraints, free names). Equations come from
    every monomial of resid; unknowns enter linearly by construction.
    """
    rows = []
    for (_, mono), c in resid.sorted_terms():
        unknowns, rest = _split_unknowns(c, _UNKNOWN)
        rows.append((unknowns, -rest))
    sol = solve_linear(rows, list(names))
    values = {n: sol.solution[n] for n in names}
    return values, sol.constraints, sol.free


# -- flow reconstruction ------------------------------------------------------

ParamHook = Callable[[int, list[ParamExpr]], Mapping[str, object]]


def _reconstruct_flow_impl(
    p: DiffPoly,
    q0: DiffPoly,
    cap: int,
    param_hook: ParamHook | None = None,
) -> tuple[DiffPoly, DiffPoly]:
    """Order-by-order correction of q0 to a flow commuting with p.

    Returns (p, q) with parameters substituted by whatever the hook decided.
    Without a hook any parameter relation is an error.
    """
    head = flow_bracket(p, q0).eps_part(0)
    if not head.is_zero():
        raise NoSolution("seed flow does not commute at order zero")
    q = q0
    base_udeg = q0.max_u_degree()
    for k in range(1, cap + 1):
        basis = _flow_basis(k, base_udeg + k)
        names = [f"{_UNKNOWN}{i}" for i in range(len(basis))]
        ansatz = DiffPoly(
            {(k, m): ParamExpr(0, {n: 1}) for n, m in zip(names, basis)},
            cap,
            p.u_cap,
        )
        # bracket only up to the active order: higher slices are re-derived
        # later anyway, and cutting first keeps parameter coefficients affine
        resid = flow_bracket(p.project(k), (q + ansatz).project(k)).eps_part(k)
        values, constraints, free = _solve_correction(resid, names)
        if free:
            raise NoSolution(f"flow correction underdetermined at order {k}")
        correction = DiffPoly(
            {(k, m): values[n] for n, m in zip(names, basis)}, cap, p.u_cap
        )
        q = q + correction
        if constraints:
            if param_hook is None:
                listing = "; ".join(str(c) + " = 0" for c in constraints)
                raise NoSolution(
                    f"commutation at order {k} forces parameter relations: {listing}"
                )
            bindings = param_hook(k, constraints)
            if bindings:
                p = p.substitute_params(bindings)
                q = q.substitute_params(bindings)
    return p, q


def _reconstruct_conservative_impl(
    p: DiffPoly,
    r0: DiffPoly,
    cap: int,
    param_hook: ParamHook | None = None,
) -> tuple[DiffPoly, DiffPoly]:
    """Order-by-order correction of the density r0 so that dx(r) commutes with p.

    Like _reconstruct_flow_impl but the correction space is restricted to
    total x-derivatives, the shape every flow of a conservation-law
    deformation must have. The smaller ansatz makes the per-order systems
    overdetermined, so they can force relations on the parameters of p;
    those go through the hook exactly as in the free reconstruction.
    Returns (p, r) with dx(r) the commuting flow.
    """
    head = flow_bracket(p, dx(r0)).eps_part(0)
    if not head.is_zero():
        raise NoSolution("seed flow does not commute at order zero")
    r = r0
    base_udeg = r0.max_u_degree()
    for k in range(1, cap + 1):
        basis = _flow_basis(k - 1, base_udeg + k)
        names = [f"{_UNKNOWN}{i}" for i in range(len(basis))]
        ansatz = DiffPoly(
            {(k, m): ParamExpr(0, {n: 1}) for n, m in zip(names, basis)},
            cap,
            p.u_cap,
        )
        resid = flow_bracket(p.project(k), dx(r + ansatz).project(k)).eps_part(k)
        values, constraints, free = _solve_correction(resid, names)
        if free:
            raise NoSolution(f"density correction underdetermined at order {k}")
        correction = DiffPoly(
            {(k, m): values[n] for n, m in zip(names, basis)}, cap, p.u_cap
        )
        r = r + correction
        if constraints:
            if param_hook is None:
                listing = "; ".join(str(c) + " = 0" for c in constraints)
                raise NoSolution(
                    f"conservation form at order {k} forces parameter relations: {listing}"
                )
            bindings = param_hook(k, constraints)
            if bindings:
                p = p.substitute_params(bindings)
                r = r.substitute_params(bindings)
    return p, r


def reconstruct_flow(
    p: DiffPoly, q0: DiffPoly, eps_order: int | None = None
) -> DiffPoly:
    """Unique flow commuting with p that starts at the order-free seed q0.

    p must be a deformation of u u_x, homogeneous of differential degree 1.
    Raises NoSolution when no commuting correction exists.
    """
    cap = p.eps_cap if eps_order is None else eps_order
    p = p.with_caps(eps_cap=cap)
    q0 = q0.with_caps(eps_cap=cap)
    _check_flow_head(p)
    if any(a != 0 for (a, _) in q0.terms):
        raise DegreeMismatch("seed flow must be free of the deformation order")
    if not q0.is_zero() and q0.differential_degree() != 1:
        raise DegreeMismatch("seed flow must be homogeneous of degree one")
    _, q = _reconstruct_flow_impl(p, q0, cap)
    return q


def _check_flow_head(p: DiffPoly) -> None:
    head = p.eps_part(0)
    expected = DiffPoly.from_monomial(1, 0, Monomial(1, ((1, 1),)), p.eps_cap, p.u_cap)
    if head != expected:
        raise DegreeMismatch("flow must reduce to u u_x at order zero")
    if p.differential_degree() != 1:
        raise DegreeMismatch("flow must be homogeneous of differential degree one")


def reconstruct_conserved(
    p: DiffPoly, h0: LocalFunctional, eps_order: int | None = None
) -> LocalFunctional:
    """Unique conserved quantity of u_t = p starting at the order-free seed h0."""
    cap = p.eps_cap if eps_order is None else eps_order
    p = p.with_caps(eps_cap=cap)
    _check_flow_head(p)
    dens0 = h0.density.with_caps(eps_cap=cap)
    if any(a != 0 for (a, _) in dens0.terms):
        raise DegreeMismatch("seed functional must be free of the deformation order")
    head = integrate(evolutionary(p.eps_part(0), dens0))
    if not head.is_zero():
        raise NoSolution("seed functional is not conserved at order zero")
    dens = dens0
    base_udeg = dens0.max_u_degree()
    for k in range(1, cap + 1):
        basis = _density_basis(k, base_udeg + k)
        names = [f"{_UNKNOWN}{i}" for i in range(len(basis))]
        ansatz = DiffPoly(
            {(k, m): ParamExpr(0, {n: 1}) for n, m in zip(names, basis)},
            cap,
            p.u_cap,
        )
        resid = (
            integrate(evolutionary(p.project(k), (dens + ansatz).project(k)))
            .density.eps_part(k)
        )
        values, constraints, free = _solve_correction(resid, names)
        if free:
            raise NoSolution(f"conserved correction underdetermined at order {k}")
        if constraints:
            listing = "; ".join(str(c) + " = 0" for c in constraints)
            raise NoSolution(
                f"conservation at order {k} forces parameter relations: {listing}"
            )
        dens = dens + DiffPoly(
            {(k, m): values[n] for n, m in zip(names, basis)}, cap, p.u_cap
        )
    return LocalFunctional(dens)


# -- certificates -------------------------------------------------------------


@dataclass
class PairwiseReport:
    ok: bool
    pairs_checked: int
    first_violation: tuple[int, int] | None = None
    detail: str = ""


def commute_certificate(flows: Sequence[DiffPoly]) -> PairwiseReport:
    """Exact pairwise commutativity of the given flows."""
    flows = list(flows)
    checked = 0
    for i in range(len(flows)):
        for j in range(i + 1, len(flows)):
            checked += 1
            if not flow_bracket(flows[i], flows[j]).is_zero():
                return PairwiseReport(False, checked, (i, j), "flows do not commute")
    return PairwiseReport(True, checked)


@dataclass
class Hierarchy:
    """A family of flows with optional Hamiltonian data.

    flows[d] is the d-th flow; hamiltonians[d] generates it through the
    operator when both are present.
    """

    flows: tuple[DiffPoly, ...]
    hamiltonians: tuple[LocalFunctional, ...] | None = None
    operator: DiffOperator | None = None

    def __post_init__(self):
        self.flows = tuple(self.flows)
        if self.hamiltonians is not None:
            self.hamiltonians = tuple(self.hamiltonians)
            if len(self.hamiltonians) != len(self.flows):
                raise MissingStructure("one hamiltonian per flow is required")

    @property
    def size(self) -> int:
        return len(self.flows)


def riemann_hierarchy(
    num_flows: int, eps_cap: int, u_cap: int = DEFAULT_U_CAP
) -> Hierarchy:
    flows = tuple(riemann_flow(d, eps_cap, u_cap) for d in range(num_flows))
    hams = tuple(riemann_hamiltonian(d, eps_cap, u_cap) for d in range(num_flows))
    return Hierarchy(flows, hams, dx_operator(eps_cap, 1, u_cap))


@dataclass
class StructureReport:
    ok: bool
    checks: list[str] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)


def check_special(h: Hierarchy) -> StructureReport:
    """Certify the special Hamiltonian shape.

    Requires the operator to be exactly dx, the zeroth Hamiltonian to be
    int u^2/2, each flow to be dx of the variational derivative of its
    Hamiltonian, and the u-derivative chain linking consecutive Hamiltonians.
    """
    if h.operator is None or h.hamiltonians is None:
        raise MissingStructure("special check needs an operator and hamiltonians")
    rep = StructureReport(True)

    def record(name: str, ok: bool):
        if ok:
            rep.checks.append(name)
        else:
            rep.failures.append(name)
            rep.ok = False

    k = h.operator
    record("operator is dx", k == dx_operator(k.eps_cap, 1, k.u_cap))
    h0 = h.hamiltonians[0]
    expected = LocalFunctional(
        DiffPoly.from_monomial(Fraction(1, 2), 0, Monomial(2), h0.eps_cap, h0.density.u_cap)
    )
    record("hamiltonian 0 is int u^2/2", h0 == expected)
    for d, (flow, ham) in enumerate(zip(h.flows, h.hamiltonians)):
        record(
            f"flow {d} is generated by hamiltonian {d}",
            flow == apply_operator(k, var_derivative(ham)),
        )
    for d in range(1, len(h.hamiltonians)):
        record(
            f"u-derivative of hamiltonian {d} is hamiltonian {d - 1}",
            du_functional(h.hamiltonians[d]) == h.hamiltonians[d - 1],
        )
    return rep


def check_tau(h: Hierarchy, max_d: int | None = None) -> StructureReport:
    """Certify tau-symmetry: the t_q-derivative of the p-th density equals
    the t_p-derivative of the q-th density, exactly as polynomials."""
    if h.hamiltonians is None:
        raise MissingStructure("tau check needs hamiltonians")
    n = len(h.flows) if max_d is None else min(max_d + 1, len(h.flows))
    rep = StructureReport(True)
    densities = [var_derivative(h.hamiltonians[p]) for p in range(n)]
    for p in range(n):
        for q in range(p + 1, n):
            lhs = evolutionary(h.flows[q], densities[p])
            rhs = evolutionary(h.flows[p], densities[q])
            if lhs == rhs:
                rep.checks.append(f"tau symmetry ({p}, {q})")
            else:
                rep.failures.append(f"tau symmetry ({p}, {q})")
                rep.ok = False
    return rep


def to_special_form(h: Hierarchy) -> tuple[MiuraTransformation, Hierarchy]:
    """Normalize the operator to dx and transport the whole hierarchy."""
    if h.operator is None:
        raise MissingStructure("special form needs an operator")
    phi, k_final = normalize_poisson(h.operator)
    flows = tuple(phi.transform_flow(q) for q in h.flows)
    hams = None
    if h.hamiltonians is not None:
        hams = tuple(phi.transform_functional(f) for f in h.hamiltonians)
    return phi, Hierarchy(flows, hams, k_final)


# -- standard form of a Hamiltonian density -----------------------------------


def _gsf_shape_check(h1: LocalFunctional, cap: int) -> None:
    dens = h1.density
    head = dens.eps_part(0)
    cubic = DiffPoly.from_monomial(Fraction(1, 6), 0, Monomial(3), dens.eps_cap, dens.u_cap)
    if head != cubic:
        raise DegreeMismatch("density must reduce to u^3/6 at order zero")
    for (a, mono), _ in dens.terms.items():
        if a == 0:
            continue
        if mono.u_degree() != len(mono.partition()):
            raise NotConstantCoefficients(
                f"order-{a} density term {mono!r} carries a u-power"
            )
        if mono.diff_degree() != a:
            raise DegreeMismatch(
                f"order-{a} density term {mono!r} has degree {mono.diff_degree()}"
            )


def _reducible_partitions(dens: DiffPoly, k: int) -> list[tuple[Partition, Fraction]]:
    out = []
    for (a, mono), c in dens.terms.items():
        if a != k:
            continue
        lam = Partition(mono.partition())
        if lam.parts and lam.parts[-1] == 1 and lam.parts != (1, 1):
            out.append((lam, c.numeric_value()))
    return out


def standard_form_reduce(
    h1: LocalFunctional, eps_order: int | None = None
) -> tuple[MiuraTransformation, LocalFunctional]:
    """Eliminate all first-jet partitions except (1,1) from a density.

    The input must have constant coefficients on homogeneous jet monomials
    over u^3/6. Each elimination step conjugates by the exponential of a
    monomial functional at the lowest offending order; the result has only
    jet partitions with all parts >= 2, plus the residual u_x^2 class.
    """
    cap = h1.eps_cap if eps_order is None else eps_order
    if h1.density.eps_cap != cap:
        h1 = LocalFunctional(h1.density.with_caps(eps_cap=cap))
    _gsf_shape_check(h1, cap)
    phi = MiuraTransformation.identity(cap, h1.density.u_cap)
    guard = 0
    max_steps = 64 * (cap + 1) * (cap + 1)
    while True:
        candidates: list[tuple[Partition, Fraction]] = []
        k0 = None
        for k in range(3, cap + 1):
            candidates = _reducible_partitions(h1.density, k)
            if candidates:
                k0 = k
                break
        if k0 is None:
            break
        guard += 1
        if guard > max_steps:  # pragma: no cover - safety net
            raise NoSolution("standard form reduction failed to terminate")
        lam, a = max(candidates, key=lambda pair: pair[0].parts)
        reduced_parts = list(lam.parts)
        reduced_parts.remove(1)
        lam_red = Partition(reduced_parts)
        denom = k0 + len(lam_red.parts) - lam.multiplicity(1) - 1
        assert denom != 0
        gen = LocalFunctional(
            DiffPoly.from_monomial(
                -a * Fraction(1, denom),
                0,
                Monomial(0, _jet_list(lam_red)),
                cap,
                h1.density.u_cap,
            )
        )
        before = h1.density.coefficient(k0, Monomial(0, _jet_list(lam)))
        h1 = ad_apply(gen, k0, h1)
        after = h1.density.coefficient(k0, Monomial(0, _jet_list(lam)))
        if not after.is_zero():  # pragma: no cover - sanity net
            raise NoSolution(
                f"reduction step left coefficient {after} at {lam.parts} "
                f"(was {before})"
            )
        phi = compose(phi_hamiltonian(gen, k0, cap, h1.density.u_cap), phi)
    return phi, h1


# -- normal form of a conserved density ---------------------------------------


def _normal_rows(poly: DiffPoly) -> DiffPoly:
    """Part of poly made of monomials involving the first jet."""
    return DiffPoly(
        {(a, m): c for (a, m), c in poly.terms.items() if m.jet_exponent(1) > 0},
        poly.eps_cap,
        poly.u_cap,
    )


def normal_form(
    p1: DiffPoly, eps_order: int | None = None
) -> tuple[MiuraTransformation, DiffPoly]:
    """Remove all first-jet dependence from a conserved density of u_t = u u_x.

    The input is a homogeneous degree-zero deformation of u^2/2 viewed as the
    density of a conservation law u_t = dx(p1). The change of variable has
    shift dx(f), so densities transform by adding the f-derivative along the
    flow; the result keeps its order-one slice (which such shifts cannot
    alter) and contains no first jet at any higher order.
    """
    cap = p1.eps_cap if eps_order is None else eps_order
    p1 = p1.with_caps(eps_cap=cap)
    head = p1.eps_part(0)
    expected = DiffPoly.from_monomial(Fraction(1, 2), 0, Monomial(2), cap, p1.u_cap)
    if head != expected:
        raise DegreeMismatch("density must reduce to u^2/2 at order zero")
    for (a, mono), _ in p1.terms.items():
        if mono.diff_degree() != a:
            raise DegreeMismatch("density must be homogeneous of degree zero")

    u_cap = p1.u_cap
    f_total = DiffPoly.zero(cap, u_cap)

    def transported() -> tuple[DiffPoly, MiuraTransformation]:
        phi = MiuraTransformation(dx(f_total))
        return phi.apply_to_poly(p1 + evolutionary(dx(p1), f_total)), phi

    for k in range(2, cap + 1):
        cur, _ = transported()
        slice_k = cur.eps_part(k)
        bad = _normal_rows(slice_k)
        if bad.is_zero():
            continue
        basis = _ansatz_degree_basis(k - 1, max(0, slice_k.max_u_degree() - 1))
        names = [f"{_UNKNOWN}{i}" for i in range(len(basis))]
        sym = DiffPoly.zero(cap, u_cap)
        for n, m in zip(names, basis):
            acted = _first_flow_action(
                DiffPoly.from_monomial(1, 0, m, cap, u_cap), cap, u_cap
            )
            sym = sym + acted.scale(ParamExpr(0, {n: 1}))
        resid = _normal_rows(bad + sym)
        values, constraints, _free = _solve_correction(resid, names)
        if constraints:
            raise NoSolution(f"first-jet terms at order {k} are not removable")
        f_k = DiffPoly({(0, m): values[n] for n, m in zip(names, basis)}, cap, u_cap)
        f_total = f_total + f_k.mul_eps(k)
    final, phi = transported()
    for k in range(2, cap + 1):
        if not _normal_rows(final.eps_part(k)).is_zero():  # pragma: no cover
            raise NoSolution(f"normal form failed to clear first jets at order {k}")
    return phi, final


def _ansatz_degree_basis(degree: int, max_u: int) -> list[Monomial]:
    """Monomials of the given positive differential degree, u-degree <= max_u."""
    out: list[Monomial] = []
    for lam in partitions_of(degree):
        length = len(lam.parts)
        if length > max_u:
            continue
        jets = _jet_list(lam)
        for p in range(max_u - length + 1):
            out.append(Monomial(p, jets))
    out.sort(key=lambda m: m.sort_key())
    return out


def _first_flow_action(f: DiffPoly, cap: int, u_cap: int) -> DiffPoly:
    """Linear action sum_n (dx^n(u u_x) - u u_(n+1)) df/du_n of the base flow."""
    from .diffpoly import dxn, partial

    uu1 = DiffPoly.from_monomial(1, 0, Monomial(1, ((1, 1),)), cap, u_cap)
    u_poly = DiffPoly.u(cap, u_cap)
    out = DiffPoly.zero(cap, u_cap)
    top = f.max_jet_order()
    for n in range(1, top + 1):
        df = partial(f, n)
        if df.is_zero():
            continue
        weight = dxn(uu1, n) - u_poly * DiffPoly.jet(n + 1, cap, u_cap)
        out = out + weight * df
    return out


# -- compatibility constraints on a deformation template ----------------------


def partition_param_name(lam) -> str:
    """Deterministic parameter name for a jet partition, e.g. (2, 2) -> c22."""
    parts = tuple(lam.parts) if isinstance(lam, Partition) else tuple(lam)
    if any(p > 9 for p in parts):
        return "c" + "_".join(str(p) for p in parts)
    return "c" + "".join(str(p) for p in parts)


@dataclass
class ConstraintReport:
    """Outcome of requiring one extra commuting flow on a flow template."""

    density: DiffPoly
    flow: DiffPoly
    commuting: DiffPoly
    solved: dict
    free: list
    relations: list

    @property
    def ok(self) -> bool:
        return True


def template_density(
    eps_order: int,
    fixed: Mapping | None = None,
    u_cap: int = DEFAULT_U_CAP,
) -> tuple[DiffPoly, list[str]]:
    """Degree-zero template u^2/2 + sum over jet partitions with parts >= 2.

    Each order-k slice carries one coefficient per partition of k with all
    parts at least 2; coefficients are symbolic parameters unless pinned in
    fixed (keyed by name or partition tuple). Returns (density, open names).
    """
    bindings: dict[str, Fraction] = {}
    for key, value in (fixed or {}).items():
        name = key if isinstance(key, str) else partition_param_name(key)
        bindings[name] = Fraction(value)
    terms: dict = {(0, Monomial(2)): Fraction(1, 2)}
    names: list[str] = []
    for k in range(2, eps_order + 1):
        for lam in partitions_of(k, "parts_ge_2"):
            name = partition_param_name(lam)
            mono = Monomial(0, _jet_list(lam))
            if name in bindings:
                terms[(k, mono)] = bindings[name]
            else:
                terms[(k, mono)] = ParamExpr(0, {name: 1})
                names.append(name)
    return DiffPoly(terms, eps_order, u_cap), names


def extract_constraints(
    eps_order: int,
    fixed: Mapping | None = None,
    seed_degree: int = 2,
    u_cap: int = DEFAULT_U_CAP,
) -> ConstraintReport:
    """Constraints on a deformation template from one extra commuting flow.

    The flow u_t = dx(density) built on template_density is required to admit
    a commuting flow that is itself a total x-derivative, deforming the seed
    u^d/d! u_x. The linear relations this forces on the open template
    parameters are accumulated and solved as the reconstruction proceeds,
    substituting each solution back before the next order. Parameters
    entering the relations nonlinearly must be pinned in fixed, otherwise
    the coefficient arithmetic raises.
    """
    if seed_degree < 2:
        raise OutOfRange("seed degree must be at least 2 to constrain anything")
    dens, names = template_density(eps_order, fixed, u_cap)
    p = dx(dens)
    r0 = DiffPoly.from_monomial(
        Fraction(1, factorial(seed_degree + 1)),
        0,
        Monomial(seed_degree + 1),
        eps_order,
        u_cap,
    )
    relations: list[ParamExpr] = []

    def hook(_k: int, constraints: list[ParamExpr]) -> Mapping[str, ParamExpr]:
        relations.extend(constraints)
        return _solve_params(relations, names)

    p_final, r = _reconstruct_conservative_impl(p, r0, eps_order, hook)
    solved = _solve_params(relations, names)
    free = [n for n in names if n not in solved]
    dens_final = dens.substitute_params(solved)
    return ConstraintReport(dens_final, p_final, dx(r), dict(solved), free, list(relations))


def _solve_params(relations: Sequence[ParamExpr], names: Sequence[str]) -> dict:
    rows = [(dict(expr.terms), ParamExpr(-expr.const)) for expr in relations]
    sol = solve_linear(rows, list(names))
    if sol.constraints:
        bad = "; ".join(str(c) + " = 0" for c in sol.constraints)
        raise NoSolution(f"parameter relations are inconsistent: {bad}")
    return {n: sol.solution[n] for n in sol.pivots}


# -- bridge between density and flow coefficients ------------------------------


def bridge_check(h1: LocalFunctional, eps_order: int | None = None) -> StructureReport:
    """Structural identities tying a constant-coefficient density to its flow.

    For the density h1 in standard form, the variational derivative p1 must
    satisfy, for every g >= 2 with 2g within range: the coefficient of
    u_2^g in its order-2g slice vanishes, and the coefficient of u_4 u_2^(g-2)
    equals g(g-1) times the density coefficient of u_2^g. Both sides may be
    symbolic.
    """
    cap = h1.eps_cap if eps_order is None else eps_order
    if h1.density.eps_cap != cap:
        h1 = LocalFunctional(h1.density.with_caps(eps_cap=cap))
    _gsf_shape_check(h1, cap)
    p1 = var_derivative(h1)
    rep = StructureReport(True)
    for g in range(2, cap // 2 + 1):
        k = 2 * g
        all_twos = Monomial(0, ((2, g),))
        if g > 2:
            four_twos = Monomial(0, ((4, 1), (2, g - 2)))
        else:
            four_twos = Monomial(0, ((4, 1),))
        c_a = p1.coefficient(k, all_twos)
        c_b = p1.coefficient(k, four_twos)
        b_val = h1.density.coefficient(k, all_twos)
        expected = b_val * Fraction(g * (g - 1))
        if c_a.is_zero():
            rep.checks.append(f"order {k}: coefficient of u_2^{g} vanishes")
        else:
            rep.failures.append(
                f"order {k}: coefficient of u_2^{g} is {c_a}, expected 0"
            )
            rep.ok = False
        if c_b == expected:
            rep.checks.append(
                f"order {k}: coefficient of u_4 u_2^{g - 2} matches g(g-1) "
                "times the density coefficient"
            )
        else:
            rep.failures.append(
                f"order {k}: coefficient of u_4 u_2^{g - 2} is {c_b}, "
                f"expected {expected}"
            )
            rep.ok = False
    return rep
