"""Exact sparse Gaussian elimination over the rationals.

Rows are sum(coeff * x_var) = rhs with Fraction matrix entries; right hand
sides may carry affine ParamExpr data, which elimination preserves (rows
are only ever scaled by rationals and added). Rows whose left side empties
out become constraints on the parameters appearing in their right side.

Pivoting walks the caller-supplied variable order and picks the first row
with a nonzero entry, so results are deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Hashable, Sequence

from .exactmath import ParamExpr, as_paramexpr

__all__ = ["LinearSolution", "solve_linear"]

Var = Hashable


@dataclass
class LinearSolution:
    solution: dict  # var -> ParamExpr, free variables bound to 0
    pivots: dict  # var -> row index used
    free: list  # vars with no pivot
    constraints: list  # ParamExpr values that must vanish


def solve_linear(
    rows: Sequence[tuple[dict, object]], variables: Sequence[Var]
) -> LinearSolution:
    work: list[tuple[dict, ParamExpr]] = [
        ({v: Fraction(c) for v, c in coeffs.items() if c}, as_paramexpr(rhs))
        for coeffs, rhs in rows
    ]
    known = set(variables)
    for coeffs, _ in work:
        stray = [v for v in coeffs if v not in known]
        if stray:
            raise ValueError(f"row mentions unknown variable {stray[0]!r}")
    pivots: dict[Var, int] = {}
    for var in variables:
        pivot_idx = None
        for idx, (coeffs, _) in enumerate(work):
            if idx in pivots.values():
                continue
            if coeffs.get(var):
                pivot_idx = idx
                break
        if pivot_idx is None:
            continue
        coeffs, rhs = work[pivot_idx]
        inv = 1 / coeffs[var]
        coeffs = {v: c * inv for v, c in coeffs.items()}
        rhs = rhs * inv
        work[pivot_idx] = (coeffs, rhs)
        for idx, (other, orhs) in enumerate(work):
            if idx == pivot_idx:
                continue
            factor = other.get(var)
            if not factor:
                continue
            merged = dict(other)
            for v, c in coeffs.items():
                s = merged.get(v, Fraction(0)) - factor * c
                if s:
                    merged[v] = s
                else:
                    merged.pop(v, None)
            work[idx] = (merged, orhs - rhs * factor)
        pivots[var] = pivot_idx

    solution: dict[Var, ParamExpr] = {}
    free = [v for v in variables if v not in pivots]
    zero = ParamExpr(0)
    for v in free:
        solution[v] = zero
    for var, idx in pivots.items():
        coeffs, rhs = work[idx]
        # remaining entries besides the pivot belong to free variables, all 0
        solution[var] = rhs
    constraints = []
    used = set(pivots.values())
    for idx, (coeffs, rhs) in enumerate(work):
        if idx in used:
            continue
        # an unused row has had every pivot variable eliminated and holds no
        # free variable either (a nonzero free entry would have made it a pivot)
        assert not coeffs
        if not rhs.is_zero():
            constraints.append(rhs)
    return LinearSolution(solution, pivots, free, constraints)
