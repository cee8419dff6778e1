"""Exact symbolic calculus for deformations of the dispersionless hierarchy.

The package works in the differential polynomial ring over exact rationals
with affine parameter coefficients: evolutionary flows, local functionals
and variational calculus, differential operators with skew/Jacobi
certificates, invertible order-raising changes of variable, order-by-order
reconstruction of commuting flows and conserved quantities, two density
normal forms, and closed-form rational coefficient tables.
"""

from .diffpoly import (
    DEFAULT_U_CAP,
    DiffPoly,
    Monomial,
    dx,
    dxn,
    eval_at,
    evolutionary,
    flow_bracket,
    partial,
    u_lambda,
)
from .drformulas import (
    BivariatePoly,
    DRParams,
    a_2g_head,
    alpha,
    beta,
    bssz_closed,
    bssz_recursive,
    c2g_head,
    delta_g1,
    gamma,
    hodge_values,
    kdv_p1,
    vanishing_combination,
)
from .errors import (
    DegreeMismatch,
    ExprSyntaxError,
    MissingStructure,
    NoDxFactor,
    NonlinearParameterProduct,
    NoSolution,
    NotConstantCoefficients,
    NotPoissonInput,
    OutOfRange,
    RiemdefError,
    UDegreeOverflow,
    UnknownParameter,
)
from .exactmath import (
    ParamExpr,
    Partition,
    Rational,
    as_paramexpr,
    bernoulli,
    double_factorial_odd,
    partitions_of,
)
from .functionals import (
    LocalFunctional,
    du_functional,
    integrate,
    is_total_derivative,
    is_variational,
    var_derivative,
)
from .hierarchy import (
    ConstraintReport,
    Hierarchy,
    PairwiseReport,
    StructureReport,
    bridge_check,
    check_special,
    check_tau,
    commute_certificate,
    extract_constraints,
    normal_form,
    partition_param_name,
    reconstruct_conserved,
    reconstruct_flow,
    riemann_flow,
    riemann_hamiltonian,
    riemann_hierarchy,
    standard_form_reduce,
    template_density,
    to_special_form,
)
from .miura import (
    MiuraTransformation,
    ad_apply,
    compose,
    normalize_poisson,
    phi_hamiltonian,
)
from .operators import (
    DiffOperator,
    PoissonReport,
    apply_operator,
    bracket,
    conjugate,
    dagger,
    default_samples,
    dx_operator,
    identity_operator,
    is_poisson,
    linearize,
)
from .parsing import (
    parse_expression,
    poly_json_terms,
    render_coefficient,
    render_functional,
    render_poly,
)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_U_CAP",
    "DiffPoly",
    "Monomial",
    "dx",
    "dxn",
    "eval_at",
    "evolutionary",
    "flow_bracket",
    "partial",
    "u_lambda",
    "BivariatePoly",
    "DRParams",
    "a_2g_head",
    "alpha",
    "beta",
    "bssz_closed",
    "bssz_recursive",
    "c2g_head",
    "delta_g1",
    "gamma",
    "hodge_values",
    "kdv_p1",
    "vanishing_combination",
    "DegreeMismatch",
    "ExprSyntaxError",
    "MissingStructure",
    "NoDxFactor",
    "NonlinearParameterProduct",
    "NoSolution",
    "NotConstantCoefficients",
    "NotPoissonInput",
    "OutOfRange",
    "RiemdefError",
    "UDegreeOverflow",
    "UnknownParameter",
    "ParamExpr",
    "Partition",
    "Rational",
    "as_paramexpr",
    "bernoulli",
    "double_factorial_odd",
    "partitions_of",
    "LocalFunctional",
    "du_functional",
    "integrate",
    "is_total_derivative",
    "is_variational",
    "var_derivative",
    "ConstraintReport",
    "Hierarchy",
    "PairwiseReport",
    "StructureReport",
    "bridge_check",
    "check_special",
    "check_tau",
    "commute_certificate",
    "extract_constraints",
    "normal_form",
    "partition_param_name",
    "reconstruct_conserved",
    "reconstruct_flow",
    "riemann_flow",
    "riemann_hamiltonian",
    "riemann_hierarchy",
    "standard_form_reduce",
    "template_density",
    "to_special_form",
    "MiuraTransformation",
    "ad_apply",
    "compose",
    "normalize_poisson",
    "phi_hamiltonian",
    "DiffOperator",
    "PoissonReport",
    "apply_operator",
    "bracket",
    "conjugate",
    "dagger",
    "default_samples",
    "dx_operator",
    "identity_operator",
    "is_poisson",
    "linearize",
    "parse_expression",
    "poly_json_terms",
    "render_coefficient",
    "render_functional",
    "render_poly",
    "__version__",
]
