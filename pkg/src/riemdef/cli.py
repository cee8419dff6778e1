"""Command-line front end.

Subcommands map one-to-one onto library operations: flow and conserved
quantity reconstruction, pairwise commutativity certificates, the two
density normal forms, Poisson operator checks and normalization, the
tau-symmetry suite, the closed-form constants table, deformation parameter
constraints, and the density/flow bridge identities. Output is exact: text
renders every value as p/q fractions, json encodes polynomial terms as
[eps_power, u_power, {jet: exp}, coeff] arrays. Exit status is 0 for
success, 1 for usage problems, 2 when the mathematics fails (no solution,
non-Poisson input, inconsistent constraints, or a FAIL verdict).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from .diffpoly import DEFAULT_U_CAP, DiffPoly, Monomial
from .drformulas import a_2g_head, alpha, beta, gamma, hodge_values
from .errors import ExprSyntaxError, RiemdefError, UnknownParameter
from .functionals import LocalFunctional
from .hierarchy import (
    Hierarchy,
    bridge_check,
    check_special,
    check_tau,
    commute_certificate,
    extract_constraints,
    normal_form,
    reconstruct_conserved,
    reconstruct_flow,
    riemann_flow,
    riemann_hamiltonian,
    standard_form_reduce,
)
from .miura import normalize_poisson
from .operators import DiffOperator, dx_operator, is_poisson
from .parsing import (
    parse_expression,
    poly_json_terms,
    render_coefficient,
    render_functional,
    render_poly,
)

__all__ = ["main", "RunConfig"]

_ENV_EPS = "RD_EPS_ORDER"
_DEFAULT_EPS = 6


class UsageError(RiemdefError):
    """Bad command line or malformed input expression container."""

    code = "Usage"


@dataclass(frozen=True)
class RunConfig:
    """Resolved global options shared by every subcommand."""

    eps_order: int
    u_cap: int = DEFAULT_U_CAP
    params: Mapping[str, Optional[Fraction]] = field(default_factory=dict)
    mode: str = "strict"
    seed: int = 0
    fmt: str = "text"
    out: Optional[str] = None


class _ArgumentParser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad usage; the contract reserves 2 for
    # mathematical failure, so route through the usage path instead
    def error(self, message):
        raise UsageError(message)


def _binding(text: str, require_value: bool):
    name, sep, value = text.partition("=")
    name = name.strip()
    if not name.isidentifier() or name.startswith("_"):
        raise UsageError(f"invalid parameter name {name!r}")
    if not sep:
        if require_value:
            raise UsageError(f"expected NAME=value, got {text!r}")
        return name, None
    try:
        return name, Fraction(value.strip())
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"invalid rational value in {text!r}")


def _resolve_config(args) -> RunConfig:
    eps = args.eps_order
    if eps is None:
        raw = os.environ.get(_ENV_EPS)
        if raw is None:
            eps = _DEFAULT_EPS
        else:
            try:
                eps = int(raw)
            except ValueError:
                raise UsageError(f"{_ENV_EPS} must be an integer, got {raw!r}")
    if eps < 0:
        raise UsageError("--eps-order must be nonnegative")
    if args.u_cap < 1:
        raise UsageError("--u-cap must be at least 1")
    params: dict[str, Optional[Fraction]] = {}
    for item in args.param or []:
        name, value = _binding(item, require_value=False)
        params[name] = value
    return RunConfig(
        eps_order=eps,
        u_cap=args.u_cap,
        params=params,
        mode=args.mode,
        seed=args.seed,
        fmt=args.format,
        out=args.out,
    )


def _read_source(text: str) -> str:
    if text == "-":
        return sys.stdin.read()
    return text


def _parse_poly(text: str, cfg: RunConfig) -> DiffPoly:
    value = parse_expression(
        _read_source(text), cfg.eps_order, cfg.u_cap, cfg.params
    )
    if isinstance(value, LocalFunctional):
        raise UsageError("expected a polynomial, got a functional int(...)")
    if cfg.mode == "series":
        value = DiffPoly(value.terms, value.eps_cap, value.u_cap, series=True)
    return value


def _parse_functional(text: str, cfg: RunConfig) -> LocalFunctional:
    value = parse_expression(
        _read_source(text), cfg.eps_order, cfg.u_cap, cfg.params
    )
    if not isinstance(value, LocalFunctional):
        raise UsageError("expected a functional: wrap the density in int(...)")
    return value


def _parse_operator(text: str, cfg: RunConfig) -> DiffOperator:
    coeffs = []
    for chunk in _read_source(text).split(";"):
        chunk = chunk.strip()
        if not chunk:
            coeffs.append(DiffPoly.zero(cfg.eps_order, cfg.u_cap))
        else:
            coeffs.append(_parse_poly(chunk, cfg))
    return DiffOperator(coeffs, cfg.eps_order, cfg.u_cap)


def _family_flow(name: str, cfg: RunConfig) -> DiffPoly:
    base = DiffPoly.from_monomial(
        1, 0, Monomial(1, ((1, 1),)), cfg.eps_order, cfg.u_cap
    )
    if name == "riemann":
        return base
    if name == "kdv":
        disp = DiffPoly.from_monomial(
            Fraction(1, 12), 2, Monomial(0, ((3, 1),)), cfg.eps_order, cfg.u_cap
        )
        return base + disp
    raise UsageError(f"unknown flow family {name!r}")


def _reconstructed_flows(p: DiffPoly, max_d: int, cfg: RunConfig) -> list[DiffPoly]:
    return [
        reconstruct_flow(p, riemann_flow(d, cfg.eps_order, cfg.u_cap), cfg.eps_order)
        for d in range(max_d + 1)
    ]


# -- subcommand handlers -----------------------------------------------------
# each returns (exit_code, text, json payload)


def _cmd_reconstruct_flow(args, cfg: RunConfig):
    p = _parse_poly(args.expr, cfg)
    seed = riemann_flow(args.degree, cfg.eps_order, cfg.u_cap)
    q = reconstruct_flow(p, seed, cfg.eps_order)
    return 0, render_poly(q), {"flow": poly_json_terms(q)}


def _cmd_reconstruct_conserved(args, cfg: RunConfig):
    p = _parse_poly(args.expr, cfg)
    seed = riemann_hamiltonian(args.degree, cfg.eps_order, cfg.u_cap)
    h = reconstruct_conserved(p, seed, cfg.eps_order)
    return 0, render_functional(h), {"density": poly_json_terms(h.density)}


def _cmd_commute(args, cfg: RunConfig):
    if args.expr is not None:
        p = _parse_poly(args.expr, cfg)
    else:
        p = _family_flow(args.flows, cfg)
    flows = _reconstructed_flows(p, args.max_d, cfg)
    rep = commute_certificate(flows)
    if rep.ok:
        return 0, "PASS", {"result": "PASS", "pairs": rep.pairs_checked}
    i, j = rep.first_violation
    text = f"FAIL: flows {i} and {j} do not commute"
    return 2, text, {"result": "FAIL", "pair": [i, j]}


def _cmd_reduce_dlyz(args, cfg: RunConfig):
    h1 = _parse_functional(args.expr, cfg)
    phi, reduced = standard_form_reduce(h1, cfg.eps_order)
    text = "\n".join(
        [
            f"shift = {render_poly(phi.shift)}",
            f"density = {render_poly(reduced.density)}",
        ]
    )
    payload = {
        "shift": poly_json_terms(phi.shift),
        "density": poly_json_terms(reduced.density),
    }
    return 0, text, payload


def _cmd_alm_normal_form(args, cfg: RunConfig):
    p = _parse_poly(args.expr, cfg)
    phi, result = normal_form(p, cfg.eps_order)
    text = "\n".join(
        [
            f"shift = {render_poly(phi.shift)}",
            f"result = {render_poly(result)}",
        ]
    )
    payload = {
        "shift": poly_json_terms(phi.shift),
        "result": poly_json_terms(result),
    }
    return 0, text, payload


def _cmd_poisson_check(args, cfg: RunConfig):
    op = _parse_operator(args.operator, cfg)
    rep = is_poisson(op, max_weight=args.max_weight)
    if rep.ok:
        payload = {
            "result": "PASS",
            "samples": rep.samples,
            "triples": rep.triples_checked,
        }
        return 0, "PASS", payload
    detail = rep.first_violation or "violation found"
    return 2, f"FAIL: {detail}", {"result": "FAIL", "detail": detail}


def _cmd_normalize_poisson(args, cfg: RunConfig):
    op = _parse_operator(args.operator, cfg)
    phi, final = normalize_poisson(op, eps_order=cfg.eps_order)
    lines = [f"shift = {render_poly(phi.shift)}"]
    coeffs = []
    for i in range(final.order + 1):
        c = final.coefficient(i)
        lines.append(f"d{i} = {render_poly(c)}")
        coeffs.append(poly_json_terms(c))
    return 0, "\n".join(lines), {"shift": poly_json_terms(phi.shift), "coeffs": coeffs}


def _cmd_tau_check(args, cfg: RunConfig):
    p = _family_flow(args.flows, cfg)
    flows = _reconstructed_flows(p, args.max_d, cfg)
    hams = [
        reconstruct_conserved(
            p, riemann_hamiltonian(d, cfg.eps_order, cfg.u_cap), cfg.eps_order
        )
        for d in range(args.max_d + 1)
    ]
    h = Hierarchy(tuple(flows), tuple(hams), dx_operator(cfg.eps_order, 1, cfg.u_cap))
    special = check_special(h)
    tau = check_tau(h, args.max_d)
    failures = special.failures + tau.failures
    checks = len(special.checks) + len(tau.checks)
    if not failures:
        return 0, "PASS", {"result": "PASS", "checks": checks}
    text = "FAIL: " + "; ".join(failures)
    return 2, text, {"result": "FAIL", "failures": failures}


def _cmd_constants(args, cfg: RunConfig):
    if args.max_g < 0:
        raise UsageError("--max-g must be nonnegative")
    lines: list[str] = []
    payload: dict = {
        "alpha": {},
        "beta": {},
        "gamma": {},
        "a_head": {},
        "lambda3": {},
        "b": {},
    }
    rows = (
        ("alpha", alpha),
        ("beta", beta),
        ("gamma", gamma),
        ("a_head", a_2g_head),
        ("lambda3", lambda g: hodge_values("lambda_triple", g)),
    )
    for label, fn in rows:
        for g in range(2, args.max_g + 1):
            value = fn(g)
            lines.append(f"{label}_{g} = {value}")
            payload[label][str(g)] = str(value)
    for h in range(0, args.max_g + 1):
        value = hodge_values("b_h", h)
        lines.append(f"b_{h} = {value}")
        payload["b"][str(h)] = str(value)
    return 0, "\n".join(lines), payload


def _cmd_constraints(args, cfg: RunConfig):
    fixed: dict[str, Fraction] = {}
    for item in args.fix or []:
        name, value = _binding(item, require_value=True)
        fixed[name] = value
    queried: list[str] = []
    for name, value in cfg.params.items():
        if value is None:
            queried.append(name)
        else:
            fixed[name] = value
    rep = extract_constraints(cfg.eps_order, fixed, u_cap=cfg.u_cap)
    names = queried or sorted(rep.solved)
    lines = []
    payload: dict = {"values": {}}
    for name in names:
        if name in rep.solved:
            value = render_coefficient(rep.solved[name])
        elif name in fixed:
            value = str(fixed[name])
        else:
            raise RiemdefError(
                f"parameter {name!r} is not determined at order {cfg.eps_order}"
            )
        lines.append(f"{name} = {value}")
        payload["values"][name] = value
    if rep.free:
        payload["free"] = sorted(rep.free)
    return 0, "\n".join(lines), payload


def _cmd_bridge_check(args, cfg: RunConfig):
    h1 = _parse_functional(args.expr, cfg)
    rep = bridge_check(h1, cfg.eps_order)
    if rep.ok:
        return 0, "PASS", {"result": "PASS", "checks": len(rep.checks)}
    text = "FAIL: " + "; ".join(rep.failures)
    return 2, text, {"result": "FAIL", "failures": rep.failures}


# -- parser construction -----------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument(
        "--eps-order",
        type=int,
        default=None,
        help=f"deformation order cap (default: ${_ENV_EPS} or {_DEFAULT_EPS})",
    )
    shared.add_argument(
        "--u-cap", type=int, default=DEFAULT_U_CAP, help="total u-degree cap"
    )
    shared.add_argument(
        "--param",
        action="append",
        metavar="NAME[=p/q]",
        help="declare a parameter, optionally binding it to a rational",
    )
    shared.add_argument(
        "--mode", choices=("strict", "series"), default="strict",
        help="degree-overflow handling for parsed input",
    )
    shared.add_argument("--seed", type=int, default=0, help="seed for sampled checks")
    shared.add_argument(
        "--format", choices=("text", "json"), default="text", help="output format"
    )
    shared.add_argument("--out", default=None, help="write output to this file")

    parser = _ArgumentParser(
        prog="riemdef",
        description="Exact deformation calculus for the dispersionless hierarchy.",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    p = sub.add_parser(
        "reconstruct-flow", parents=[shared], help="commuting flow from a seed degree"
    )
    p.add_argument("expr", help="deformed first flow, or - for stdin")
    p.add_argument("--degree", type=int, required=True, help="seed flow index")
    p.set_defaults(handler=_cmd_reconstruct_flow)

    p = sub.add_parser(
        "reconstruct-conserved",
        parents=[shared],
        help="conserved quantity from a seed degree",
    )
    p.add_argument("expr", help="deformed first flow, or - for stdin")
    p.add_argument("--degree", type=int, required=True, help="seed index")
    p.set_defaults(handler=_cmd_reconstruct_conserved)

    p = sub.add_parser(
        "commute", parents=[shared], help="pairwise commutativity certificate"
    )
    p.add_argument("expr", nargs="?", default=None, help="optional explicit first flow")
    p.add_argument(
        "--flows", choices=("kdv", "riemann"), default="kdv", help="built-in family"
    )
    p.add_argument("--max-d", type=int, default=3, help="largest flow index")
    p.set_defaults(handler=_cmd_commute)

    p = sub.add_parser(
        "reduce-dlyz", parents=[shared], help="reduce a density to standard form"
    )
    p.add_argument("expr", help="functional int(...), or - for stdin")
    p.set_defaults(handler=_cmd_reduce_dlyz)

    p = sub.add_parser(
        "alm-normal-form", parents=[shared], help="remove first jets from a density"
    )
    p.add_argument("expr", help="conservation-law density, or - for stdin")
    p.set_defaults(handler=_cmd_alm_normal_form)

    p = sub.add_parser(
        "poisson-check", parents=[shared], help="skew and Jacobi certificate"
    )
    p.add_argument(
        "operator", help="semicolon-separated coefficients by d/dx power, or - for stdin"
    )
    p.add_argument("--max-weight", type=int, default=6, help="sample weight ceiling")
    p.set_defaults(handler=_cmd_poisson_check)

    p = sub.add_parser(
        "normalize-poisson", parents=[shared], help="conjugate an operator to d/dx"
    )
    p.add_argument(
        "operator", help="semicolon-separated coefficients by d/dx power, or - for stdin"
    )
    p.set_defaults(handler=_cmd_normalize_poisson)

    p = sub.add_parser(
        "tau-check", parents=[shared], help="special shape and tau symmetry suite"
    )
    p.add_argument(
        "--flows", choices=("kdv", "riemann"), default="kdv", help="built-in family"
    )
    p.add_argument("--max-d", type=int, default=3, help="largest flow index")
    p.set_defaults(handler=_cmd_tau_check)

    p = sub.add_parser(
        "constants", parents=[shared], help="closed-form coefficient table"
    )
    p.add_argument("--max-g", type=int, required=True, help="table cutoff")
    p.set_defaults(handler=_cmd_constants)

    p = sub.add_parser(
        "constraints",
        parents=[shared],
        help="parameter relations forced by one extra commuting flow",
    )
    p.add_argument(
        "--fix",
        action="append",
        metavar="NAME=p/q",
        help="pin a template coefficient to a rational",
    )
    p.set_defaults(handler=_cmd_constraints)

    p = sub.add_parser(
        "bridge-check", parents=[shared], help="density/flow coefficient identities"
    )
    p.add_argument("expr", help="functional int(...), or - for stdin")
    p.set_defaults(handler=_cmd_bridge_check)

    return parser


def _emit(text: str, cfg: RunConfig) -> None:
    data = text + "\n"
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(data)
    else:
        sys.stdout.write(data)


def _run(argv: Sequence[str]) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = _resolve_config(args)
    code, text, payload = args.handler(args, cfg)
    if cfg.fmt == "json":
        _emit(json.dumps(payload, sort_keys=True), cfg)
    else:
        _emit(text, cfg)
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    try:
        return _run(list(argv))
    except SystemExit as exc:
        # argparse --help; usage errors are raised as UsageError instead
        code = exc.code
        return 0 if code is None else int(code)
    except UsageError as exc:
        print(f"error[{exc.code}] {exc}", file=sys.stderr)
        return 1
    except (ExprSyntaxError, UnknownParameter) as exc:
        print(f"error[{exc.code}] {exc}", file=sys.stderr)
        return 1
    except RiemdefError as exc:
        print(f"error[{exc.code}] {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
