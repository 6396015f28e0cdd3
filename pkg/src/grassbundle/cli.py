"""Command line: ``grassbundle {gen,compute,verify}``.

JSON goes to standard output unless ``--out`` names a file. Exit codes:

    0  success
    1  verify: at least one check failed
    2  invalid arguments or malformed input
    3  ComplementRequired
    4  RankMismatch / FiberMismatch
    5  IllConditioned
    6  any other precondition failure
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import bundle as bd
from . import grassmann as gm
from . import kernel, paths, sampling, tangent, verify
from . import serialize as ser
from .errors import (
    ComplementRequired,
    FiberMismatch,
    GrassbundleError,
    IllConditioned,
    RankMismatch,
)
from .kernel import ToleranceConfig, adjoint, opnorm

EXIT_FAILED = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, ComplementRequired):
        return 3
    if isinstance(exc, (RankMismatch, FiberMismatch)):
        return 4
    if isinstance(exc, IllConditioned):
        return 5
    if isinstance(exc, GrassbundleError):
        return 6
    return EXIT_USAGE


# --------------------------------------------------------------------------
# input helpers


def _get(obj, key):
    if key not in obj:
        raise UsageError(f"missing input field {key!r}")
    return obj[key]


def _sub(obj, key, cfg):
    raw = _get(obj, key)
    if isinstance(raw, dict) and "basis" in raw:
        B = ser.matrix_from_json(raw["basis"])
        if "ambient" in raw and int(raw["ambient"]) != B.shape[0]:
            raise UsageError(f"{key}: ambient dimension does not match the basis")
    else:
        B = ser.matrix_from_json(raw)
    return gm.make_subspace(B, cfg)


def _mat(obj, key):
    raw = _get(obj, key)
    return ser.idempotent_from_json(raw) if isinstance(raw, dict) else ser.matrix_from_json(raw)


def _coords(obj, cfg):
    anchors = _get(obj, "anchors")
    return bd.ChartCoords(_sub(anchors, "E0", cfg), _sub(anchors, "F0", cfg), _mat(obj, "R"), _mat(obj, "S"))


def _tangent(obj, key, cfg):
    raw = _get(obj, key)
    return tangent.TangentVector(_sub(raw, "base", cfg), _mat(raw, "T"))


def _fiber_op(obj, key, E):
    return tangent.FiberOperator(E, _mat(obj, key))


def _vector(obj, key):
    x = _mat(obj, key)
    return x[:, 0] if x.ndim == 2 and x.shape[1] == 1 else x.reshape(-1)


def _m(A):
    return {"mat": ser.matrix_to_json(A)}


def _s(E):
    return ser.subspace_to_json(E)


# --------------------------------------------------------------------------
# compute operations: name -> (handler, verify checks covering it)


def _op_oblique(a, cfg, opts):
    return _m(bd.oblique_projector(_sub(a, "E", cfg), _sub(a, "F", cfg), cfg))


def _op_range(a, cfg, opts):
    return _s(bd.range_of(_mat(a, "Q"), cfg))


def _op_kernel(a, cfg, opts):
    return _s(bd.kernel_of(_mat(a, "Q"), cfg))


def _op_gap(a, cfg, opts):
    return {"gap": gm.subspace_gap(_sub(a, "E", cfg), _sub(a, "F", cfg))}


def _op_is_complement(a, cfg, opts):
    return {"complement": gm.is_complement(_sub(a, "E", cfg), _sub(a, "F", cfg), cfg)}


def _op_q_chart(a, cfg, opts):
    E0, F0 = _sub(a, "E0", cfg), _sub(a, "F0", cfg)
    return _s(gm.q_chart(E0, F0, gm.OperatorBetween(E0, F0, _mat(a, "T")), cfg))


def _op_p_chart(a, cfg, opts):
    T = gm.p_chart(_sub(a, "E0", cfg), _sub(a, "F0", cfg), _sub(a, "E", cfg), cfg)
    return {"T": ser.matrix_to_json(T.coeffs)}


def _op_pi_chart(a, cfg, opts):
    R = gm.pi_chart(_sub(a, "E0", cfg), _sub(a, "F0", cfg), _sub(a, "E", cfg), cfg)
    return {"R": ser.matrix_to_json(R.mat)}


def _op_pi_chart_inv(a, cfg, opts):
    return _s(gm.pi_chart_inv(_sub(a, "E0", cfg), _sub(a, "F0", cfg), _mat(a, "R"), cfg))


def _op_lambda_restrict(a, cfg, opts):
    T = gm.lambda_restrict(_sub(a, "E0", cfg), _sub(a, "F0", cfg), _mat(a, "R"), cfg)
    return {"T": ser.matrix_to_json(T.coeffs)}


def _op_lambda_extend(a, cfg, opts):
    E0, F0 = _sub(a, "E0", cfg), _sub(a, "F0", cfg)
    R = gm.lambda_extend(E0, F0, gm.OperatorBetween(E0, F0, _mat(a, "T")), cfg)
    return {"R": ser.matrix_to_json(R.mat)}


def _op_xi(a, cfg, opts):
    return _m(bd.xi(_sub(a, "E0", cfg), _sub(a, "F0", cfg), _sub(a, "E", cfg), cfg))


def _op_theta(a, cfg, opts):
    return _m(bd.theta_trivialize(_sub(a, "E0", cfg), _sub(a, "F0", cfg), _sub(a, "E", cfg), _mat(a, "Q"), cfg))


def _op_theta_inv(a, cfg, opts):
    E, Q0 = bd.theta_untrivialize(_sub(a, "E0", cfg), _sub(a, "F0", cfg), _mat(a, "Q"), cfg)
    return {"E": _s(E), "Q0": ser.matrix_to_json(Q0)}


def _op_mu_chart(a, cfg, opts):
    return ser.coords_to_json(bd.mu_chart(_sub(a, "E0", cfg), _sub(a, "F0", cfg), _mat(a, "Q"), cfg))


def _op_mu_chart_inv(a, cfg, opts):
    return _m(bd.mu_chart_inv(_coords(a, cfg), cfg))


def _op_transition(a, cfg, opts):
    args = [_sub(a, k, cfg) for k in ("E0", "F0", "E1", "F1", "E")]
    return _m(bd.transition(*args, _mat(a, "Q"), cfg))


def _op_ad_right_inverse(a, cfg, opts):
    return _m(bd.ad_right_inverse(_sub(a, "E0", cfg), _sub(a, "F0", cfg), _mat(a, "Q"), cfg))


def _op_delta(a, cfg, opts):
    return _m(bd.delta_projector(_sub(a, "E", cfg), _sub(a, "F", cfg), _mat(a, "T"), cfg))


def _op_to_involution(a, cfg, opts):
    return _m(bd.to_involution(_mat(a, "Q"), cfg))


def _op_from_involution(a, cfg, opts):
    return _m(bd.from_involution(_mat(a, "V"), cfg))


def _op_inv_chart(a, cfg, opts):
    return ser.coords_to_json(bd.inv_chart(_sub(a, "E0", cfg), _sub(a, "F0", cfg), _mat(a, "V"), cfg))


def _op_inv_chart_inv(a, cfg, opts):
    return _m(bd.inv_chart_inv(_coords(a, cfg), cfg))


def _op_pair_chart(a, cfg, opts):
    args = [_sub(a, k, cfg) for k in ("E0", "F0", "E", "F")]
    return ser.coords_to_json(bd.pair_chart(*args, cfg))


def _op_pair_chart_inv(a, cfg, opts):
    E, F = bd.pair_chart_inv(_coords(a, cfg), cfg)
    return {"E": _s(E), "F": _s(F)}


def _op_fiber_add(a, cfg, opts):
    return _m(bd.fiber_add(_mat(a, "x"), _mat(a, "y"), _mat(a, "z"), cfg))


def _op_fiber_scale(a, cfg, opts):
    return _m(bd.fiber_scale(ser.scalar_from_json(_get(a, "a")), _mat(a, "x"), _mat(a, "z"), cfg))


def _op_psi_banachize(a, cfg, opts):
    return _m(bd.psi_banachize(_sub(a, "E0", cfg), _sub(a, "F0", cfg), _sub(a, "E", cfg), _mat(a, "y"), cfg=cfg))


def _op_psi_banachize_inv(a, cfg, opts):
    E, y = bd.psi_banachize_inv(_sub(a, "E0", cfg), _sub(a, "F0", cfg), _mat(a, "x"), cfg=cfg)
    return {"E": _s(E), "y": ser.matrix_to_json(y)}


def _op_tangent_to_idempotent(a, cfg, opts):
    return _m(tangent.tangent_to_idempotent(_tangent(a, "tangent", cfg)))


def _op_idempotent_to_tangent(a, cfg, opts):
    return ser.tangent_to_json(tangent.idempotent_to_tangent(_mat(a, "Q"), cfg))


def _op_tangent_embed(a, cfg, opts):
    E, S = tangent.tangent_embed(_tangent(a, "tangent", cfg), cfg)
    return {"E": _s(E), "S": ser.matrix_to_json(S)}


def _op_psi_derivative(a, cfg, opts):
    t = _tangent(a, "tangent", cfg)
    return _m(tangent.psi_derivative(_sub(a, "E0", cfg), t.base, t, cfg))


def _op_nu_chart(a, cfg, opts):
    return ser.coords_to_json(tangent.nu_chart(_sub(a, "E0", cfg), _tangent(a, "tangent", cfg), cfg))


def _op_nu_chart_inv(a, cfg, opts):
    return ser.tangent_to_json(tangent.nu_chart_inv(_coords(a, cfg), cfg))


def _metric_args(a, cfg):
    E = _sub(a, "E", cfg)
    return _fiber_op(a, "S1", E), _fiber_op(a, "S2", E)


def _op_operator_metric(a, cfg, opts):
    return _m(tangent.operator_metric(*_metric_args(a, cfg), cfg))


def _op_trace_metric(a, cfg, opts):
    return {"value": ser.scalar_to_json(tangent.trace_metric(*_metric_args(a, cfg), cfg))}


def _op_pseudo_metric(a, cfg, opts):
    return {"value": ser.scalar_to_json(tangent.pseudo_metric(*_metric_args(a, cfg), _vector(a, "x"), cfg))}


def _op_orth_projector(a, cfg, opts):
    return _m(tangent.orth_projector(_sub(a, "E", cfg)))


def _op_connect(a, cfg, opts):
    path = paths.connect_idempotents(_mat(a, "Q1"), _mat(a, "Q2"), opts.steps, cfg)
    return {
        "steps": opts.steps,
        "legs": [leg.to_dict() for leg in path.legs],
        "samples": [ser.matrix_to_json(Q) for Q in path.samples],
        "residuals": path.residuals,
        "ranks": path.ranks,
    }


def _op_similarity_witness(a, cfg, opts):
    return _m(paths.similarity_witness(_mat(a, "P"), _mat(a, "Q"), cfg))


def _op_same_component(a, cfg, opts):
    return {"same_component": paths.same_component(_mat(a, "Q1"), _mat(a, "Q2"), cfg)}


def _op_gram_schmidt_rep(a, cfg, opts):
    return _m(paths.gram_schmidt_rep(_mat(a, "W"), int(_get(a, "k")), cfg))


def _op_orthonormalize(a, cfg, opts):
    return _m(kernel.orthonormalize(_mat(a, "B"), cfg))


def _op_solve(a, cfg, opts):
    return _m(kernel.solve(_mat(a, "A"), _mat(a, "B"), cfg))


def _op_rank(a, cfg, opts):
    return {"rank": kernel.rank_of(_mat(a, "A"), cfg)}


def _op_adjoint(a, cfg, opts):
    return _m(kernel.adjoint(_mat(a, "A")))


OPERATIONS = {
    "orthonormalize": (_op_orthonormalize, ["orthonormalize"]),
    "solve": (_op_solve, ["solve"]),
    "rank": (_op_rank, ["rank"]),
    "adjoint": (_op_adjoint, ["adjoint"]),
    "oblique-projector": (_op_oblique, ["c2_fixtures", "projector_roundtrip"]),
    "range": (_op_range, ["projector_roundtrip"]),
    "kernel": (_op_kernel, ["projector_roundtrip"]),
    "gap": (_op_gap, ["gap_metric"]),
    "is-complement": (_op_is_complement, ["complement_symmetry"]),
    "q-chart": (_op_q_chart, ["q_p_roundtrip"]),
    "p-chart": (_op_p_chart, ["q_p_roundtrip", "p_is_lambda_pi"]),
    "pi-chart": (_op_pi_chart, ["pi_roundtrip", "pi_antisymmetry", "pi_square_zero"]),
    "pi-chart-inv": (_op_pi_chart_inv, ["pi_roundtrip"]),
    "lambda-restrict": (_op_lambda_restrict, ["lambda_roundtrip", "p_is_lambda_pi"]),
    "lambda-extend": (_op_lambda_extend, ["lambda_roundtrip"]),
    "xi": (_op_xi, ["xi_inverse"]),
    "theta": (_op_theta, ["kappa_theta", "theta_affine", "theta_roundtrip"]),
    "theta-inv": (_op_theta_inv, ["theta_roundtrip"]),
    "mu-chart": (_op_mu_chart, ["mu_roundtrip", "c2_fixtures"]),
    "mu-chart-inv": (_op_mu_chart_inv, ["mu_roundtrip", "mu_forms_agree", "quadratic_remainder", "chart_derivative"]),
    "transition": (_op_transition, ["transition"]),
    "ad-right-inverse": (_op_ad_right_inverse, ["ad_right_inverse"]),
    "delta-projector": (_op_delta, ["delta_projector"]),
    "to-involution": (_op_to_involution, ["involution"]),
    "from-involution": (_op_from_involution, ["involution"]),
    "inv-chart": (_op_inv_chart, ["inv_chart_roundtrip"]),
    "inv-chart-inv": (_op_inv_chart_inv, ["inv_chart_roundtrip"]),
    "pair-chart": (_op_pair_chart, ["pair_chart_roundtrip"]),
    "pair-chart-inv": (_op_pair_chart_inv, ["pair_chart_roundtrip", "c2_fixtures"]),
    "fiber-add": (_op_fiber_add, ["fiber_vector_space"]),
    "fiber-scale": (_op_fiber_scale, ["fiber_vector_space"]),
    "psi-banachize": (_op_psi_banachize, ["psi_banachize"]),
    "psi-banachize-inv": (_op_psi_banachize_inv, ["psi_banachize"]),
    "orth-projector": (_op_orth_projector, ["orth_projector"]),
    "tangent-to-idempotent": (_op_tangent_to_idempotent, ["tangent_roundtrip", "tangent_affine"]),
    "idempotent-to-tangent": (_op_idempotent_to_tangent, ["tangent_roundtrip"]),
    "tangent-embed": (_op_tangent_embed, ["tangent_embed"]),
    "psi-derivative": (_op_psi_derivative, ["psi_derivative", "psi_derivative_order", "psi_linear"]),
    "nu-chart": (_op_nu_chart, ["nu_roundtrip"]),
    "nu-chart-inv": (_op_nu_chart_inv, ["nu_roundtrip"]),
    "operator-metric": (_op_operator_metric, ["operator_metric_corner"]),
    "trace-metric": (_op_trace_metric, ["trace_metric_pd", "metric_forms"]),
    "pseudo-metric": (_op_pseudo_metric, ["metric_forms"]),
    "connect-idempotents": (_op_connect, ["connect_idempotents"]),
    "similarity-witness": (_op_similarity_witness, ["similarity_witness"]),
    "same-component": (_op_same_component, ["similarity_witness"]),
    "gram-schmidt-rep": (_op_gram_schmidt_rep, ["gram_schmidt_rep"]),
}


# --------------------------------------------------------------------------
# output


def _emit(text: str, out):
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _csv(rows, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _path_csv(result) -> str:
    rows = []
    for leg_no, leg in enumerate(result["legs"]):
        first = leg["start_index"] if leg_no == 0 else leg["start_index"] + 1
        for i in range(first, leg["end_index"] + 1):
            rows.append([i, leg_no, leg["kind"], repr(result["residuals"][i]), result["ranks"][i]])
    return _csv(rows, ["index", "leg", "kind", "residual", "rank"])


def _report_csv(report) -> str:
    rows = [
        [c["name"], c["suite"], c["field"], c["instances"], c["max_residual"], c["threshold"], c["passed"]]
        for c in report["checks"]
    ]
    return _csv(rows, ["name", "suite", "field", "instances", "max_residual", "threshold", "passed"])


# --------------------------------------------------------------------------
# commands


def _config(args) -> ToleranceConfig:
    cfg = kernel.default_config()
    if args.tol is not None:
        if not args.tol > 0:
            raise UsageError("--tol must be positive")
        cfg = cfg.with_residual_tol(args.tol)
    return cfg


def cmd_gen(args) -> int:
    cfg = _config(args)
    if args.dim < 2:
        raise UsageError("--dim must be at least 2")
    if not 1 <= args.rank <= args.dim - 1:
        raise UsageError("--rank must lie in 1..dim-1")
    if args.kind == "tangent" and args.field != "R":
        raise UsageError("tangent vectors are generated over the real field only")
    rng = np.random.default_rng(args.seed)
    n, k = args.dim, args.rank
    if args.kind == "subspace":
        out = ser.subspace_to_json(sampling.random_subspace(rng, n, k, args.field, cfg))
    elif args.kind == "idempotent":
        Q = sampling.random_idempotent(rng, n, k, args.field, cfg)
        bd.check_idempotent(Q, cfg)
        out = {"mat": ser.matrix_to_json(Q), "residual": bd.idempotency_residual(Q)}
    else:
        t = sampling.random_tangent(rng, n, k, cfg)
        comp = t.complement
        if opnorm(adjoint(comp.basis) @ t.base.basis) > cfg.residual_tol:
            raise GrassbundleError("base and target of the tangent vector are not orthogonal")
        out = ser.tangent_to_json(t)
        out["target"] = ser.subspace_to_json(comp)
    _emit(_dumps(out), args.out)
    return 0


def _read_input(args):
    try:
        if args.input and args.input != "-":
            with open(args.input, encoding="utf-8") as fh:
                return json.load(fh)
        return json.load(sys.stdin)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read JSON input: {exc}") from exc


def cmd_compute(args) -> int:
    cfg = _config(args)
    if args.steps < 2:
        raise UsageError("--steps must be at least 2")
    handler, _ = OPERATIONS[args.op]
    inputs = _read_input(args)
    if not isinstance(inputs, dict):
        raise UsageError("input must be a JSON object")
    try:
        result = handler(inputs, cfg, args)
    except (KeyError, TypeError) as exc:
        raise UsageError(f"malformed input: {exc}") from exc
    if args.format == "csv":
        if args.op != "connect-idempotents":
            raise UsageError("--format csv is only available for connect-idempotents")
        _emit(_path_csv(result), args.out)
    else:
        _emit(_dumps(result), args.out)
    return 0


def cmd_verify(args) -> int:
    cfg = _config(args)
    if args.trials < 1:
        raise UsageError("--trials must be at least 1")
    try:
        dims = sampling.parse_dims(args.dims)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    fixture = []
    if args.fixture:
        try:
            with open(args.fixture, encoding="utf-8") as fh:
                raw = json.load(fh)
            fixture = [ser.idempotent_from_json(q) for q in raw["idempotents"]]
        except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise UsageError(f"cannot read fixture: {exc}") from exc
    fields = (args.field,) if args.field else ("R", "C")
    report = verify.run_suite(args.suite, args.trials, dims, args.seed, fields, cfg, fixture)
    text = _report_csv(report) if args.format == "csv" else _dumps(report)
    _emit(text, args.out)
    for c in report["checks"]:
        if not c["passed"]:
            print(f"FAILED {c['name']} [{c['field']}]: max residual {c['max_residual']} > {c['threshold']}", file=sys.stderr)
    return 0 if report["passed"] else EXIT_FAILED


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="grassbundle", description="Subspaces, idempotents and their charts.")
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=None, help="residual tolerance (overrides GRASSBUNDLE_TOL)")
    common.add_argument("--out", default=None, help="write output to this file instead of stdout")

    g = sub.add_parser("gen", parents=[common], help="random subspace, idempotent or tangent vector")
    g.add_argument("kind", choices=["subspace", "idempotent", "tangent"])
    g.add_argument("--dim", type=int, required=True)
    g.add_argument("--rank", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--field", choices=["R", "C"], default="R")
    g.set_defaults(func=cmd_gen)

    c = sub.add_parser("compute", parents=[common], help="run one operation on JSON input")
    c.add_argument("op", choices=sorted(OPERATIONS))
    c.add_argument("--input", default=None, help="JSON input file (default: stdin)")
    c.add_argument("--steps", type=int, default=64, help="samples per path leg")
    c.add_argument("--format", choices=["json", "csv"], default="json")
    c.set_defaults(func=cmd_compute)

    v = sub.add_parser("verify", parents=[common], help="check invariants on random instances")
    v.add_argument("suite", choices=[*verify.SUITES, "all"])
    v.add_argument("--trials", type=int, default=100)
    v.add_argument("--dims", default="2..6")
    v.add_argument("--seed", type=int, default=1)
    v.add_argument("--field", choices=["R", "C"], default=None, help="restrict to one field")
    v.add_argument("--fixture", default=None, help='JSON file {"idempotents": [matrix, ...]} checked in the bundle suite')
    v.add_argument("--format", choices=["json", "csv"], default="json")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"grassbundle: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (GrassbundleError, ValueError, RuntimeError) as exc:
        code = exit_code_for(exc)
        error = {"error": {"type": type(exc).__name__, "message": str(exc), "exit_code": code}}
        sys.stdout.write(_dumps(error))
        return code


if __name__ == "__main__":
    sys.exit(main())
