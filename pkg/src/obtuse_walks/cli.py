"""Command-line front end: one binary, JSON in, JSON out.

Every invocation prints a machine-readable report to stdout (suppressed by
--quiet) and writes artifacts to ``-o`` paths.  Exit codes: 0 success or
positive verdict, 1 semantic failure (validation or detection negative),
2 malformed input or domain error, 3 resource guard.  Fixed seeds give
byte-identical artifacts and reports up to the wall-time field.
"""

import argparse
import hashlib
import math
import sys
import time
import warnings
from dataclasses import asdict

import numpy as np

from . import serialize
from .classicality import (
    bernoulli_block_unitary,
    build_block_unitary,
    detect_classical,
)
from .errors import DomainError, GuardError, MalformedInputError
from .linalg import random_unitary
from .noise import multiplication_operator, path_basis_unitary
from .obtuse import generate_obtuse, validate_obtuse
from .tensor3 import check_sesqui_symmetry, compute_tensor, pointwise_product_residual
from .walk import exact_distribution, simulate, verify_block_diagonalization

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_MALFORMED = 2
EXIT_GUARD = 3


def _digest(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _jsonable(value):
    """Replace non-finite floats so reports stay strict JSON."""
    if isinstance(value, float):
        return value if math.isfinite(value) else repr(value)
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def _report(command, args, inputs=(), tolerances=None, passed=None, **details):
    report = {
        "schema": serialize.SCHEMA_VERSION,
        "command": command,
        "inputs": {str(p): _digest(p) for p in inputs},
    }
    if tolerances:
        report["tolerances"] = tolerances
    if passed is not None:
        report["passed"] = bool(passed)
    report.update(details)
    return report


def _tol(args, default):
    return default if args.tol is None else args.tol


def _parse_probs(text):
    try:
        return [float(x) for x in text.split(",")]
    except ValueError as exc:
        raise MalformedInputError(f"cannot parse probabilities {text!r}") from exc


# --- obtuse -----------------------------------------------------------------

def _cmd_obtuse_gen(args):
    probs = _parse_probs(args.probs) if args.probs else None
    system = generate_obtuse(args.dim, probs, args.seed)
    serialize.save_obtuse_system(system, args.output, args.json_indent)
    report = _report(
        "obtuse gen",
        args,
        passed=True,
        seed=args.seed,
        dim=args.dim,
        output=args.output,
        residuals=asdict(validate_obtuse(system)),
    )
    return EXIT_OK, report

def _cmd_obtuse_check(args):
    system = serialize.load_obtuse_system(args.system)
    tol = _tol(args, 1e-10)
    verdict = validate_obtuse(system, tol)
    report = _report(
        "obtuse check",
        args,
        inputs=[args.system],
        tolerances={"tol": tol},
        passed=verdict.passed,
        residuals=asdict(verdict),
    )
    return (EXIT_OK if verdict.passed else EXIT_FAIL), report


# --- tensor -----------------------------------------------------------------

def _cmd_tensor_compute(args):
    system = serialize.load_obtuse_system(args.system)
    tensor = compute_tensor(system)
    serialize.save_tensor(tensor, args.output, args.json_indent)
    report = _report(
        "tensor compute",
        args,
        inputs=[args.system],
        passed=True,
        output=args.output,
        residuals={"pointwise_product": pointwise_product_residual(system, tensor)},
    )
    return EXIT_OK, report

def _cmd_tensor_check(args):
    tensor = serialize.load_tensor(args.tensor)
    tol = _tol(args, 1e-10)
    verdict = check_sesqui_symmetry(tensor, tol)
    report = _report(
        "tensor check",
        args,
        inputs=[args.tensor],
        tolerances={"tol": tol},
        passed=verdict.passed,
        residuals=asdict(verdict),
    )
    return (EXIT_OK if verdict.passed else EXIT_FAIL), report


# --- noise ------------------------------------------------------------------

def _cmd_noise_repr(args):
    system = serialize.load_obtuse_system(args.system)
    tensor = compute_tensor(system)
    notices = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        operator = multiplication_operator(system, tensor, args.coord)
        notices = [str(w.message) for w in caught]
    serialize.save_matrix(operator, args.output, args.json_indent)
    report = _report(
        "noise repr",
        args,
        inputs=[args.system],
        passed=True,
        coordinate=args.coord,
        output=args.output,
        notices=notices,
    )
    return EXIT_OK, report

def _cmd_noise_diag(args):
    system = serialize.load_obtuse_system(args.system)
    tensor = compute_tensor(system)
    tol = _tol(args, 1e-10)
    table = system.coordinate_table()
    rows = []
    worst = 0.0
    for coord in range(1, system.dim + 1):
        operator = multiplication_operator(system, tensor, coord)
        spectrum = np.sort(np.linalg.eigvalsh(operator))
        expected = np.sort(table[coord])
        gap = float(np.abs(spectrum - expected).max())
        worst = max(worst, gap)
        rows.append(
            {
                "coordinate": coord,
                "spectrum": [float(x) for x in spectrum],
                "values": [float(x) for x in expected],
                "max_abs_diff": gap,
            }
        )
    passed = worst <= tol
    report = _report(
        "noise diag",
        args,
        inputs=[args.system],
        tolerances={"tol": tol},
        passed=passed,
        residuals={"spectrum_vs_values": worst},
        coordinates=rows,
    )
    return (EXIT_OK if passed else EXIT_FAIL), report


# --- u ----------------------------------------------------------------------

def _cmd_u_build(args):
    system = serialize.load_obtuse_system(args.system)
    if len(args.unitaries) != system.dim + 1:
        raise MalformedInputError(
            f"need {system.dim + 1} step-unitary files, got {len(args.unitaries)}"
        )
    w = [serialize.load_matrix(path) for path in args.unitaries]
    u = build_block_unitary(w, system)
    serialize.save_block_unitary(u, args.output, args.json_indent)
    report = _report(
        "u build",
        args,
        inputs=[args.system, *args.unitaries],
        passed=True,
        output=args.output,
        residuals={"unitarity": u.unitarity_residual()},
    )
    return EXIT_OK, report

def _cmd_u_detect(args):
    u = serialize.load_block_unitary(args.unitary)
    system = serialize.load_obtuse_system(args.system)
    tol = _tol(args, 1e-8)
    result = detect_classical(u, system, tol)
    if result.accepted and args.output:
        serialize.save_classical_form(result.form, args.output, args.json_indent)
    residuals = {
        "input_unitarity": result.input_unitarity_residual,
        "reconstruction": result.reconstruction_residual,
        "w_unitarity": result.w_unitarity_residual,
    }
    if result.accepted:
        residuals["recovered_w_unitarity"] = [
            float(np.linalg.norm(np.conj(w).T @ w - np.eye(u.system_dim)))
            for w in result.form.step_unitaries
        ]
    report = _report(
        "u detect",
        args,
        inputs=[args.unitary, args.system],
        tolerances={"tol": tol, "structural_tol": result.structural_tol},
        passed=result.accepted,
        residuals=residuals,
        failed_check=result.failed_check,
        output=args.output if (result.accepted and args.output) else None,
    )
    return (EXIT_OK if result.accepted else EXIT_FAIL), report

def _cmd_u_bernoulli(args):
    w0 = serialize.load_matrix(args.w0)
    w1 = serialize.load_matrix(args.w1)
    u = bernoulli_block_unitary(w0, w1, args.p)
    serialize.save_block_unitary(u, args.output, args.json_indent)
    report = _report(
        "u bernoulli",
        args,
        inputs=[args.w0, args.w1],
        passed=True,
        p=args.p,
        output=args.output,
        residuals={"unitarity": u.unitarity_residual()},
    )
    return EXIT_OK, report


# --- walk -------------------------------------------------------------------

def _cmd_walk_simulate(args):
    form = serialize.load_classical_form(args.form)
    trajectories = [
        simulate(form, args.steps, args.seed + offset) for offset in range(args.trajectories)
    ]
    if args.trajectories == 1:
        obj = serialize.trajectory_to_obj(trajectories[0], include_states=args.full)
    else:
        obj = {
            "schema": serialize.SCHEMA_VERSION,
            "trajectories": [
                serialize.trajectory_to_obj(t, include_states=args.full) for t in trajectories
            ],
        }
    serialize.dump_json(obj, args.output, args.json_indent)
    report = _report(
        "walk simulate",
        args,
        inputs=[args.form],
        passed=True,
        steps=args.steps,
        seed=args.seed,
        trajectories=args.trajectories,
        output=args.output,
        residuals={
            "max_unitarity_drift": max(t.max_unitarity_drift() for t in trajectories)
        },
    )
    return EXIT_OK, report

def _cmd_walk_dist(args):
    form = serialize.load_classical_form(args.form)
    dist = exact_distribution(form, args.steps)
    serialize.save_distribution(dist, args.output, args.json_indent)
    report = _report(
        "walk dist",
        args,
        inputs=[args.form],
        passed=True,
        steps=args.steps,
        atoms=dist.n_atoms,
        total_probability=float(sum(p for _, p in dist.atoms)),
        output=args.output,
    )
    return EXIT_OK, report

def _cmd_walk_verify(args):
    u = serialize.load_block_unitary(args.unitary)
    system = serialize.load_obtuse_system(args.system)
    tol = _tol(args, 1e-9)
    detection = detect_classical(u, system)
    if not detection.accepted:
        report = _report(
            "walk verify",
            args,
            inputs=[args.unitary, args.system],
            tolerances={"tol": tol},
            passed=False,
            failed_check=detection.failed_check,
            residuals={
                "input_unitarity": detection.input_unitarity_residual,
                "reconstruction": detection.reconstruction_residual,
                "w_unitarity": detection.w_unitarity_residual,
            },
        )
        return EXIT_FAIL, report
    verdict = verify_block_diagonalization(u, detection.form, args.steps, tol)
    report = _report(
        "walk verify",
        args,
        inputs=[args.unitary, args.system],
        tolerances={"tol": tol},
        passed=verdict.passed,
        steps=args.steps,
        residuals={
            "off_diagonal_mass": verdict.off_diagonal_mass,
            "block_vs_word_products": verdict.block_residual,
        },
    )
    return (EXIT_OK if verdict.passed else EXIT_FAIL), report


# --- demo -------------------------------------------------------------------

def pipeline_demo(p, seed, system_dim=2, walk_steps=8, verify_steps=3):
    """End-to-end two-outcome run: generate, build both ways, detect,
    simulate, verify; returns (exit_code, consolidated report).

    Raises DomainError for p outside (0, 1).
    """
    if not 0.0 < p < 1.0:
        raise DomainError(f"p must lie in (0, 1), got {p!r}")
    q = 1.0 - p
    system = generate_obtuse(1, (p, q), seed)
    tensor = compute_tensor(system)
    c_p = float(tensor.coeffs[1, 1, 1])
    c_p_closed_form = (q - p) / math.sqrt(p * q)

    rng = np.random.default_rng(seed)
    w = [random_unitary(system_dim, rng), random_unitary(system_dim, rng)]
    u_generic = build_block_unitary(w, system)
    u_explicit = bernoulli_block_unitary(w[0], w[1], p)
    construction_gap = float(
        max(
            np.linalg.norm(u_generic.blocks[i, j] - u_explicit.blocks[i, j])
            for i in range(2)
            for j in range(2)
        )
    )

    detection = detect_classical(u_generic, system)
    recovery_gap = float("inf")
    drift = float("inf")
    verify_report = None
    if detection.accepted:
        recovery_gap = float(
            max(
                np.linalg.norm(detection.form.step_unitaries[l] - w[l])
                for l in range(2)
            )
        )
        trajectory = simulate(detection.form, walk_steps, seed)
        drift = trajectory.max_unitarity_drift()
        verify_report = verify_block_diagonalization(u_generic, detection.form, verify_steps)

    checks = {
        "tensor_matches_closed_form": abs(c_p - c_p_closed_form) <= 1e-12,
        "explicit_matches_generic": construction_gap <= 1e-12,
        "detected_classical": detection.accepted,
        "step_unitaries_recovered": recovery_gap <= 1e-9,
        "trajectory_unitary": drift <= walk_steps * 1e-12,
        "block_diagonalization": bool(verify_report and verify_report.passed),
    }
    passed = all(checks.values())
    report = {
        "schema": serialize.SCHEMA_VERSION,
        "command": "demo",
        "passed": passed,
        "p": p,
        "seed": seed,
        "c_p": c_p,
        "checks": checks,
        "residuals": {
            "c_p_vs_closed_form": abs(c_p - c_p_closed_form),
            "explicit_vs_generic": construction_gap,
            "w_recovery": recovery_gap,
            "trajectory_drift": drift,
            "off_diagonal_mass": verify_report.off_diagonal_mass if verify_report else None,
            "block_vs_word_products": verify_report.block_residual if verify_report else None,
        },
    }
    return (EXIT_OK if passed else EXIT_FAIL), report

def _cmd_demo(args):
    return pipeline_demo(args.p, args.seed)


# --- parser and dispatch ----------------------------------------------------

def _build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=None, help="override the check tolerance")
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument(
        "--json-indent", type=int, default=2, help="indent for JSON output; negative = compact"
    )
    common.add_argument("--quiet", action="store_true", help="suppress the stdout report")

    parser = argparse.ArgumentParser(
        prog="obtuse-walks",
        description="Obtuse random variables, product tensors, noise operators, "
        "classically driven block unitaries, and unitary random walks.",
    )
    groups = parser.add_subparsers(dest="group", required=True)

    obtuse = groups.add_parser("obtuse", help="generate and validate obtuse systems")
    sub = obtuse.add_subparsers(dest="command", required=True)
    gen = sub.add_parser("gen", parents=[common], help="generate a system")
    gen.add_argument("--dim", type=int, required=True)
    gen.add_argument("--probs", type=str, default=None, help="comma-separated probabilities")
    gen.add_argument("-o", "--output", required=True)
    gen.set_defaults(handler=_cmd_obtuse_gen)
    check = sub.add_parser("check", parents=[common], help="validate a system file")
    check.add_argument("system")
    check.set_defaults(handler=_cmd_obtuse_check)

    tensor = groups.add_parser("tensor", help="product 3-tensors")
    sub = tensor.add_subparsers(dest="command", required=True)
    compute = sub.add_parser("compute", parents=[common], help="compute the tensor of a system")
    compute.add_argument("system")
    compute.add_argument("-o", "--output", required=True)
    compute.set_defaults(handler=_cmd_tensor_compute)
    check = sub.add_parser("check", parents=[common], help="check sesqui-symmetry")
    check.add_argument("tensor")
    check.set_defaults(handler=_cmd_tensor_check)

    noise = groups.add_parser("noise", help="multiplication operators on one site")
    sub = noise.add_subparsers(dest="command", required=True)
    repr_cmd = sub.add_parser("repr", parents=[common], help="matrix of one coordinate")
    repr_cmd.add_argument("system")
    repr_cmd.add_argument("--coord", type=int, required=True)
    repr_cmd.add_argument("-o", "--output", required=True)
    repr_cmd.set_defaults(handler=_cmd_noise_repr)
    diag = sub.add_parser("diag", parents=[common], help="spectra versus value tables")
    diag.add_argument("system")
    diag.set_defaults(handler=_cmd_noise_diag)

    u = groups.add_parser("u", help="block unitaries and classical forms")
    sub = u.add_subparsers(dest="command", required=True)
    build = sub.add_parser("build", parents=[common], help="assemble U from step unitaries")
    build.add_argument("system")
    build.add_argument("unitaries", nargs="+", help="N+1 matrix files")
    build.add_argument("-o", "--output", required=True)
    build.set_defaults(handler=_cmd_u_build)
    detect = sub.add_parser("detect", parents=[common], help="extract the classical form")
    detect.add_argument("unitary")
    detect.add_argument("system")
    detect.add_argument("-o", "--output", default=None, help="write the form when accepted")
    detect.set_defaults(handler=_cmd_u_detect)
    bernoulli = sub.add_parser("bernoulli", parents=[common], help="explicit two-outcome U")
    bernoulli.add_argument("--p", type=float, required=True)
    bernoulli.add_argument("w0")
    bernoulli.add_argument("w1")
    bernoulli.add_argument("-o", "--output", required=True)
    bernoulli.set_defaults(handler=_cmd_u_bernoulli)

    walk = groups.add_parser("walk", help="simulate and verify unitary walks")
    sub = walk.add_subparsers(dest="command", required=True)
    sim = sub.add_parser("simulate", parents=[common], help="sample trajectories")
    sim.add_argument("form")
    sim.add_argument("--steps", type=int, required=True)
    sim.add_argument("--trajectories", type=int, default=1)
    sim.add_argument("--full", action="store_true", help="record intermediate states")
    sim.add_argument("-o", "--output", required=True)
    sim.set_defaults(handler=_cmd_walk_simulate)
    dist = sub.add_parser("dist", parents=[common], help="exact endpoint distribution")
    dist.add_argument("form")
    dist.add_argument("--steps", type=int, required=True)
    dist.add_argument("-o", "--output", required=True)
    dist.set_defaults(handler=_cmd_walk_dist)
    verify = sub.add_parser("verify", parents=[common], help="chain/walk equivalence")
    verify.add_argument("unitary")
    verify.add_argument("system")
    verify.add_argument("--steps", type=int, required=True)
    verify.set_defaults(handler=_cmd_walk_verify)

    demo = groups.add_parser("demo", parents=[common], help="end-to-end two-outcome pipeline")
    demo.add_argument("--p", type=float, required=True)
    demo.set_defaults(handler=_cmd_demo)

    return parser


def dispatch(argv=None):
    """Parse arguments, run the command, print the JSON report, return the exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_:  # argparse already printed usage/help
        code = exit_.code or 0
        return code if isinstance(code, int) else EXIT_MALFORMED

    start = time.perf_counter()
    quiet = getattr(args, "quiet", False)
    indent = getattr(args, "json_indent", 2)
    try:
        code, report = args.handler(args)
    except MalformedInputError as exc:
        code, report = EXIT_MALFORMED, {"schema": serialize.SCHEMA_VERSION, "error": str(exc)}
    except DomainError as exc:
        code, report = EXIT_MALFORMED, {"schema": serialize.SCHEMA_VERSION, "error": str(exc)}
    except GuardError as exc:
        code, report = EXIT_GUARD, {"schema": serialize.SCHEMA_VERSION, "error": str(exc)}
    report["wall_time_s"] = time.perf_counter() - start
    if not quiet:
        serialize_indent = None if indent is not None and indent < 0 else indent
        import json

        print(json.dumps(_jsonable(report), indent=serialize_indent))
    return code


def main():
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
