"""Command line entry point.

Exit codes: 0 success, 1 semantic validation failure, 2 numerical
non-convergence, 64 usage errors (bad flags, malformed files).  Errors are
mirrored as one-line JSON on stderr for machine consumption.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import catalog
from .channels import (
    dual_apply_nonselective,
    dual_apply_selective,
    selective_outcome_labels,
)
from .experiment import SweepSpec, run_fig2_sweep, run_sweep
from .linalg import ValidationError
from .monotones import (
    CsConfig,
    c_l1,
    c_linf,
    distance_monotone,
)
from .povm import is_incoherent, povm_to_json, require_valid, validate
from .robustness import RobustnessProblem, robustness
from .tomography import (
    coherence_from_counts,
    project_psd,
    record_from_json,
    reconstruct_direct,
    sample_record,
)

SCHEMA = "povm-coherence/v1"

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NO_CONVERGENCE = 2
EXIT_USAGE = 64


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit 2; the CLI uses 64
        raise _UsageError(message)


def _emit(payload: dict):
    print(json.dumps(payload, indent=2))


def _fail(kind: str, message: str, code: int) -> int:
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)
    return code


def emit_plot_data(rows, fmt: str, path: str):
    """Write a table of dataclass rows as CSV or versioned JSON."""
    rows = list(rows)
    if not rows:
        raise ValidationError("refusing to emit an empty table")
    columns = [f.name for f in dataclasses.fields(rows[0])]
    table = [[getattr(row, c) for c in columns] for row in rows]
    out = Path(path)
    if fmt == "csv":
        with out.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(columns)
            for row in table:
                writer.writerow(["" if v is None else v for v in row])
    elif fmt == "json":
        out.write_text(
            json.dumps(
                {"schema": SCHEMA, "columns": columns, "rows": table}, indent=2
            )
            + "\n"
        )
    else:
        raise ValidationError(f"unknown format {fmt!r}")


def _load_povm(source: str):
    try:
        return catalog.load_povm(source)
    except (json.JSONDecodeError, ValidationError) as exc:
        raise _UsageError(f"cannot load POVM from {source!r}: {exc}") from exc


def _load_channel(source: str, dim):
    try:
        return catalog.load_channel(source, dim)
    except (json.JSONDecodeError, ValidationError, ValueError) as exc:
        raise _UsageError(f"cannot load channel from {source!r}: {exc}") from exc


def _check_distinct(*paths):
    given = [p for p in paths if p]
    if len(given) != len(set(given)):
        raise _UsageError("input and output paths must be distinct")


def build_parser() -> _Parser:
    parser = _Parser(prog="povmcoh", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_val = sub.add_parser("validate", help="check a POVM file or builtin")
    p_val.add_argument("--povm", required=True)
    p_val.add_argument("--tol", type=float, default=1e-8)

    p_mono = sub.add_parser("monotone", help="coherence monotones")
    p_mono.add_argument("--povm", required=True)
    p_mono.add_argument("--which", choices=("linf", "l1", "cs", "tv"), required=True)
    p_mono.add_argument("--gap-tol", type=float, default=1e-3)
    p_mono.add_argument("--seed", type=int, default=0)

    p_rob = sub.add_parser("robustness", help="robustness SDP with certificates")
    p_rob.add_argument("--povm", required=True)
    p_rob.add_argument("--tol", type=float, default=1e-7)
    p_rob.add_argument("--max-iter", type=int, default=200_000)
    p_rob.add_argument("--emit-witness", action="store_true")

    p_chan = sub.add_parser("channel", help="channel operations")
    chan_sub = p_chan.add_subparsers(dest="channel_command", required=True)
    p_apply = chan_sub.add_parser("apply", help="dual action on a measurement")
    p_apply.add_argument("--povm", required=True)
    p_apply.add_argument("--channel", required=True)
    p_apply.add_argument("--selective", action="store_true")
    p_apply.add_argument("--out")

    p_tomo = sub.add_parser("tomo", help="detector tomography")
    tomo_sub = p_tomo.add_subparsers(dest="tomo_command", required=True)
    p_rec = tomo_sub.add_parser("reconstruct", help="reconstruct from counts")
    p_rec.add_argument("--counts", required=True)
    p_rec.add_argument("--project-psd", action="store_true")
    p_rec.add_argument("--out")

    p_sim = sub.add_parser("simulate", help="simulated experiments")
    sim_sub = p_sim.add_subparsers(dest="simulate_command", required=True)
    p_sweep = sim_sub.add_parser("sweep", help="direction sweep")
    p_sweep.add_argument("--path", choices=("p1", "p2", "p3"), default="p1")
    p_sweep.add_argument("--shots", type=int, default=8192)
    p_sweep.add_argument("--runs", type=int, default=10)
    p_sweep.add_argument("--noise")
    p_sweep.add_argument("--seed", type=int, default=0)
    p_sweep.add_argument("--exact", action="store_true")
    p_sweep.add_argument("--jobs", type=int, default=1)
    p_sweep.add_argument("--out", required=True)
    p_sweep.add_argument("--format", choices=("csv", "json"), default="csv")
    p_sweep.add_argument("--counts-out", help="directory for per-direction counts")
    p_fig2 = sim_sub.add_parser("fig2", help="qutrit damping sweep")
    p_fig2.add_argument("--grid", type=int, default=21)
    p_fig2.add_argument("--tol", type=float, default=1e-7)
    p_fig2.add_argument("--out", required=True)
    p_fig2.add_argument("--format", choices=("csv", "json"), default="csv")

    return parser


def _cmd_validate(args) -> int:
    povm = _load_povm(args.povm)
    report = validate(povm, args.tol)
    _emit(
        {
            "schema": SCHEMA,
            "valid": report.valid,
            "incoherent": is_incoherent(povm, args.tol) if report.valid else None,
            "psd_margins": [float(x) for x in report.psd_margins],
            "completeness_residual": report.completeness_residual,
            "tol": report.tol,
        }
    )
    return EXIT_OK if report.valid else EXIT_INVALID


def _cmd_monotone(args) -> int:
    povm = require_valid(_load_povm(args.povm))
    if args.which == "linf":
        result = c_linf(povm)
        _emit({"schema": SCHEMA, "which": "linf", "value": result.value,
               "argmax_pair": list(result.pair)})
        return EXIT_OK
    if args.which == "l1":
        _emit({"schema": SCHEMA, "which": "l1", "value": c_l1(povm)})
        return EXIT_OK
    distance = "relative-entropy" if args.which == "cs" else "total-variation"
    config = CsConfig(gap_tol=args.gap_tol, seed=args.seed)
    est = distance_monotone(povm, distance, config)
    _emit(
        {
            "schema": SCHEMA,
            "which": args.which,
            "bracket": {"lower": est.lower, "upper": est.upper},
            "iterations": est.iterations,
            "converged": est.converged,
        }
    )
    return EXIT_OK if est.converged else EXIT_NO_CONVERGENCE


def _cmd_robustness(args) -> int:
    povm = require_valid(_load_povm(args.povm))
    problem = RobustnessProblem(
        povm, tolerance=args.tol, max_iterations=args.max_iter
    )
    sol = robustness(problem)
    payload = {
        "schema": SCHEMA,
        "value": sol.value,
        "gap": sol.duality_gap,
        "status": sol.status,
        "iterations": sol.iterations,
    }
    if args.emit_witness:
        payload["primal_diagonals"] = [[float(x) for x in row] for row in sol.primal_diagonals]
        payload["sigma"] = [float(x) for x in sol.sigma]
        payload["dual_matrices"] = [
            [[[float(v.real), float(v.imag)] for v in row] for row in z]
            for z in sol.dual_matrices
        ]
    _emit(payload)
    return EXIT_OK if sol.status == "optimal" else EXIT_NO_CONVERGENCE


def _cmd_channel_apply(args) -> int:
    _check_distinct(args.povm, args.channel, args.out)
    povm = require_valid(_load_povm(args.povm))
    channel = _load_channel(args.channel, povm.dim)
    if args.selective:
        out_povm = dual_apply_selective(channel, povm)
        labels = selective_outcome_labels(channel, povm)
    else:
        out_povm = dual_apply_nonselective(channel, povm)
        labels = [str(a) for a in range(povm.n_outcomes)]
    payload = povm_to_json(out_povm)
    payload["outcome_labels"] = labels
    payload["schema"] = SCHEMA
    if args.out:
        Path(args.out).write_text(json.dumps(payload, indent=2) + "\n")
    else:
        _emit(payload)
    return EXIT_OK


def _cmd_tomo_reconstruct(args) -> int:
    _check_distinct(args.counts, args.out)
    try:
        record = record_from_json(json.loads(Path(args.counts).read_text()))
    except (OSError, json.JSONDecodeError, ValidationError) as exc:
        raise _UsageError(f"cannot load counts from {args.counts!r}: {exc}") from exc
    report = coherence_from_counts(record)
    result = report.reconstruction
    povm_out = project_psd(result) if args.project_psd else result.povm
    payload = {
        "schema": SCHEMA,
        "projected": bool(args.project_psd),
        "psd_margins": [float(x) for x in result.psd_margins],
        "completeness_residual": result.completeness_residual,
        "psd_ok": result.psd_ok,
        "coherence": {
            name: {"mean": q.mean, "std": q.std, "stderr": q.stderr}
            for name, q in (
                ("c_linf", report.c_linf),
                ("c_l1_half", report.c_l1_half),
                ("robustness", report.robustness_value),
            )
        },
        "povm": povm_to_json(povm_out),
    }
    if args.out:
        Path(args.out).write_text(json.dumps(payload, indent=2) + "\n")
    else:
        _emit(payload)
    return EXIT_OK


def _cmd_simulate_sweep(args) -> int:
    _check_distinct(args.out, args.counts_out)
    noise = _load_channel(args.noise, 2) if args.noise else None
    spec = SweepSpec(
        path=args.path,
        shots=args.shots,
        runs=args.runs,
        noise=noise,
        seed=args.seed,
        exact=args.exact,
    )
    rows = run_sweep(spec)
    emit_plot_data(rows, args.format, args.out)
    if args.counts_out and not args.exact:
        _write_sweep_counts(spec, Path(args.counts_out))
    _emit({"schema": SCHEMA, "rows": len(rows), "out": args.out})
    return EXIT_OK


def _write_sweep_counts(spec: SweepSpec, directory: Path):
    from .experiment import sweep_directions, z_theta_phi
    from .tomography import record_to_json

    directory.mkdir(parents=True, exist_ok=True)
    for index, direction in enumerate(sweep_directions(spec)):
        record = sample_record(
            z_theta_phi(direction),
            shots=spec.shots,
            runs=spec.runs,
            seed=(spec.seed, index),
            noise=spec.noise,
        )
        payload = record_to_json(record)
        payload["direction"] = {"theta": direction.theta, "phi": direction.phi}
        (directory / f"counts_{index:03d}.json").write_text(
            json.dumps(payload, indent=2) + "\n"
        )


def _cmd_simulate_fig2(args) -> int:
    if args.grid < 2:
        raise _UsageError("--grid must be at least 2")
    gammas = np.linspace(0.0, 1.0, args.grid)
    rows = run_fig2_sweep(gammas, sdp_tol=args.tol)
    emit_plot_data(rows, args.format, args.out)
    _emit({"schema": SCHEMA, "rows": len(rows), "out": args.out})
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "validate":
            return _cmd_validate(args)
        if args.command == "monotone":
            return _cmd_monotone(args)
        if args.command == "robustness":
            return _cmd_robustness(args)
        if args.command == "channel":
            return _cmd_channel_apply(args)
        if args.command == "tomo":
            return _cmd_tomo_reconstruct(args)
        if args.command == "simulate":
            if args.simulate_command == "sweep":
                return _cmd_simulate_sweep(args)
            return _cmd_simulate_fig2(args)
        raise _UsageError(f"unknown command {args.command!r}")
    except _UsageError as exc:
        return _fail("usage", str(exc), EXIT_USAGE)
    except ValidationError as exc:
        return _fail("validation", str(exc), EXIT_INVALID)
    except OSError as exc:
        return _fail("io", str(exc), EXIT_INVALID)


if __name__ == "__main__":
    sys.exit(main())
