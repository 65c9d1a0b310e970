"""Command-line front end: `pbrkit <subcommand> ...`.

Exit codes: 0 success (for verify: overlap_zero), 1 validation or input
error (error JSON on stderr), 2 hypotheses_not_met, 3 witness_found.
Output goes to --out, else to $PBRKIT_OUTPUT_DIR/<subcommand>.<ext> when
that variable is set, else to stdout.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path
from typing import Sequence

from . import __version__
from .antidistinguish import (
    OverlapMismatchError,
    SearchOptions,
    antidistinguish,
    verify_antidistinguishing,
)
from .lp import COMPAT_FLOOR, ROUNDS, check_lp_model, max_overlap_curve
from .nogo import HYPOTHESES_NOT_MET, OVERLAP_ZERO, WITNESS_FOUND, ZERO_TOL, theorem1_check, theorem1_check_local, theorem2_check
from .ontic import ModelValidationError, MissingPairError, StructureError, joint_preparations, load_model, predicted_vector
from .quantum import (
    DimensionError,
    Measurement,
    MeasurementValidationError,
    PureState,
    StateValidationError,
    born_vector,
    helstrom_from_overlap2,
    qubit,
)
from .sim import DeviceConfig, VerificationError, simulate_model, simulate_quantum
from .zoo import PHI, PSI, model_zoo

OUTPUT_DIR_ENV = "PBRKIT_OUTPUT_DIR"
EXIT_OK, EXIT_INVALID, EXIT_HYPOTHESES, EXIT_WITNESS = 0, 1, 2, 3
STATUS_EXIT = {OVERLAP_ZERO: EXIT_OK, HYPOTHESES_NOT_MET: EXIT_HYPOTHESES, WITNESS_FOUND: EXIT_WITNESS}
VALIDATION_ERRORS = (
    ValueError,
    KeyError,
    OSError,
    json.JSONDecodeError,
    ModelValidationError,
    MissingPairError,
    StructureError,
    MeasurementValidationError,
    StateValidationError,
    DimensionError,
)


class CliError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    """Usage errors exit 1 with error JSON; argparse's own code 2 is taken by verify."""

    def error(self, message: str) -> None:
        sys.stderr.write(json.dumps({"error": "UsageError", "message": message, "command": self.prog}) + "\n")
        raise SystemExit(EXIT_INVALID)


def _metadata(command: str, **extra) -> dict:
    return {"tool": "pbrkit", "version": __version__, "command": command, **extra}


def _g17(x: float) -> str:
    return f"{x:.17g}"


def _emit(text: str, args: argparse.Namespace, ext: str) -> None:
    target = args.out
    if target is None and os.environ.get(OUTPUT_DIR_ENV):
        target = Path(os.environ[OUTPUT_DIR_ENV]) / f"{args.command}.{ext}"
    if target is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
        return
    target = Path(target)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(text if text.endswith("\n") else text + "\n")


def _dump(obj: dict) -> str:
    # json writes the shortest repr that round-trips each double exactly
    return json.dumps(obj, indent=1, allow_nan=True)


def _read_json(path: str) -> dict:
    return json.loads(Path(path).read_text())


def _pair(args: argparse.Namespace) -> tuple[PureState, PureState]:
    """psi = |0>, phi with |<psi|phi>|^2 = overlap2 (and the given phase)."""
    return PureState.basis(0, 2), qubit(args.overlap2, getattr(args, "phase", 0.0))


def _measurement_file(path: str) -> tuple[Measurement, PureState | None, PureState | None, dict]:
    data = _read_json(path)
    meas = Measurement.from_json(data)
    psi = PureState.from_json(data["psi"]) if "psi" in data else None
    phi = PureState.from_json(data["phi"]) if "phi" in data else None
    return meas, psi, phi, data


def _resolve_measurement(args: argparse.Namespace) -> tuple[PureState, PureState, Measurement, dict]:
    if getattr(args, "measurement", None):
        meas, psi, phi, data = _measurement_file(args.measurement)
        if psi is None or phi is None:
            psi, phi = _pair(args)
        return psi, phi, meas, {"measurement_file": str(args.measurement), "residual": data.get("residual")}
    psi, phi = _pair(args)
    opts = SearchOptions(seed=args.seed, restarts=args.restarts)
    result = antidistinguish(psi, phi, getattr(args, "n", None), opts)
    return psi, phi, result.measurement, {"residual": result.residual, "method": result.method}


# -- subcommands -------------------------------------------------------------------


def cmd_antidistinguish(args: argparse.Namespace) -> int:
    psi, phi = _pair(args)
    opts = SearchOptions(seed=args.seed, restarts=args.restarts, target_residual=args.target_residual)
    result = antidistinguish(psi, phi, args.n, opts)
    out = {
        "metadata": _metadata("antidistinguish", seed=args.seed, overlap2=args.overlap2, target_residual=args.target_residual),
        **result.to_json(),
        "psi": psi.to_json(),
        "phi": phi.to_json(),
    }
    _emit(_dump(out), args, "json")
    return EXIT_OK


def _measurement_check(model, M: str, meas: Measurement, joint: Sequence[str]) -> dict:
    states = [model.preparation(pid).prepared_state for pid in joint]
    report = verify_antidistinguishing(meas, states)
    born_gap = 0.0
    if meas.num_outcomes == model.response[M].shape[1]:
        for pid, s in zip(joint, states):
            born_gap = max(born_gap, float(abs(predicted_vector(model, pid, M) - born_vector(s, meas)).max()))
    else:
        born_gap = math.inf
    return {"max_residual": report.max_residual, "antidistinguishing": report.passed, "max_born_deviation": born_gap}


def cmd_verify(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    joint = joint_preparations(model, args.psi_id, args.phi_id)
    M = args.measurement_id or model.measurements[0]
    if args.theorem == "2":
        verdict = theorem2_check(model, args.psi_id, args.phi_id, joint, zero_tol=args.zero_tol)
    elif args.local:
        verdict = theorem1_check_local(model, M, args.psi_id, args.phi_id, joint, zero_tol=args.zero_tol)
    else:
        verdict = theorem1_check(model, M, args.psi_id, args.phi_id, joint, zero_tol=args.zero_tol)
    out = {
        "metadata": _metadata("verify", model=str(args.model), zero_tol=args.zero_tol, support_tol=model.support_tol),
        **verdict.to_json(),
    }
    if args.measurement:
        meas, _, _, _ = _measurement_file(args.measurement)
        out["measurement_check"] = _measurement_check(model, verdict.measurement or M, meas, joint)
    _emit(_dump(out), args, "json")
    return STATUS_EXIT[verdict.status]


def _parse_grid(text: str) -> list[float]:
    try:
        grid = [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise CliError(f"bad epsilon grid {text!r}") from exc
    if not grid or any(e < 0 or not math.isfinite(e) for e in grid):
        raise CliError("epsilon grid must be nonempty finite values >= 0")
    return grid


def cmd_maxoverlap(args: argparse.Namespace) -> int:
    grid = _parse_grid(args.epsilon_grid)
    psi, phi, meas, info = _resolve_measurement(args)
    results = max_overlap_curve(psi, phi, meas, args.lambda_count, grid, args.floor, args.rounds, args.seed)
    meta = _metadata(
        "maxoverlap", seed=args.seed, lambda_count=args.lambda_count, floor=args.floor, rounds=args.rounds, **info
    )
    rows = []
    for r in results:
        row = r.to_row()
        row["revalidated"] = bool(r.model is not None and check_lp_model(r.model, r.epsilon, r.floor))
        rows.append(row)
    if args.format == "json":
        _emit(_dump({"metadata": meta, "rows": rows}), args, "json")
        return EXIT_OK
    buf = io.StringIO()
    for key, value in meta.items():
        buf.write(f"# {key}: {value}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["epsilon", "lambda_count", "value", "feasible", "revalidated"])
    for row in rows:
        writer.writerow([_g17(row["epsilon"]), row["lambda_count"], _g17(row["value"]), row["feasible"], row["revalidated"]])
    _emit(buf.getvalue(), args, "csv")
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = DeviceConfig.parse(args.n, args.correlation, args.bias)
    if args.model:
        model = load_model(args.model)
        M = args.measurement_id or model.measurements[0]
        summary = simulate_model(model, M, cfg, args.trials, args.seed)
        summary.metadata["model"] = str(args.model)
    else:
        psi, phi, meas, info = _resolve_measurement(args)
        summary = simulate_quantum(psi, phi, meas, cfg, args.trials, args.seed)
        summary.metadata.update({k: v for k, v in info.items() if k != "residual"})
    summary.metadata["command"] = "simulate"
    if args.format == "csv":
        _emit(summary.to_csv(), args, "csv")
    else:
        _emit(_dump(summary.to_json()), args, "json")
    return EXIT_OK


def cmd_helstrom(args: argparse.Namespace) -> int:
    value = helstrom_from_overlap2(args.overlap2)
    if args.format == "json":
        _emit(_dump({"metadata": _metadata("helstrom"), "overlap2": args.overlap2, "helstrom_error_bound": value}), args, "json")
    else:
        meta = _metadata("helstrom", overlap2=args.overlap2)
        header = "".join(f"# {k}: {v}\n" for k, v in meta.items())
        _emit(header + _g17(value), args, "txt")
    return EXIT_OK


def cmd_model_zoo(args: argparse.Namespace) -> int:
    out_dir = args.out or os.path.join(os.environ.get(OUTPUT_DIR_ENV, "."), "zoo")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    psi, phi = _pair(args)
    opts = SearchOptions(seed=args.seed, restarts=args.restarts)
    result = antidistinguish(psi, phi, None, opts)
    zoo = model_zoo(psi, phi, result)
    index = []
    for name, entry in zoo.items():
        data = {"metadata": _metadata("model-zoo", name=name, description=entry.description), **entry.model.to_json()}
        (out_dir / f"{name}.json").write_text(_dump(data))
        index.append({"name": name, "file": f"{name}.json", "measurement": entry.measurement, "local": entry.local})
    meas_json = {"metadata": _metadata("model-zoo", seed=args.seed), **result.to_json(), "psi": psi.to_json(), "phi": phi.to_json()}
    (out_dir / "pbr_measurement.json").write_text(_dump(meas_json))
    (out_dir / "index.json").write_text(_dump({"metadata": _metadata("model-zoo", seed=args.seed), "models": index}))
    sys.stdout.write(_dump({"metadata": _metadata("model-zoo"), "directory": str(out_dir), "models": [e["file"] for e in index]}) + "\n")
    return EXIT_OK


# -- parser --------------------------------------------------------------------


def _overlap2(text: str) -> float:
    x = float(text)
    if not 0.0 <= x <= 1.0:
        raise argparse.ArgumentTypeError(f"overlap2 must lie in [0, 1], got {x}")
    return x


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pbrkit", description="Overlap no-go checks for finite ontological models.")
    parser.add_argument("--version", action="version", version=f"pbrkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=True):
        p.add_argument("--out", default=None, help="output path (default: stdout or $PBRKIT_OUTPUT_DIR)")
        if seed:
            p.add_argument("--seed", type=int, default=0)

    def pair_opts(p):
        p.add_argument("--overlap2", type=_overlap2, default=0.5, help="|<psi|phi>|^2 with psi = |0>")
        p.add_argument("--phase", type=float, default=0.0)
        p.add_argument("--restarts", type=int, default=32)

    p = sub.add_parser("antidistinguish", help="measurement whose outcome k never fires on Psi_k")
    common(p)
    pair_opts(p)
    p.add_argument("--n", type=int, default=None, help="number of copies (default: smallest that works)")
    p.add_argument("--target-residual", type=float, default=1e-8)
    p.set_defaults(func=cmd_antidistinguish)

    p = sub.add_parser("verify", help="run the overlap argument on a model file")
    common(p, seed=False)
    p.add_argument("--model", required=True)
    p.add_argument("--measurement", default=None, help="measurement JSON to cross-check the model against")
    p.add_argument("--theorem", choices=["1", "2"], default="1")
    p.add_argument("--measurement-id", default=None)
    p.add_argument("--psi-id", default=PSI)
    p.add_argument("--phi-id", default=PHI)
    p.add_argument("--zero-tol", type=float, default=ZERO_TOL)
    p.add_argument("--local", action="store_true", help="reductionist variant with the diagonal support set")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("maxoverlap", help="epsilon -> overlap table from the alternating LP")
    common(p)
    pair_opts(p)
    p.add_argument("--epsilon-grid", default="0,0.01,0.05,0.1")
    p.add_argument("--lambda-count", type=int, default=4)
    p.add_argument("--floor", type=float, default=COMPAT_FLOOR)
    p.add_argument("--rounds", type=int, default=ROUNDS)
    p.add_argument("--measurement", default=None)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.set_defaults(func=cmd_maxoverlap)

    p = sub.add_parser("simulate", help="Monte Carlo run of the n-device protocol")
    common(p)
    pair_opts(p)
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--bias", type=float, default=0.5, help="probability each device prepares psi")
    p.add_argument("--correlation", default="independent", help="independent | shared:ALPHA | common:ALPHA")
    p.add_argument("--measurement", default=None)
    p.add_argument("--model", default=None, help="sample through an ontological model instead of the Born rule")
    p.add_argument("--measurement-id", default=None)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("helstrom", help="minimum two-state discrimination error")
    common(p, seed=False)
    p.add_argument("--overlap2", type=_overlap2, required=True)
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.set_defaults(func=cmd_helstrom)

    p = sub.add_parser("model-zoo", help="write the fixture models to a directory")
    common(p)
    pair_opts(p)
    p.set_defaults(func=cmd_model_zoo)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help, --version or a usage error
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (CliError, VerificationError, OverlapMismatchError, *VALIDATION_ERRORS) as exc:
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc), "command": args.command}) + "\n")
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
