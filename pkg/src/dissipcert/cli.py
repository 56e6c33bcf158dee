"""Command-line client for the certification service.

Commands map one-to-one onto the service handlers: solve,
check-transfer, certify, simulate, oracle-compare.  Machine output goes
to stdout (or --output, written atomically), diagnostics to stderr.
Exit codes: 0 success, 2 negative verdict (NoMax, Stalled, IterLimit,
oracle disagreement), 1 error.
"""

import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile
from dataclasses import dataclass, field
from typing import Optional

from pydantic import ValidationError

from . import jsonio
from .errors import DissipcertError
from .service import handlers
from .service.schemas import (
    CertifyRequest,
    CheckTransferRequest,
    ModelSpec,
    OracleCompareRequest,
    ProblemRequest,
    SimulateRequest,
)

logger = logging.getLogger("dissipcert.cli")

_LOG_LEVELS = {"quiet": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


@dataclass
class CliConfig:
    """Parsed invocation state; exactly one command per run."""

    command: str
    input_path: Optional[str] = None
    output_path: Optional[str] = None
    format: str = "json"
    seed: int = 42
    overrides: dict = field(default_factory=dict)


def _configure_logging():
    level = _LOG_LEVELS.get(os.environ.get("DISSIPCERT_LOG", "quiet"), logging.ERROR)
    logging.basicConfig(stream=sys.stderr, level=level,
                        format="%(levelname)s %(name)s: %(message)s")


def _config_from_args(args) -> CliConfig:
    return CliConfig(
        command=args.command,
        input_path=getattr(args, "input", None) or getattr(args, "model", None),
        output_path=getattr(args, "output", None),
        format=getattr(args, "format", "json"),
        seed=getattr(args, "seed", 42),
        overrides={
            k: getattr(args, k)
            for k in ("tol", "location_tol")
            if getattr(args, k, None) is not None
        },
    )


def _parse_vector(text):
    return [float(tok) for tok in text.split(",") if tok.strip() != ""]


def _load_json(path):
    with open(path, "r") as fh:
        return json.load(fh)


def _write_atomic(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".dissipcert-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(payload_text, config: CliConfig):
    if config.output_path:
        _write_atomic(config.output_path, payload_text)
    else:
        sys.stdout.write(payload_text)
        if not payload_text.endswith("\n"):
            sys.stdout.write("\n")


def _csv_text(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _problem_from_args(args) -> ProblemRequest:
    """Inline flags or a JSON file; the file wins on conflict."""
    inline = {}
    if args.c is not None:
        inline["c"] = _parse_vector(args.c)
    if args.l is not None:
        inline["l"] = _parse_vector(args.l)
    if args.b is not None:
        inline["b"] = args.b
    if args.transfer is not None:
        inline["transfer"] = args.transfer
    if args.input:
        data = _load_json(args.input)
        if inline:
            print("warning: --input overrides inline problem flags", file=sys.stderr)
        return ProblemRequest(**data)
    missing = {"transfer", "c", "l", "b"} - set(inline)
    if missing:
        raise ValueError(f"missing problem fields: {sorted(missing)}")
    return ProblemRequest(**inline)


def _model_from_file(path) -> ModelSpec:
    data = _load_json(path)
    W = data["W"]
    if W and not isinstance(W[0], list):
        n = int(round(len(W) ** 0.5))
        if n * n != len(W):
            raise ValueError("flat W must have a square length")
        W = [W[i * n : (i + 1) * n] for i in range(n)]
    return ModelSpec(transfer=data["transfer"], W=W)


def _require_json_format(config: CliConfig):
    if config.format != "json":
        raise ValueError(f"command {config.command} only emits json")


def _cmd_solve(args, config: CliConfig):
    _require_json_format(config)
    resp = handlers.solve(_problem_from_args(args))
    _emit(jsonio.dumps(resp.model_dump()), config)
    return 0 if resp.verdict == "UniqueMax" else 2


def _cmd_check_transfer(args, config: CliConfig):
    _require_json_format(config)
    req = CheckTransferRequest(
        name=args.name, n_x=args.grid_x, n_beta=args.grid_beta, n_q=args.grid_q
    )
    resp = handlers.check_transfer(req)
    _emit(jsonio.dumps(resp.model_dump()), config)
    return 0 if all(v == "pass" for v in resp.verdicts.values()) else 2


def _cmd_certify(args, config: CliConfig):
    req = CertifyRequest(
        model=_model_from_file(args.model),
        box=args.box,
        tol=args.tol,
        max_iters=args.max_iters,
    )
    resp = handlers.run_certify(req)
    trace_text = _csv_text(
        ["iter", "radius"],
        [[i, f"{r:.17g}"] for i, r in enumerate(resp.radius_trace)],
    )
    if args.trace_csv:
        _write_atomic(args.trace_csv, trace_text)
    if config.format == "csv":
        _emit(trace_text, config)
    else:
        _emit(jsonio.dumps(resp.model_dump()), config)
    return 0 if resp.verdict == "Certified" else 2


def _cmd_simulate(args, config: CliConfig):
    req = SimulateRequest(
        model=_model_from_file(args.model),
        y0=_parse_vector(args.y0),
        steps=args.steps,
    )
    resp = handlers.run_simulate(req)
    if config.format == "csv":
        n = len(resp.trajectory[0])
        rows = [
            [k] + [f"{v:.17g}" for v in row] for k, row in enumerate(resp.trajectory)
        ]
        _emit(_csv_text(["step"] + [f"y{i}" for i in range(n)], rows), config)
    else:
        _emit(jsonio.dumps(resp.model_dump()), config)
    return 0


def _cmd_oracle_compare(args, config: CliConfig):
    problem = _problem_from_args(args)
    req = OracleCompareRequest(
        problem=problem,
        radius=args.radius,
        steps=args.steps,
        location_tol=args.location_tol,
        seed=config.seed,
    )
    resp = handlers.oracle_compare(req)

    def cells_text():
        from .hyperplane import RawProblem
        from .oracle import export_grid_csv
        from .transfer import make_builtin

        p = RawProblem(c=problem.c, l=problem.l, b=problem.b,
                       tf=make_builtin(problem.transfer))
        radius = req.radius or handlers.DEFAULT_ORACLE_RADIUS.get(problem.transfer, 6.0)
        buf = io.StringIO()
        export_grid_csv(p, radius, min(req.steps, 257), buf)
        return buf.getvalue()

    if args.csv:
        _write_atomic(args.csv, cells_text())
    if config.format == "csv":
        _emit(cells_text(), config)
    else:
        _emit(jsonio.dumps(resp.model_dump()), config)
    return 0 if resp.agree else 2


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="dissipcert",
        description="Stability certificates for y_{k+1} = W phi(y_k)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, formats=("json",)):
        p.add_argument("--output", default=None, help="write the report here (atomic)")
        p.add_argument("--seed", type=int, default=42)
        p.add_argument("--format", default="json", choices=list(formats))

    def add_problem_flags(p):
        p.add_argument("--transfer", default=None, choices=["tanh", "arctan"])
        p.add_argument("--c", default=None, help="comma-separated cost coefficients")
        p.add_argument("--l", default=None, help="comma-separated normal vector")
        p.add_argument("--b", type=float, default=None, help="hyperplane offset")
        p.add_argument("--input", default=None, help="problem JSON {transfer, c, l, b}")

    p = sub.add_parser("solve", help="locate the hyperplane maximum")
    add_problem_flags(p)
    add_common(p)
    p.set_defaults(fn=_cmd_solve)

    p = sub.add_parser("check-transfer", help="audit curvature assumptions")
    p.add_argument("--name", required=True)
    p.add_argument("--grid-x", type=int, default=256)
    p.add_argument("--grid-beta", type=int, default=256)
    p.add_argument("--grid-q", type=int, default=256)
    add_common(p)
    p.set_defaults(fn=_cmd_check_transfer)

    p = sub.add_parser("certify", help="run the domain-reduction loop")
    p.add_argument("--model", required=True, help="model JSON {transfer, W}")
    p.add_argument("--box", type=float, default=1.0, help="initial box half-width")
    p.add_argument("--tol", type=float, default=1e-3, help="radius tolerance")
    p.add_argument("--max-iters", type=int, default=200)
    p.add_argument("--trace-csv", default=None, help="write (iter, radius) rows")
    add_common(p, formats=("json", "csv"))
    p.set_defaults(fn=_cmd_certify)

    p = sub.add_parser("simulate", help="roll the dynamics forward")
    p.add_argument("--model", required=True)
    p.add_argument("--y0", required=True, help="comma-separated initial state")
    p.add_argument("--steps", type=int, default=50)
    add_common(p, formats=("json", "csv"))
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("oracle-compare", help="solver vs brute-force grid")
    add_problem_flags(p)
    p.add_argument("--radius", type=float, default=None)
    p.add_argument("--steps", type=int, default=801)
    p.add_argument("--location-tol", type=float, default=1e-3)
    p.add_argument("--csv", default=None, help="write grid cells for plotting")
    add_common(p, formats=("json", "csv"))
    p.set_defaults(fn=_cmd_oracle_compare)

    return parser


def run(argv) -> int:
    _configure_logging()
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # keep exit 2 reserved for negative verdicts; usage errors are errors
        return 0 if not exc.code else 1
    config = _config_from_args(args)
    logger.debug("command=%s config=%s", config.command, config)
    try:
        return args.fn(args, config)
    except json.JSONDecodeError as exc:
        src = config.input_path or "<input>"
        print(f"{src}:{exc.lineno}:{exc.colno}: {exc.msg}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DissipcertError, ValueError, KeyError, ValidationError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
