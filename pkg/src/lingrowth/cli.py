from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from lingrowth.config import RunConfig, SolverConfig, load_settings
from lingrowth.densities import DataTermProfile, Density, ellipticity_audit
from lingrowth.diagnostics import DIMENSIONS, run_diagnostics, sobolev_exponents
from lingrowth.energy import Problem, energy
from lingrowth.errors import InvalidParameterError, LingrowthError
from lingrowth.ingestion.png import ingest, write_png
from lingrowth.jobs import run_job
from lingrowth.logging import get_logger, setup_logging
from lingrowth.models import (
    DataTermKind,
    DensityKind,
    ExponentReport,
    ImageInfo,
    RunReport,
    Theorem,
)
from lingrowth.oracle import oracle_suite
from lingrowth.report import dumps, write_json
from lingrowth.solver import continuation

logger = get_logger(__name__)

RESTORE_FLAGS = {
    "input": "INPUT_PATH",
    "mask": "MASK_PATH",
    "output": "OUTPUT_PATH",
    "report": "REPORT_PATH",
    "density": "DENSITY",
    "mu": "MU",
    "data_term": "DATA_TERM",
    "lam": "LAMBDA",
    "beta": "BETA",
    "spacing": "SPACING",
    "delta_start": "DELTA_START",
    "delta_factor": "DELTA_FACTOR",
    "delta_steps": "DELTA_STEPS",
    "tol": "GRAD_TOL",
    "max_iters": "MAX_ITERS",
    "seed": "SEED",
    "deterministic": "DETERMINISTIC",
    "diagnostics": "DIAGNOSTICS",
    "trials": "UNIQUENESS_TRIALS",
}


def build_density(kind: DensityKind | str, mu: float) -> Density:
    if DensityKind(kind) is DensityKind.MINIMAL_SURFACE:
        return Density.minimal_surface()
    return Density.mu_family(mu)


def build_data_term(kind: DataTermKind | str, lam: float, beta: float) -> DataTermProfile:
    if DataTermKind(kind) is DataTermKind.LINEAR_GROWTH:
        return DataTermProfile.linear_growth(beta)
    return DataTermProfile.quadratic(lam)


def exponent_reports(mu: float, empty_mask: bool) -> list[ExponentReport]:
    """Every theorem at the lowest dimension it covers."""
    return [
        sobolev_exponents(DIMENSIONS[theorem][0], mu, theorem, empty_mask)
        for theorem in Theorem
    ]


def run(cfg: RunConfig) -> int:
    if cfg.INPUT_PATH is None or cfg.OUTPUT_PATH is None:
        raise InvalidParameterError("restore needs both an input and an output path")
    density = build_density(cfg.DENSITY, cfg.MU)
    data = build_data_term(cfg.DATA_TERM, cfg.LAMBDA, cfg.BETA)
    if density.mu != cfg.MU:
        logger.warning(
            "%s density fixes mu=%g; configured MU=%g is ignored",
            density.kind.value,
            density.mu,
            cfg.MU,
            extra={"component": "cli"},
        )
        cfg = cfg.model_copy(update={"MU": density.mu})

    u0, mask, bit_depth = run_job(
        "ingest", lambda: ingest(cfg.INPUT_PATH, cfg.MASK_PATH, cfg.SPACING)
    )
    problem = Problem(density, data, u0, mask)
    u, trace = run_job("solve", lambda: continuation(problem, cfg))
    final_delta = trace.stages[-1].delta
    final_energy = energy(problem, u, final_delta, cfg.DETERMINISTIC)

    diagnostics = None
    if cfg.DIAGNOSTICS:
        diagnostics = run_job(
            "diagnostics",
            lambda: run_diagnostics(
                problem, u, cfg, trace, trials=cfg.UNIQUENESS_TRIALS
            ),
        )

    run_job("write_image", lambda: write_png(cfg.OUTPUT_PATH, u, bit_depth))
    report = RunReport(
        config=cfg.config_snapshot(),
        image=ImageInfo(
            width=u0.width,
            height=u0.height,
            channels=u0.channels,
            bit_depth=bit_depth,
            masked_pixels=mask.masked_count,
        ),
        trace=trace,
        final_energy=final_energy,
        exponents=exponent_reports(density.mu, mask.masked_count == 0),
        diagnostics=diagnostics,
        output_path=str(cfg.OUTPUT_PATH),
    )
    if cfg.REPORT_PATH is not None:
        run_job("write_report", lambda: write_json(cfg.REPORT_PATH, report))
    else:
        sys.stdout.write(dumps(report))
    return 0


def _emit(payload: Any, report_path: Path | None) -> None:
    if report_path is not None:
        write_json(report_path, payload)
    else:
        sys.stdout.write(dumps(payload))


def restore_command(args: argparse.Namespace) -> int:
    overrides = {key: getattr(args, flag) for flag, key in RESTORE_FLAGS.items()}
    return run(load_settings(overrides))


def exponents_command(args: argparse.Namespace) -> int:
    _emit(sobolev_exponents(args.n, args.mu, args.theorem, args.empty_mask), None)
    return 0


def audit_command(args: argparse.Namespace) -> int:
    density = build_density(args.density, args.mu)
    report = ellipticity_audit(
        density,
        args.samples,
        audit_mu=args.audit_mu,
        radius=args.radius,
        channels=args.channels,
        seed=args.seed,
    )
    _emit(report, args.report)
    return 0 if report.passed else 1


def oracle_command(args: argparse.Namespace) -> int:
    settings = load_settings(
        {
            "GRAD_TOL": args.tol,
            "DETERMINISTIC": args.deterministic,
            "SEED": args.seed,
        }
    )
    cfg = SolverConfig.model_validate(
        settings.model_dump(include=set(SolverConfig.model_fields))
    )
    rows = run_job(
        "oracle_compare",
        lambda: oracle_suite(
            args.instances,
            cfg,
            seed=cfg.SEED,
            mu=args.mu,
            lam=args.lam,
            beta=args.beta,
        ),
    )
    _emit({"rows": rows, "pass": all(row.passed for row in rows)}, args.report)
    return 0 if all(row.passed for row in rows) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lingrowth",
        description="Linear-growth variational denoising and inpainting.",
    )
    parser.add_argument(
        "--log-level",
        default="INFO",
        help="Logging level for the JSON log stream on stderr.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    restore = commands.add_parser("restore", help="Denoise or inpaint a PNG image.")
    restore.set_defaults(handler=restore_command)
    restore.add_argument("--input", type=Path, required=True)
    restore.add_argument("--mask", type=Path, default=None)
    restore.add_argument("--output", type=Path, required=True)
    restore.add_argument("--report", type=Path, default=None)
    restore.add_argument(
        "--density", choices=[kind.value for kind in DensityKind], default=None
    )
    restore.add_argument("--mu", type=float, default=None)
    restore.add_argument(
        "--data-term", choices=[kind.value for kind in DataTermKind], default=None
    )
    restore.add_argument("--lambda", dest="lam", type=float, default=None)
    restore.add_argument("--beta", type=float, default=None)
    restore.add_argument("--spacing", type=float, default=None)
    restore.add_argument("--delta-start", type=float, default=None)
    restore.add_argument("--delta-factor", type=float, default=None)
    restore.add_argument("--delta-steps", type=int, default=None)
    restore.add_argument("--tol", type=float, default=None)
    restore.add_argument("--max-iters", type=int, default=None)
    restore.add_argument("--seed", type=int, default=None)
    restore.add_argument("--trials", type=int, default=None)
    restore.add_argument("--deterministic", action="store_true", default=None)
    restore.add_argument("--diagnostics", action="store_true", default=None)

    exponents = commands.add_parser(
        "exponents", help="Print the Sobolev exponents of a regularity theorem."
    )
    exponents.set_defaults(handler=exponents_command)
    exponents.add_argument("--n", type=int, default=2)
    exponents.add_argument("--mu", type=float, required=True)
    exponents.add_argument(
        "--theorem", choices=[theorem.value for theorem in Theorem], required=True
    )
    exponents.add_argument("--empty-mask", action="store_true")

    audit = commands.add_parser("audit", help="Sample the ellipticity bounds of a density.")
    audit.set_defaults(handler=audit_command)
    audit.add_argument(
        "--density",
        choices=[kind.value for kind in DensityKind],
        default=DensityKind.MU_FAMILY.value,
    )
    audit.add_argument("--mu", type=float, default=1.5)
    audit.add_argument("--audit-mu", type=float, default=None)
    audit.add_argument("--samples", type=int, default=10_000)
    audit.add_argument("--radius", type=float, default=1e3)
    audit.add_argument("--channels", type=int, default=1)
    audit.add_argument("--seed", type=int, default=0)
    audit.add_argument("--report", type=Path, default=None)

    oracle = commands.add_parser(
        "oracle-compare", help="Compare the solver with brute-force minimizers."
    )
    oracle.set_defaults(handler=oracle_command)
    oracle.add_argument("--instances", type=int, default=20)
    oracle.add_argument("--mu", type=float, default=1.5)
    oracle.add_argument("--lambda", dest="lam", type=float, default=1.0)
    oracle.add_argument("--beta", type=float, default=0.5)
    oracle.add_argument("--tol", type=float, default=None)
    oracle.add_argument("--seed", type=int, default=None)
    oracle.add_argument("--deterministic", action="store_true", default=None)
    oracle.add_argument("--report", type=Path, default=None)
    return parser


def _error_payload(exc: BaseException, code: str, exit_code: int) -> dict[str, Any]:
    return {
        "error": {
            "type": type(exc).__name__,
            "code": code,
            "message": str(exc),
            "exit_code": exit_code,
        }
    }


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level.upper())

    try:
        return args.handler(args)
    except ValidationError as exc:
        payload = _error_payload(exc, "validation_error", 2)
    except LingrowthError as exc:
        payload = _error_payload(exc, exc.code, exc.exit_code)
    except OSError as exc:
        payload = _error_payload(exc, "io_error", 3)

    logger.error("%s", payload["error"]["message"], extra={"component": "cli"})
    sys.stderr.write(json.dumps(payload, ensure_ascii=False) + "\n")
    return payload["error"]["exit_code"]
