#!/usr/bin/env python3
"""
Command line interface.

    python -m src.cli solve   --config data/config/default_config.json --out output
    python -m src.cli poly    --n-list 10,20,40 --precision 200
    python -m src.cli verify  --quick
    python -m src.cli figures --w-list 0.5,1,2

Exit codes: 0 success, 1 verification failures, 2 phase or solver errors
(and usage errors), 3 precision escalation failure.
"""

from pathlib import Path
from typing import Dict, List, Optional
import argparse
import logging
import sys

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from pydantic import ValidationError  # noqa: E402

from src.pipeline import Geometry, solve_geometry, solve_polynomial, solve_polynomials  # noqa: E402
from src.spectral_curve import droplet_boundary  # noqa: E402
from src.utils.config import RunConfig, load_config  # noqa: E402
from src.utils.errors import MotherSolveError, PrecisionError  # noqa: E402
from src.utils.io import points_frame, write_csv, write_json  # noqa: E402
from src.verification import run_acceptance  # noqa: E402

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_SOLVER = 2
EXIT_PRECISION = 3
QUICK_N_LIST = [4, 8]
BOUNDARY_SAMPLES = 512


def _write_geometry(geo: Geometry, folder: Path) -> Dict[str, Path]:
    """Curve JSON plus the droplet boundary, Γ0/Γ1/Γ2 and the μ0 density as CSV."""
    body = geo.body
    theta, boundary, _ = droplet_boundary(geo.curve.map, BOUNDARY_SAMPLES)
    files = {
        "curve": write_json(geo.to_dict(), folder / "curve.json"),
        "droplet": write_csv(points_frame(boundary, s=theta), folder / "droplet_boundary.csv"),
        "gamma0": write_csv(body.gamma0.to_frame(), folder / "gamma0.csv"),
        "gamma1": write_csv(body.gamma1.to_frame(), folder / "gamma1.csv"),
        "gamma2": write_csv(body.gamma2.to_frame(), folder / "gamma2.csv"),
        "density": write_csv(body.to_frame(), folder / "density.csv"),
    }
    return files


def cmd_solve(config: RunConfig) -> Dict[str, Path]:
    """Geometry bundle for the configured (Q0, Q1, w)."""
    geo = solve_geometry(config)
    return _write_geometry(geo, Path(config.output_dir) / "solve")


def cmd_poly(config: RunConfig) -> Dict[str, Path]:
    """Moments, coefficients, norms and zeros for every (N, r0)."""
    folder = Path(config.output_dir) / "poly"
    files = {}
    for N in config.N_list:
        for r0 in config.r0_list:
            record = solve_polynomial(config, N, r0)
            sol = record.solution
            files[record.key] = write_json(record.to_dict(), folder / f"poly_{record.key}.json")
            files[f"moments_{record.key}"] = write_json(sol.moments.to_dict(), folder / f"moments_{record.key}.json")
            zeros = np.array([complex(z) for z in sol.zeros])
            files[f"zeros_{record.key}"] = write_csv(points_frame(zeros, value=np.abs(zeros)),
                                                     folder / f"zeros_{record.key}.csv")
    return files


def cmd_verify(config: RunConfig):
    """Run the acceptance suite and write report.json, report.txt and the error tables."""
    folder = Path(config.output_dir) / "verify"
    geo = solve_geometry(config)
    records = solve_polynomials(config)
    result = run_acceptance(config, geo, records)
    report = result["report"]
    write_json(report.model_dump(), folder / "report.json")
    summary = report.summary()
    with open(folder / "report.txt", "w", encoding="utf-8") as f:
        f.write(summary + "\n")
    if not result["field_errors"].empty:
        write_csv(result["field_errors"], folder / "field_errors.csv")
    if not result["zeros"].empty:
        write_csv(result["zeros"], folder / "zero_statistics.csv")
    print(summary)
    return report


def _plot_overlay(geo: Geometry, path: Path, zeros: Optional[np.ndarray] = None) -> Path:
    """Droplet (shaded) with Γ0 (dashed) and the steepest-ascent paths."""
    body = geo.body
    _, boundary, _ = droplet_boundary(geo.curve.map, BOUNDARY_SAMPLES)
    fig, ax = plt.subplots(figsize=(6, 6))
    ax.fill(boundary.real, boundary.imag, color="tab:blue", alpha=0.3, label="droplet")
    ax.plot(body.gamma0.points.real, body.gamma0.points.imag, "r--", label="Γ0")
    for arc in (body.gamma1, body.gamma2):
        ax.plot(arc.points.real, arc.points.imag, color="tab:orange", lw=1)
    for loop in geo.loops.values():
        ax.plot(loop.points.real, loop.points.imag, color="gray", lw=0.8, ls=":")
    if zeros is not None:
        ax.plot(zeros.real, zeros.imag, "k.", ms=3, label="zeros")
    w = geo.params.w
    ax.plot([w, 0.0, -1 / w], [0.0, 0.0, 0.0], "kx")
    ax.set_aspect("equal")
    ax.set_title(f"Q0={geo.params.Q0}, Q1={geo.params.Q1}, w={w}")
    ax.legend(loc="upper right")
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    logger.info(f"Wrote {path}")
    return path


def cmd_figures(config: RunConfig) -> Dict[str, Path]:
    """Per-w overlay data: droplet, mother body, trajectories, loops, contour Γ and zero scatter."""
    files = {}
    N = min(config.N_list)
    for w in config.w_list:
        folder = Path(config.output_dir) / "figures" / f"w_{w:g}"
        geo = solve_geometry(config, w)
        files.update({f"{key}_{w:g}": path for key, path in _write_geometry(geo, folder).items()})
        for kind, trajectory in geo.body.critical.items():
            files[f"{kind.value}_{w:g}"] = write_csv(trajectory.to_frame(), folder / f"{kind.value}.csv")
        for name, loop in geo.loops.items():
            files[f"loop_{name}_{w:g}"] = write_csv(loop.to_frame(), folder / f"loop_{name}.csv")
        files[f"contour_{w:g}"] = write_csv(points_frame(geo.body.gamma), folder / "contour.csv")

        local = config.model_copy(update={"w": w})
        record = solve_polynomial(local, N, 0, escalate=False)
        zeros = np.array([complex(z) for z in record.solution.zeros])
        distance = geo.body.distance_to_gamma0(zeros)
        files[f"zeros_{w:g}"] = write_csv(points_frame(zeros, value=distance), folder / f"zeros_N{N}.csv")
        files[f"overlay_{w:g}"] = _plot_overlay(geo, folder / "overlay.png", zeros)
    return files


def _int_list(text: str) -> List[int]:
    return [int(item) for item in text.split(",") if item.strip()]


def _float_list(text: str) -> List[float]:
    return [float(item) for item in text.split(",") if item.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=None, help="Path to the JSON configuration file.")
    common.add_argument("--out", type=str, default=None, help="Output directory.")
    common.add_argument("--precision", type=int, default=None, help="Working decimal digits (default: 40 + 3n).")
    common.add_argument("--n-list", type=str, default=None, dest="n_list", help="Comma separated sizes N.")
    common.add_argument("--seed", type=int, default=None, help="Seed for probe-point jitter.")
    common.add_argument("--w-list", type=str, default=None, dest="w_list", help="Comma separated w values (figures).")
    common.add_argument("--quick", action="store_true", help=f"Restrict sizes to N ∈ {QUICK_N_LIST}.")

    parser = argparse.ArgumentParser(prog="mothersolve",
                                     description="Mother body, orthogonal polynomials and their large-N asymptotics.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="Solve the curve and the mother body.")
    sub.add_parser("poly", parents=[common], help="Compute polynomials, norms and zeros.")
    sub.add_parser("verify", parents=[common], help="Run the acceptance suite.")
    sub.add_parser("figures", parents=[common], help="Emit overlay data and PNGs for each w.")
    return parser


COMMANDS = {"solve": cmd_solve, "poly": cmd_poly, "figures": cmd_figures}


def config_from_args(parser: argparse.ArgumentParser, args: argparse.Namespace) -> RunConfig:
    overrides = {"output_dir": args.out, "precision": args.precision, "seed": args.seed}
    if args.n_list is not None:
        n_list = _int_list(args.n_list)
        if not n_list:
            parser.error("--n-list must name at least one N")
        overrides["N_list"] = n_list
    if args.w_list is not None:
        overrides["w_list"] = _float_list(args.w_list)
    if args.quick:
        overrides["N_list"] = QUICK_N_LIST
        overrides["quick"] = True
    try:
        config = load_config(args.config, **overrides)
    except ValidationError as e:
        parser.error(f"Invalid configuration: {e}")
    if config.quick and config.N_list != QUICK_N_LIST:
        try:
            config = RunConfig.model_validate({**config.model_dump(), "N_list": QUICK_N_LIST})
        except ValidationError as e:
            parser.error(f"Invalid configuration: {e}")
    return config


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    config = config_from_args(parser, args)
    try:
        if args.command == "verify":
            report = cmd_verify(config)
            if not report.passed:
                for failure in report.failures():
                    logger.error(f"Check {failure.check_id} failed: {failure.property} {failure.detail}")
                return EXIT_VERIFY
            return EXIT_OK
        COMMANDS[args.command](config)
        return EXIT_OK
    except PrecisionError as e:
        logger.error(f"Precision escalation failed: {e}")
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_PRECISION
    except MotherSolveError as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
