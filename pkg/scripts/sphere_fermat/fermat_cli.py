"""
Command-line front end for the spherical Fermat-Torricelli tools.

    python fermat_cli.py solve --weights 4,5,6
    python fermat_cli.py classify --weights 3,4,5
    python fermat_cli.py grid --weights 4,5,6 --resolution 200 --format csv --out grid.csv

Reports go to stdout (or --out), logs and the one-line error summary go to
stderr. Identical flags give byte-identical reports.
"""

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
import pydantic
from pydantic import BaseModel, ConfigDict, Field, model_validator

# Add this script's directory to the path
script_dir = os.path.dirname(os.path.abspath(__file__))
if script_dir not in sys.path:
    sys.path.append(script_dir)

from classifier import CaseDecision, classify
from closed_form import (
    CaseLabel,
    FermatResult,
    Weights,
    build_result,
    compare_omega_routes,
    solve_octant,
    write_omega_report,
)
from fermat_config import FermatSettings, load_config
from fermat_utils import (
    FermatError,
    NoConvergence,
    NoRealSolution,
    ValidationError,
    handle_exception,
    one_line,
    setup_logging,
)
from oracle import GRID_COLUMNS, OracleOptions, grid_scan, minimize
from plasticity import (
    ShrinkOffsets,
    TriangleSides,
    equation_residuals,
    fermat_center,
    invert_sides_newton,
    invert_sides_weierstrass,
    predicted_sides,
    shrink_triangle,
)
from sphere_core import GeodesicTriangle, geodesic_distance, octant_triangle

__version__ = "1.0.0"

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERIC = 3

COMMANDS = (
    "solve",
    "classify",
    "minimize",
    "plasticity-generate",
    "plasticity-invert",
    "grid",
    "compare-omega",
)
CSV_COMMANDS = ("grid", "compare-omega")
OMEGA_REPORT_NAME = "omega_comparison.csv"

Triple = Tuple[float, float, float]


class RunConfig(BaseModel):
    """One validated CLI invocation. Offsets and targets are kept in `angle_unit`."""

    model_config = ConfigDict(frozen=True)

    command: Literal[COMMANDS]
    weights: Weights
    triangle: GeodesicTriangle = Field(default_factory=octant_triangle)
    offsets: Optional[Triple] = None
    targets: Optional[Triple] = None
    resolution: int = Field(default=100, ge=2)
    output_format: Literal["json", "csv"] = "json"
    output_path: Optional[str] = None
    angle_unit: Literal["rad", "deg"] = "rad"
    solver: Literal["newton", "weierstrass", "both"] = "both"

    @model_validator(mode="after")
    def _check_command_inputs(self):
        if self.command == "plasticity-generate" and self.offsets is None:
            raise ValueError("plasticity-generate needs --offsets")
        if self.command == "plasticity-invert" and self.targets is None:
            raise ValueError("plasticity-invert needs --targets")
        if self.output_format == "csv" and self.command not in CSV_COMMANDS:
            raise ValueError(f"--format csv is only available for {', '.join(CSV_COMMANDS)}")
        if self.command == "compare-omega" and not self.triangle.is_octant():
            raise ValueError("compare-omega is defined on the octant triangle only")
        return self

    def to_rad(self, values: Sequence[float]) -> List[float]:
        if self.angle_unit == "deg":
            return [math.radians(v) for v in values]
        return [float(v) for v in values]

    def from_rad(self, value: float) -> float:
        return math.degrees(value) if self.angle_unit == "deg" else float(value)

    def angles_out(self, values: Sequence[float]) -> List[float]:
        return [self.from_rad(v) for v in values]


@dataclass
class RunOutcome:
    exit_code: int
    report: str
    error: Optional[str] = None


def format_number(value: Any) -> str:
    """17 significant digits for floats, plain digits for integers, null for non-finite."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    if not math.isfinite(v):
        return "null"
    return format(v, ".16e")


def _is_scalar(value: Any) -> bool:
    return value is None or isinstance(value, (bool, int, float, str, np.generic))


def render_json(obj: Any, indent: int = 0) -> str:
    """Deterministic JSON text; key order is insertion order."""
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (bool, int, float, np.generic)):
        return format_number(obj)

    pad = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {render_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + "  " * indent + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(_is_scalar(v) for v in obj):
            return "[" + ", ".join(render_json(v) for v in obj) + "]"
        items = [pad + render_json(v, indent + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + "  " * indent + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def render_grid_csv(rows: np.ndarray) -> str:
    """Grid rows as CSV text with LF line endings."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(GRID_COLUMNS)
    for row in rows:
        writer.writerow([format_number(v) for v in row])
    return buffer.getvalue()


def write_report(text: str, output_path: Optional[str]) -> None:
    """Write to the output path, or stdout when none is given."""
    if output_path:
        out_file = Path(output_path)
        out_file.parent.mkdir(exist_ok=True, parents=True)
        with open(out_file, "w", newline="", encoding="utf-8") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


def _result_block(result: FermatResult, config: RunConfig) -> Dict[str, Any]:
    return {
        "case_label": result.case_label.kind,
        "vertex": result.case_label.vertex,
        "point": list(result.point.as_tuple()),
        "coords": {
            "omega": config.from_rad(result.coords.omega),
            "phi": config.from_rad(result.coords.phi),
        },
        "distances": config.angles_out(result.distances),
        "objective": result.objective,
        "stationarity_residual": result.stationarity_residual,
    }


def _input_block(config: RunConfig) -> Dict[str, Any]:
    block: Dict[str, Any] = {
        "command": config.command,
        "weights": list(config.weights.as_tuple()),
        "triangle": [list(v.as_tuple()) for v in config.triangle.vertices()],
        "angle_unit": config.angle_unit,
    }
    if config.offsets is not None:
        block["offsets"] = list(config.offsets)
    if config.targets is not None:
        block["targets"] = list(config.targets)
    if config.command == "grid":
        block["resolution"] = config.resolution
    if config.command == "plasticity-invert":
        block["solver"] = config.solver
    return block


def _solve(config: RunConfig, opts: OracleOptions) -> Tuple[CaseDecision, FermatResult, str]:
    """Classify first; absorbed cases need no descent."""
    tri, w = config.triangle, config.weights
    decision = classify(tri, w)
    if not decision.floating:
        result = build_result(tri, w, tri.vertex(decision.vertex), CaseLabel.absorbed_at(decision.vertex))
        method = "classifier"
    elif tri.is_octant():
        result = solve_octant(w)
        method = "closed_form"
    else:
        result = minimize(tri, w, opts)
        method = "oracle"
    return decision, result, method


def cmd_solve(config: RunConfig, opts: OracleOptions):
    decision, result, method = _solve(config, opts)
    return _result_block(result, config), {"method": method, "margins": list(decision.margins)}


def cmd_classify(config: RunConfig, opts: OracleOptions):
    decision, solved, method = _solve(config, opts)
    result = {"label": decision.label, "margins": list(decision.margins), **_result_block(solved, config)}
    return result, {"method": method, "closest_margin": min(decision.margins)}


def cmd_minimize(config: RunConfig, opts: OracleOptions):
    result = minimize(config.triangle, config.weights, opts)
    return _result_block(result, config), {"method": "oracle", "options": opts.model_dump()}


def cmd_plasticity_generate(config: RunConfig, opts: OracleOptions):
    tri, w = config.triangle, config.weights
    off = ShrinkOffsets.of(config.to_rad(config.offsets))
    center = fermat_center(tri, w, opts)
    shrunk = shrink_triangle(tri, w, off, center)

    a0 = center.distances
    predicted = predicted_sides(a0, off, w)
    a12, a23, a31 = shrunk.sides()
    measured = TriangleSides.of((a12, a23, a31))
    shrunk_minimizer = minimize(shrunk, w, opts)
    shift = geodesic_distance(shrunk_minimizer.point, center.point)

    result = {
        "center": _result_block(center, config),
        "offsets": config.angles_out(off.as_array()),
        "shrunk_triangle": [list(v.as_tuple()) for v in shrunk.vertices()],
        "predicted_sides": config.angles_out(predicted.as_array()),
        "measured_sides": config.angles_out(measured.as_array()),
        "equation_residuals": equation_residuals(a0, off, w, measured).tolist(),
        "shrunk_minimizer": _result_block(shrunk_minimizer, config),
    }
    return result, {"center_shift": config.from_rad(shift)}


def _solution_block(a0, off: ShrinkOffsets, w: Weights, target: TriangleSides, config: RunConfig):
    return {
        "offsets": config.angles_out(off.as_array()),
        "equation_residuals": equation_residuals(a0, off, w, target).tolist(),
    }


def cmd_plasticity_invert(config: RunConfig, opts: OracleOptions):
    tri, w = config.triangle, config.weights
    target = TriangleSides.of(config.to_rad(config.targets))
    center = fermat_center(tri, w, opts)
    a0 = center.distances

    result: Dict[str, Any] = {
        "center": _result_block(center, config),
        "targets": config.angles_out(target.as_array()),
    }
    diagnostics: Dict[str, Any] = {"solver": config.solver}
    newton = None
    if config.solver in ("newton", "both"):
        newton = invert_sides_newton(target, w, a0)
        result["newton"] = _solution_block(a0, newton, w, target, config)
    if config.solver in ("weierstrass", "both"):
        solutions = invert_sides_weierstrass(target, w, a0)
        result["weierstrass"] = [_solution_block(a0, s, w, target, config) for s in solutions]
        diagnostics["weierstrass_solutions"] = len(solutions)
        if newton is not None:
            gaps = [float(np.max(np.abs(s.as_array() - newton.as_array()))) for s in solutions]
            diagnostics["newton_to_nearest_weierstrass"] = config.from_rad(min(gaps))
    return result, diagnostics


def cmd_grid(config: RunConfig, opts: OracleOptions):
    rows = grid_scan(config.triangle, config.weights, config.resolution)
    if config.angle_unit == "deg":
        rows = rows.copy()
        rows[:, :2] = np.degrees(rows[:, :2])
    return rows, {"rows": int(rows.shape[0]), "columns": list(GRID_COLUMNS)}


def cmd_compare_omega(config: RunConfig, opts: OracleOptions):
    w = config.weights
    oracle_result = minimize(config.triangle, w, opts)
    row = compare_omega_routes(w, oracle_point=oracle_result.point)
    result = {
        key: (config.from_rad(value) if key.startswith(("phi", "omega")) and value is not None else value)
        for key, value in row.model_dump().items()
    }
    return result, {"oracle_residual": oracle_result.stationarity_residual, "comparison": row}


DISPATCH: Dict[str, Callable[[RunConfig, OracleOptions], Tuple[Any, Dict[str, Any]]]] = {
    "solve": cmd_solve,
    "classify": cmd_classify,
    "minimize": cmd_minimize,
    "plasticity-generate": cmd_plasticity_generate,
    "plasticity-invert": cmd_plasticity_invert,
    "grid": cmd_grid,
    "compare-omega": cmd_compare_omega,
}


def exit_code_for(e: Exception) -> int:
    """Map an exception to the process exit code."""
    if isinstance(e, (NoConvergence, NoRealSolution)):
        return EXIT_NUMERIC
    if isinstance(e, (FermatError, pydantic.ValidationError, ValueError)):
        return EXIT_VALIDATION
    return 1


def error_line(e: Exception) -> str:
    return f"error={type(e).__name__} message={one_line(e)}"


def run(config: RunConfig, settings: Optional[FermatSettings] = None) -> RunOutcome:
    """Dispatch one command and serialize its report."""
    settings = settings or FermatSettings()
    logger = setup_logging(config.command, settings.log_file, settings.log_level)
    opts = settings.oracle_options()

    try:
        result, diagnostics = DISPATCH[config.command](config, opts)
    except Exception as e:
        details = handle_exception(e, logger, config.command)
        report = ""
        if config.output_format == "json":
            report = render_json({
                "input": _input_block(config),
                "result": None,
                "diagnostics": details,
                "version": __version__,
            }) + "\n"
        return RunOutcome(exit_code_for(e), report, error_line(e))

    if config.command == "grid" and config.output_format == "csv":
        return RunOutcome(EXIT_OK, render_grid_csv(result))
    if config.command == "compare-omega":
        comparison = diagnostics.pop("comparison")
        if config.output_format == "csv":
            path = config.output_path or os.path.join(settings.report_dir, OMEGA_REPORT_NAME)
            write_omega_report([comparison], path)
            return RunOutcome(EXIT_OK, "")
    if config.command == "grid":
        result = {"columns": list(GRID_COLUMNS), "rows": result.tolist()}

    logger.info(f"{config.command} finished")
    return RunOutcome(EXIT_OK, render_json({
        "input": _input_block(config),
        "result": result,
        "diagnostics": diagnostics,
        "version": __version__,
    }) + "\n")


class _Parser(argparse.ArgumentParser):
    """argparse with errors raised instead of printed."""

    def error(self, message):
        raise ValidationError(message)


def parse_reals(text: str, count: int, flag: str) -> Tuple[float, ...]:
    """Parse a comma-separated list of exactly `count` finite numbers."""
    parts = [p for p in text.replace(" ", "").split(",")]
    if len(parts) != count:
        raise ValidationError(f"{flag} expects {count} comma-separated numbers, got {len(parts)}")
    try:
        values = tuple(float(p) for p in parts)
    except ValueError as e:
        raise ValidationError(f"{flag}: {e}") from e
    if not all(math.isfinite(v) for v in values):
        raise ValidationError(f"{flag} values must be finite")
    return values


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--weights", required=True, help="w1,w2,w3 (positive)")
    common.add_argument("--triangle", default=None, help="x1,y1,z1,x2,y2,z2,x3,y3,z3 (default: octant triangle)")
    common.add_argument("--format", dest="output_format", choices=["json", "csv"], default="json")
    common.add_argument("--out", dest="output_path", default=None, help="Write the report here instead of stdout")
    common.add_argument("--angle-unit", choices=["rad", "deg"], default="rad")

    parser = _Parser(prog="fermat_cli.py", description="Weighted Fermat-Torricelli point on the unit sphere")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("solve", parents=[common], help="Fermat point (closed form on the octant, oracle elsewhere)")
    sub.add_parser("classify", parents=[common], help="Floating or absorbed, with margins")
    sub.add_parser("minimize", parents=[common], help="Numeric oracle only")
    generate = sub.add_parser("plasticity-generate", parents=[common], help="Shrink the triangle toward its Fermat point")
    generate.add_argument("--offsets", required=True, help="a,b,c")
    invert = sub.add_parser("plasticity-invert", parents=[common], help="Offsets from target sides")
    invert.add_argument("--targets", required=True, help="s12,s23,s13")
    invert.add_argument("--solver", choices=["newton", "weierstrass", "both"], default="both")
    grid = sub.add_parser("grid", parents=[common], help="Objective on a regular (omega, phi) grid")
    grid.add_argument("--resolution", type=int, default=100)
    sub.add_parser("compare-omega", parents=[common], help="Published vs closed-form vs oracle omega")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    values: Dict[str, Any] = {
        "command": args.command,
        "weights": Weights.of(parse_reals(args.weights, 3, "--weights")),
        "output_format": args.output_format,
        "output_path": args.output_path,
        "angle_unit": args.angle_unit,
    }
    if args.triangle:
        coords = parse_reals(args.triangle, 9, "--triangle")
        values["triangle"] = GeodesicTriangle.from_vectors(coords[0:3], coords[3:6], coords[6:9])
    if getattr(args, "offsets", None):
        values["offsets"] = parse_reals(args.offsets, 3, "--offsets")
    if getattr(args, "targets", None):
        values["targets"] = parse_reals(args.targets, 3, "--targets")
    if getattr(args, "resolution", None) is not None:
        values["resolution"] = args.resolution
    if getattr(args, "solver", None):
        values["solver"] = args.solver
    return RunConfig(**values)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Command-line entry point; returns the exit code."""
    try:
        settings = load_config()
        config = config_from_args(build_parser().parse_args(argv))
    except (FermatError, pydantic.ValidationError, ValueError) as e:
        print(error_line(e), file=sys.stderr)
        return EXIT_VALIDATION

    outcome = run(config, settings)
    if outcome.report:
        write_report(outcome.report, config.output_path)
    if outcome.error:
        print(outcome.error, file=sys.stderr)
    return outcome.exit_code


if __name__ == "__main__":
    sys.exit(main())
