"""Problem files (JSON), iteration traces (CSV) and controller result files.

A problem file carries the plant matrices, cost weights, controller noise
feedthrough d, optional state CCR matrix theta1, a descent configuration
block, and an optional initial controller parameter triple:

    {"dims": {"n", "m1", "m2", "p1", "p2", "r"},
     "plant": {"A", "B", "C", "D", "E"},
     "weights": {"F", "G"},
     "d": [[...]],
     "theta1": [[...]],                      # optional
     "descent": {"h_max", "f", "sigma", "epsilon", "max_iters"},
     "init": {"R", "b", "e"}}                # optional

Matrices are row-major arrays of arrays; floats are written with Python's
shortest round-trip representation, so write-then-read reproduces every
matrix exactly at double precision.  When theta1 is absent it is derived from
the CCR-preservation identity of the plant (falling back to the canonical
choice when the plant data cannot support a consistent derivation).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .descent import DescentConfig, DescentResult, IterationRecord
from .errors import CqlqgError, DegenerateEquationError, ParseError, ValidationError
from .linalg import frobenius_norm
from .model import (
    CcrStructure,
    ControllerParams,
    ControllerRealization,
    PlantModel,
    PrResiduals,
    Theta1Derivation,
    build_canonical_ccr,
    derive_plant_theta1,
    pr_residuals,
    realize_controller,
)

TRACE_HEADER = ["k", "cost", "grad_norm", "horizon", "stepsize", "armijo_index", "second_gateaux"]

#: Relative threshold above which a derived theta1 is considered inconsistent
#: with the plant output equation and the canonical choice is used instead.
THETA1_FALLBACK_RTOL = 1e-2


@dataclass(frozen=True)
class Problem:
    """A fully resolved synthesis problem (plant, CCR structure, config)."""

    plant: PlantModel
    d: np.ndarray
    ccr: CcrStructure
    descent: DescentConfig
    init: ControllerParams | None = None
    theta1_source: str = "canonical"
    theta1_info: Theta1Derivation | None = None

    def plant_residuals(self) -> PrResiduals:
        """PR residuals of the plant with a zero controller (plant side only)."""
        zero = ControllerParams(
            R=np.zeros((self.ccr.n, self.ccr.n)),
            b=np.zeros((self.ccr.n, self.ccr.m2)),
            e=np.zeros((self.ccr.n, self.ccr.p1)),
        )
        k = realize_controller(zero, self.d, self.plant, self.ccr)
        return pr_residuals(self.plant, k, self.ccr)

    def realization_for(self, u: ControllerParams) -> ControllerRealization:
        return realize_controller(u, self.d, self.plant, self.ccr)


def _matrix_from_json(value, name: str, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    if not isinstance(value, list) or not value or not all(isinstance(r, list) for r in value):
        raise ParseError(f"{name} must be a non-empty array of arrays")
    width = len(value[0])
    if width == 0 or any(len(r) != width for r in value):
        raise ParseError(f"{name} has ragged rows")
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{name} contains non-numeric entries: {exc}") from exc
    if not np.all(np.isfinite(arr)):
        raise ParseError(f"{name} contains non-finite entries")
    if rows is not None and arr.shape[0] != rows:
        raise ParseError(f"{name} must have {rows} rows, got {arr.shape[0]}")
    if cols is not None and arr.shape[1] != cols:
        raise ParseError(f"{name} must have {cols} columns, got {arr.shape[1]}")
    return arr


def _matrix_to_json(arr: np.ndarray) -> list:
    return [[float(x) for x in row] for row in np.asarray(arr, dtype=float)]


def _require(mapping: dict, key: str, context: str):
    if key not in mapping:
        raise ParseError(f"missing key {key!r} in {context}")
    return mapping[key]


def resolve_theta1(plant: PlantModel, d, dims: dict, theta1=None):
    """Pick theta1 for a loaded plant: provided, derived, or canonical fallback.

    Returns (ccr, source, derivation-or-None).
    """
    n, m1, m2, p1, p2 = dims["n"], dims["m1"], dims["m2"], dims["p1"], dims["p2"]
    if theta1 is not None:
        ccr = build_canonical_ccr(n, m1, m2, p1, p2, theta1=theta1)
        return ccr, "provided", None
    canonical = build_canonical_ccr(n, m1, m2, p1, p2)
    try:
        derivation = derive_plant_theta1(plant, d, canonical)
    except (DegenerateEquationError, ValidationError):
        return canonical, "canonical", None
    scale = 1.0 + frobenius_norm(plant.B @ canonical.J1 @ plant.D.T)
    if derivation.ccr12_plant_residual > THETA1_FALLBACK_RTOL * scale:
        return canonical, "canonical", derivation
    ccr = build_canonical_ccr(n, m1, m2, p1, p2, theta1=derivation.theta1)
    return ccr, "derived", derivation


def problem_from_dict(data: dict) -> Problem:
    """Build a :class:`Problem` from parsed JSON data."""
    dims_raw = _require(data, "dims", "problem file")
    if not isinstance(dims_raw, dict):
        raise ParseError("dims must be an object")
    dims = {}
    for key in ("n", "m1", "m2", "p1", "p2", "r"):
        value = _require(dims_raw, key, "dims")
        if not isinstance(value, int) or value <= 0:
            raise ParseError(f"dims.{key} must be a positive integer")
        dims[key] = value
    n, m1, m2, p1, p2, r = (dims[k] for k in ("n", "m1", "m2", "p1", "p2", "r"))

    plant_raw = _require(data, "plant", "problem file")
    weights_raw = _require(data, "weights", "problem file")
    matrices = {
        "A": _matrix_from_json(_require(plant_raw, "A", "plant"), "A", n, n),
        "B": _matrix_from_json(_require(plant_raw, "B", "plant"), "B", n, m1),
        "C": _matrix_from_json(_require(plant_raw, "C", "plant"), "C", p1, n),
        "D": _matrix_from_json(_require(plant_raw, "D", "plant"), "D", p1, m1),
        "E": _matrix_from_json(_require(plant_raw, "E", "plant"), "E", n, p2),
        "F": _matrix_from_json(_require(weights_raw, "F", "weights"), "F", r, n),
        "G": _matrix_from_json(_require(weights_raw, "G", "weights"), "G", r, p2),
    }
    d = _matrix_from_json(_require(data, "d", "problem file"), "d", p2, m2)
    try:
        plant = PlantModel(**matrices)
    except CqlqgError as exc:
        raise ParseError(f"inconsistent plant data: {exc}") from exc

    theta1 = None
    if data.get("theta1") is not None:
        theta1 = _matrix_from_json(data["theta1"], "theta1", n, n)
    try:
        ccr, source, info = resolve_theta1(plant, d, dims, theta1)
    except CqlqgError as exc:
        raise ParseError(f"invalid theta1: {exc}") from exc

    descent_raw = data.get("descent", {})
    if not isinstance(descent_raw, dict):
        raise ParseError("descent must be an object")
    known = {"h_max", "f", "sigma", "epsilon", "max_iters"}
    unknown = set(descent_raw) - known
    if unknown:
        raise ParseError(f"unknown descent keys: {sorted(unknown)}")
    try:
        config = DescentConfig(**{k: descent_raw[k] for k in known & set(descent_raw)})
    except (CqlqgError, TypeError) as exc:
        raise ParseError(f"invalid descent block: {exc}") from exc

    init = None
    if data.get("init") is not None:
        init_raw = data["init"]
        if not isinstance(init_raw, dict):
            raise ParseError("init must be an object")
        try:
            init = ControllerParams(
                R=_matrix_from_json(_require(init_raw, "R", "init"), "init.R", n, n),
                b=_matrix_from_json(_require(init_raw, "b", "init"), "init.b", n, m2),
                e=_matrix_from_json(_require(init_raw, "e", "init"), "init.e", n, p1),
            )
        except CqlqgError as exc:
            raise ParseError(f"invalid init block: {exc}") from exc

    return Problem(
        plant=plant,
        d=d,
        ccr=ccr,
        descent=config,
        init=init,
        theta1_source=source,
        theta1_info=info,
    )


def problem_to_dict(problem: Problem, include_theta1: bool = True) -> dict:
    plant = problem.plant
    data = {
        "dims": {
            "n": problem.ccr.n,
            "m1": problem.ccr.m1,
            "m2": problem.ccr.m2,
            "p1": problem.ccr.p1,
            "p2": problem.ccr.p2,
            "r": plant.r,
        },
        "plant": {name: _matrix_to_json(getattr(plant, name)) for name in "ABCDE"},
        "weights": {name: _matrix_to_json(getattr(plant, name)) for name in "FG"},
        "d": _matrix_to_json(problem.d),
        "descent": {
            "h_max": problem.descent.h_max,
            "f": problem.descent.f,
            "sigma": problem.descent.sigma,
            "epsilon": problem.descent.epsilon,
            "max_iters": problem.descent.max_iters,
        },
    }
    if include_theta1 and problem.theta1_source == "provided":
        data["theta1"] = _matrix_to_json(problem.ccr.Theta1)
    if problem.init is not None:
        data["init"] = {
            "R": _matrix_to_json(problem.init.R),
            "b": _matrix_to_json(problem.init.b),
            "e": _matrix_to_json(problem.init.e),
        }
    return data


def load_problem(path, tolerance: float = 1e-8, strict: bool = False) -> Problem:
    """Load and resolve a problem file.

    PR residuals are always computed; in strict mode the load fails with
    :class:`ValidationError` when a plant-side residual exceeds
    ``tolerance * (1 + plant scale)``.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ParseError(f"{path} must contain a JSON object")
    problem = problem_from_dict(data)
    if strict:
        residuals = problem.plant_residuals()
        scale = 1.0 + max(frobenius_norm(getattr(problem.plant, m)) for m in "ABCDE")
        threshold = tolerance * scale
        worst = max(residuals.ccr11, residuals.ccr12_plant)
        if worst > threshold:
            raise ValidationError(
                f"plant PR residuals {residuals.ccr11:.3e}/{residuals.ccr12_plant:.3e} "
                f"exceed the strict threshold {threshold:.3e}"
            )
    return problem


def save_problem(path, problem: Problem) -> None:
    Path(path).write_text(json.dumps(problem_to_dict(problem), indent=2) + "\n")


def load_params(path) -> ControllerParams:
    """Read a controller parameter triple {"R", "b", "e"} from JSON."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ParseError(f"{path} must contain a JSON object")
    try:
        return ControllerParams(
            R=_matrix_from_json(_require(data, "R", "params file"), "R"),
            b=_matrix_from_json(_require(data, "b", "params file"), "b"),
            e=_matrix_from_json(_require(data, "e", "params file"), "e"),
        )
    except CqlqgError as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"invalid parameter data: {exc}") from exc


def save_params(path, u: ControllerParams) -> None:
    data = {"R": _matrix_to_json(u.R), "b": _matrix_to_json(u.b), "e": _matrix_to_json(u.e)}
    Path(path).write_text(json.dumps(data, indent=2) + "\n")


def save_controller(path, result: DescentResult, realization: ControllerRealization) -> None:
    """Write a synthesized controller with its realization and run summary."""
    data = {
        "R": _matrix_to_json(result.final_params.R),
        "b": _matrix_to_json(result.final_params.b),
        "e": _matrix_to_json(result.final_params.e),
        "realization": {name: _matrix_to_json(getattr(realization, name)) for name in "abcde"},
        "final_cost": result.final_cost,
        "termination": result.termination,
        "iterations": result.iterations,
        "final_grad_norm": result.final_grad_norm,
    }
    Path(path).write_text(json.dumps(data, indent=2) + "\n")


def write_trace(path, trace: list[IterationRecord]) -> None:
    """Write an iteration trace as CSV with one row per descent step."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(TRACE_HEADER)
        for rec in trace:
            writer.writerow(
                [rec.k, repr(rec.cost), repr(rec.grad_norm), repr(rec.horizon),
                 repr(rec.stepsize), rec.armijo_index, repr(rec.second_gateaux)]
            )


def read_trace(path) -> list[IterationRecord]:
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != TRACE_HEADER:
            raise ParseError(f"unexpected trace header {header!r}")
        records = []
        for row in reader:
            records.append(
                IterationRecord(
                    k=int(row[0]),
                    cost=float(row[1]),
                    grad_norm=float(row[2]),
                    horizon=float(row[3]),
                    stepsize=float(row[4]),
                    armijo_index=int(row[5]),
                    second_gateaux=float(row[6]),
                )
            )
    return records
