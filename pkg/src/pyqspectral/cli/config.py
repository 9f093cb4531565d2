"""
Run configuration for the ``pyqspectral`` command.

A run is described by one JSON document; see ``docs/configuration.rst``
for the schema. `parse_config` validates the whole document and reports
every violation at once.
"""

import json
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any

from ..errors import ConfigError

logger = logging.getLogger(__name__)

PIPELINES = (
    "transform",
    "solve-heat",
    "solve-wave",
    "solve-forced-wave",
    "verify",
    "kernel-table",
    "limit-study",
)
PROBLEM_KINDS = ("heat", "wave", "forced-wave")
DEFAULT_TOLERANCES = {"kernel": 1e-10, "residual": None, "apriori": 1e-6}
DEFAULT_PHI = {"family": "gaussian-bump", "params": {"a": 0.125, "power": 2}}


@dataclass(frozen=True)
class DataSelector:
    """
    Selects lattice data by family name or from a CSV file.

    Attributes:
        family (str | None): Family name, e.g. ``"gaussian-bump"``.
        params (dict): Family parameters.
        csv (str | None): Path of a ``k, sign, re, im`` CSV file.
    """

    family: str | None = None
    params: dict = field(default_factory=dict)
    csv: str | None = None

    def describe(self) -> dict:
        if self.csv is not None:
            return {"csv": self.csv}
        return {"family": self.family, "params": dict(self.params)}


@dataclass(frozen=True)
class ForcingSelector:
    """
    A separable forcing ``a(t) g(x)``.

    Attributes:
        family (str): Time factor, ``"zero"``, ``"constant"``, ``"decaying"`` or ``"oscillating"``.
        params (dict): Time-factor parameters.
        profile (dict): ``{"family": ..., "params": {...}}`` selecting g.
    """

    family: str = "zero"
    params: dict = field(default_factory=dict)
    profile: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ProblemConfig:
    kind: str = "heat"
    m: float = 1.0
    b: float = 1.0
    T: float = 1.0


@dataclass(frozen=True)
class RunConfig:
    """
    Everything one ``pyqspectral`` run needs.

    Attributes:
        pipeline (str): One of `PIPELINES`.
        q (float): Deformation parameter.
        k_min (int): Smallest lattice exponent.
        k_max (int): Largest lattice exponent.
        mode (str): ``"full"`` or ``"half"`` transform.
        problem (ProblemConfig): PDE coefficients and final time.
        phi (DataSelector): Initial data (or transform input).
        psi (DataSelector): Initial velocity of the wave problem.
        forcing (ForcingSelector): Source term.
        time_nodes (int): Number of uniform time nodes.
        quadrature_panels (int): Gauss-Legendre panels for Duhamel integrals.
        tolerances (dict): ``kernel``, ``residual`` and ``apriori`` thresholds.
        precision_digits (int): Minimum working digits of series evaluations.
        limit_qs (tuple[float, ...]): q values of the classical-limit study.
        output_dir (str): Directory receiving every artifact.
        trajectory (str | None): Stored trajectory to re-check in ``verify``.
        verbose (bool): Echo log messages to the console.
    """

    pipeline: str
    q: float = 0.5
    k_min: int = -16
    k_max: int = 48
    mode: str = "full"
    problem: ProblemConfig = field(default_factory=ProblemConfig)
    phi: DataSelector = field(
        default_factory=lambda: DataSelector(DEFAULT_PHI["family"], dict(DEFAULT_PHI["params"]))
    )
    psi: DataSelector = field(default_factory=lambda: DataSelector("zero"))
    forcing: ForcingSelector = field(default_factory=ForcingSelector)
    time_nodes: int = 65
    quadrature_panels: int = 8
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    precision_digits: int = 60
    limit_qs: tuple[float, ...] = (0.9, 0.99, 0.999)
    output_dir: str = "pyqspectral-out"
    trajectory: str | None = None
    verbose: bool = False

    def with_overrides(self, **overrides: Any) -> "RunConfig":
        changes = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **changes) if changes else self

    def describe(self) -> dict:
        return {
            "pipeline": self.pipeline,
            "q": self.q,
            "k_min": self.k_min,
            "k_max": self.k_max,
            "mode": self.mode,
            "problem": vars(self.problem),
            "initial_data": {"phi": self.phi.describe(), "psi": self.psi.describe()},
            "forcing": {
                "family": self.forcing.family,
                "params": self.forcing.params,
                "profile": self.forcing.profile,
            },
            "time_nodes": self.time_nodes,
            "quadrature_panels": self.quadrature_panels,
            "tolerances": self.tolerances,
            "precision_digits": self.precision_digits,
            "limit_qs": list(self.limit_qs),
            "trajectory": self.trajectory,
        }


def _number(data: dict, key: str, default, violations: list[str], kind=float):
    value = data.get(key, default)
    try:
        value = kind(value)
    except (TypeError, ValueError):
        violations.append(f"{key} must be a {kind.__name__}, got {data.get(key)!r}")
        return default
    if kind is float and not math.isfinite(value):
        violations.append(f"{key} must be finite, got {value}")
    return value


def _selector(raw: Any, name: str, violations: list[str]) -> DataSelector:
    if raw is None:
        return DataSelector("zero")
    if not isinstance(raw, dict):
        violations.append(f"initial_data.{name} must be an object")
        return DataSelector("zero")
    if "csv" in raw:
        return DataSelector(csv=str(raw["csv"]))
    if "family" not in raw:
        violations.append(f"initial_data.{name} needs 'family' or 'csv'")
        return DataSelector("zero")
    params = raw.get("params", {})
    if not isinstance(params, dict):
        violations.append(f"initial_data.{name}.params must be an object")
        params = {}
    return DataSelector(str(raw["family"]), params)


def config_from_dict(data: dict) -> RunConfig:
    """
    Validates a configuration document.

    Raises:
        ConfigError: Listing every violated constraint.
    """
    violations: list[str] = []
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object")

    pipeline = data.get("pipeline")
    if pipeline not in PIPELINES:
        violations.append(f"pipeline must be one of {list(PIPELINES)}, got {pipeline!r}")

    q = _number(data, "q", 0.5, violations)
    if not (0.0 < q < 1.0):
        violations.append(f"q must satisfy 0 < q < 1, got {q}")
    k_min = _number(data, "k_min", -16, violations, int)
    k_max = _number(data, "k_max", 48, violations, int)
    if k_min > k_max:
        violations.append(f"k_min must not exceed k_max, got {k_min} > {k_max}")
    mode = data.get("mode", "full")
    if mode not in ("full", "half"):
        violations.append(f"mode must be 'full' or 'half', got {mode!r}")

    raw_problem = data.get("problem", {})
    if not isinstance(raw_problem, dict):
        violations.append("problem must be an object")
        raw_problem = {}
    kind = raw_problem.get("kind", "heat")
    if kind not in PROBLEM_KINDS:
        violations.append(f"problem.kind must be one of {list(PROBLEM_KINDS)}, got {kind!r}")
    m = _number(raw_problem, "m", 1.0, violations)
    b = _number(raw_problem, "b", 1.0, violations)
    T = _number(raw_problem, "T", 1.0, violations)
    if m <= 0:
        violations.append(f"problem.m must be positive, got {m}")
    if T <= 0:
        violations.append(f"problem.T must be positive, got {T}")
    if kind in ("wave", "forced-wave"):
        if b <= 0:
            violations.append(f"problem.b must be positive, got {b}")
        if b * b >= 4 * m:
            violations.append(f"wave requires b^2 < 4m, got b^2={b * b:g} and 4m={4 * m:g}")

    initial = data.get("initial_data", {})
    if not isinstance(initial, dict):
        violations.append("initial_data must be an object")
        initial = {}
    phi = _selector(initial.get("phi", DEFAULT_PHI), "phi", violations)
    psi = _selector(initial.get("psi"), "psi", violations)

    raw_forcing = data.get("forcing", {"family": "zero"})
    if not isinstance(raw_forcing, dict):
        violations.append("forcing must be an object")
        raw_forcing = {}
    forcing = ForcingSelector(
        str(raw_forcing.get("family", "zero")),
        dict(raw_forcing.get("params", {})),
        dict(raw_forcing.get("profile", {})),
    )

    time_nodes = _number(data, "time_nodes", 65, violations, int)
    if time_nodes < 3:
        violations.append(f"time_nodes must be at least 3, got {time_nodes}")
    panels = _number(data, "quadrature_panels", 8, violations, int)
    if panels < 1:
        violations.append(f"quadrature_panels must be at least 1, got {panels}")
    digits = _number(data, "precision_digits", 60, violations, int)
    if digits < 16:
        violations.append(f"precision_digits must be at least 16, got {digits}")

    tolerances = dict(DEFAULT_TOLERANCES)
    raw_tol = data.get("tolerances", {})
    if not isinstance(raw_tol, dict):
        violations.append("tolerances must be an object")
        raw_tol = {}
    for key, value in raw_tol.items():
        if key not in DEFAULT_TOLERANCES:
            violations.append(f"unknown tolerance {key!r}")
        elif value is not None and not (isinstance(value, (int, float)) and value > 0):
            violations.append(f"tolerances.{key} must be positive, got {value!r}")
        else:
            tolerances[key] = value

    limit_qs = data.get("limit_qs", [0.9, 0.99, 0.999])
    if not isinstance(limit_qs, list) or not all(
        isinstance(v, (int, float)) and 0 < v < 1 for v in limit_qs
    ) or len(limit_qs) < 2:
        violations.append(f"limit_qs must list at least two q values in (0, 1), got {limit_qs!r}")
        limit_qs = [0.9, 0.99, 0.999]

    if violations:
        raise ConfigError(
            "invalid configuration:\n  - " + "\n  - ".join(violations), violations
        )

    return RunConfig(
        pipeline=pipeline,
        q=q,
        k_min=k_min,
        k_max=k_max,
        mode=mode,
        problem=ProblemConfig(kind, m, b, T),
        phi=phi,
        psi=psi,
        forcing=forcing,
        time_nodes=time_nodes,
        quadrature_panels=panels,
        tolerances=tolerances,
        precision_digits=digits,
        limit_qs=tuple(float(v) for v in limit_qs),
        output_dir=str(data.get("output_dir", "pyqspectral-out")),
        trajectory=data.get("trajectory"),
    )


def parse_config(path: str, **overrides: Any) -> RunConfig:
    """
    Reads and validates a JSON configuration file.

    Args:
        path (str): The file.
        **overrides: Non-None values replace the file's settings before
            validation (``pipeline``, ``output_dir``, ``mode``,
            ``precision_digits``); ``verbose`` is not part of the file.

    Raises:
        ConfigError: If the file is missing, malformed or violates a constraint.
    """
    try:
        with open(path) as f:
            data = json.load(f)
    except FileNotFoundError as e:
        raise ConfigError(f"configuration file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"malformed JSON in {path}: {e}") from e

    if not isinstance(data, dict):
        raise ConfigError(f"configuration in {path} must be a JSON object")
    verbose = bool(overrides.pop("verbose", False))
    data.update({k: v for k, v in overrides.items() if v is not None})
    cfg = config_from_dict(data).with_overrides(verbose=verbose)
    logger.info(f"Loaded configuration {path} for pipeline {cfg.pipeline}")
    return cfg
