"""
Run configuration: validated pydantic models loaded from JSON with fallback
to built-in defaults.
"""

from pathlib import Path
from typing import Any, Dict, List, Optional
import json
import logging
import os

from pydantic import BaseModel, Field, field_validator, model_validator

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_PATH = "data/config/default_config.json"
THREADS_ENV = "MOTHERSOLVE_THREADS"


class ToleranceConfig(BaseModel):
    """Acceptance tolerances."""
    mass: float = 1e-8
    frostman: float = 1e-7
    cauchy: float = 1e-6
    ell_relation: float = 1e-6
    duality: float = 1e-7
    harness: float = 1e-12
    escalation: float = 1e-10
    rate_low: float = 1.4
    rate_high: float = 2.6
    rate_fraction: float = 0.8


class TrajectoryConfig(BaseModel):
    """Trajectory tracing parameters relative to |z1 − z2|."""
    rtol: float = 1e-10
    atol: float = 1e-12
    launch_offset: float = 1e-6
    capture_radius: float = 1e-5
    node_capture_radius: float = 1e-4
    escape_radius: float = 50.0
    max_length: float = 200.0
    samples: int = Field(default=2001, ge=33)
    gl_nodes: int = Field(default=400, ge=16)


class QuadratureConfig(BaseModel):
    """Moment and planar quadrature parameters."""
    initial_nodes: int = 64
    max_nodes: int = 2 ** 15
    radial_nodes: int = 240
    extra_digits: int = 20
    grid_margin: float = 0.05


class RunConfig(BaseModel):
    """Validated configuration of a pipeline run."""
    Q0: float = 1.0
    Q1: float = 1.0
    w: float = 1.0
    N_list: List[int] = Field(default_factory=lambda: [10, 20, 40])
    r0_list: List[int] = Field(default_factory=lambda: [0, 1])
    precision: Optional[int] = None
    output_dir: str = "output"
    seed: int = 0
    w_list: List[float] = Field(default_factory=lambda: [0.5, 1.0, 2.0])
    quick: bool = False
    tolerances: ToleranceConfig = Field(default_factory=ToleranceConfig)
    trajectory: TrajectoryConfig = Field(default_factory=TrajectoryConfig)
    quadrature: QuadratureConfig = Field(default_factory=QuadratureConfig)

    @field_validator("Q0", "Q1", "w")
    @classmethod
    def _positive(cls, value: float) -> float:
        if value <= 0:
            raise ValueError(f"must be positive, got {value}")
        return value

    @model_validator(mode="after")
    def _check_sizes(self) -> "RunConfig":
        if not self.N_list:
            raise ValueError("N list must not be empty")
        for N in self.N_list:
            if N < 1:
                raise ValueError(f"N must be a positive integer, got {N}")
            for r0 in self.r0_list:
                # the norm chain needs P_{n+1,N} as well
                if N + r0 < 0 or N + r0 + 1 > N + N * self.Q0:
                    raise ValueError(f"Degree n = {N + r0} outside [0, N + N·Q0 − 1] for N={N}")
        return self

    def precision_for(self, n: int) -> int:
        """Working decimal digits for degree n: the override or 40 + 3n."""
        return self.precision if self.precision is not None else 40 + 3 * n

    def trace_settings(self):
        from src.mother_body import TraceSettings
        return TraceSettings(**self.trajectory.model_dump())


def _merge(defaults: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
    merged = dict(defaults)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_config(path: Optional[str] = None, **overrides) -> RunConfig:
    """
    Load a RunConfig from JSON.

    A missing or malformed file falls back to the defaults; missing sections
    are filled from the defaults. Keyword overrides win over the file.

    Args:
        path: Config file path (default: data/config/default_config.json)
        **overrides: Values that replace file values (None is ignored)

    Returns:
        Validated RunConfig
    """
    config_file = Path(path or DEFAULT_CONFIG_PATH)
    data: Dict[str, Any] = {}
    if config_file.exists():
        try:
            with open(config_file, "r", encoding="utf-8") as f:
                data = json.load(f)
            logger.info(f"Loaded configuration from {config_file}")
        except json.JSONDecodeError as e:
            logger.error(f"Error parsing configuration {config_file}: {e}")
            data = {}
    else:
        logger.warning(f"Configuration file not found: {config_file}. Using defaults.")

    defaults = RunConfig().model_dump()
    missing = [key for key in ("tolerances", "trajectory", "quadrature") if key not in data]
    if data and missing:
        logger.warning(f"Missing configuration sections filled from defaults: {missing}")
    merged = _merge(defaults, data)
    merged = _merge(merged, {k: v for k, v in overrides.items() if v is not None})
    return RunConfig(**merged)


def max_workers() -> int:
    """Thread pool size: MOTHERSOLVE_THREADS or min(4, cpu count)."""
    value = os.environ.get(THREADS_ENV)
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            logger.warning(f"Ignoring invalid {THREADS_ENV}={value!r}")
    return min(4, os.cpu_count() or 1)
