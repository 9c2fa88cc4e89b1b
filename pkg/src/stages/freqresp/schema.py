import re
from typing import Any, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.stages.errors import ConfigError, DimensionMismatchError, InputError

FrequencyUnit = Literal["hz", "rad/s"]
Spacing = Literal["log", "lin", "explicit"]
SampleKind = Literal["admittance", "generic", "scattering"]

_GRID_RE = re.compile(r"^\s*([^:]+):([^:]+):(\d+)(?::(log|lin))?\s*$", re.IGNORECASE)


class FrequencyGrid(BaseModel):
    """Strictly increasing positive frequencies tagged with their unit."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    points: Any = Field(description="Frequencies in `unit`")
    unit: FrequencyUnit = "hz"
    spacing: Spacing = "explicit"

    @field_validator("points")
    @classmethod
    def _increasing(cls, v: Any) -> np.ndarray:
        points = np.asarray(v, dtype=float).ravel()
        if points.size < 2:
            raise ConfigError("a frequency grid needs at least two points")
        if not np.all(np.isfinite(points)) or np.any(points <= 0):
            raise ConfigError("grid frequencies must be finite and positive")
        if np.any(np.diff(points) <= 0):
            raise ConfigError("grid frequencies must be strictly increasing")
        return points

    @classmethod
    def from_spec(cls, spec: str, unit: FrequencyUnit = "hz") -> "FrequencyGrid":
        """Parse 'start:stop:count[:log|lin]' (log when the spacing is omitted)."""
        match = _GRID_RE.match(spec)
        if not match:
            raise ConfigError(f"grid spec {spec!r} is not start:stop:count:log|lin")
        try:
            start, stop = float(match.group(1)), float(match.group(2))
        except ValueError:
            raise ConfigError(f"grid spec {spec!r} has non-numeric bounds")
        count = int(match.group(3))
        spacing = (match.group(4) or "log").lower()
        if spacing == "log":
            if start <= 0 or stop <= 0:
                raise ConfigError("log grid bounds must be positive")
            points = np.logspace(np.log10(start), np.log10(stop), count)
        else:
            points = np.linspace(start, stop, count)
        return cls(points=points, unit=unit, spacing=spacing)

    def __len__(self) -> int:
        return int(self.points.size)

    @property
    def omega(self) -> np.ndarray:
        return self.points * 2 * np.pi if self.unit == "hz" else self.points

    @property
    def hz(self) -> np.ndarray:
        return self.points if self.unit == "hz" else self.points / (2 * np.pi)

    def same_as(self, other: "FrequencyGrid") -> bool:
        return self.unit == other.unit and np.array_equal(self.points, other.points)


class TransferFunctionSamples(BaseModel):
    """H on every grid point, stacked as an array of shape (len(grid), q, p)."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    grid: FrequencyGrid
    H: Any
    kind: SampleKind = "generic"
    z0: Optional[float] = None
    ports: List[str] = Field(default_factory=list)
    outputs: List[str] = Field(default_factory=list)

    @field_validator("H")
    @classmethod
    def _complex_stack(cls, v: Any) -> np.ndarray:
        H = np.asarray(v, dtype=complex)
        if H.ndim != 3:
            raise DimensionMismatchError(f"samples must be (points, q, p), got shape {H.shape}")
        if not np.all(np.isfinite(H)):
            raise InputError("transfer function samples contain non-finite entries")
        return H

    @model_validator(mode="after")
    def _matches_grid(self) -> "TransferFunctionSamples":
        if self.H.shape[0] != len(self.grid):
            raise DimensionMismatchError(f"{self.H.shape[0]} samples for {len(self.grid)} grid points")
        return self

    @property
    def p(self) -> int:
        return self.H.shape[2]

    @property
    def q(self) -> int:
        return self.H.shape[1]


class ComparisonMetrics(BaseModel):
    """Grid estimates of ||a - b||: pointwise spectral norms, their max, RMS and per-entry max."""
    pointwise: List[float]
    max_error: float
    max_frequency: float
    unit: FrequencyUnit
    rms_error: float
    relative_max_error: float
    entry_max: List[List[float]]
