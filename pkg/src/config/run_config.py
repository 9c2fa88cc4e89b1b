"""
Run configuration.

Precedence, lowest first: field defaults, a flat ``key = value`` file, environment
variables ``RLCK_MOR_<KEY>``, command-line flags.
"""
import logging
import os
from pathlib import Path
from typing import Any, Dict, Literal, Mapping, Optional

from pydantic import BaseModel, Field, ValidationError, field_validator

from src.config.defaults import C_MIN, DEFAULT_GRID, DEFAULT_Z0, DENSE_CAP, EKSM_MAXITER, EKSM_TOL
from src.stages.errors import ConfigError
from src.stages.freqresp.schema import FrequencyGrid

logger = logging.getLogger(__name__)

ENV_PREFIX = "RLCK_MOR_"

Mode = Literal["eksm", "dense-oracle"]


class RunConfig(BaseModel):
    input: Path = Field(description="Netlist or matrix manifest (.json)")
    mode: Mode = Field("eksm", description="Gramian computation: EKSM or the dense oracle")
    tol: float = Field(EKSM_TOL, gt=0, description="EKSM relative residual tolerance")
    maxiter: int = Field(EKSM_MAXITER, ge=1)
    order: Optional[int] = Field(None, ge=1, description="Reduced order; overrides eps")
    eps: Optional[float] = Field(None, ge=0, description="Absolute error-bound target")
    grid: str = Field(DEFAULT_GRID, description="start:stop:count:log|lin in Hz")
    z0: float = Field(DEFAULT_Z0, gt=0, description="Reference impedance in ohms")
    out: Path = Field(Path("rom_out"), description="Output directory")
    verbosity: int = Field(0, ge=0)
    threads: int = Field(2, ge=1)
    c_min: Optional[float] = Field(C_MIN, description="Grounding capacitance; none disables")
    dense_cap: int = Field(DENSE_CAP, ge=1)

    @field_validator("c_min", mode="before")
    @classmethod
    def _disabled(cls, v: Any) -> Any:
        if isinstance(v, str) and v.strip().lower() in ("", "none", "off", "0"):
            return None
        return v

    @field_validator("grid")
    @classmethod
    def _grid(cls, v: str) -> str:
        FrequencyGrid.from_spec(v)
        return v

    def frequency_grid(self) -> FrequencyGrid:
        return FrequencyGrid.from_spec(self.grid)


def read_config_file(path: Path) -> Dict[str, str]:
    """Flat key = value lines; '#' starts a comment."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}")
    values: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value", {"line": lineno})
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.lower().replace("-", "_")
        if key not in RunConfig.model_fields:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}", {"line": lineno})
        values[key] = value
    return values


def load_run_config(
        flags: Mapping[str, Any],
        config_file: Optional[Path] = None,
        environ: Optional[Mapping[str, str]] = None,
) -> RunConfig:
    values: Dict[str, Any] = {}
    if config_file is not None:
        values.update(read_config_file(config_file))

    for name in RunConfig.model_fields:
        key = f"{ENV_PREFIX}{name.upper()}"
        env = environ.get(key) if environ is not None else os.getenv(key)
        if env is not None:
            values[name] = env

    values.update({k: v for k, v in flags.items() if v is not None and k in RunConfig.model_fields})
    try:
        config = RunConfig.model_validate(values)
    except ValidationError as e:
        raise ConfigError(f"invalid configuration: {e.errors()[0]['loc']} {e.errors()[0]['msg']}",
                          {"errors": [str(err["loc"]) for err in e.errors()]})
    logger.debug("Run configuration: %s", config.model_dump())
    return config
