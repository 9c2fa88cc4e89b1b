from typing import Any, List

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.config.defaults import SYMMETRY_TOL
from src.stages.errors import DimensionMismatchError, LyapunovSolveError


class HsvSpectrum(BaseModel):
    """Hankel singular values, descending, with the truncation tails 2*sum_{i>r} sigma_i."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    sigma: Any = Field(description="Descending nonnegative Hankel singular values")
    tails: Any = Field(default=None, description="tails[r] = 2*sum(sigma[r:]) for r = 0..k")

    @field_validator("sigma")
    @classmethod
    def _descending(cls, v: Any) -> np.ndarray:
        sigma = np.asarray(v, dtype=float).ravel()
        if np.any(sigma < 0) or not np.all(np.isfinite(sigma)):
            raise LyapunovSolveError("Hankel singular values must be finite and nonnegative")
        if np.any(np.diff(sigma) > 0):
            raise LyapunovSolveError("Hankel singular values must be sorted descending")
        return sigma

    @model_validator(mode="after")
    def _tails(self) -> "HsvSpectrum":
        suffix = np.cumsum(self.sigma[::-1])[::-1]
        object.__setattr__(self, "tails", 2.0 * np.concatenate([suffix, [0.0]]))
        return self

    def __len__(self) -> int:
        return int(self.sigma.size)

    def tail(self, r: int) -> float:
        return float(self.tails[r])

    def to_list(self) -> List[float]:
        return [float(s) for s in self.sigma]


class DenseGramianPair(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    P: Any = Field(description="Controllability Gramian, N x N")
    Q: Any = Field(description="Observability Gramian, N x N")
    residual_P: float = 0.0
    residual_Q: float = 0.0

    @model_validator(mode="after")
    def _symmetric(self) -> "DenseGramianPair":
        if self.P.shape != self.Q.shape:
            raise DimensionMismatchError(f"P is {self.P.shape}, Q is {self.Q.shape}")
        for label, X in (("P", self.P), ("Q", self.Q)):
            scale = np.linalg.norm(X)
            if np.linalg.norm(X - X.T) > SYMMETRY_TOL * max(scale, 1e-300):
                raise LyapunovSolveError(f"Gramian {label} is not symmetric")
        return self
