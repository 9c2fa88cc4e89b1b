from typing import Any, List, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

Side = Literal["controllability", "observability"]


class EksState(BaseModel):
    """
    Extended Krylov basis and its bookkeeping.

    `plus` and `minus` index the columns of K added in the latest extension that
    came from the G_C and G_C^{-1} directions; the next extension applies each
    operator to its own sub-block only. `AK` caches G_C K column by column.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    K: Any = Field(description="N x k orthonormal basis")
    AK: Any = Field(description="G_C @ K")
    plus: List[int] = Field(default_factory=list)
    minus: List[int] = Field(default_factory=list)
    j: int = 1
    A_proj: Any = None
    R_proj: Any = None
    residual_history: List[float] = Field(default_factory=list)
    deflations: int = 0

    @property
    def size(self) -> int:
        return self.K.shape[1]


class LowRankFactor(BaseModel):
    """Z with P ~ Z Z^T, plus the run record of the solver that produced it."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    Z: Any = Field(description="N x k")
    singular_values: Any = Field(description="Retained singular values of the projected solution")
    side: Side = "controllability"
    converged: bool = True
    iterations: int = 0
    residual: float = 0.0
    residual_history: List[float] = Field(default_factory=list)
    deflations: int = 0
    basis_size: int = 0

    @property
    def rank(self) -> int:
        return self.Z.shape[1]

    def gramian(self) -> np.ndarray:
        return self.Z @ self.Z.T
