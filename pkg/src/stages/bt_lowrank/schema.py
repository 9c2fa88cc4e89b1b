from typing import Any, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.stages.bt_dense.schema import HsvSpectrum
from src.stages.errors import DimensionMismatchError, SingularMatrixError
from src.stages.model_ingest.schema import DescriptorSystem


class RomProvenance(BaseModel):
    """How a ROM was produced; serialized verbatim into the ROM manifest."""
    method: Literal["dense-oracle", "eksm"]
    requested_order: Optional[int] = None
    eps: Optional[float] = None
    tol: Optional[float] = None
    maxiter: Optional[int] = None
    iterations_P: Optional[int] = None
    iterations_Q: Optional[int] = None
    residual_P: Optional[float] = None
    residual_Q: Optional[float] = None
    converged_P: Optional[bool] = None
    converged_Q: Optional[bool] = None
    deflations_P: Optional[int] = None
    deflations_Q: Optional[int] = None
    rank_P: Optional[int] = None
    rank_Q: Optional[int] = None
    biorthogonality_defect: Optional[float] = None
    bound_is_lower_estimate: bool = Field(
        False, description="HSV tail computed from truncated factors only"
    )
    warnings: List[str] = Field(default_factory=list)


class BalancingTransform(BaseModel):
    """Square-root projectors: T (r x N) and T_inv (N x r) with T @ T_inv ~ I_r."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    T: Any
    T_inv: Any

    @model_validator(mode="after")
    def _dims(self) -> "BalancingTransform":
        r, N = self.T.shape
        if self.T_inv.shape != (N, r):
            raise DimensionMismatchError(f"T is {self.T.shape} but T_inv is {self.T_inv.shape}")
        return self

    @property
    def order(self) -> int:
        return self.T.shape[0]

    def defect(self) -> float:
        """max |T T_inv - I|."""
        return float(np.max(np.abs(self.T @ self.T_inv - np.eye(self.order))))


class ReducedOrderModel(BaseModel):
    """Dense reduced quadruple C~ x' = G~ x + B~ u, y = L~ x."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    G: Any = Field(description="r x r")
    C: Any = Field(description="r x r, the identity in balanced coordinates")
    B: Any = Field(description="r x p")
    L: Any = Field(description="q x r")
    hsv: HsvSpectrum
    error_bound: float
    ports: List[str] = Field(default_factory=list)
    outputs: List[str] = Field(default_factory=list)
    provenance: RomProvenance

    @field_validator("G", "C", "B", "L")
    @classmethod
    def _dense(cls, v: Any) -> np.ndarray:
        return np.atleast_2d(np.asarray(v, dtype=float))

    @model_validator(mode="after")
    def _consistent(self) -> "ReducedOrderModel":
        r = self.G.shape[0]
        if self.G.shape != (r, r) or self.C.shape != (r, r):
            raise DimensionMismatchError(f"G~ {self.G.shape} and C~ {self.C.shape} must be {r}x{r}")
        if self.B.shape[0] != r or self.L.shape[1] != r:
            raise DimensionMismatchError(f"B~ {self.B.shape} / L~ {self.L.shape} inconsistent with r={r}")
        if r > len(self.hsv):
            raise DimensionMismatchError(f"order {r} exceeds the {len(self.hsv)} available HSVs")
        if np.linalg.cond(self.C) > 1e12:
            raise SingularMatrixError("reduced C~ is numerically singular")
        return self

    @property
    def order(self) -> int:
        return self.G.shape[0]

    @property
    def p(self) -> int:
        return self.B.shape[1]

    @property
    def q(self) -> int:
        return self.L.shape[0]

    def as_descriptor(self) -> DescriptorSystem:
        """The ROM as a DescriptorSystem with r node states and no branch states."""
        return DescriptorSystem(
            G=self.G, C=self.C, B=self.B, L=self.L,
            n=self.order, m=0, ports=self.ports, outputs=self.outputs,
        )
