import math
from typing import Any, Dict, List, Optional

import numpy as np
import scipy.sparse as sp
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.config.defaults import SYMMETRY_TOL
from src.stages.errors import DimensionMismatchError, ElementListError, SymmetryError

GROUND = "0"


class _Element(BaseModel):
    """Common fields of every netlist element; line/column are 1-based (0 = programmatic)."""
    name: str = Field(description="Element name including its type prefix, e.g. R1")
    line: int = Field(0, description="Source line of the element")
    column: int = Field(1, description="Source column of the element name")


class _TwoTerminal(_Element):
    node_a: str = Field(description="Positive terminal")
    node_b: str = Field(description="Negative terminal")

    @property
    def nodes(self) -> List[str]:
        return [self.node_a, self.node_b]


def _require_positive(value: float, label: str) -> float:
    if not math.isfinite(value) or value <= 0:
        raise ElementListError(f"{label} must be finite and positive, got {value!r}")
    return value


class Resistor(_TwoTerminal):
    ohms: float

    @field_validator("ohms")
    @classmethod
    def _positive(cls, v: float) -> float:
        return _require_positive(v, "resistance")


class Capacitor(_TwoTerminal):
    farads: float

    @field_validator("farads")
    @classmethod
    def _positive(cls, v: float) -> float:
        return _require_positive(v, "capacitance")


class Inductor(_TwoTerminal):
    """Inductive branch; the branch current flows from node_a to node_b."""
    henries: float

    @field_validator("henries")
    @classmethod
    def _positive(cls, v: float) -> float:
        return _require_positive(v, "self-inductance")


class MutualCoupling(_Element):
    """Coupling between two inductors, given either as coefficient k or mutual henries."""
    inductor_a: str
    inductor_b: str
    coefficient: Optional[float] = None
    henries: Optional[float] = None

    @model_validator(mode="after")
    def _one_form(self) -> "MutualCoupling":
        if (self.coefficient is None) == (self.henries is None):
            raise ElementListError(
                f"{self.name}: give exactly one of coupling coefficient or mutual henries"
            )
        value = self.coefficient if self.coefficient is not None else self.henries
        if not math.isfinite(value):
            raise ElementListError(f"{self.name}: coupling value must be finite")
        if self.coefficient is not None and abs(self.coefficient) > 1.0:
            raise ElementListError(f"{self.name}: |k| = {abs(self.coefficient)} exceeds 1")
        return self


class Port(_Element):
    """Current-driven, voltage-observed port between node and its reference."""
    node: str
    reference: str = GROUND


class ModelStatistics(BaseModel):
    """Model characteristics; element counts are unknown (None) for matrix inputs."""
    initial_order: int
    nodes: int
    ports: int
    resistors: Optional[int] = None
    capacitors: Optional[int] = None
    inductors: Optional[int] = None
    mutual_inductances: Optional[int] = None


class ElementList(BaseModel):
    resistors: List[Resistor] = Field(default_factory=list)
    capacitors: List[Capacitor] = Field(default_factory=list)
    inductors: List[Inductor] = Field(default_factory=list)
    mutual_couplings: List[MutualCoupling] = Field(default_factory=list)
    ports: List[Port] = Field(default_factory=list)

    @model_validator(mode="after")
    def _references(self) -> "ElementList":
        node_set = set(self.node_order())
        for port in self.ports:
            if port.node == GROUND or port.node not in node_set:
                raise ElementListError(
                    f"port {port.name} references unknown node {port.node!r}",
                    {"port": port.name, "node": port.node},
                )
        by_name = {ind.name.upper(): ind for ind in self.inductors}
        for k in self.mutual_couplings:
            for ref in (k.inductor_a, k.inductor_b):
                if ref.upper() not in by_name:
                    raise ElementListError(
                        f"{k.name} references undeclared inductor {ref}",
                        {"coupling": k.name, "inductor": ref},
                    )
            if k.henries is not None:
                la = by_name[k.inductor_a.upper()].henries
                lb = by_name[k.inductor_b.upper()].henries
                if k.henries ** 2 > la * lb:
                    raise ElementListError(
                        f"{k.name}: mutual inductance {k.henries} violates M^2 <= L_i L_j"
                    )
        return self

    def node_order(self) -> List[str]:
        """Non-ground nodes in order of first appearance."""
        elements = sorted(
            [*self.resistors, *self.capacitors, *self.inductors],
            key=lambda e: e.line,
        )
        seen: Dict[str, None] = {}
        for element in elements:
            for node in element.nodes:
                if node != GROUND:
                    seen.setdefault(node, None)
        return list(seen)

    def statistics(self) -> ModelStatistics:
        n = len(self.node_order())
        return ModelStatistics(
            initial_order=n + len(self.inductors),
            nodes=n,
            ports=len(self.ports),
            resistors=len(self.resistors),
            capacitors=len(self.capacitors),
            inductors=len(self.inductors),
            mutual_inductances=len(self.mutual_couplings),
        )


def max_abs(matrix: Any) -> float:
    if sp.issparse(matrix):
        return float(abs(matrix).max()) if matrix.nnz else 0.0
    return float(np.max(np.abs(matrix))) if np.size(matrix) else 0.0


class DescriptorSystem(BaseModel):
    """C x' = G x + B u, y = L x with the MNA block layout of n node and m branch states."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    G: Any = Field(description="N x N sparse, -[[Gn, E], [-E^T, 0]]")
    C: Any = Field(description="N x N sparse, blkdiag(Cn, M)")
    B: Any = Field(description="N x p sparse input incidence")
    L: Any = Field(description="q x N sparse output incidence")
    n: int
    m: int = 0
    ports: List[str] = Field(default_factory=list)
    outputs: List[str] = Field(default_factory=list)

    @field_validator("G", "C", "B", "L")
    @classmethod
    def _as_csr(cls, v: Any) -> sp.csr_matrix:
        return sp.csr_matrix(v, dtype=float)

    @model_validator(mode="after")
    def _consistent(self) -> "DescriptorSystem":
        N = self.G.shape[0]
        checks = {
            "G": (self.G.shape, (N, N)),
            "C": (self.C.shape, (N, N)),
            "B": (self.B.shape[0], N),
            "L": (self.L.shape[1], N),
            "n + m": (self.n + self.m, N),
        }
        for label, (got, expected) in checks.items():
            if got != expected:
                raise DimensionMismatchError(
                    f"{label}: got {got}, expected {expected}",
                    {"matrix": label, "got": str(got), "expected": str(expected)},
                )
        if self.ports and len(self.ports) != self.B.shape[1]:
            raise DimensionMismatchError(
                f"{len(self.ports)} port names for {self.B.shape[1]} input columns"
            )
        if self.outputs and len(self.outputs) != self.L.shape[0]:
            raise DimensionMismatchError(
                f"{len(self.outputs)} output names for {self.L.shape[0]} output rows"
            )
        asym = max_abs(self.C - self.C.T)
        if asym > SYMMETRY_TOL * max_abs(self.C):
            raise SymmetryError(f"C is not symmetric (max |C - C^T| = {asym:.3e})")
        return self

    @property
    def N(self) -> int:
        return self.G.shape[0]

    @property
    def p(self) -> int:
        return self.B.shape[1]

    @property
    def q(self) -> int:
        return self.L.shape[0]

    def port_names(self) -> List[str]:
        return self.ports or [f"P{i + 1}" for i in range(self.p)]

    def output_names(self) -> List[str]:
        return self.outputs or (self.ports if self.q == self.p else [f"Y{i + 1}" for i in range(self.q)])

    def blocks(self) -> Dict[str, sp.csr_matrix]:
        """Gn, E, Cn and M slices of the MNA layout."""
        n = self.n
        return {
            "Gn": -self.G[:n, :n],
            "E": -self.G[:n, n:],
            "Cn": self.C[:n, :n],
            "M": self.C[n:, n:],
        }
