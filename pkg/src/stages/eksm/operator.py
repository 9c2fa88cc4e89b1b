import logging
from typing import Callable, Tuple

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from src.config.defaults import PIVOT_TOL
from src.stages.eksm.schema import Side
from src.stages.errors import ConfigError, SingularMatrixError
from src.stages.model_ingest.schema import DescriptorSystem, max_abs

logger = logging.getLogger(__name__)

BlockMap = Callable[[np.ndarray], np.ndarray]


def sparse_lu(matrix, label: str):
    """splu with a relative pivot check; raises SingularMatrixError naming the matrix."""
    A = sp.csc_matrix(matrix, dtype=float)
    try:
        lu = splu(A)
    except RuntimeError as e:
        raise SingularMatrixError(f"{label} is singular: {e}", {"matrix": label})
    pivots = np.abs(lu.U.diagonal())
    scale = max_abs(A)
    if pivots.size and pivots.min() < PIVOT_TOL * scale:
        raise SingularMatrixError(
            f"{label} is numerically singular (pivot {pivots.min():.3e} < {PIVOT_TOL:.0e}*{scale:.3e})",
            {"matrix": label},
        )
    return lu


class CapacitanceSolver:
    """
    Factor-once solves with C. When C = blkdiag(Cn, M) the sparse Cn block goes
    through a sparse LU and the dense M block through a dense Cholesky.
    """

    def __init__(self, C: sp.csr_matrix, n: int, m: int):
        self.n = n
        self._full = None
        self._cn = None
        self._m = None
        if m and n and max_abs(C[:n, n:]) == 0 and max_abs(C[n:, :n]) == 0:
            self._cn = sparse_lu(C[:n, :n], "Cn")
            try:
                self._m = scipy.linalg.cho_factor(C[n:, n:].toarray())
            except np.linalg.LinAlgError:
                raise SingularMatrixError("inductance block M is not positive definite", {"matrix": "M"})
            logger.debug("C factored blockwise: sparse Cn (%d), dense M (%d)", n, m)
        else:
            self._full = sparse_lu(C, "C")

    def solve(self, V: np.ndarray, transpose: bool = False) -> np.ndarray:
        V = np.asarray(V, dtype=float)
        if self._full is not None:
            return self._full.solve(V, trans="T" if transpose else "N")
        # both blocks are symmetric, so the transposed solve is the plain one
        top = self._cn.solve(np.ascontiguousarray(V[: self.n]))
        bottom = scipy.linalg.cho_solve(self._m, V[self.n:])
        return np.concatenate([top, bottom], axis=0)


class OperatorPair:
    """Actions of G_C = C^{-1} G and its inverse (or their transposes) on blocks of vectors."""

    def __init__(self, side: Side, apply: BlockMap, apply_inverse: BlockMap, rhs_block: np.ndarray):
        self.side = side
        self._apply = apply
        self._apply_inverse = apply_inverse
        self.rhs_block = rhs_block

    @property
    def N(self) -> int:
        return self.rhs_block.shape[0]

    @property
    def p(self) -> int:
        return self.rhs_block.shape[1]

    def apply_G_C(self, V: np.ndarray) -> np.ndarray:
        return self._apply(np.asarray(V, dtype=float))

    def apply_G_C_inv(self, V: np.ndarray) -> np.ndarray:
        return self._apply_inverse(np.asarray(V, dtype=float))


class StateScaling:
    """
    Coordinate change x_hat = T x with T = blkdiag(diag(sqrt(diag(Cn))), R_M), M = R_M^T R_M.

    In these coordinates the capacitance block becomes unit-diagonal and the
    inductance block the identity, so T C^{-1} G T^{-1} has a negative
    semidefinite symmetric part whenever Cn is diagonal. Without the block
    structure the whole of C is scaled by its diagonal.
    """

    def __init__(self, system: DescriptorSystem):
        n, m = system.n, system.m
        C = system.C
        self._R = None
        if m and max_abs(C[:n, n:]) == 0:
            self.k = n
            try:
                self._R = scipy.linalg.cholesky(C[n:, n:].toarray())
            except np.linalg.LinAlgError:
                raise SingularMatrixError("inductance block M is not positive definite", {"matrix": "M"})
        else:
            self.k = system.N
        diagonal = C.diagonal()[: self.k]
        if np.any(diagonal <= 0):
            raise SingularMatrixError("C has a non-positive diagonal entry", {"matrix": "C"})
        self._d = np.sqrt(diagonal)[:, None]

    def _blocks(self, V: np.ndarray, top, bottom) -> np.ndarray:
        V = np.asarray(V, dtype=float)
        if self._R is None:
            return top(V)
        return np.concatenate([top(V[: self.k]), bottom(V[self.k:])], axis=0)

    def T(self, V: np.ndarray) -> np.ndarray:
        return self._blocks(V, lambda X: self._d * X, lambda X: self._R @ X)

    def T_inv(self, V: np.ndarray) -> np.ndarray:
        return self._blocks(V, lambda X: X / self._d, lambda X: scipy.linalg.solve_triangular(self._R, X))

    def T_t(self, V: np.ndarray) -> np.ndarray:
        return self._blocks(V, lambda X: self._d * X, lambda X: self._R.T @ X)

    def T_inv_t(self, V: np.ndarray) -> np.ndarray:
        return self._blocks(
            V, lambda X: X / self._d, lambda X: scipy.linalg.solve_triangular(self._R, X, trans="T")
        )


def scaled_operator(op: OperatorPair, scaling: StateScaling) -> Tuple[OperatorPair, BlockMap]:
    """
    The similar operator S G_C S^{-1} with S = T (controllability) or T^{-T}
    (observability), and the map S^{-1} taking its Gramian factors back.
    """
    if op.side == "controllability":
        S, S_inv = scaling.T, scaling.T_inv
    else:
        S, S_inv = scaling.T_inv_t, scaling.T_t
    scaled = OperatorPair(
        op.side,
        apply=lambda V: S(op.apply_G_C(S_inv(V))),
        apply_inverse=lambda V: S(op.apply_G_C_inv(S_inv(V))),
        rhs_block=S(op.rhs_block),
    )
    return scaled, S_inv


def build_operator(system: DescriptorSystem, side: Side = "controllability") -> OperatorPair:
    """
    Factor C and G once and expose the operator pair of one Gramian side.

    controllability: G_C V = C^{-1} G V, G_C^{-1} V = G^{-1} C V, rhs = C^{-1} B
    observability:   G_C^T V = G^T C^{-T} V, G_C^{-T} V = C^T G^{-T} V, rhs = L^T
    """
    C_solver = CapacitanceSolver(system.C, system.n, system.m)
    G_lu = sparse_lu(system.G, "G")
    G, C = system.G, system.C

    if side == "controllability":
        rhs = C_solver.solve(system.B.toarray())
        return OperatorPair(
            side,
            apply=lambda V: C_solver.solve(G @ V),
            apply_inverse=lambda V: G_lu.solve(C @ V),
            rhs_block=rhs,
        )
    if side == "observability":
        rhs = system.L.T.toarray()
        return OperatorPair(
            side,
            apply=lambda V: G.T @ C_solver.solve(V, transpose=True),
            apply_inverse=lambda V: C.T @ G_lu.solve(V, trans="T"),
            rhs_block=rhs,
        )
    raise ConfigError(f"unknown Gramian side {side!r}")
