import logging
from typing import List, Optional, Tuple

import numpy as np
import scipy.linalg

from src.config.defaults import DENSE_CAP, LYAPUNOV_RESIDUAL_TOL, PIVOT_TOL
from src.stages.bt_dense.lyapunov import lyapunov_factor, lyapunov_residual, solve_lyapunov_dense
from src.stages.bt_dense.schema import DenseGramianPair
from src.stages.bt_lowrank.schema import BalancingTransform, ReducedOrderModel, RomProvenance
from src.stages.bt_lowrank.square_root import truncate_from_roots
from src.stages.errors import CapExceededError, SingularMatrixError
from src.stages.model_ingest.schema import DescriptorSystem

logger = logging.getLogger(__name__)


def dense_state_matrices(system: DescriptorSystem, dense_cap: int = DENSE_CAP) -> Tuple[np.ndarray, np.ndarray]:
    """A = C^{-1} G and B_C = C^{-1} B as dense arrays, through one LU of C."""
    if system.N > dense_cap:
        raise CapExceededError(
            f"N = {system.N} exceeds the dense cap {dense_cap}", {"N": system.N, "cap": dense_cap}
        )
    lu, piv = scipy.linalg.lu_factor(system.C.toarray(), check_finite=True)
    pivots = np.abs(np.diag(lu))
    if pivots.min() <= PIVOT_TOL * pivots.max():
        raise SingularMatrixError("C is numerically singular", {"matrix": "C"})
    A = scipy.linalg.lu_solve((lu, piv), system.G.toarray())
    B_C = scipy.linalg.lu_solve((lu, piv), system.B.toarray())
    return A, B_C


def gramians_dense(
        system: DescriptorSystem,
        dense_cap: int = DENSE_CAP,
        warnings: Optional[List[str]] = None,
) -> DenseGramianPair:
    """Controllability and observability Gramians of C x' = G x + B u, y = L x by Bartels-Stewart."""
    A, B_C = dense_state_matrices(system, dense_cap)
    W_Q = system.L.T.toarray()

    P = solve_lyapunov_dense(A, B_C)
    Q = solve_lyapunov_dense(A.T, W_Q)
    residual_P = lyapunov_residual(A, P, B_C)
    residual_Q = lyapunov_residual(A.T, Q, W_Q)

    for label, residual in (("P", residual_P), ("Q", residual_Q)):
        if residual > LYAPUNOV_RESIDUAL_TOL:
            message = f"Lyapunov residual of {label} is {residual:.3e} > {LYAPUNOV_RESIDUAL_TOL:.0e}"
            logger.warning(message)
            if warnings is not None:
                warnings.append(message)
    logger.debug("Dense Gramians: N=%d, residuals P=%.2e Q=%.2e", system.N, residual_P, residual_Q)
    return DenseGramianPair(P=P, Q=Q, residual_P=residual_P, residual_Q=residual_Q)


def balance_truncate_dense(
        system: DescriptorSystem,
        order: Optional[int] = None,
        eps: Optional[float] = None,
        dense_cap: int = DENSE_CAP,
) -> Tuple[ReducedOrderModel, BalancingTransform]:
    """Balanced truncation with dense Gramians; the reference for the low-rank path."""
    provenance = RomProvenance(method="dense-oracle", requested_order=order, eps=eps)
    gramians = gramians_dense(system, dense_cap, warnings=provenance.warnings)
    provenance.residual_P = gramians.residual_P
    provenance.residual_Q = gramians.residual_Q

    Z_P = lyapunov_factor(gramians.P)
    Z_Q = lyapunov_factor(gramians.Q)
    provenance.rank_P = Z_P.shape[1]
    provenance.rank_Q = Z_Q.shape[1]
    return truncate_from_roots(Z_P, Z_Q, system, provenance, order=order, eps=eps)
