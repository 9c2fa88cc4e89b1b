import logging
from typing import List, Optional, Tuple

import numpy as np

from src.config.defaults import BIORTHOGONALITY_TOL, DEFAULT_RELATIVE_EPS
from src.stages.bt_dense.hsv import hsv_from_values, numerical_rank, select_order
from src.stages.bt_dense.schema import HsvSpectrum
from src.stages.bt_lowrank.schema import BalancingTransform, ReducedOrderModel, RomProvenance
from src.stages.eksm.operator import CapacitanceSolver
from src.stages.eksm.schema import LowRankFactor
from src.stages.errors import ConfigError, RankError
from src.stages.model_ingest.schema import DescriptorSystem

logger = logging.getLogger(__name__)


def rom_error_bound(hsv: HsvSpectrum, r: int) -> float:
    """2 * sum_{i>r} sigma_i."""
    if not 1 <= r <= len(hsv):
        raise ConfigError(f"order {r} outside 1..{len(hsv)}")
    return hsv.tail(r)


def resolve_order(
        hsv: HsvSpectrum,
        order: Optional[int],
        eps: Optional[float],
        warnings: List[str],
) -> int:
    """Explicit order wins over eps; neither means eps = 1e-6 * (2 sum sigma). Clamped to the numerical rank."""
    rank = numerical_rank(hsv)
    if rank == 0:
        raise RankError("Z_Q^T Z_P has numerical rank 0: nothing to balance")
    if order is not None:
        if order < 1:
            raise ConfigError(f"reduced order must be >= 1, got {order}")
        r = order
    else:
        if eps is None:
            eps = DEFAULT_RELATIVE_EPS * hsv.tail(0)
        r = select_order(hsv, eps)
    if r > rank:
        message = f"order {r} exceeds numerical rank {rank}; reduced to {rank}"
        logger.warning(message)
        warnings.append(message)
        r = rank
    return r


def balancing_transform(Z_P: np.ndarray, Z_Q: np.ndarray, r: int) -> BalancingTransform:
    """T = S_r^{-1/2} U_r^T Z_Q^T and T_inv = Z_P V_r S_r^{-1/2} from the SVD Z_Q^T Z_P = U S V^T."""
    U, s, Vt = np.linalg.svd(Z_Q.T @ Z_P, full_matrices=False)
    scale = 1.0 / np.sqrt(s[:r])
    T = scale[:, None] * (U[:, :r].T @ Z_Q.T)
    T_inv = (Z_P @ Vt[:r].T) * scale[None, :]
    return BalancingTransform(T=T, T_inv=T_inv)


def project(system: DescriptorSystem, transform: BalancingTransform) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Reduced G~, B~, L~ for the left projector T C^{-1} and right projector T_inv.

    W = C^{-T} T^T comes from a transposed solve with C; C~ is the identity.
    """
    solver = CapacitanceSolver(system.C, system.n, system.m)
    W = solver.solve(transform.T.T, transpose=True)
    G_r = W.T @ (system.G @ transform.T_inv)
    B_r = np.asarray((system.B.T @ W).T)
    L_r = np.asarray(system.L @ transform.T_inv)
    return G_r, B_r, L_r


def truncate_from_roots(
        Z_P: np.ndarray,
        Z_Q: np.ndarray,
        system: DescriptorSystem,
        provenance: RomProvenance,
        order: Optional[int] = None,
        eps: Optional[float] = None,
) -> Tuple[ReducedOrderModel, BalancingTransform]:
    """Square-root balanced truncation from any pair of Gramian roots."""
    if Z_P.shape[0] != system.N or Z_Q.shape[0] != system.N:
        raise ConfigError(f"factors have {Z_P.shape[0]}/{Z_Q.shape[0]} rows, system has N={system.N}")

    hsv = hsv_from_values(np.linalg.svd(Z_Q.T @ Z_P, compute_uv=False))
    r = resolve_order(hsv, order, eps, provenance.warnings)
    transform = balancing_transform(Z_P, Z_Q, r)

    defect = transform.defect()
    provenance.biorthogonality_defect = defect
    if defect > BIORTHOGONALITY_TOL:
        message = f"bi-orthogonality defect {defect:.3e} exceeds {BIORTHOGONALITY_TOL:.0e}"
        logger.warning(message)
        provenance.warnings.append(message)

    G_r, B_r, L_r = project(system, transform)
    rom = ReducedOrderModel(
        G=G_r,
        C=np.eye(r),
        B=B_r,
        L=L_r,
        hsv=hsv,
        error_bound=rom_error_bound(hsv, r),
        ports=system.port_names(),
        outputs=system.output_names(),
        provenance=provenance,
    )
    logger.info("Balanced truncation: N=%d -> r=%d, bound=%.3e", system.N, r, rom.error_bound)
    return rom, transform


def square_root_bt(
        factor_p: LowRankFactor,
        factor_q: LowRankFactor,
        system: DescriptorSystem,
        order: Optional[int] = None,
        eps: Optional[float] = None,
        tol: Optional[float] = None,
        maxiter: Optional[int] = None,
) -> Tuple[ReducedOrderModel, BalancingTransform]:
    """Balanced truncation from EKSM factors Z_P, Z_Q."""
    provenance = RomProvenance(
        method="eksm",
        requested_order=order,
        eps=eps,
        tol=tol,
        maxiter=maxiter,
        iterations_P=factor_p.iterations,
        iterations_Q=factor_q.iterations,
        residual_P=factor_p.residual,
        residual_Q=factor_q.residual,
        converged_P=factor_p.converged,
        converged_Q=factor_q.converged,
        deflations_P=factor_p.deflations,
        deflations_Q=factor_q.deflations,
        rank_P=factor_p.rank,
        rank_Q=factor_q.rank,
        # only min(k_P, k_Q) HSVs are available, so the tail misses the rest
        bound_is_lower_estimate=True,
    )
    for factor in (factor_p, factor_q):
        if not factor.converged:
            provenance.warnings.append(
                f"{factor.side} factor not converged (residual {factor.residual:.3e})"
            )
    return truncate_from_roots(factor_p.Z, factor_q.Z, system, provenance, order=order, eps=eps)
