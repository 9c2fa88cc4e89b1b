"""
Extended Krylov subspace method for low-rank Lyapunov solutions.

The basis K grows by blocks spanning G_C^i B_C for i = -j..j. At each step the
Lyapunov equation is projected onto K, solved densely, and the residual of the
lifted solution K X K^T is measured in factored form without N x N products.
"""
import logging
from typing import Callable, List, Optional, Tuple

import numpy as np

from src.config.defaults import (
    DEFLATION_TOL,
    EKSM_MAXITER,
    EKSM_TOL,
    EKSM_UNSTABLE_PATIENCE,
    FACTOR_SVD_CUT,
)
from src.stages.bt_dense.lyapunov import solve_lyapunov_dense
from src.stages.eksm.operator import OperatorPair, StateScaling, build_operator, scaled_operator
from src.stages.eksm.schema import EksState, LowRankFactor, Side
from src.stages.errors import ConfigError, RankError, UnstableProjectionError, UnstableSystemError
from src.stages.model_ingest.schema import DescriptorSystem

logger = logging.getLogger(__name__)

ProgressCallback = Callable[[int, int, float], None]


def orthonormalize(K: np.ndarray, W: np.ndarray, tol: float = DEFLATION_TOL) -> Tuple[np.ndarray, List[int]]:
    """
    Orthonormalize the columns of W against K and among themselves.

    Block classical Gram-Schmidt against K runs twice, then the block is
    orthonormalized column by column, again twice. A column is dropped when its
    remaining norm falls below tol times its norm on entry. Returns the new
    columns and the indices of W they came from.
    """
    N = W.shape[0]
    raw_norms = np.linalg.norm(W, axis=0)
    W = W.copy()
    if K.shape[1]:
        for _ in range(2):
            W -= K @ (K.T @ W)

    Q = np.empty((N, W.shape[1]))
    kept: List[int] = []
    for i in range(W.shape[1]):
        if raw_norms[i] == 0:
            continue
        w = W[:, i]
        basis = Q[:, : len(kept)]
        for _ in range(2):
            if basis.shape[1]:
                w = w - basis @ (basis.T @ w)
            if K.shape[1]:
                w = w - K @ (K.T @ w)
        norm = np.linalg.norm(w)
        if norm < tol * raw_norms[i]:
            continue
        Q[:, len(kept)] = w / norm
        kept.append(i)
    return Q[:, : len(kept)], kept


def _append(state: EksState, op: OperatorPair, W: np.ndarray, n_plus: int) -> EksState:
    Q, kept = orthonormalize(state.K, W)
    deflated = W.shape[1] - len(kept)
    start = state.size
    plus = [start + pos for pos, i in enumerate(kept) if i < n_plus]
    minus = [start + pos for pos, i in enumerate(kept) if i >= n_plus]
    if deflated:
        logger.debug("Deflated %d of %d new directions at j=%d", deflated, W.shape[1], state.j)
    return EksState(
        K=np.hstack([state.K, Q]),
        AK=np.hstack([state.AK, op.apply_G_C(Q)]) if Q.shape[1] else state.AK,
        plus=plus,
        minus=minus,
        j=state.j,
        residual_history=list(state.residual_history),
        deflations=state.deflations + deflated,
    )


def initialize_basis(op: OperatorPair) -> EksState:
    """K = orth([B_C, G_C^{-1} B_C]) with deflation of dependent directions."""
    B = op.rhs_block
    # numerically zero: ‖B^T B‖ below the smallest normal double
    if not np.linalg.norm(B.T @ B) > np.finfo(float).tiny:
        raise RankError("right-hand side block is numerically zero: the system has no excitation")
    empty = EksState(K=np.empty((op.N, 0)), AK=np.empty((op.N, 0)), j=1)
    W = np.hstack([B, op.apply_G_C_inv(B)])
    return _append(empty, op, W, n_plus=op.p)


def extend_basis(state: EksState, op: OperatorPair) -> EksState:
    """
    Apply G_C to the previous block's G_C-direction columns and G_C^{-1} to its
    inverse-direction columns, orthonormalize against K and append. A complete
    deflation leaves K unchanged with empty plus/minus index lists.
    """
    inverse = op.apply_G_C_inv(state.K[:, state.minus]) if state.minus else np.empty((op.N, 0))
    W = np.hstack([state.AK[:, state.plus], inverse])
    extended = _append(state, op, W, n_plus=len(state.plus))
    extended.j = state.j + 1
    return extended


def project_and_solve(state: EksState, op: OperatorPair) -> np.ndarray:
    """Solve the projected equation A X + X A^T = -R R^T with A = K^T G_C K, R = K^T B_C."""
    state.A_proj = state.K.T @ state.AK
    state.R_proj = state.K.T @ op.rhs_block
    try:
        return solve_lyapunov_dense(state.A_proj, state.R_proj)
    except UnstableSystemError as e:
        raise UnstableProjectionError(
            f"projected matrix is unstable at iteration {state.j}: {e.message}", state.j
        )


def residual_norm(state: EksState, X: np.ndarray, op: OperatorPair) -> float:
    """
    ||G_C K X K^T + K X K^T G_C^T + B_C B_C^T||_F / ||B_C B_C^T||_F in factored form.

    With G_C K = K A + E and B_C = K R + F, where E and F are orthogonal to K, and
    [E, F] = U S V^T, every term lives in span[K, U], so the norm equals that of a
    small core matrix of size (k + s).
    """
    K, AK, B = state.K, state.AK, op.rhs_block
    k = K.shape[1]

    A = K.T @ AK
    E = AK - K @ A
    correction = K.T @ E
    A += correction
    E -= K @ correction

    R = K.T @ B
    F = B - K @ R
    correction = K.T @ F
    R += correction
    F -= K @ correction

    U, s, Vt = np.linalg.svd(np.hstack([E, F]), full_matrices=False)
    floor = np.finfo(float).eps * max(np.linalg.norm(AK), np.linalg.norm(B))
    keep = s > floor
    coeffs = s[keep, None] * Vt[keep]
    A_hat = np.vstack([A, coeffs[:, :k]])
    B_hat = np.vstack([R, coeffs[:, k:]])
    I_hat = np.vstack([np.eye(k), np.zeros((coeffs.shape[0], k))])

    core = A_hat @ X @ I_hat.T
    core = core + core.T + B_hat @ B_hat.T
    scale = np.linalg.norm(B.T @ B)
    return float(np.linalg.norm(core) / scale)


def _factor(K: np.ndarray, X: np.ndarray, cut: float = FACTOR_SVD_CUT) -> Tuple[np.ndarray, np.ndarray]:
    U, s, _ = np.linalg.svd((X + X.T) / 2)
    keep = s > cut * s[0] if s.size and s[0] > 0 else np.zeros(s.size, dtype=bool)
    return K @ (U[:, keep] * np.sqrt(s[keep])), s[keep]


def eksm_solve(
        system: DescriptorSystem,
        side: Side = "controllability",
        tol: float = EKSM_TOL,
        maxiter: int = EKSM_MAXITER,
        callback: Optional[ProgressCallback] = None,
        patience: int = EKSM_UNSTABLE_PATIENCE,
        equilibrate: bool = True,
) -> LowRankFactor:
    """
    Low-rank factor Z with Z Z^T ~ the Gramian of the requested side.

    Stops when the relative residual reaches tol, when an extension deflates
    completely, or after maxiter iterations; the latter two return the iterate
    with the smallest residual flagged as not converged. A projected matrix may be
    unstable for fewer than `patience` consecutive iterations.

    With equilibrate=True the iteration runs in the coordinates of StateScaling and
    the residual is measured there; the returned factor is in the original ones.
    """
    if tol <= 0:
        raise ConfigError(f"EKSM tolerance must be positive, got {tol}")
    if maxiter < 1:
        raise ConfigError(f"maxiter must be at least 1, got {maxiter}")

    op = build_operator(system, side)
    to_original = None
    if equilibrate:
        op, to_original = scaled_operator(op, StateScaling(system))
    state = initialize_basis(op)
    best: Optional[Tuple[float, np.ndarray, np.ndarray, int]] = None
    unstable_streak = 0
    last_error: Optional[UnstableProjectionError] = None
    converged = False

    for iteration in range(1, maxiter + 1):
        try:
            X = project_and_solve(state, op)
        except UnstableProjectionError as e:
            unstable_streak += 1
            last_error = e
            if unstable_streak >= patience:
                raise
            logger.warning("%s; extending the basis (%d/%d)", e.message, unstable_streak, patience)
            X = None
        else:
            unstable_streak = 0
            last_error = None
            residual = residual_norm(state, X, op)
            state.residual_history.append(residual)
            if callback is not None:
                callback(state.j, state.size, residual)
            if best is None or residual < best[0]:
                best = (residual, state.K, X, state.j)
            if residual <= tol:
                converged = True
                break

        if iteration == maxiter:
            break
        extended = extend_basis(state, op)
        if extended.size == state.size:
            logger.warning("EKSM basis stagnated at j=%d (size %d)", state.j, state.size)
            break
        state = extended

    if last_error is not None or best is None:
        raise last_error or UnstableProjectionError("no stable projected iterate", state.j)

    residual, K, X, best_j = best
    if not converged:
        logger.warning(
            "EKSM (%s) stopped without convergence: residual %.3e > tol %.1e", side, residual, tol
        )
    Z, sv = _factor(K, X)
    if to_original is not None:
        Z = to_original(Z)
    logger.info(
        "EKSM (%s): j=%d, basis=%d, rank=%d, residual=%.3e", side, best_j, K.shape[1], Z.shape[1], residual
    )
    return LowRankFactor(
        Z=Z,
        singular_values=sv,
        side=side,
        converged=converged,
        iterations=best_j,
        residual=residual,
        residual_history=state.residual_history,
        deflations=state.deflations,
        basis_size=K.shape[1],
    )
