"""Dense Bartels-Stewart Lyapunov solver: A X + X A^T = -W W^T."""
import logging
from typing import Optional

import numpy as np
import scipy.linalg
from scipy.linalg import LinAlgError, get_lapack_funcs

from src.config.defaults import STABILITY_MARGIN
from src.stages.errors import LyapunovSolveError, UnstableSystemError

logger = logging.getLogger(__name__)


def _as_block(W: np.ndarray) -> np.ndarray:
    W = np.asarray(W, dtype=float)
    return W.reshape(-1, 1) if W.ndim == 1 else W


def _real_schur(A: np.ndarray):
    try:
        return scipy.linalg.schur(A, output="real")
    except (LinAlgError, ValueError) as e:
        raise LyapunovSolveError(f"Schur iteration did not converge: {e}")


def _require_stable(T: np.ndarray, norm_a: float, margin: float) -> None:
    # LAPACK's standardized real Schur form has the eigenvalue real parts on the diagonal.
    max_real = float(np.max(np.diag(T)))
    threshold = -margin * norm_a
    if max_real >= threshold:
        raise UnstableSystemError(
            f"matrix is not asymptotically stable: max Re(lambda) = {max_real:.6e} "
            f">= {threshold:.3e}",
            {"max_real_eigenvalue": max_real},
        )


def check_stability(A: np.ndarray, margin: float = STABILITY_MARGIN) -> np.ndarray:
    """Eigenvalues of A; raises UnstableSystemError unless every Re(lambda) < -margin*||A||_F."""
    A = np.asarray(A, dtype=float)
    T, _ = _real_schur(A)
    _require_stable(T, float(np.linalg.norm(A)), margin)
    return np.linalg.eigvals(T)


def lyapunov_residual(A: np.ndarray, X: np.ndarray, W: np.ndarray) -> float:
    """Relative Frobenius residual ||A X + X A^T + W W^T|| / ||W W^T||."""
    W = _as_block(W)
    WWt = W @ W.T
    res = np.linalg.norm(A @ X + X @ A.T + WWt)
    scale = np.linalg.norm(WWt)
    return float(res / scale) if scale > 0 else float(res)


def solve_lyapunov_dense(
        A: np.ndarray,
        W: np.ndarray,
        margin: float = STABILITY_MARGIN,
) -> np.ndarray:
    """
    Solve A X + X A^T = -W W^T with the Bartels-Stewart algorithm.

    A is reduced once to real Schur form T = U^T A U, the triangular equation
    T Y + Y T^T = U^T (-W W^T) U is solved by LAPACK trsyl, and X = U Y U^T.
    The stability guard reads the eigenvalue real parts off the Schur form.
    """
    A = np.asarray(A, dtype=float)
    W = _as_block(W)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise LyapunovSolveError(f"A must be square and non-empty, got shape {A.shape}")
    if W.shape[0] != A.shape[0]:
        raise LyapunovSolveError(f"W has {W.shape[0]} rows, A is {A.shape[0]}x{A.shape[0]}")

    T, U = _real_schur(A)
    _require_stable(T, float(np.linalg.norm(A)), margin)

    F = U.T @ (-(W @ W.T)) @ U
    trsyl, = get_lapack_funcs(("trsyl",), (T, T, F))
    Y, scale, info = trsyl(T, T, F, tranb="T")
    if info < 0:
        raise LyapunovSolveError(f"trsyl rejected argument {-info}")
    if info == 1:
        logger.warning("trsyl perturbed close eigenvalues; solution may be inaccurate")

    X = U @ (Y / scale) @ U.T
    return (X + X.T) / 2


def lyapunov_factor(X: np.ndarray, cut: Optional[float] = None) -> np.ndarray:
    """Square root Z of a symmetric PSD X (X ~ Z Z^T), negative round-off clamped to 0."""
    eigvals, eigvecs = np.linalg.eigh((X + X.T) / 2)
    eigvals = np.clip(eigvals, 0.0, None)
    order = np.argsort(eigvals)[::-1]
    eigvals, eigvecs = eigvals[order], eigvecs[:, order]
    if cut is not None and eigvals.size:
        keep = eigvals > cut * eigvals[0]
        eigvals, eigvecs = eigvals[keep], eigvecs[:, keep]
    return eigvecs * np.sqrt(eigvals)
