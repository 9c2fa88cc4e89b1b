import logging

import numpy as np

from src.config.defaults import HSV_RANK_TOL
from src.stages.bt_dense.lyapunov import lyapunov_factor
from src.stages.bt_dense.schema import HsvSpectrum
from src.stages.errors import ConfigError, DimensionMismatchError

logger = logging.getLogger(__name__)


def hsv_from_values(values: np.ndarray, rank_tol: float = HSV_RANK_TOL) -> HsvSpectrum:
    """Sort descending and clamp round-off below rank_tol * sigma_1 to zero."""
    sigma = np.sort(np.clip(np.asarray(values, dtype=float).ravel(), 0.0, None))[::-1]
    if sigma.size and sigma[0] > 0:
        sigma[sigma < rank_tol * sigma[0]] = 0.0
    return HsvSpectrum(sigma=sigma)


def hankel_singular_values(P: np.ndarray, Q: np.ndarray) -> HsvSpectrum:
    """sigma_i = sqrt(lambda_i(PQ)), computed as singular values of Z_Q^T Z_P."""
    P = np.asarray(P, dtype=float)
    Q = np.asarray(Q, dtype=float)
    if P.shape != Q.shape or P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise DimensionMismatchError(f"Gramians must be square and equal-sized: {P.shape} vs {Q.shape}")
    Z_P = lyapunov_factor(P)
    Z_Q = lyapunov_factor(Q)
    values = np.linalg.svd(Z_Q.T @ Z_P, compute_uv=False)
    padded = np.zeros(P.shape[0])
    padded[: values.size] = values
    return hsv_from_values(padded)


def numerical_rank(hsv: HsvSpectrum, rank_tol: float = HSV_RANK_TOL) -> int:
    if not len(hsv) or hsv.sigma[0] <= 0:
        return 0
    return int(np.sum(hsv.sigma >= rank_tol * hsv.sigma[0]))


def select_order(hsv: HsvSpectrum, eps: float) -> int:
    """Smallest r >= 1 whose truncation bound 2*sum_{i>r} sigma_i is <= eps; len(hsv) if none."""
    if eps < 0:
        raise ConfigError(f"error tolerance must be nonnegative, got {eps}")
    k = len(hsv)
    for r in range(1, k + 1):
        if hsv.tails[r] <= eps:
            return r
    return k
