import logging
import time

from src.stages.eksm.schema import Side
from src.stages.eksm.solver import eksm_solve
from src.stages.state import ReductionState

logger = logging.getLogger(__name__)


def _solve_side(state: ReductionState, side: Side) -> ReductionState:
    logger.info("🔁 EKSM %s solve started", side)
    config = state["config"]
    progress = state.get("progress")
    callback = (lambda j, size, res: progress(side, j, size, res)) if progress else None
    start = time.perf_counter()
    try:
        factor = eksm_solve(
            state["system"], side=side, tol=config.tol, maxiter=config.maxiter, callback=callback
        )
    except Exception:
        logger.exception("❌ EKSM %s solve failed", side)
        raise
    logger.info(
        "✅ EKSM %s | j=%d | rank=%d | residual=%.3e | converged=%s",
        side, factor.iterations, factor.rank, factor.residual, factor.converged,
    )
    return {"factors": {side: factor}, "timings": {f"eksm_{side}": time.perf_counter() - start}}


def eksm_controllability_node(state: ReductionState) -> ReductionState:
    return _solve_side(state, "controllability")


def eksm_observability_node(state: ReductionState) -> ReductionState:
    return _solve_side(state, "observability")
