import logging
import time

from src.stages.bt_dense.balancing import dense_state_matrices
from src.stages.bt_dense.lyapunov import check_stability
from src.stages.model_ingest.matrix_io import read_model
from src.stages.state import ReductionState

logger = logging.getLogger(__name__)


def ingest_node(state: ReductionState) -> ReductionState:
    """Load the input model; below the dense cap, refuse unstable models before any reduction work."""
    logger.info("📥 Ingest node started")
    config = state["config"]
    start = time.perf_counter()

    try:
        system, statistics = read_model(config.input, c_min=config.c_min)
        if system.N <= config.dense_cap:
            A, _ = dense_state_matrices(system, config.dense_cap)
            check_stability(A)
        else:
            logger.info("N=%d above dense cap %d: skipping the stability check", system.N, config.dense_cap)
    except Exception:
        logger.exception("❌ Ingest failed for %s", config.input)
        raise

    logger.info(
        "✅ Ingest finished | N=%d (n=%d, m=%d) | p=%d | q=%d",
        system.N, system.n, system.m, system.p, system.q,
    )
    return {
        "system": system,
        "statistics": statistics,
        "timings": {"ingest": time.perf_counter() - start},
    }
