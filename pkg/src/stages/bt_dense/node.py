import logging
import time

from src.stages.bt_dense.balancing import balance_truncate_dense
from src.stages.state import ReductionState

logger = logging.getLogger(__name__)


def dense_reduce_node(state: ReductionState) -> ReductionState:
    logger.info("🧮 Dense balanced truncation started")
    config = state["config"]
    start = time.perf_counter()
    try:
        rom, transform = balance_truncate_dense(
            state["system"], order=config.order, eps=config.eps, dense_cap=config.dense_cap
        )
    except Exception:
        logger.exception("❌ Dense balanced truncation failed")
        raise
    logger.info("✅ Dense ROM | r=%d | bound=%.3e", rom.order, rom.error_bound)
    return {
        "rom": rom,
        "transform": transform,
        "timings": {"reduce": time.perf_counter() - start},
        "warnings": list(rom.provenance.warnings),
    }
