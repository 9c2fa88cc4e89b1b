import logging
import time

from src.stages.bt_lowrank.export import export_rom
from src.stages.bt_lowrank.square_root import square_root_bt
from src.stages.errors import ConvergenceError
from src.stages.state import ReductionState

logger = logging.getLogger(__name__)


def lowrank_reduce_node(state: ReductionState) -> ReductionState:
    logger.info("📉 Square-root balanced truncation started")
    config = state["config"]
    factors = state["factors"]
    start = time.perf_counter()
    try:
        rom, transform = square_root_bt(
            factors["controllability"],
            factors["observability"],
            state["system"],
            order=config.order,
            eps=config.eps,
            tol=config.tol,
            maxiter=config.maxiter,
        )
    except Exception:
        logger.exception("❌ Square-root balanced truncation failed")
        raise
    logger.info("✅ Low-rank ROM | r=%d | bound=%.3e", rom.order, rom.error_bound)
    return {
        "rom": rom,
        "transform": transform,
        "timings": {"reduce": time.perf_counter() - start},
        "warnings": list(rom.provenance.warnings),
    }


def export_node(state: ReductionState) -> ReductionState:
    logger.info("💾 Export node started")
    start = time.perf_counter()
    rom = state["rom"]
    manifest = export_rom(rom, state["config"].out)

    provenance = rom.provenance
    if provenance.method == "eksm" and not (provenance.converged_P and provenance.converged_Q):
        logger.error("❌ EKSM did not converge; ROM written to %s for inspection", manifest)
        raise ConvergenceError(
            f"EKSM did not reach tol {provenance.tol}: "
            f"residual P {provenance.residual_P:.3e}, residual Q {provenance.residual_Q:.3e}",
            {
                "residual_P": provenance.residual_P,
                "residual_Q": provenance.residual_Q,
                "converged_P": provenance.converged_P,
                "converged_Q": provenance.converged_Q,
                "manifest": str(manifest),
            },
        )
    return {
        "artifacts": {"manifest": str(manifest)},
        "timings": {"export": time.perf_counter() - start},
    }
