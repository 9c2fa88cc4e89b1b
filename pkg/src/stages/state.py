import operator
from typing import Annotated, Callable, Dict, List, Optional, TypedDict

from src.config.run_config import RunConfig
from src.stages.bt_lowrank.schema import BalancingTransform, ReducedOrderModel
from src.stages.eksm.schema import LowRankFactor
from src.stages.model_ingest.schema import DescriptorSystem, ModelStatistics


class ReductionState(TypedDict, total=False):
    config: RunConfig
    progress: Optional[Callable[[str, int, int, float], None]]
    system: DescriptorSystem
    statistics: ModelStatistics
    factors: Annotated[Dict[str, LowRankFactor], operator.or_]
    rom: ReducedOrderModel
    transform: BalancingTransform
    artifacts: Dict[str, str]
    timings: Annotated[Dict[str, float], operator.or_]
    warnings: Annotated[List[str], operator.add]
