from typing import List, Union

from src.stages.state import ReductionState

EKSM_NODES = ["eksm_controllability", "eksm_observability"]


def route_by_mode(state: ReductionState) -> Union[str, List[str]]:
    """Dense oracle, or both EKSM sides in parallel."""
    if state["config"].mode == "dense-oracle":
        return "dense_reduce"
    return EKSM_NODES
