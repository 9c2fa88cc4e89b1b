from langgraph.graph import END, StateGraph

from src.stages.bt_dense.node import dense_reduce_node
from src.stages.bt_lowrank.node import export_node, lowrank_reduce_node
from src.stages.eksm.node import eksm_controllability_node, eksm_observability_node
from src.stages.model_ingest.node import ingest_node
from src.stages.router import EKSM_NODES, route_by_mode
from src.stages.state import ReductionState


def construct_graph():
    g = StateGraph(ReductionState)

    g.add_node("ingest", ingest_node)
    g.add_node("dense_reduce", dense_reduce_node)
    g.add_node("eksm_controllability", eksm_controllability_node)
    g.add_node("eksm_observability", eksm_observability_node)
    g.add_node("lowrank_reduce", lowrank_reduce_node)
    g.add_node("export", export_node)

    g.set_entry_point("ingest")
    g.add_conditional_edges("ingest", route_by_mode, ["dense_reduce", *EKSM_NODES])
    g.add_edge(EKSM_NODES, "lowrank_reduce")
    g.add_edge("dense_reduce", "export")
    g.add_edge("lowrank_reduce", "export")
    g.add_edge("export", END)

    return g.compile()
