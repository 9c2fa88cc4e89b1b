import logging
import math
from typing import Dict, List, Optional, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from src.config.defaults import C_MIN
from src.stages.errors import ElementListError, MnaAssemblyError
from src.stages.model_ingest.schema import GROUND, DescriptorSystem, ElementList

logger = logging.getLogger(__name__)

Triplets = Tuple[List[int], List[int], List[float]]


def _stamp_two_terminal(trip: Triplets, a: Optional[int], b: Optional[int], value: float) -> None:
    rows, cols, vals = trip
    if a is not None:
        rows.append(a); cols.append(a); vals.append(value)
    if b is not None:
        rows.append(b); cols.append(b); vals.append(value)
    if a is not None and b is not None:
        rows += [a, b]; cols += [b, a]; vals += [-value, -value]


def _floating_nodes(elems: ElementList, index: Dict[str, int], n: int) -> List[str]:
    """Nodes with no path of capacitors to ground (ground is vertex n)."""
    rows, cols = [], []
    for cap in elems.capacitors:
        a = index.get(cap.node_a, n)
        b = index.get(cap.node_b, n)
        rows.append(a)
        cols.append(b)
    adjacency = sp.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n + 1, n + 1))
    _, labels = connected_components(adjacency, directed=False)
    names = list(index)
    return [names[i] for i in range(n) if labels[i] != labels[n]]


def _inductance_block(elems: ElementList) -> np.ndarray:
    m = len(elems.inductors)
    branch = {ind.name.upper(): k for k, ind in enumerate(elems.inductors)}
    M = np.diag([ind.henries for ind in elems.inductors]).astype(float).reshape(m, m)
    for coupling in elems.mutual_couplings:
        i = branch[coupling.inductor_a.upper()]
        j = branch[coupling.inductor_b.upper()]
        if coupling.coefficient is not None:
            mutual = coupling.coefficient * math.sqrt(M[i, i] * M[j, j])
        else:
            mutual = coupling.henries
        M[i, j] += mutual
        M[j, i] += mutual
    if m:
        try:
            np.linalg.cholesky(M)
        except np.linalg.LinAlgError:
            raise MnaAssemblyError(
                "inductance matrix M is not positive definite (degenerate coupling |k| = 1?)"
            )
    return M


def assemble_mna(elems: ElementList, c_min: Optional[float] = C_MIN) -> DescriptorSystem:
    """
    Stamp the element list into the descriptor form C x' = G x + B u, y = L x.

    Nodes are numbered by first appearance with ground eliminated; inductor
    branches keep their list order. Nodes without a capacitive path to ground
    receive a grounding capacitance c_min; pass c_min=None (or 0) to refuse
    such inputs instead.
    """
    nodes = elems.node_order()
    index = {name: i for i, name in enumerate(nodes)}
    n, m, p = len(nodes), len(elems.inductors), len(elems.ports)
    if not n:
        raise ElementListError("element list has no nodes besides ground")

    def at(node: str) -> Optional[int]:
        return None if node == GROUND else index[node]

    g_trip: Triplets = ([], [], [])
    for res in elems.resistors:
        _stamp_two_terminal(g_trip, at(res.node_a), at(res.node_b), 1.0 / res.ohms)

    c_trip: Triplets = ([], [], [])
    for cap in elems.capacitors:
        _stamp_two_terminal(c_trip, at(cap.node_a), at(cap.node_b), cap.farads)

    floating = _floating_nodes(elems, index, n)
    if floating:
        if not c_min:
            raise MnaAssemblyError(
                f"node capacitance matrix is singular; nodes without a capacitive path "
                f"to ground: {', '.join(floating)}",
                {"nodes": floating},
            )
        logger.info("Stamping grounding capacitance %.3g F at %d node(s)", c_min, len(floating))
        for node in floating:
            _stamp_two_terminal(c_trip, index[node], None, c_min)

    e_rows, e_cols, e_vals = [], [], []
    for k, ind in enumerate(elems.inductors):
        for node, sign in ((ind.node_a, 1.0), (ind.node_b, -1.0)):
            if node != GROUND:
                e_rows.append(index[node]); e_cols.append(k); e_vals.append(sign)

    b_rows, b_cols, b_vals = [], [], []
    for i, port in enumerate(elems.ports):
        for node, sign in ((port.node, 1.0), (port.reference, -1.0)):
            if node != GROUND:
                b_rows.append(index[node]); b_cols.append(i); b_vals.append(sign)

    Gn = sp.coo_matrix((g_trip[2], (g_trip[0], g_trip[1])), shape=(n, n)).tocsr()
    Cn = sp.coo_matrix((c_trip[2], (c_trip[0], c_trip[1])), shape=(n, n)).tocsr()
    E = sp.coo_matrix((e_vals, (e_rows, e_cols)), shape=(n, m)).tocsr()
    B1 = sp.coo_matrix((b_vals, (b_rows, b_cols)), shape=(n, p)).tocsr()
    M = sp.csr_matrix(_inductance_block(elems))

    if m:
        G = sp.bmat([[-Gn, -E], [E.T, sp.csr_matrix((m, m))]], format="csr")
        C = sp.bmat([[Cn, None], [None, M]], format="csr")
        B = sp.vstack([B1, sp.csr_matrix((m, p))], format="csr")
    else:
        G, C, B = -Gn, Cn, B1

    names = [port.name for port in elems.ports]
    system = DescriptorSystem(G=G, C=C, B=B, L=B.T, n=n, m=m, ports=names, outputs=names)
    logger.info("Assembled MNA system: n=%d, m=%d, N=%d, p=%d", n, m, n + m, p)
    return system
