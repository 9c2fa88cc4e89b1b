"""Synthetic RC and coupled-RLC ladders used as benchmark and test models."""
import logging
from typing import List, Optional

import numpy as np

from src.stages.errors import ConfigError
from src.stages.model_ingest.schema import (
    GROUND,
    Capacitor,
    ElementList,
    Inductor,
    MutualCoupling,
    Port,
    Resistor,
)

logger = logging.getLogger(__name__)


def _port_nodes(sections: int, ports: int) -> List[int]:
    if not 1 <= ports <= sections:
        raise ConfigError(f"need 1 <= ports <= sections, got ports={ports}, sections={sections}")
    return [int(k) for k in np.round(np.linspace(1, sections, ports))]


def _spread(rng: Optional[np.random.Generator], spread: float, size: int) -> np.ndarray:
    if rng is None or spread == 0:
        return np.ones(size)
    return rng.uniform(1.0 - spread, 1.0 + spread, size)


def _ports(sections: int, ports: int) -> List[Port]:
    return [
        Port(name=f"P{i + 1}", node=str(node), line=0)
        for i, node in enumerate(_port_nodes(sections, ports))
    ]


def rc_ladder(
        sections: int,
        ports: int = 1,
        r_series: float = 10.0,
        c_shunt: float = 1e-13,
        r_shunt: float = 1e4,
        spread: float = 0.0,
        seed: Optional[int] = None,
) -> ElementList:
    """
    RC ladder of `sections` nodes: series R between neighbours, C and R from each
    node to ground. Ports are spread evenly along the ladder. With spread > 0,
    every element value is scaled by a uniform factor in [1 - spread, 1 + spread].
    """
    if sections < 1:
        raise ConfigError("an RC ladder needs at least one section")
    rng = np.random.default_rng(seed) if spread else None
    rs = r_series * _spread(rng, spread, sections)
    cs = c_shunt * _spread(rng, spread, sections)
    rg = r_shunt * _spread(rng, spread, sections)

    resistors, capacitors = [], []
    line = 1
    for k in range(1, sections + 1):
        node = str(k)
        capacitors.append(Capacitor(name=f"C{k}", node_a=node, node_b=GROUND, farads=cs[k - 1], line=line))
        resistors.append(Resistor(name=f"RG{k}", node_a=node, node_b=GROUND, ohms=rg[k - 1], line=line))
        if k < sections:
            resistors.append(
                Resistor(name=f"R{k}", node_a=node, node_b=str(k + 1), ohms=rs[k - 1], line=line)
            )
        line += 1

    elems = ElementList(resistors=resistors, capacitors=capacitors, ports=_ports(sections, ports))
    logger.debug("Generated RC ladder: %d sections, %d ports", sections, ports)
    return elems


def rlc_ladder(
        sections: int,
        ports: int = 1,
        c_shunt: float = 1e-13,
        r_shunt: float = 1e3,
        l_series: float = 1e-10,
        coupling: float = 0.1,
        spread: float = 0.0,
        seed: Optional[int] = None,
) -> ElementList:
    """
    Coupled RLC ladder: C and R from each node to ground, a series inductor between
    neighbouring nodes, and mutual coupling `coupling` between adjacent inductors.
    The state dimension is N = 2*sections - 1.
    """
    if sections < 2:
        raise ConfigError("an RLC ladder needs at least two sections")
    if not 0 <= abs(coupling) < 0.5:
        # adjacent-only coupling keeps M diagonally dominant below 0.5
        raise ConfigError(f"adjacent coupling must satisfy |k| < 0.5, got {coupling}")
    rng = np.random.default_rng(seed) if spread else None
    cs = c_shunt * _spread(rng, spread, sections)
    rg = r_shunt * _spread(rng, spread, sections)
    ls = l_series * _spread(rng, spread, sections - 1)

    resistors, capacitors, inductors, couplings = [], [], [], []
    line = 1
    for k in range(1, sections + 1):
        node = str(k)
        capacitors.append(Capacitor(name=f"C{k}", node_a=node, node_b=GROUND, farads=cs[k - 1], line=line))
        resistors.append(Resistor(name=f"RG{k}", node_a=node, node_b=GROUND, ohms=rg[k - 1], line=line))
        if k < sections:
            inductors.append(
                Inductor(name=f"L{k}", node_a=node, node_b=str(k + 1), henries=ls[k - 1], line=line)
            )
        line += 1
    if coupling:
        for k in range(1, sections - 1):
            couplings.append(
                MutualCoupling(
                    name=f"K{k}", inductor_a=f"L{k}", inductor_b=f"L{k + 1}",
                    coefficient=coupling, line=line,
                )
            )
            line += 1

    elems = ElementList(
        resistors=resistors,
        capacitors=capacitors,
        inductors=inductors,
        mutual_couplings=couplings,
        ports=_ports(sections, ports),
    )
    logger.debug(
        "Generated RLC ladder: %d sections, %d ports, k=%.3g", sections, ports, coupling
    )
    return elems


def rlc_mesh(
        rows: int,
        cols: int,
        ports: int = 1,
        c_shunt: float = 1e-13,
        r_shunt: float = 1e3,
        l_series: float = 1e-10,
        r_link: float = 10.0,
        coupling: float = 0.1,
        spread: float = 0.0,
        seed: Optional[int] = None,
) -> ElementList:
    """
    Power-grid style RLC mesh of rows x cols nodes. Every node has C and R to ground,
    neighbours within a row are joined by series inductors (adjacent ones coupled by
    `coupling`), and neighbours within a column by resistors `r_link`.
    The state dimension is N = rows*cols + rows*(cols - 1).
    """
    if rows < 1 or cols < 2:
        raise ConfigError(f"an RLC mesh needs rows >= 1 and cols >= 2, got {rows}x{cols}")
    if not 0 <= abs(coupling) < 0.5:
        raise ConfigError(f"adjacent coupling must satisfy |k| < 0.5, got {coupling}")
    nodes = rows * cols
    rng = np.random.default_rng(seed) if spread else None
    cs = c_shunt * _spread(rng, spread, nodes)
    rg = r_shunt * _spread(rng, spread, nodes)
    ls = l_series * _spread(rng, spread, rows * (cols - 1))
    rl = r_link * _spread(rng, spread, (rows - 1) * cols)

    def node(i: int, j: int) -> str:
        return str(i * cols + j + 1)

    resistors, capacitors, inductors, couplings = [], [], [], []
    line = 1
    for i in range(rows):
        for j in range(cols):
            k = i * cols + j
            capacitors.append(Capacitor(name=f"C{k + 1}", node_a=node(i, j), node_b=GROUND, farads=cs[k], line=line))
            resistors.append(Resistor(name=f"RG{k + 1}", node_a=node(i, j), node_b=GROUND, ohms=rg[k], line=line))
            if j < cols - 1:
                idx = i * (cols - 1) + j
                inductors.append(
                    Inductor(name=f"L{idx + 1}", node_a=node(i, j), node_b=node(i, j + 1), henries=ls[idx], line=line)
                )
                if coupling and j > 0:
                    couplings.append(
                        MutualCoupling(
                            name=f"K{idx}", inductor_a=f"L{idx}", inductor_b=f"L{idx + 1}",
                            coefficient=coupling, line=line,
                        )
                    )
            if i < rows - 1:
                resistors.append(Resistor(name=f"RV{k + 1}", node_a=node(i, j), node_b=node(i + 1, j), ohms=rl[k], line=line))
            line += 1

    elems = ElementList(
        resistors=resistors,
        capacitors=capacitors,
        inductors=inductors,
        mutual_couplings=couplings,
        ports=_ports(nodes, ports),
    )
    logger.debug("Generated RLC mesh: %dx%d nodes, %d ports, k=%.3g", rows, cols, ports, coupling)
    return elems
