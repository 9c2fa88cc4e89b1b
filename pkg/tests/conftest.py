import numpy as np
import pytest

from src.stages.freqresp.schema import FrequencyGrid
from src.stages.model_ingest.mna import assemble_mna
from src.stages.model_ingest.schema import DescriptorSystem
from src.stages.model_ingest.synthetic import rc_ladder, rlc_ladder, rlc_mesh


def scalar_system(c: float = 1.0, g: float = -1.0) -> DescriptorSystem:
    return DescriptorSystem(G=[[g]], C=[[c]], B=[[1.0]], L=[[1.0]], n=1, ports=["P1"], outputs=["P1"])


def unit_rc(sections: int, ports: int = 1) -> DescriptorSystem:
    return assemble_mna(rc_ladder(sections, ports=ports, r_series=1.0, c_shunt=1.0, r_shunt=10.0))


def unit_rlc(sections: int, ports: int = 1, coupling: float = 0.2, spread: float = 0.0, seed=None) -> DescriptorSystem:
    elems = rlc_ladder(
        sections, ports=ports, c_shunt=1.0, r_shunt=1.0, l_series=1.0,
        coupling=coupling, spread=spread, seed=seed,
    )
    return assemble_mna(elems)


def unit_mesh(rows: int, cols: int, ports: int = 1, spread: float = 0.0, seed=None) -> DescriptorSystem:
    elems = rlc_mesh(
        rows, cols, ports=ports, c_shunt=1.0, r_shunt=1.0, l_series=1.0, r_link=1.0,
        coupling=0.2, spread=spread, seed=seed,
    )
    return assemble_mna(elems)


def random_stable(n: int, p: int = 1, q: int = None, seed: int = 0) -> DescriptorSystem:
    """C = I and G = R - n I with R uniform in [0, 1); dissipative, hence stable."""
    rng = np.random.default_rng(seed)
    q = p if q is None else q
    G = rng.random((n, n)) - n * np.eye(n)
    B = rng.standard_normal((n, p))
    L = rng.standard_normal((q, n))
    return DescriptorSystem(G=G, C=np.eye(n), B=B, L=L, n=n)


@pytest.fixture
def scalar():
    return scalar_system()


@pytest.fixture
def scalar_c2():
    return scalar_system(c=2.0)


@pytest.fixture
def unit_grid():
    """201 log points in Hz covering the poles of the unit-valued ladders."""
    return FrequencyGrid.from_spec("1e-4:1e2:201:log")
