import numpy as np
import pytest

from src.stages.errors import ElementListError, MnaAssemblyError
from src.stages.model_ingest.mna import assemble_mna
from src.stages.model_ingest.netlist import parse_netlist
from src.stages.model_ingest.schema import Capacitor, ElementList, Resistor
from src.stages.model_ingest.synthetic import rlc_ladder


def dense(system):
    return {key: getattr(system, key).toarray() for key in ("G", "C", "B", "L")}


def test_single_node_stamp():
    system = assemble_mna(parse_netlist("R1 1 0 1\nC1 1 0 1\nP1 1\n"))
    m = dense(system)

    assert system.N == 1
    np.testing.assert_array_equal(m["G"], [[-1.0]])
    np.testing.assert_array_equal(m["C"], [[1.0]])
    np.testing.assert_array_equal(m["B"], [[1.0]])
    np.testing.assert_array_equal(m["L"], [[1.0]])


def test_inductor_branch_block_structure():
    system = assemble_mna(parse_netlist("R1 1 0 1\nC1 1 0 1\nL1 1 0 1\nP1 1\n"))
    m = dense(system)

    assert (system.n, system.m, system.N) == (1, 1, 2)
    np.testing.assert_array_equal(m["C"], np.eye(2))
    np.testing.assert_array_equal(m["G"], -np.array([[1.0, 1.0], [-1.0, 0.0]]))
    np.testing.assert_array_equal(m["B"], [[1.0], [0.0]])


def test_coupled_inductance_block():
    text = "R1 1 0 1\nC1 1 0 1\nC2 2 0 1\nL1 1 2 1\nL2 2 0 1\nK1 L1 L2 0.5\nP1 1\n"
    system = assemble_mna(parse_netlist(text))

    M = system.blocks()["M"].toarray()
    np.testing.assert_allclose(M, [[1.0, 0.5], [0.5, 1.0]], rtol=0, atol=1e-15)


def test_coupling_scales_with_geometric_mean():
    text = "R1 1 0 1\nC1 1 0 1\nC2 2 0 1\nL1 1 2 4\nL2 2 0 1\nK1 L1 L2 0.5\nP1 1\n"
    M = assemble_mna(parse_netlist(text)).blocks()["M"].toarray()

    assert M[0, 1] == pytest.approx(0.5 * np.sqrt(4.0))


def test_port_with_reference_stamps_difference():
    system = assemble_mna(parse_netlist("R1 1 2 1\nC1 1 0 1\nC2 2 0 1\nP1 1 2\n"))

    np.testing.assert_array_equal(system.B.toarray(), [[1.0], [-1.0]])


def _half(prefix_c, with_series, sections, c_value):
    resistors, capacitors = [], []
    for k in range(1, sections + 1):
        node = str(k)
        capacitors.append(Capacitor(name=f"{prefix_c}{k}", node_a=node, node_b="0", farads=c_value, line=k))
        if with_series and k < sections:
            resistors.append(Resistor(name=f"R{k}", node_a=node, node_b=str(k + 1), ohms=2.0, line=k))
        if not with_series:
            resistors.append(Resistor(name=f"RG{k}", node_a=node, node_b="0", ohms=3.0, line=k))
    return resistors, capacitors


def test_stamping_is_linear_over_disjoint_element_sets():
    ra, ca = _half("CA", True, 5, 1.0)
    rb, cb = _half("CB", False, 5, 2.0)
    a = assemble_mna(ElementList(resistors=ra, capacitors=ca))
    b = assemble_mna(ElementList(resistors=rb, capacitors=cb))
    both = assemble_mna(ElementList(resistors=ra + rb, capacitors=ca + cb))

    np.testing.assert_allclose(both.G.toarray(), a.G.toarray() + b.G.toarray(), rtol=0, atol=1e-15)
    np.testing.assert_allclose(both.C.toarray(), a.C.toarray() + b.C.toarray(), rtol=0, atol=1e-15)


def test_ladder_energy_and_passivity():
    system = assemble_mna(rlc_ladder(20, ports=2, coupling=0.3, spread=0.2, seed=1))
    rng = np.random.default_rng(0)

    X = rng.standard_normal((system.N, 100))
    energies = np.einsum("ij,ij->j", X, system.C @ X)
    assert np.all(energies > 0)

    Gn = system.blocks()["Gn"].toarray()
    assert np.linalg.eigvalsh(Gn + Gn.T).min() >= -1e-12 * np.abs(Gn).max()


def test_floating_node_receives_grounding_capacitance():
    system = assemble_mna(parse_netlist("R1 1 2 1\nC1 1 0 1\nP1 1\n"))

    assert system.C.toarray()[1, 1] == pytest.approx(1e-18)


def test_floating_node_refused_without_c_min():
    with pytest.raises(MnaAssemblyError) as info:
        assemble_mna(parse_netlist("R1 1 2 1\nC1 1 0 1\nP1 1\n"), c_min=None)

    assert info.value.details["nodes"] == ["2"]
    assert info.value.exit_code == 2


def test_series_capacitor_chain_is_grounded():
    # node 2 reaches ground through C1 and C2 in series
    system = assemble_mna(parse_netlist("C1 1 0 1\nC2 2 1 1\nR1 2 0 1\nP1 2\n"), c_min=None)

    assert system.N == 2


def test_degenerate_coupling_is_refused():
    text = "C1 1 0 1\nC2 2 0 1\nR1 1 0 1\nL1 1 0 1\nL2 2 0 1\nK1 L1 L2 1.0\n"
    with pytest.raises(MnaAssemblyError, match="positive definite"):
        assemble_mna(parse_netlist(text))


def test_node_numbering_follows_first_appearance():
    system = assemble_mna(parse_netlist("R1 b 0 1\nC1 a 0 1\nC2 b 0 2\nR2 a b 1\nP1 a\n"))

    # b first, then a
    np.testing.assert_array_equal(system.C.toarray(), np.diag([2.0, 1.0]))
    np.testing.assert_array_equal(system.B.toarray(), [[0.0], [1.0]])


def test_empty_element_list_is_refused():
    with pytest.raises(ElementListError):
        assemble_mna(ElementList())
