import numpy as np
import pytest

from src.stages.bt_dense.balancing import dense_state_matrices, gramians_dense
from src.stages.eksm.operator import StateScaling, build_operator, scaled_operator
from src.stages.eksm.schema import EksState
from src.stages.eksm.solver import (
    eksm_solve,
    extend_basis,
    initialize_basis,
    orthonormalize,
    project_and_solve,
    residual_norm,
)
from src.stages.errors import ConfigError, RankError, SingularMatrixError, UnstableProjectionError
from src.stages.model_ingest.schema import DescriptorSystem
from tests.conftest import random_stable, scalar_system, unit_rc, unit_rlc


def _orthonormal(K, atol=1e-12):
    np.testing.assert_allclose(K.T @ K, np.eye(K.shape[1]), rtol=0, atol=atol)


def test_scalar_operator(scalar_c2):
    op = build_operator(scalar_c2)

    np.testing.assert_allclose(op.apply_G_C(np.array([[1.0]])), [[-0.5]])
    np.testing.assert_allclose(op.apply_G_C_inv(np.array([[1.0]])), [[-2.0]])
    np.testing.assert_allclose(op.rhs_block, [[0.5]])


def test_observability_rhs_is_output_transpose(scalar):
    op = build_operator(scalar, "observability")

    np.testing.assert_allclose(op.rhs_block, [[1.0]])


def test_operator_round_trip_with_spd_capacitance():
    rng = np.random.default_rng(50)
    X = rng.standard_normal((50, 50))
    C = X @ X.T + 50 * np.eye(50)
    G = rng.random((50, 50)) - 50 * np.eye(50)
    system = DescriptorSystem(G=G, C=C, B=np.ones((50, 1)), L=np.ones((1, 50)), n=50)
    V = rng.standard_normal((50, 3))

    for side in ("controllability", "observability"):
        op = build_operator(system, side)
        np.testing.assert_allclose(op.apply_G_C(op.apply_G_C_inv(V)), V, rtol=0, atol=1e-10)


def test_observability_operator_is_the_transpose():
    system = unit_rlc(4, coupling=0.2)
    A, _ = dense_state_matrices(system)
    op = build_operator(system, "observability")

    np.testing.assert_allclose(op.apply_G_C(np.eye(system.N)), A.T, rtol=0, atol=1e-12)


def test_singular_conductance_is_named():
    system = DescriptorSystem(G=np.diag([-1.0, 0.0]), C=np.eye(2), B=np.ones((2, 1)), L=np.ones((1, 2)), n=2)

    with pytest.raises(SingularMatrixError) as info:
        build_operator(system)

    assert info.value.details["matrix"] == "G"


def test_unknown_side(scalar):
    with pytest.raises(ConfigError):
        build_operator(scalar, "sideways")


def test_scaling_makes_ladder_operator_dissipative():
    system = unit_rlc(6, coupling=0.3, spread=0.4, seed=2)
    op, _ = scaled_operator(build_operator(system), StateScaling(system))

    A_hat = op.apply_G_C(np.eye(system.N))

    assert np.linalg.eigvalsh(A_hat + A_hat.T).max() <= 1e-12


def test_scaling_inverse_maps():
    system = unit_rlc(5, coupling=0.25)
    scaling = StateScaling(system)
    V = np.random.default_rng(1).standard_normal((system.N, 2))

    np.testing.assert_allclose(scaling.T_inv(scaling.T(V)), V, atol=1e-14)
    np.testing.assert_allclose(scaling.T_inv_t(scaling.T_t(V)), V, atol=1e-14)


def test_orthonormalize_drops_dependent_columns():
    rng = np.random.default_rng(0)
    W = rng.standard_normal((10, 2))
    W = np.hstack([W, W[:, :1] + 2 * W[:, 1:]])

    Q, kept = orthonormalize(np.empty((10, 0)), W)

    assert kept == [0, 1]
    _orthonormal(Q)


def test_scalar_basis_deflates_to_one_column(scalar):
    state = initialize_basis(build_operator(scalar))

    assert state.size == 1
    assert abs(state.K[0, 0]) == pytest.approx(1.0)
    assert state.j == 1


def test_two_independent_inputs_give_four_columns():
    state = initialize_basis(build_operator(random_stable(10, p=2, seed=1)))

    assert state.size == 4
    _orthonormal(state.K)


def test_identical_input_columns_deflate():
    base = random_stable(10, p=1, seed=2)
    system = DescriptorSystem(G=base.G, C=base.C, B=np.hstack([base.B.toarray()] * 2), L=base.L, n=10)

    state = initialize_basis(build_operator(system))

    assert state.size <= 3
    assert state.deflations >= 1


def test_zero_excitation_is_refused():
    system = DescriptorSystem(G=-np.eye(3), C=np.eye(3), B=np.zeros((3, 1)), L=np.ones((1, 3)), n=3)

    with pytest.raises(RankError):
        initialize_basis(build_operator(system))


def test_numerically_zero_excitation_is_refused():
    system = DescriptorSystem(G=-np.eye(3), C=np.eye(3), B=np.full((3, 1), 1e-170), L=np.ones((1, 3)), n=3)

    with pytest.raises(RankError):
        initialize_basis(build_operator(system))


def test_tiny_but_representable_excitation_is_accepted():
    system = DescriptorSystem(G=-np.eye(3), C=np.eye(3), B=np.full((3, 1), 1e-100), L=np.ones((1, 3)), n=3)

    assert initialize_basis(build_operator(system)).size >= 1


def test_scalar_extension_deflates_completely(scalar):
    op = build_operator(scalar)
    state = initialize_basis(op)

    extended = extend_basis(state, op)

    assert extended.size == state.size
    assert extended.plus == [] and extended.minus == []


def test_diagonal_extension():
    N = 10
    system = DescriptorSystem(
        G=-np.diag(np.arange(1.0, N + 1)), C=np.eye(N), B=np.ones((N, 1)), L=np.ones((1, N)), n=N
    )
    op = build_operator(system)
    state = initialize_basis(op)

    extended = extend_basis(state, op)

    assert extended.size == 4
    assert extended.j == 2
    _orthonormal(extended.K)
    np.testing.assert_array_equal(extended.K[:, : state.size], state.K)


def test_basis_spans_krylov_directions():
    system = random_stable(8, p=1, seed=3)
    A, B = dense_state_matrices(system)
    op = build_operator(system)
    state = extend_basis(initialize_basis(op), op)
    K = state.K

    for v in (B, np.linalg.solve(A, B), A @ B, np.linalg.solve(A, np.linalg.solve(A, B))):
        v = v / np.linalg.norm(v)
        assert np.linalg.norm(v - K @ (K.T @ v)) <= 1e-10


def test_scalar_projection(scalar):
    op = build_operator(scalar)
    state = initialize_basis(op)

    X = project_and_solve(state, op)

    np.testing.assert_allclose(state.A_proj, [[-1.0]])
    np.testing.assert_allclose(np.abs(state.R_proj), [[1.0]])
    np.testing.assert_allclose(X, [[0.5]])
    assert residual_norm(state, X, op) <= 1e-15


def _full_basis_state(system, op, seed=0):
    Q, _ = np.linalg.qr(np.random.default_rng(seed).standard_normal((system.N, system.N)))
    return EksState(K=Q, AK=op.apply_G_C(Q))


def test_full_basis_projection_recovers_the_gramian():
    system = random_stable(6, p=2, seed=7)
    op = build_operator(system)
    state = _full_basis_state(system, op)
    P = gramians_dense(system).P

    X = project_and_solve(state, op)

    np.testing.assert_allclose(X, state.K.T @ P @ state.K, rtol=0, atol=1e-10 * np.linalg.norm(P))
    assert residual_norm(state, X, op) <= 1e-12


def test_factored_residual_matches_dense_residual():
    system = random_stable(20, p=2, seed=9)
    A, B = dense_state_matrices(system)
    op = build_operator(system)
    state = initialize_basis(op)
    X = project_and_solve(state, op)

    P = state.K @ X @ state.K.T
    BBt = B @ B.T
    dense = np.linalg.norm(A @ P + P @ A.T + BBt) / np.linalg.norm(BBt)

    assert residual_norm(state, X, op) == pytest.approx(dense, rel=1e-10)


def test_projected_equation_is_solved_on_ladder():
    op = build_operator(unit_rc(10))
    state = extend_basis(initialize_basis(op), op)
    assert state.j == 2

    X = project_and_solve(state, op)
    A, R = state.A_proj, state.R_proj
    RRt = R @ R.T

    assert np.linalg.norm(A @ X + X @ A.T + RRt) <= 1e-12 * np.linalg.norm(RRt)


def test_scalar_solve(scalar):
    factor = eksm_solve(scalar)

    assert factor.converged
    np.testing.assert_allclose(np.abs(factor.Z), [[1 / np.sqrt(2)]], rtol=1e-14)
    np.testing.assert_allclose(factor.gramian(), [[0.5]], rtol=1e-14)


def test_scalar_solve_through_scaling(scalar_c2):
    P = eksm_solve(scalar_c2).gramian()
    Q = eksm_solve(scalar_c2, "observability").gramian()

    np.testing.assert_allclose(P, [[0.25]], rtol=1e-14)
    np.testing.assert_allclose(Q, [[1.0]], rtol=1e-14)


@pytest.mark.parametrize("side", ["controllability", "observability"])
def test_ladder_factor_matches_dense_gramian(side):
    system = unit_rlc(50, coupling=0.2)
    pair = gramians_dense(system)
    reference = pair.P if side == "controllability" else pair.Q

    factor = eksm_solve(system, side, tol=1e-10)

    assert factor.converged
    assert factor.residual <= 1e-10
    error = np.linalg.norm(factor.gramian() - reference) / np.linalg.norm(reference)
    assert error <= 1e-8
    assert factor.rank <= 2 * system.p * factor.iterations


def test_unscaled_solve_agrees_on_unit_ladder():
    system = unit_rc(30, ports=2)
    scaled = eksm_solve(system, tol=1e-12)
    plain = eksm_solve(system, tol=1e-12, equilibrate=False)

    np.testing.assert_allclose(scaled.gramian(), plain.gramian(), rtol=0, atol=1e-9 * np.abs(plain.gramian()).max())


def test_progress_callback_sees_every_iteration():
    seen = []

    factor = eksm_solve(unit_rlc(20), tol=1e-10, callback=lambda j, size, res: seen.append((j, size, res)))

    assert [j for j, _, _ in seen] == list(range(1, factor.iterations + 1))
    assert [res for _, _, res in seen] == factor.residual_history
    assert all(b[1] >= a[1] for a, b in zip(seen, seen[1:]))


def test_maxiter_exhaustion_returns_best_iterate():
    seen = []

    factor = eksm_solve(
        unit_rlc(40, ports=2), tol=1e-15, maxiter=4, callback=lambda j, size, res: seen.append((j, size, res))
    )

    assert not factor.converged
    assert len(seen) == 4
    best_j, best_size, best_residual = min(seen, key=lambda entry: entry[2])
    assert factor.residual == best_residual
    assert factor.iterations == best_j
    assert factor.basis_size == best_size


def test_unstable_projections_abort_after_patience():
    N = 6
    system = DescriptorSystem(
        G=np.diag(np.arange(1.0, N + 1)), C=np.eye(N), B=np.ones((N, 1)), L=np.ones((1, N)), n=N
    )

    with pytest.raises(UnstableProjectionError) as info:
        eksm_solve(system, equilibrate=False, patience=3)
    assert info.value.iteration == 3

    with pytest.raises(UnstableProjectionError) as info:
        eksm_solve(system, equilibrate=False, patience=1)
    assert info.value.iteration == 1


def test_invalid_parameters(scalar):
    with pytest.raises(ConfigError):
        eksm_solve(scalar, tol=0.0)
    with pytest.raises(ConfigError):
        eksm_solve(scalar, maxiter=0)


def test_scalar_factor_lives_in_original_coordinates():
    system = scalar_system(c=4.0, g=-2.0)

    factor = eksm_solve(system)

    # P = (C^-1 B)^2 / (2 * |C^-1 G|) = (1/16) / 1
    np.testing.assert_allclose(factor.gramian(), [[1 / 16]], rtol=1e-14)
