import numpy as np
import pytest

from src.stages.bt_dense.balancing import balance_truncate_dense, dense_state_matrices, gramians_dense
from src.stages.bt_dense.hsv import hankel_singular_values, numerical_rank, select_order
from src.stages.bt_dense.schema import HsvSpectrum
from src.stages.errors import (
    CapExceededError,
    ConfigError,
    DimensionMismatchError,
    LyapunovSolveError,
    SingularMatrixError,
)
from src.stages.freqresp.sweep import compare, transfer_at, transfer_function
from src.stages.model_ingest.schema import DescriptorSystem
from tests.conftest import random_stable, scalar_system, unit_rc


def test_scalar_gramians(scalar):
    pair = gramians_dense(scalar)

    assert pair.P[0, 0] == pytest.approx(0.5, rel=1e-14)
    assert pair.Q[0, 0] == pytest.approx(0.5, rel=1e-14)


def test_scalar_gramians_with_capacitance_two(scalar_c2):
    pair = gramians_dense(scalar_c2)

    assert pair.P[0, 0] == pytest.approx(0.25, rel=1e-14)
    assert pair.Q[0, 0] == pytest.approx(1.0, rel=1e-14)


def test_rc_ladder_residuals():
    pair = gramians_dense(unit_rc(10, ports=2))

    assert pair.residual_P <= 1e-10
    assert pair.residual_Q <= 1e-10


def test_dense_cap_is_enforced():
    with pytest.raises(CapExceededError) as info:
        gramians_dense(unit_rc(10), dense_cap=5)

    assert info.value.details == {"N": 10, "cap": 5}


def test_singular_capacitance():
    system = DescriptorSystem(
        G=-np.eye(2), C=np.diag([1.0, 0.0]), B=np.ones((2, 1)), L=np.ones((1, 2)), n=2
    )

    with pytest.raises(SingularMatrixError):
        dense_state_matrices(system)


def test_hsv_of_scalar_gramians():
    hsv = hankel_singular_values(np.array([[0.5]]), np.array([[0.5]]))

    np.testing.assert_allclose(hsv.sigma, [0.5], rtol=1e-15)


def test_hsv_of_identity_gramians():
    hsv = hankel_singular_values(np.eye(3), np.eye(3))

    np.testing.assert_allclose(hsv.sigma, [1.0, 1.0, 1.0], rtol=1e-14)


def test_hsv_matches_cholesky_factors():
    rng = np.random.default_rng(8)
    X = rng.standard_normal((8, 8))
    Y = rng.standard_normal((8, 8))
    P = X @ X.T + np.eye(8)
    Q = Y @ Y.T + np.eye(8)
    expected = np.linalg.svd(np.linalg.cholesky(Q).T @ np.linalg.cholesky(P), compute_uv=False)

    hsv = hankel_singular_values(P, Q)

    np.testing.assert_allclose(hsv.sigma, expected, rtol=1e-10)


def test_hsv_shape_mismatch():
    with pytest.raises(DimensionMismatchError):
        hankel_singular_values(np.eye(2), np.eye(3))


@pytest.mark.parametrize("eps, expected", [(0.5, 1), (0.0, 3), (0.001, 3), (0.0021, 2), (10.0, 1)])
def test_select_order(eps, expected):
    assert select_order(HsvSpectrum(sigma=[1.0, 0.1, 0.001]), eps) == expected


def test_select_order_rejects_negative_eps():
    with pytest.raises(ConfigError):
        select_order(HsvSpectrum(sigma=[1.0]), -1.0)


def test_tails_and_rank():
    hsv = HsvSpectrum(sigma=[1.0, 0.1, 0.01, 0.0])

    np.testing.assert_allclose(hsv.tails, [2.22, 0.22, 0.02, 0.0, 0.0])
    assert numerical_rank(hsv) == 3


def test_spectrum_must_descend():
    with pytest.raises(LyapunovSolveError):
        HsvSpectrum(sigma=[0.1, 1.0])


def test_scalar_truncation_is_exact(scalar):
    rom, _ = balance_truncate_dense(scalar, order=1)

    assert rom.error_bound == 0.0
    assert rom.order == 1
    assert transfer_at(rom, 0.0)[0, 0] == pytest.approx(1.0, rel=1e-14)
    assert transfer_at(rom, 1j)[0, 0] == pytest.approx(0.5 - 0.5j, rel=1e-14)
    np.testing.assert_allclose(rom.C, np.eye(1))


def test_rc_ladder_error_within_bound(unit_grid):
    system = unit_rc(20)
    rom, _ = balance_truncate_dense(system, order=5)

    error = compare(transfer_function(system, unit_grid), transfer_function(rom, unit_grid))

    assert rom.error_bound == pytest.approx(rom.hsv.tail(5))
    assert error.max_error <= (1 + 1e-6) * rom.error_bound + 1e-12


def test_full_order_preserves_transfer_function(unit_grid):
    system = random_stable(6, p=2, seed=3)
    rom, _ = balance_truncate_dense(system, order=6)

    error = compare(transfer_function(system, unit_grid), transfer_function(rom, unit_grid))

    assert rom.order == 6
    assert error.relative_max_error <= 1e-10


def test_transform_balances_the_gramians():
    system = random_stable(6, p=2, seed=4)
    pair = gramians_dense(system)
    rom, transform = balance_truncate_dense(system, order=6)
    sigma = np.diag(rom.hsv.sigma)

    T, T_inv = transform.T, transform.T_inv

    np.testing.assert_allclose(T @ pair.P @ T.T, sigma, rtol=0, atol=1e-8 * sigma[0, 0])
    np.testing.assert_allclose(T_inv.T @ pair.Q @ T_inv, sigma, rtol=0, atol=1e-8 * sigma[0, 0])


def test_input_scaling_scales_hsv_and_keeps_order():
    base = random_stable(8, p=2, seed=6)
    scaled = DescriptorSystem(G=base.G, C=base.C, B=3.0 * base.B, L=base.L, n=base.n)

    rom, _ = balance_truncate_dense(base, eps=1e-3)
    rom_scaled, _ = balance_truncate_dense(scaled, eps=3e-3)

    leading = rom.hsv.sigma >= 1e-3 * rom.hsv.sigma[0]
    np.testing.assert_allclose(rom_scaled.hsv.sigma[leading], 3.0 * rom.hsv.sigma[leading], rtol=1e-8)
    assert rom_scaled.order == rom.order


def test_order_above_rank_is_clamped_with_warning():
    # second state is uncontrollable
    system = DescriptorSystem(
        G=np.diag([-1.0, -2.0]), C=np.eye(2), B=[[1.0], [0.0]], L=[[1.0, 1.0]], n=2
    )

    rom, _ = balance_truncate_dense(system, order=2)

    assert rom.order == 1
    assert any("numerical rank" in w for w in rom.provenance.warnings)


def test_default_order_uses_relative_eps():
    system = unit_rc(20)

    rom, _ = balance_truncate_dense(system)

    assert rom.error_bound <= 1e-6 * rom.hsv.tail(0)
    assert rom.order < system.N
    assert rom.provenance.method == "dense-oracle"


def test_scalar_with_capacitance_two(scalar_c2):
    rom, _ = balance_truncate_dense(scalar_c2, order=1)

    # H(s) = 1 / (2 s + 1)
    assert transfer_at(rom, 0.5j)[0, 0] == pytest.approx(1 / (1 + 1j), rel=1e-13)
    np.testing.assert_allclose(rom.hsv.sigma, [0.5], rtol=1e-14)
    assert transfer_at(scalar_system(c=2.0), 0.5j)[0, 0] == pytest.approx(1 / (1 + 1j), rel=1e-14)
