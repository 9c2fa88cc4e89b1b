import logging
from concurrent.futures import ThreadPoolExecutor
from typing import List, Tuple, Union

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from src.config.defaults import DEFAULT_Z0
from src.stages.bt_lowrank.schema import ReducedOrderModel
from src.stages.errors import ConfigError, DimensionMismatchError, PortMismatchError, SingularMatrixError, SingularPencilError
from src.stages.freqresp.schema import ComparisonMetrics, FrequencyGrid, TransferFunctionSamples
from src.stages.model_ingest.schema import DescriptorSystem

logger = logging.getLogger(__name__)

System = Union[DescriptorSystem, ReducedOrderModel]


def _names(system: System) -> Tuple[List[str], List[str]]:
    if isinstance(system, DescriptorSystem):
        return system.port_names(), system.output_names()
    return list(system.ports), list(system.outputs)


def transfer_at(system: System, s: complex) -> np.ndarray:
    """H(s) = L (sC - G)^{-1} B by one factorization of the pencil."""
    s = complex(s)
    try:
        if sp.issparse(system.C):
            pencil = sp.csc_matrix(s * system.C - system.G, dtype=complex)
            X = splu(pencil).solve(system.B.toarray().astype(complex))
            H = system.L @ X
        else:
            X = np.linalg.solve(s * system.C - system.G, system.B.astype(complex))
            H = system.L @ X
    except (RuntimeError, np.linalg.LinAlgError) as e:
        raise SingularPencilError(
            f"sC - G is singular at s = {s} (omega = {s.imag:.6e} rad/s): {e}",
            {"omega": s.imag},
        )
    H = np.asarray(H)
    if not np.all(np.isfinite(H)):
        raise SingularPencilError(f"sC - G is numerically singular at s = {s}", {"omega": s.imag})
    return H


def transfer_function(system: System, grid: FrequencyGrid, threads: int = 1) -> TransferFunctionSamples:
    """Sample H(j omega) on the grid; points are independent and kept in grid order."""
    omegas = grid.omega
    with ThreadPoolExecutor(max_workers=max(threads, 1)) as pool:
        H = list(pool.map(lambda w: transfer_at(system, 1j * w), omegas))
    ports, outputs = _names(system)
    kind = "admittance" if system.B.shape[1] == system.L.shape[0] else "generic"
    logger.debug("Sampled H on %d points (%s)", len(omegas), kind)
    return TransferFunctionSamples(grid=grid, H=np.stack(H), kind=kind, ports=ports, outputs=outputs)


def y_to_s(samples: TransferFunctionSamples, z0: float = DEFAULT_Z0) -> TransferFunctionSamples:
    """S = (I - z0 Y)(I + z0 Y)^{-1} at every point."""
    if samples.kind != "admittance":
        raise ConfigError(f"S-parameters need admittance samples, got {samples.kind}")
    if samples.p != samples.q:
        raise PortMismatchError(f"admittance samples must be square, got {samples.q}x{samples.p}")
    if not z0 > 0:
        raise ConfigError(f"reference impedance must be positive, got {z0}")
    eye = np.eye(samples.p)
    zY = z0 * samples.H
    try:
        # the two factors commute, so solving from the left gives the same S
        S = np.linalg.solve(eye + zY, eye - zY)
    except np.linalg.LinAlgError:
        raise SingularMatrixError("I + z0*Y is singular at some grid point")
    return TransferFunctionSamples(
        grid=samples.grid, H=S, kind="scattering", z0=z0,
        ports=samples.ports, outputs=samples.outputs,
    )


def compare(a: TransferFunctionSamples, b: TransferFunctionSamples) -> ComparisonMetrics:
    if not a.grid.same_as(b.grid):
        raise DimensionMismatchError("samples were taken on different grids")
    if a.H.shape != b.H.shape:
        raise PortMismatchError(f"sample shapes differ: {a.H.shape} vs {b.H.shape}")
    D = a.H - b.H
    pointwise = np.linalg.norm(D, ord=2, axis=(1, 2))
    k = int(np.argmax(pointwise))
    reference = float(np.max(np.linalg.norm(a.H, ord=2, axis=(1, 2))))
    max_error = float(pointwise[k])
    return ComparisonMetrics(
        pointwise=pointwise.tolist(),
        max_error=max_error,
        max_frequency=float(a.grid.points[k]),
        unit=a.grid.unit,
        rms_error=float(np.sqrt(np.mean(pointwise ** 2))),
        relative_max_error=max_error / reference if reference > 0 else max_error,
        entry_max=np.max(np.abs(D), axis=0).tolist(),
    )
