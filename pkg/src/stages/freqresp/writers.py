import logging
from pathlib import Path
from typing import Iterable, List, Optional, Union

import numpy as np
import pandas as pd

from src.stages.errors import ConfigError
from src.stages.freqresp.schema import TransferFunctionSamples

logger = logging.getLogger(__name__)

_PREFIX = {"scattering": "S", "admittance": "Y", "generic": "H"}
_PAIRS_PER_LINE = 4


def _entry(prefix: str, i: int, j: int, wide: bool) -> str:
    return f"{prefix}{i}_{j}" if wide else f"{prefix}{i}{j}"


def samples_frame(samples: TransferFunctionSamples) -> pd.DataFrame:
    """One row per frequency: freq_hz then re/im columns, row-major over (output, port)."""
    prefix = _PREFIX[samples.kind]
    wide = max(samples.q, samples.p) > 9
    columns = {"freq_hz": samples.grid.hz}
    for i in range(samples.q):
        for j in range(samples.p):
            name = _entry(prefix, i + 1, j + 1, wide)
            columns[f"{name}_re"] = samples.H[:, i, j].real
            columns[f"{name}_im"] = samples.H[:, i, j].imag
    return pd.DataFrame(columns)


def write_csv(samples: TransferFunctionSamples, path: Union[str, Path]) -> Path:
    path = Path(path)
    samples_frame(samples).to_csv(path, index=False, float_format="%.17g")
    logger.info("Wrote %d-point %s CSV to %s", len(samples.grid), samples.kind, path)
    return path


def _record(freq: float, S: np.ndarray) -> List[str]:
    """Touchstone v1 data lines for one frequency."""
    ports = S.shape[0]

    def pair(z: complex) -> str:
        return f"{z.real:.12e} {z.imag:.12e}"

    if ports <= 2:
        # two-port files list S11 S21 S12 S22
        values = S.T.ravel()
        return [f"{freq:.12e} " + " ".join(pair(z) for z in values)]
    lines = []
    for i in range(ports):
        row = S[i]
        for start in range(0, ports, _PAIRS_PER_LINE):
            chunk = " ".join(pair(z) for z in row[start:start + _PAIRS_PER_LINE])
            lead = f"{freq:.12e} " if i == 0 and start == 0 else " " * 19
            lines.append(lead + chunk)
    return lines


def write_touchstone(
        samples: TransferFunctionSamples,
        path: Union[str, Path],
        comments: Optional[Iterable[str]] = None,
) -> Path:
    """Touchstone v1 (.sNp) with '# HZ S RI R <z0>' options and real/imaginary pairs."""
    if samples.kind != "scattering" or samples.z0 is None:
        raise ConfigError("Touchstone export needs S-parameter samples with a reference impedance")
    if samples.p != samples.q:
        raise ConfigError("Touchstone export needs a square S matrix")
    lines = [f"! {c}" for c in (comments or [])]
    lines.append(f"# HZ S RI R {samples.z0:g}")
    for freq, S in zip(samples.grid.hz, samples.H):
        lines.extend(_record(float(freq), S))
    path = Path(path)
    path.write_text("\n".join(lines) + "\n", encoding="ascii")
    logger.info("Wrote %d-port Touchstone file %s", samples.p, path)
    return path


def touchstone_name(stem: str, ports: int) -> str:
    return f"{stem}.s{ports}p"
