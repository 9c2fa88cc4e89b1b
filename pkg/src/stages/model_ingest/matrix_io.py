import json
import logging
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import scipy.io
import scipy.sparse as sp
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from src.config.defaults import C_MIN
from src.stages.errors import ElementListError, MatrixFileError
from src.stages.model_ingest.mna import assemble_mna
from src.stages.model_ingest.netlist import parse_netlist_file
from src.stages.model_ingest.schema import DescriptorSystem, ElementList, ModelStatistics

logger = logging.getLogger(__name__)

MATRIX_KEYS = ("G", "C", "B", "L")


class MatrixManifest(BaseModel):
    """Manifest naming the four coordinate files; ROM manifests carry extra keys."""
    model_config = ConfigDict(extra="allow")

    files: Dict[str, str]
    ports: List[str] = Field(default_factory=list)
    outputs: List[str] = Field(default_factory=list)
    n: Optional[int] = None
    m: Optional[int] = None
    order: Optional[int] = None


def write_matrix(path: Path, matrix, dense: bool = False) -> None:
    """Matrix Market coordinate file; dense=True lists every entry, zeros included."""
    if dense:
        array = np.asarray(matrix, dtype=float)
        rows, cols = np.indices(array.shape)
        coo = sp.coo_matrix(
            (array.ravel(), (rows.ravel(), cols.ravel())), shape=array.shape
        )
    else:
        coo = sp.coo_matrix(matrix, dtype=float)
    scipy.io.mmwrite(str(path), coo, precision=17, symmetry="general")


def read_matrix(path: Path) -> sp.csr_matrix:
    try:
        data = scipy.io.mmread(str(path))
    except (OSError, ValueError) as e:
        raise MatrixFileError(f"cannot read matrix file {path}: {e}", {"path": str(path)})
    return sp.csr_matrix(data, dtype=float)


def save_matrices(system: DescriptorSystem, directory: Union[str, Path]) -> Path:
    """Write G, C, B, L plus manifest.json; the inverse of load_matrices."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    files = {}
    for key in MATRIX_KEYS:
        filename = f"{key}.mtx"
        write_matrix(out / filename, getattr(system, key))
        files[key] = filename
    manifest = MatrixManifest(
        files=files,
        ports=system.port_names(),
        outputs=system.output_names(),
        n=system.n,
        m=system.m,
    )
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest.model_dump(exclude_none=True), indent=2), encoding="utf-8")
    logger.info("Saved N=%d system to %s", system.N, path)
    return path


def load_matrices(
        paths: Union[str, Path, Dict[str, Union[str, Path]]],
        ports: Optional[List[str]] = None,
        outputs: Optional[List[str]] = None,
        n: Optional[int] = None,
        m: Optional[int] = None,
) -> DescriptorSystem:
    """
    Build a validated DescriptorSystem from coordinate files.

    `paths` is either a manifest path or a mapping {G, C, B, L} -> file. Relative
    file names in a manifest resolve against the manifest's directory.
    """
    if isinstance(paths, dict):
        files = {key: Path(value) for key, value in paths.items()}
    else:
        manifest_path = Path(paths)
        try:
            raw = json.loads(manifest_path.read_text(encoding="utf-8"))
            manifest = MatrixManifest.model_validate(raw)
        except (OSError, json.JSONDecodeError, ValidationError) as e:
            raise MatrixFileError(f"invalid manifest {manifest_path}: {e}")
        files = {key: manifest_path.parent / value for key, value in manifest.files.items()}
        ports = ports or manifest.ports
        outputs = outputs or manifest.outputs
        if n is None:
            n = manifest.n if manifest.n is not None else manifest.order
        if m is None:
            m = manifest.m

    missing = [key for key in MATRIX_KEYS if key not in files]
    if missing:
        raise MatrixFileError(f"manifest lacks matrix file(s): {', '.join(missing)}")

    mats = {key: read_matrix(files[key]) for key in MATRIX_KEYS}
    N = mats["G"].shape[0]
    m = m or 0
    n = n if n is not None else N - m

    return DescriptorSystem(
        **mats, n=n, m=m, ports=list(ports or []), outputs=list(outputs or [])
    )


def read_model(
        path: Union[str, Path],
        c_min: Optional[float] = C_MIN,
) -> Tuple[DescriptorSystem, ModelStatistics]:
    """Like load_model, also returning the model statistics of the input."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        system = load_matrices(path)
        return system, model_statistics(system)
    try:
        elems = parse_netlist_file(path)
    except OSError as e:
        raise MatrixFileError(f"cannot read netlist {path}: {e}", {"path": str(path)})
    if not elems.node_order():
        raise ElementListError(f"netlist {path} has no elements", {"path": str(path)})
    if not elems.ports:
        raise ElementListError(f"netlist {path} declares no ports", {"path": str(path)})
    return assemble_mna(elems, c_min=c_min), model_statistics(elems)


def load_model(path: Union[str, Path], c_min: Optional[float] = C_MIN) -> DescriptorSystem:
    """Netlist or matrix manifest (.json) to DescriptorSystem."""
    return read_model(path, c_min)[0]


def model_statistics(source: Union[ElementList, DescriptorSystem]) -> ModelStatistics:
    if isinstance(source, ElementList):
        return source.statistics()
    return ModelStatistics(initial_order=source.N, nodes=source.n, ports=source.p)
