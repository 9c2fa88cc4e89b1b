import json
import logging
from pathlib import Path
from typing import Any, Dict, Union

from src.stages.bt_lowrank.schema import ReducedOrderModel
from src.stages.model_ingest.matrix_io import MATRIX_KEYS, load_matrices, write_matrix
from src.stages.model_ingest.schema import DescriptorSystem

logger = logging.getLogger(__name__)

ROM_MANIFEST = "rom.json"


def rom_manifest(rom: ReducedOrderModel) -> Dict[str, Any]:
    provenance = rom.provenance
    manifest: Dict[str, Any] = {
        "order": rom.order,
        "ports": rom.ports,
        "outputs": rom.outputs,
        "files": {key: f"{key}.mtx" for key in MATRIX_KEYS},
        "n": rom.order,
        "m": 0,
        "hsv": rom.hsv.to_list(),
        "error_bound": rom.error_bound,
        "method": provenance.method,
    }
    if provenance.method == "eksm":
        manifest["eksm"] = {
            "tol": provenance.tol,
            "iterations_P": provenance.iterations_P,
            "iterations_Q": provenance.iterations_Q,
            "residual_P": provenance.residual_P,
            "residual_Q": provenance.residual_Q,
        }
    manifest["provenance"] = provenance.model_dump()
    return manifest


def export_rom(rom: ReducedOrderModel, directory: Union[str, Path]) -> Path:
    """Write G~, C~, B~, L~ as full coordinate listings plus rom.json; returns the manifest path."""
    out = Path(directory)
    try:
        out.mkdir(parents=True, exist_ok=True)
        for key in MATRIX_KEYS:
            write_matrix(out / f"{key}.mtx", getattr(rom, key), dense=True)
        path = out / ROM_MANIFEST
        path.write_text(json.dumps(rom_manifest(rom), indent=2), encoding="utf-8")
    except OSError:
        logger.exception("Could not export ROM to %s", out)
        raise
    logger.info("Exported r=%d ROM to %s", rom.order, path)
    return path


def load_rom(manifest: Union[str, Path]) -> DescriptorSystem:
    """Read an exported ROM back as a DescriptorSystem (r node states, no branches)."""
    return load_matrices(manifest)
