import argparse
import json
import logging
import resource
import sys
import time
from pathlib import Path
from typing import Any, Dict, List, Optional

import pandas as pd

from src.config.run_config import RunConfig, load_run_config
from src.stages.errors import ConfigError, PortMismatchError, ReductionError
from src.stages.freqresp.sweep import compare, transfer_function, y_to_s
from src.stages.freqresp.writers import touchstone_name, write_csv, write_touchstone
from src.stages.model_ingest.checks import check_invariants
from src.stages.model_ingest.matrix_io import load_model, read_model, save_matrices
from src.stages.model_ingest.mna import assemble_mna
from src.stages.model_ingest.netlist import write_netlist
from src.stages.model_ingest.synthetic import rc_ladder, rlc_ladder, rlc_mesh
from src.stages.state import ReductionState
from src.workflow.graph import construct_graph

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s | %(levelname)s | %(name)s | %(message)s"


class _Parser(argparse.ArgumentParser):
    """Usage errors become ConfigError so they share the JSON error record and exit code 1."""

    def error(self, message: str):
        raise ConfigError(f"{self.prog}: {message}")


def _configure_logging(verbosity: int) -> None:
    level = {0: logging.WARNING, 1: logging.INFO}.get(verbosity, logging.DEBUG)
    logging.basicConfig(level=level, format=LOG_FORMAT)
    logging.getLogger().setLevel(level)


def _peak_memory_gb() -> float:
    """Peak resident set size of this process; an estimate, not a measurement of the solver alone."""
    peak = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
    scale = 1.0 if sys.platform == "darwin" else 1024.0
    return peak * scale / 1e9


def _config(args: argparse.Namespace, **overrides: Any) -> RunConfig:
    flags = {key: value for key, value in vars(args).items() if key not in ("command", "config", "handler")}
    flags.update(overrides)
    return load_run_config(flags, config_file=args.config)


def _progress(side: str, j: int, size: int, residual: float) -> None:
    logger.info("EKSM %s: j=%d basis=%d residual=%.3e", side, j, size, residual)


def cmd_reduce(args: argparse.Namespace) -> int:
    config = _config(args)
    _configure_logging(config.verbosity)
    start = time.perf_counter()

    initial_state: ReductionState = {
        "config": config,
        "progress": _progress if config.verbosity else None,
        "warnings": [],
        "timings": {},
    }
    graph = construct_graph()
    final = graph.invoke(initial_state, config={"max_concurrency": config.threads})

    rom = final["rom"]
    provenance = rom.provenance
    summary = pd.DataFrame([{
        "model": config.input.name,
        "mode": config.mode,
        "initial order": final["statistics"].initial_order,
        "ROM order": rom.order,
        "residual P": provenance.residual_P,
        "residual Q": provenance.residual_Q,
        "error bound": rom.error_bound,
        "reduction time (s)": round(time.perf_counter() - start, 3),
        "memory (GB)": round(_peak_memory_gb(), 3),
    }])
    summary.to_csv(config.out / "summary.csv", index=False)
    print(summary.to_string(index=False))
    for warning in final.get("warnings", []):
        print(f"warning: {warning}", file=sys.stderr)
    return 0


def _sweep(config: RunConfig, system, stem: str) -> Dict[str, Any]:
    grid = config.frequency_grid()
    Y = transfer_function(system, grid, threads=config.threads)
    S = y_to_s(Y, config.z0)
    write_csv(S, config.out / f"{stem}_s.csv")
    write_touchstone(S, config.out / touchstone_name(stem, S.p), comments=[f"{stem}, Z0 = {config.z0:g} ohm"])
    return {"Y": Y, "S": S}


def cmd_compare(args: argparse.Namespace) -> int:
    config = _config(args, input=args.original)
    _configure_logging(config.verbosity)
    original = load_model(config.input, c_min=config.c_min)
    rom = load_model(args.rom, c_min=config.c_min)
    if (original.p, original.q) != (rom.p, rom.q):
        raise PortMismatchError(
            f"port counts differ: original {original.p}x{original.q}, ROM {rom.p}x{rom.q}",
            {"original": original.p, "rom": rom.p},
        )
    config.out.mkdir(parents=True, exist_ok=True)
    a = _sweep(config, original, "original")
    b = _sweep(config, rom, "rom")

    metrics = {
        "s_parameters": compare(a["S"], b["S"]).model_dump(),
        "transfer_function": compare(a["Y"], b["Y"]).model_dump(),
    }
    (config.out / "metrics.json").write_text(json.dumps(metrics, indent=2), encoding="utf-8")
    table = pd.DataFrame([
        {"quantity": key, "grid max": value["max_error"], "rms": value["rms_error"],
         f"at ({value['unit']})": value["max_frequency"]}
        for key, value in metrics.items()
    ])
    print(table.to_string(index=False))
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    config = _config(args)
    _configure_logging(config.verbosity)
    system, statistics = read_model(config.input, c_min=config.c_min)
    report = check_invariants(system, dense_cap=config.dense_cap)

    print(pd.DataFrame([statistics.model_dump()]).to_string(index=False))
    print(pd.DataFrame([c.model_dump() for c in report.checks]).to_string(index=False))
    report.raise_for_failures()
    return 0


def cmd_freqresp(args: argparse.Namespace) -> int:
    config = _config(args)
    _configure_logging(config.verbosity)
    system = load_model(config.input, c_min=config.c_min)
    config.out.mkdir(parents=True, exist_ok=True)
    stem = config.input.stem
    samples = _sweep(config, system, stem)
    write_csv(samples["Y"], config.out / f"{stem}_y.csv")
    return 0


def cmd_generate(args: argparse.Namespace) -> int:
    _configure_logging(args.verbosity or 0)
    if args.kind == "rc":
        elems = rc_ladder(args.sections, ports=args.ports, spread=args.spread, seed=args.seed)
    elif args.kind == "mesh":
        elems = rlc_mesh(
            args.sections, args.cols, ports=args.ports, coupling=args.coupling, spread=args.spread, seed=args.seed
        )
    else:
        elems = rlc_ladder(
            args.sections, ports=args.ports, coupling=args.coupling, spread=args.spread, seed=args.seed
        )
    out = Path(args.out)
    if args.matrices:
        save_matrices(assemble_mna(elems), out)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        shape = f"{args.sections}x{args.cols} mesh" if args.kind == "mesh" else f"{args.kind} ladder, {args.sections} sections"
        title = f"{shape}, {args.ports} ports"
        out.write_text(write_netlist(elems, title=title), encoding="utf-8")
    print(pd.DataFrame([elems.statistics().model_dump()]).to_string(index=False))
    return 0


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="flat key=value config file")
    parser.add_argument("-v", "--verbose", dest="verbosity", action="count", default=None)
    parser.add_argument("--threads", type=int)
    parser.add_argument("--c-min", dest="c_min", help="grounding capacitance in farads, or 'none'")
    parser.add_argument("--dense-cap", dest="dense_cap", type=int)
    parser.add_argument("--out", type=Path)


def _sweep_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--grid", help="start:stop:count:log|lin in Hz")
    parser.add_argument("--z0", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rlck-mor", description="Balanced-truncation reduction of RLCk models")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    reduce = commands.add_parser("reduce", help="reduce a model and export the ROM")
    reduce.add_argument("input", type=Path)
    reduce.add_argument("--mode", choices=["eksm", "dense-oracle"])
    reduce.add_argument("--tol", type=float)
    reduce.add_argument("--maxiter", type=int)
    reduce.add_argument("--order", type=int)
    reduce.add_argument("--eps", type=float)
    _sweep_flags(reduce)
    _common(reduce)
    reduce.set_defaults(handler=cmd_reduce)

    comp = commands.add_parser("compare", help="compare S-parameters of a model and a ROM")
    comp.add_argument("original", type=Path)
    comp.add_argument("rom", type=Path)
    _sweep_flags(comp)
    _common(comp)
    comp.set_defaults(handler=cmd_compare)

    validate = commands.add_parser("validate", help="check descriptor-system invariants")
    validate.add_argument("input", type=Path)
    _common(validate)
    validate.set_defaults(handler=cmd_validate)

    freq = commands.add_parser("freqresp", help="sweep a model and write Y/S data")
    freq.add_argument("input", type=Path)
    _sweep_flags(freq)
    _common(freq)
    freq.set_defaults(handler=cmd_freqresp)

    gen = commands.add_parser("generate", help="write a synthetic ladder or mesh model")
    gen.add_argument("kind", choices=["rc", "rlc", "mesh"])
    gen.add_argument("out", type=Path)
    gen.add_argument("--sections", type=int, default=50)
    gen.add_argument("--cols", type=int, default=10, help="mesh columns; --sections gives the rows")
    gen.add_argument("--ports", type=int, default=1)
    gen.add_argument("--coupling", type=float, default=0.1)
    gen.add_argument("--spread", type=float, default=0.0)
    gen.add_argument("--seed", type=int)
    gen.add_argument("--matrices", action="store_true", help="write Matrix Market files instead of a netlist")
    gen.add_argument("-v", "--verbose", dest="verbosity", action="count", default=None)
    gen.set_defaults(handler=cmd_generate)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.handler(args)
    except ReductionError as e:
        logger.debug("Command failed", exc_info=True)
        print(json.dumps(e.to_record()), file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
