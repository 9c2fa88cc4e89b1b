"""
Netlist subset reader/writer.

Grammar (one element per line, prefixes case-insensitive):

    R<name> n+ n- value
    C<name> n+ n- value
    L<name> n+ n- value
    K<name> L<name1> L<name2> k
    P<name> node [reference]
    * comment
    .end

Values accept the SPICE suffixes f p n u m k meg g t and an ignored unit label
(``10pF``, ``1.5nH``). Node "0" is ground.
"""
import logging
import math
import re
from pathlib import Path
from typing import Dict, List, Tuple

from src.stages.errors import (
    DuplicateElementError,
    NetlistError,
    NetlistSyntaxError,
    NonPositiveValueError,
    UndeclaredInductorError,
)
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

_SUFFIXES = {
    "t": 1e12,
    "g": 1e9,
    "meg": 1e6,
    "k": 1e3,
    "m": 1e-3,
    "u": 1e-6,
    "n": 1e-9,
    "p": 1e-12,
    "f": 1e-15,
}

_VALUE_RE = re.compile(
    r"^([+-]?(?:\d+\.?\d*|\.\d+)(?:e[+-]?\d+)?)"  # mantissa and exponent
    r"(meg|[tgkmunpf])?"                          # scale suffix
    r"([a-z]*)$",                                 # unit label, ignored
    re.IGNORECASE,
)

_TOKEN_RE = re.compile(r"\S+")

_KIND_LABEL = {"R": "resistance", "C": "capacitance", "L": "inductance"}


def parse_value(text: str) -> float:
    """Parse a SPICE-style number; raises ValueError on malformed input."""
    match = _VALUE_RE.match(text.strip())
    if not match:
        raise ValueError(f"malformed value {text!r}")
    mantissa, suffix, _ = match.groups()
    value = float(mantissa)
    if suffix:
        value *= _SUFFIXES[suffix.lower()]
    return value


def _tokenize(line: str) -> List[Tuple[str, int]]:
    return [(m.group(), m.start() + 1) for m in _TOKEN_RE.finditer(line)]


def _value(token: str, column: int, lineno: int) -> float:
    try:
        value = parse_value(token)
    except ValueError:
        raise NetlistSyntaxError(f"malformed value {token!r}", lineno, column)
    if not math.isfinite(value):
        raise NetlistSyntaxError(f"value {token!r} is not finite", lineno, column)
    return value


def parse_netlist(text: str) -> ElementList:
    """Turn netlist text into an ElementList, keeping line/column of every element."""
    resistors: List[Resistor] = []
    capacitors: List[Capacitor] = []
    inductors: List[Inductor] = []
    couplings: List[MutualCoupling] = []
    ports: List[Port] = []
    declared: Dict[str, int] = {}
    coupling_refs: List[Tuple[str, int, int]] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        tokens = _tokenize(raw)
        if not tokens or tokens[0][0].startswith("*"):
            continue

        head, head_col = tokens[0]
        if head.startswith("."):
            if head.lower() == ".end":
                break
            raise NetlistSyntaxError(f"unsupported directive {head}", lineno, head_col)

        prefix = head[0].upper()
        key = head.upper()
        if key in declared:
            raise DuplicateElementError(
                f"duplicate element {head} (first declared on line {declared[key]})",
                lineno,
                head_col,
            )

        if prefix in ("R", "C", "L"):
            if len(tokens) != 4:
                raise NetlistSyntaxError(
                    f"{prefix} element expects 'name n+ n- value', got {len(tokens)} fields",
                    lineno,
                    head_col,
                )
            (_, _), (node_a, _), (node_b, _), (value_tok, value_col) = tokens
            value = _value(value_tok, value_col, lineno)
            if value <= 0:
                raise NonPositiveValueError(
                    f"non-positive {_KIND_LABEL[prefix]} {value_tok}", lineno, value_col
                )
            common = dict(name=head, node_a=node_a, node_b=node_b, line=lineno, column=head_col)
            if prefix == "R":
                resistors.append(Resistor(ohms=value, **common))
            elif prefix == "C":
                capacitors.append(Capacitor(farads=value, **common))
            else:
                inductors.append(Inductor(henries=value, **common))

        elif prefix == "K":
            if len(tokens) != 4:
                raise NetlistSyntaxError(
                    "K element expects 'name Lname1 Lname2 k'", lineno, head_col
                )
            (_, _), (ref_a, col_a), (ref_b, col_b), (value_tok, value_col) = tokens
            k = _value(value_tok, value_col, lineno)
            if abs(k) > 1.0:
                raise NetlistSyntaxError(
                    f"coupling coefficient |k| = {abs(k)} exceeds 1", lineno, value_col
                )
            coupling_refs.extend([(ref_a, lineno, col_a), (ref_b, lineno, col_b)])
            couplings.append(
                MutualCoupling(
                    name=head, inductor_a=ref_a, inductor_b=ref_b,
                    coefficient=k, line=lineno, column=head_col,
                )
            )

        elif prefix == "P":
            if len(tokens) not in (2, 3):
                raise NetlistSyntaxError("port expects 'name node [reference]'", lineno, head_col)
            node = tokens[1][0]
            reference = tokens[2][0] if len(tokens) == 3 else GROUND
            if node == reference:
                raise NetlistSyntaxError(
                    f"port {head} node equals its reference", lineno, tokens[1][1]
                )
            ports.append(
                Port(name=head, node=node, reference=reference, line=lineno, column=head_col)
            )

        else:
            raise NetlistSyntaxError(f"unknown element type {head!r}", lineno, head_col)

        declared[key] = lineno

    inductor_names = {ind.name.upper() for ind in inductors}
    for ref, lineno, column in coupling_refs:
        if ref.upper() not in inductor_names:
            raise UndeclaredInductorError(f"undeclared inductor {ref}", lineno, column)

    nodes = {n for e in (*resistors, *capacitors, *inductors) for n in e.nodes}
    for port in ports:
        for node in (port.node, port.reference):
            if node != GROUND and node not in nodes:
                raise NetlistError(
                    f"port {port.name} node {node!r} is not connected to any element",
                    port.line,
                    port.column,
                )

    elems = ElementList(
        resistors=resistors,
        capacitors=capacitors,
        inductors=inductors,
        mutual_couplings=couplings,
        ports=ports,
    )

    logger.debug(
        "Parsed netlist: %d R, %d C, %d L, %d K, %d ports",
        len(resistors), len(capacitors), len(inductors), len(couplings), len(ports),
    )
    return elems


def parse_netlist_file(path: str | Path) -> ElementList:
    data = Path(path).read_bytes()
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as e:
        line_start = data.rfind(b"\n", 0, e.start) + 1
        line = data.count(b"\n", 0, e.start) + 1
        raise NetlistSyntaxError(f"invalid UTF-8 byte 0x{data[e.start]:02x}", line, e.start - line_start + 1)
    return parse_netlist(text)


def write_netlist(elems: ElementList, title: str = "") -> str:
    """Render an ElementList back into the grammar read by parse_netlist."""
    lines = [f"* {title}"] if title else []
    lines += [f"{r.name} {r.node_a} {r.node_b} {r.ohms!r}" for r in elems.resistors]
    lines += [f"{c.name} {c.node_a} {c.node_b} {c.farads!r}" for c in elems.capacitors]
    lines += [f"{l.name} {l.node_a} {l.node_b} {l.henries!r}" for l in elems.inductors]
    by_name = {ind.name.upper(): ind for ind in elems.inductors}
    for k in elems.mutual_couplings:
        coefficient = k.coefficient
        if coefficient is None:
            la = by_name[k.inductor_a.upper()].henries
            lb = by_name[k.inductor_b.upper()].henries
            coefficient = k.henries / math.sqrt(la * lb)
        lines.append(f"{k.name} {k.inductor_a} {k.inductor_b} {coefficient!r}")
    for port in elems.ports:
        ref = f" {port.reference}" if port.reference != GROUND else ""
        lines.append(f"{port.name} {port.node}{ref}")
    lines.append(".end")
    return "\n".join(lines) + "\n"
