"""JSON documents for circuits, codes and measurement patterns.

Every parser raises ``DocumentError`` whose message starts with the path of
the offending field, e.g. ``gates[2].targets[0]: must be >= 0``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from ..circuit import GATE_MATRICES, Circuit
from ..codes import PauliString, StabilizerCode
from ..mbqc import Graph, MeasurementPattern, MeasurementStep

CIRCUIT_KINDS = ("H", "T", "S", "X", "Z", "CZ", "CNOT", "I")


class DocumentError(ValueError):
    """Malformed input document; the message names the field."""

    def __init__(self, field: str, problem: str):
        super().__init__(f"{field}: {problem}")
        self.field = field


def load_json(path: str | Path) -> Any:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DocumentError(str(path), f"cannot read file ({exc.strerror})") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(str(path), f"invalid JSON at line {exc.lineno} column {exc.colno}") from None


def _int(value: Any, where: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise DocumentError(where, f"expected an integer, got {json.dumps(value)}")
    if minimum is not None and value < minimum:
        raise DocumentError(where, f"must be >= {minimum}, got {value}")
    return value


def _list(value: Any, where: str) -> list:
    if not isinstance(value, list):
        raise DocumentError(where, "expected a list")
    return value


def _obj(value: Any, where: str) -> dict:
    if not isinstance(value, dict):
        raise DocumentError(where, "expected an object")
    return value


def _require(doc: dict, key: str, where: str = "") -> Any:
    if key not in doc:
        raise DocumentError(f"{where}{key}", "missing required field")
    return doc[key]


@dataclass(frozen=True)
class CircuitDocument:
    version: int
    qubits: int
    gates: tuple[tuple[str, tuple[int, ...]], ...]

    def to_circuit(self) -> Circuit:
        return Circuit.from_spec(self.qubits, self.gates)

    @classmethod
    def from_circuit(cls, c: Circuit) -> "CircuitDocument":
        return cls(1, c.wires, tuple((g.kind, g.targets) for g in c.gates))

    def to_json(self) -> dict:
        return {"version": self.version, "qubits": self.qubits, "gates": [{"kind": k, "targets": list(t)} for k, t in self.gates]}


def parse_circuit(doc: Any) -> CircuitDocument:
    doc = _obj(doc, "circuit")
    version = _int(_require(doc, "version"), "version", 1)
    if version != 1:
        raise DocumentError("version", f"unsupported version {version}")
    qubits = _int(_require(doc, "qubits"), "qubits", 1)
    gates = []
    for i, g in enumerate(_list(_require(doc, "gates"), "gates")):
        where = f"gates[{i}]"
        g = _obj(g, where)
        kind = _require(g, "kind", f"{where}.")
        if kind not in CIRCUIT_KINDS:
            raise DocumentError(f"{where}.kind", f"unknown gate {json.dumps(kind)}; expected one of {', '.join(CIRCUIT_KINDS)}")
        targets = tuple(_int(t, f"{where}.targets[{j}]", 0) for j, t in enumerate(_list(_require(g, "targets", f"{where}."), f"{where}.targets")))
        arity = 1 if GATE_MATRICES[kind].shape[0] == 2 else 2
        if len(targets) != arity:
            raise DocumentError(f"{where}.targets", f"{kind} needs {arity} target(s), got {len(targets)}")
        if len(set(targets)) != len(targets):
            raise DocumentError(f"{where}.targets", "targets must be distinct")
        for j, t in enumerate(targets):
            if t >= qubits:
                raise DocumentError(f"{where}.targets[{j}]", f"wire {t} out of range for {qubits} qubits")
        gates.append((kind, targets))
    return CircuitDocument(version, qubits, tuple(gates))


def _pauli(value: Any, where: str, n: int | None) -> PauliString:
    if not isinstance(value, str):
        raise DocumentError(where, "expected a Pauli string such as \"ZZI\"")
    try:
        p = PauliString.from_str(value)
    except ValueError as exc:
        raise DocumentError(where, str(exc)) from None
    if n is not None and p.n != n:
        raise DocumentError(where, f"length {p.n} differs from n = {n}")
    return p


def parse_code(doc: Any) -> StabilizerCode:
    doc = _obj(doc, "code")
    n = _int(_require(doc, "n"), "n", 1)
    stabs = [_pauli(s, f"stabilizers[{i}]", n) for i, s in enumerate(_list(_require(doc, "stabilizers"), "stabilizers"))]
    lx = _pauli(doc["logical_x"], "logical_x", n) if doc.get("logical_x") is not None else None
    lz = _pauli(doc["logical_z"], "logical_z", n) if doc.get("logical_z") is not None else None
    try:
        return StabilizerCode(n, tuple(stabs), lx, lz, doc.get("label"))
    except ValueError as exc:
        raise DocumentError("stabilizers", str(exc)) from None


@dataclass(frozen=True)
class PatternDocument:
    graph: Graph
    pattern: MeasurementPattern


def parse_pattern(doc: Any) -> PatternDocument:
    """Pattern on a graph state; edges default to a path over ``sites``."""
    doc = _obj(doc, "pattern")
    sites = _int(_require(doc, "sites"), "sites", 1)
    if "edges" in doc:
        edges = []
        for i, e in enumerate(_list(doc["edges"], "edges")):
            e = _list(e, f"edges[{i}]")
            if len(e) != 2:
                raise DocumentError(f"edges[{i}]", "an edge has exactly two endpoints")
            edges.append(tuple(_int(v, f"edges[{i}][{j}]", 0) for j, v in enumerate(e)))
    else:
        edges = [(i, i + 1) for i in range(sites - 1)]
    try:
        graph = Graph(sites, frozenset(edges))
    except ValueError as exc:
        raise DocumentError("edges", str(exc)) from None
    steps = []
    for i, s in enumerate(_list(_require(doc, "steps"), "steps")):
        where = f"steps[{i}]"
        s = _obj(s, where)
        plane = s.get("plane", "XY")
        if plane not in ("XY", "Z"):
            raise DocumentError(f"{where}.plane", f"expected \"XY\" or \"Z\", got {json.dumps(plane)}")
        angle = s.get("angle", 0.0)
        if isinstance(angle, bool) or not isinstance(angle, (int, float)):
            raise DocumentError(f"{where}.angle", "expected a number")
        deps = tuple(_int(d, f"{where}.deps[{j}]", 0) for j, d in enumerate(_list(s.get("deps", []), f"{where}.deps")))
        site = _int(_require(s, "site", f"{where}."), f"{where}.site", 0)
        steps.append(MeasurementStep(site, plane, float(angle), deps))
    outputs = tuple(_int(o, f"outputs[{j}]", 0) for j, o in enumerate(_list(_require(doc, "outputs"), "outputs")))
    inputs = tuple(_int(o, f"inputs[{j}]", 0) for j, o in enumerate(_list(doc.get("inputs", []), "inputs")))

    def dep_lists(key: str) -> tuple[tuple[int, ...], ...]:
        if key not in doc:
            return ()
        rows = _list(doc[key], key)
        return tuple(tuple(_int(v, f"{key}[{i}][{j}]", 0) for j, v in enumerate(_list(r, f"{key}[{i}]"))) for i, r in enumerate(rows))

    try:
        pattern = MeasurementPattern(sites, tuple(steps), inputs, outputs, dep_lists("x_deps"), dep_lists("z_deps"))
    except ValueError as exc:
        raise DocumentError("steps", str(exc)) from None
    return PatternDocument(graph, pattern)
