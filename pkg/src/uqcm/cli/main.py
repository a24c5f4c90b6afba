"""``uqcm`` command line: one JSON object per invocation on stdout.

Exit codes: 0 success, 1 a check or equivalence failed, 2 usage error or
malformed input.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Any, Sequence

import numpy as np

from ..algorithms import NormTooLarge, UnsupportedGate, block_encode, program_encode, qsp_poly, qsvt_apply, qsvt_oracle, svd_decompose
from ..circuit import Circuit, circuit_unitary, simulate
from ..codes import (
    code_distance,
    kl_check,
    named_error_set,
    projector_from_stabilizers,
    qec_accuracy,
    recovery_from_errors,
    repetition_code,
)
from ..core import DeskCapExceeded, KrausChannel
from ..mbqc import cluster_state, compile_1q_gate, run_pattern
from ..tensor import state_to_mps
from .documents import CircuitDocument, DocumentError, load_json, parse_circuit, parse_code, parse_pattern
from .equivalence import MODELS, cross_model_equivalence

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(ValueError):
    pass


def _num(x: float) -> float:
    x = round(float(x), 12)
    return 0.0 if x == 0 else x


def _cplx(z: complex) -> list[float]:
    return [_num(z.real), _num(z.imag)]


def _matrix_json(m: np.ndarray) -> list:
    return [[_cplx(z) for z in row] for row in np.asarray(m, dtype=complex)]


def _load_circuit(path: str) -> Circuit:
    return parse_circuit(load_json(path)).to_circuit()


def cmd_simulate(args: argparse.Namespace) -> tuple[int, dict]:
    if bool(args.circuit) == bool(args.pattern):
        raise UsageError("simulate needs exactly one of --circuit or --pattern")
    if args.circuit:
        state = simulate(_load_circuit(args.circuit))
        amps = state.amplitudes
        return EXIT_OK, {
            "qubits": state.n_sites,
            "amplitudes": [_cplx(a) for a in amps],
            "probabilities": [_num(abs(a) ** 2) for a in amps],
        }
    doc = parse_pattern(load_json(args.pattern))
    run = run_pattern(cluster_state(doc.graph), doc.pattern, rng=np.random.default_rng(args.seed))
    return EXIT_OK, {
        "outcomes": list(run.outcomes),
        "byproduct": str(run.byproduct),
        "corrected": [_cplx(a) for a in run.corrected().amplitudes],
        "seed": args.seed,
    }


def cmd_convert(args: argparse.Namespace) -> tuple[int, dict]:
    c = _load_circuit(args.circuit)
    if args.to == "unitary":
        return EXIT_OK, {"unitary": _matrix_json(circuit_unitary(c).matrix)}
    if args.to == "mps":
        m = state_to_mps(simulate(c))
        return EXIT_OK, {"bond_dims": list(m.bond_dims), "tensors": [_matrix_json(t.reshape(t.shape[0], -1)) for t in m.site_tensors]}
    if args.to == "program":
        p = program_encode(c)
        return EXIT_OK, {"bits": p.bits, "bytes": p.to_bytes().hex(), "gates": p.n_gates}
    # pattern: one 5-site wire per gate of a single-qubit circuit
    if c.wires != 1:
        raise UsageError("--to pattern needs a single-qubit circuit")
    patterns = []
    for g in c.gates:
        p = compile_1q_gate(g.matrix)
        patterns.append(
            {
                "sites": p.n_sites,
                "inputs": list(p.inputs),
                "steps": [{"site": s.site, "plane": s.plane, "angle": _num(s.angle), "deps": list(s.deps)} for s in p.steps],
                "outputs": list(p.outputs),
                "x_deps": [list(d) for d in p.x_deps],
                "z_deps": [list(d) for d in p.z_deps],
            }
        )
    return EXIT_OK, {"patterns": patterns}


def cmd_check_code(args: argparse.Namespace) -> tuple[int, dict]:
    code = parse_code(load_json(args.code))
    try:
        errors = named_error_set(args.errors, code.n)
    except ValueError as exc:
        raise UsageError(f"--errors: {exc}") from None
    p = projector_from_stabilizers(code)
    kl = kl_check(p, errors)
    out: dict[str, Any] = {
        "n": code.n,
        "k": code.k,
        "distance": code_distance(code),
        "errors": args.errors,
        "correctable": kl.correctable,
        "a": None if kl.a is None else _matrix_json(kl.a),
        "witness": None if kl.witness is None else list(kl.witness),
    }
    if not kl.correctable:
        return EXIT_FAIL, out
    recovery = recovery_from_errors(p, errors)
    noise = KrausChannel(tuple(e / math.sqrt(len(errors)) for e in errors))
    out["accuracy"] = _num(qec_accuracy(recovery, noise, p))
    out["recovery_ops"] = len(recovery.kraus_ops)
    return EXIT_OK, out


def _parse_matrix(text: str) -> np.ndarray:
    try:
        rows = json.loads(text)
        m = np.array([[complex(v) if isinstance(v, str) else v for v in row] for row in rows], dtype=complex)
    except (json.JSONDecodeError, TypeError, ValueError):
        raise DocumentError("--matrix", "expected a JSON list of rows, e.g. [[0.5, 0], [0, 0.3]]") from None
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DocumentError("--matrix", f"expected a square matrix, got shape {m.shape}")
    return m


def _parse_phases(text: str) -> list[float]:
    if not text.strip():
        return []
    try:
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise DocumentError("--phases", "expected comma-separated numbers") from None


def cmd_qsvt(args: argparse.Namespace) -> tuple[int, dict]:
    a = _parse_matrix(args.matrix)
    phases = _parse_phases(args.phases)
    try:
        be = block_encode(a)
    except NormTooLarge as exc:
        raise DocumentError("--matrix", str(exc)) from None
    block = qsvt_apply(be, phases)
    deviation = float(np.abs(block - qsvt_oracle(a, phases)).max())
    sigma = svd_decompose(a).sigma
    ok = deviation <= args.tol
    return (EXIT_OK if ok else EXIT_FAIL), {
        "block": _matrix_json(block),
        "sigma": [_num(s) for s in sigma],
        "poly": [_cplx(qsp_poly(phases, s)) for s in sigma],
        "deviation": float(f"{deviation:.3e}"),
        "pass": ok,
        "tolerance": args.tol,
    }


def _models(text: str) -> tuple[str, ...]:
    models = tuple(m.strip() for m in text.split(",") if m.strip())
    bad = [m for m in models if m not in MODELS]
    if not models or bad:
        raise UsageError(f"--models: unknown {bad or 'empty list'}; choose from {','.join(MODELS)}")
    return models


def cmd_equiv(args: argparse.Namespace) -> tuple[int, dict]:
    c = _load_circuit(args.circuit)
    report = cross_model_equivalence(c, _models(args.models), args.tol, args.seed)
    return (EXIT_OK if report.passed else EXIT_FAIL), report.to_json(args.timings)


def _random_circuit(rng: np.random.Generator, wires: int, depth: int) -> Circuit:
    gates = []
    for _ in range(depth):
        if wires > 1 and rng.random() < 0.3:
            a, b = rng.choice(wires, size=2, replace=False)
            gates.append(("CZ", [int(a), int(b)]))
        else:
            gates.append((str(rng.choice(["H", "T"])), [int(rng.integers(wires))]))
    return Circuit.from_spec(wires, gates)


def cmd_demo(args: argparse.Namespace) -> tuple[int, dict]:
    rng = np.random.default_rng(args.seed)
    c = _random_circuit(rng, 2, 5)
    report = cross_model_equivalence(c, MODELS, args.tol, args.seed)
    code = repetition_code(3)
    p = projector_from_stabilizers(code)
    kl = kl_check(p, named_error_set("single-x", 3))
    a = np.diag(rng.uniform(0, 1, 2))
    phases = list(rng.uniform(-math.pi, math.pi, 4))
    dev = float(np.abs(qsvt_apply(block_encode(a), phases) - qsvt_oracle(a, phases)).max())
    ok = report.passed and kl.correctable and dev <= args.tol
    return (EXIT_OK if ok else EXIT_FAIL), {
        "circuit": CircuitDocument.from_circuit(c).to_json(),
        "equivalence": report.to_json(args.timings),
        "repetition_code_single_x_correctable": kl.correctable,
        "qsvt_deviation_below_tol": dev <= args.tol,
        "pass": ok,
        "seed": args.seed,
    }


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uqcm", description="Multi-model quantum computation toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--pretty", action="store_true", help="human-readable table instead of JSON")
        p.add_argument("--seed", type=int, default=0, help="seed for every stochastic path (default 0)")

    p = sub.add_parser("simulate", help="simulate a circuit or run a measurement pattern")
    p.add_argument("--circuit")
    p.add_argument("--pattern")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("convert", help="convert a circuit to another representation")
    p.add_argument("--circuit", required=True)
    p.add_argument("--to", choices=("unitary", "mps", "program", "pattern"), required=True)
    common(p)
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("check-code", help="Knill-Laflamme check of a stabilizer code")
    p.add_argument("--code", required=True)
    p.add_argument("--errors", default="single-x")
    common(p)
    p.set_defaults(func=cmd_check_code)

    p = sub.add_parser("qsvt", help="QSVT of a matrix against the per-singular-value oracle")
    p.add_argument("--matrix", required=True)
    p.add_argument("--phases", default="")
    p.add_argument("--tol", type=float, default=1e-8)
    common(p)
    p.set_defaults(func=cmd_qsvt)

    for name, helptext in (("equiv", "cross-model equivalence of one circuit"), ("demo", "small end-to-end run")):
        p = sub.add_parser(name, help=helptext)
        if name == "equiv":
            p.add_argument("--circuit", required=True)
            p.add_argument("--models", default="circuit,mps,mbqc,fkch")
        p.add_argument("--tol", type=float, default=1e-9)
        p.add_argument("--timings", action="store_true", help="include wall-clock runtimes (not reproducible)")
        common(p)
        p.set_defaults(func=cmd_equiv if name == "equiv" else cmd_demo)
    return parser


def _pretty(obj: Any, prefix: str = "") -> list[str]:
    lines = []
    if isinstance(obj, dict):
        for k in sorted(obj):
            v = obj[k]
            if isinstance(v, dict):
                lines += _pretty(v, f"{prefix}{k}.")
            else:
                lines.append(f"{prefix}{k:<24} {json.dumps(v)}")
    else:
        lines.append(f"{prefix}{json.dumps(obj)}")
    return lines


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        code, report = args.func(args)
    except (DocumentError, UsageError, UnsupportedGate, DeskCapExceeded) as exc:
        print(f"uqcm {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.pretty:
        print("\n".join(_pretty(report)))
    else:
        print(json.dumps(report, sort_keys=True))
    return code


if __name__ == "__main__":
    sys.exit(main())
