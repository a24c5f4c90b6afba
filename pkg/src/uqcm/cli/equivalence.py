"""Run one circuit through several model representations and compare outputs."""

from __future__ import annotations

import itertools
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..aqc import clock_output
from ..circuit import Circuit, simulate
from ..core import DeskCapExceeded, PureState, apply_matrix, fidelity
from ..mbqc import embedded_wire, run_pattern
from ..tensor import apply_mpu, mps_contract, mpu_from_local_gates, state_to_mps

MODELS = ("circuit", "mps", "mbqc", "fkch")


def _via_circuit(c: Circuit, rng: np.random.Generator) -> PureState:
    return simulate(c)


def _via_mps(c: Circuit, rng: np.random.Generator) -> PureState:
    """Each gate becomes an MPU layer; the grown MPS is recompressed after every layer."""
    m = state_to_mps(PureState.zeros(c.wires))
    for g in c.gates:
        m = apply_mpu(m, mpu_from_local_gates(c.wires, [(g.matrix, g.targets)]))
        m = state_to_mps(mps_contract(m))
    return mps_contract(m)


def _via_mbqc(c: Circuit, rng: np.random.Generator) -> PureState:
    """Single-qubit gates run as wire patterns on random branches; two-qubit gates act densely."""
    state = PureState.zeros(c.wires)
    for g in c.gates:
        if g.arity == 1:
            resource, pattern = embedded_wire(state, g.targets[0], g.matrix)
            state = run_pattern(resource, pattern, rng=rng).corrected()
        else:
            state = PureState(apply_matrix(state.amplitudes, state.dims, g.matrix, g.targets), state.dims)
    return state


def _via_fkch(c: Circuit, rng: np.random.Generator) -> PureState:
    return clock_output(c, PureState.zeros(c.wires))


_RUNNERS = {"circuit": _via_circuit, "mps": _via_mps, "mbqc": _via_mbqc, "fkch": _via_fkch}


@dataclass(frozen=True)
class EquivReport:
    representations: tuple[str, ...]
    fidelities: dict[str, float]
    fidelity: float
    passed: bool
    tolerance: float
    errors: dict[str, str] = field(default_factory=dict)
    runtimes: dict[str, float] = field(default_factory=dict, compare=False)

    def to_json(self, timings: bool = False) -> dict:
        out = {
            "representations": list(self.representations),
            "fidelities": {k: round(v, 15) for k, v in self.fidelities.items()},
            "fidelity": round(self.fidelity, 15),
            "pass": self.passed,
            "tolerance": self.tolerance,
            "errors": dict(self.errors),
        }
        if timings:
            out["runtimes"] = {k: round(v, 6) for k, v in self.runtimes.items()}
        return out


def cross_model_equivalence(c: Circuit, models: tuple[str, ...] = MODELS, tol: float = 1e-9, seed: int = 0) -> EquivReport:
    """Pairwise output fidelities across the requested models.

    Models run concurrently; each gets its own generator spawned from
    ``seed`` so results do not depend on scheduling. A model that exceeds
    the desk cap is reported under ``errors`` and fails the check.
    """
    unknown = [m for m in models if m not in _RUNNERS]
    if unknown:
        raise ValueError(f"unknown models {unknown}; choose from {list(MODELS)}")
    models = tuple(dict.fromkeys(models))
    children = np.random.SeedSequence(seed).spawn(len(models))

    def run(name: str, ss: np.random.SeedSequence) -> tuple[PureState | None, str | None, float]:
        start = time.perf_counter()
        try:
            out = _RUNNERS[name](c, np.random.default_rng(ss))
            return out, None, time.perf_counter() - start
        except DeskCapExceeded as exc:
            return None, str(exc), time.perf_counter() - start

    with ThreadPoolExecutor(max_workers=max(1, len(models))) as pool:
        futures = [pool.submit(run, m, ss) for m, ss in zip(models, children)]
        results = [f.result() for f in futures]
    states = {m: r[0] for m, r in zip(models, results) if r[0] is not None}
    errors = {m: r[1] for m, r in zip(models, results) if r[1] is not None}
    runtimes = {m: r[2] for m, r in zip(models, results)}
    fids = {f"{a}~{b}": fidelity(states[a], states[b]) for a, b in itertools.combinations([m for m in models if m in states], 2)}
    worst = min(fids.values(), default=1.0)
    passed = not errors and worst >= 1 - tol
    return EquivReport(models, fids, worst, passed, tol, errors, runtimes)
