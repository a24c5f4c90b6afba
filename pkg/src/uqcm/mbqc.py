"""Cluster states, measurement patterns with feed-forward, wire compilation.

XY-plane measurements use the basis |+-_a> = (|0> +- e^{-ia}|1>)/sqrt(2).
With that sign, measuring the input end of a two-site cluster with outcome
``s`` leaves ``X^s H Z(a)`` applied to the data, where ``Z(a) = diag(1, e^{ia})``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import H, I2, X, Z, PureState, check_cap, is_unitary, phase_aligned_distance
from .codes import PauliString

PLANES = ("XY", "Z")


class ImpossibleBranch(ValueError):
    """A forced outcome has zero probability."""


@dataclass(frozen=True)
class Graph:
    vertices: int
    edges: frozenset[tuple[int, int]] = frozenset()

    def __post_init__(self) -> None:
        norm = set()
        for a, b in self.edges:
            a, b = int(a), int(b)
            if a == b:
                raise ValueError(f"self-loop on vertex {a}")
            if not (0 <= a < self.vertices and 0 <= b < self.vertices):
                raise ValueError(f"edge ({a}, {b}) references a missing vertex")
            norm.add((min(a, b), max(a, b)))
        object.__setattr__(self, "edges", frozenset(norm))

    @classmethod
    def path(cls, n: int) -> "Graph":
        return cls(n, frozenset((i, i + 1) for i in range(n - 1)))


def z_rot(angle: float) -> np.ndarray:
    return np.diag([1.0, cmath.exp(1j * angle)])


def j_gate(angle: float) -> np.ndarray:
    return H @ z_rot(angle)


def _apply_cz(t: np.ndarray, a: int, b: int) -> np.ndarray:
    t = t.copy()
    idx = [slice(None)] * t.ndim
    idx[a] = 1
    idx[b] = 1
    t[tuple(idx)] *= -1
    return t


def cluster_state(g: Graph, edge_order: Sequence[tuple[int, int]] | None = None) -> PureState:
    """CZ on every edge applied to |+>^n; ``edge_order`` only changes the order."""
    check_cap(g.vertices, "cluster state")
    n = g.vertices
    t = np.full((2,) * n, 2 ** (-n / 2), dtype=complex)
    for a, b in edge_order if edge_order is not None else sorted(g.edges):
        t = _apply_cz(t, a, b)
    return PureState(t.reshape(-1), (2,) * n)


def entangle(state: PureState, edges: Sequence[tuple[int, int]]) -> PureState:
    t = state.amplitudes.reshape(state.dims)
    for a, b in edges:
        t = _apply_cz(t, a, b)
    return PureState(t.reshape(-1), state.dims)


@dataclass(frozen=True)
class MeasurementStep:
    site: int
    plane: str = "XY"
    angle: float = 0.0
    deps: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.plane not in PLANES:
            raise ValueError(f"unknown measurement plane {self.plane!r}")
        object.__setattr__(self, "deps", tuple(int(d) for d in self.deps))


@dataclass(frozen=True)
class MeasurementPattern:
    """Ordered measurements plus the byproduct each output carries.

    ``x_deps[k]`` / ``z_deps[k]`` list the steps whose outcome parity sets
    the X / Z byproduct on ``outputs[k]``; the output register holds
    ``X^x Z^z`` applied to the intended state.
    """

    n_sites: int
    steps: tuple[MeasurementStep, ...]
    inputs: tuple[int, ...]
    outputs: tuple[int, ...]
    x_deps: tuple[tuple[int, ...], ...] = ()
    z_deps: tuple[tuple[int, ...], ...] = ()

    def __post_init__(self) -> None:
        steps = tuple(s if isinstance(s, MeasurementStep) else MeasurementStep(**s) for s in self.steps)
        sites = [s.site for s in steps]
        if len(set(sites)) != len(sites):
            raise ValueError("a site is measured more than once")
        for k, s in enumerate(steps):
            if not 0 <= s.site < self.n_sites:
                raise ValueError(f"step {k} measures missing site {s.site}")
            if any(d < 0 or d >= k for d in s.deps):
                raise ValueError(f"step {k} depends on a step that is not earlier")
        if set(sites) & set(self.outputs):
            raise ValueError("outputs must stay unmeasured")
        if set(sites) | set(self.outputs) != set(range(self.n_sites)):
            raise ValueError("every site must be either measured or an output")
        x_deps = self.x_deps or ((),) * len(self.outputs)
        z_deps = self.z_deps or ((),) * len(self.outputs)
        if len(x_deps) != len(self.outputs) or len(z_deps) != len(self.outputs):
            raise ValueError("one byproduct dependency list per output is required")
        for d in (*x_deps, *z_deps):
            if any(i < 0 or i >= len(steps) for i in d):
                raise ValueError("byproduct depends on a missing step")
        object.__setattr__(self, "steps", steps)
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        object.__setattr__(self, "x_deps", tuple(tuple(d) for d in x_deps))
        object.__setattr__(self, "z_deps", tuple(tuple(d) for d in z_deps))


@dataclass(frozen=True)
class PatternRun:
    outcomes: tuple[int, ...]
    byproduct: PauliString
    final_state: PureState
    probability: float = field(default=1.0, compare=False)

    def corrected(self) -> PureState:
        """Undo the byproduct: the intended output state."""
        vec = self.final_state.amplitudes
        return PureState(np.linalg.solve(self.byproduct.to_matrix(), vec), self.final_state.dims)


def _basis_bra(plane: str, angle: float, outcome: int) -> np.ndarray:
    if plane == "Z":
        return np.eye(2)[outcome]
    sign = -1 if outcome else 1
    return np.array([1.0, sign * cmath.exp(1j * angle)]) / math.sqrt(2)


def _parity(outcomes: Sequence[int], deps: Sequence[int]) -> int:
    return sum(outcomes[d] for d in deps) % 2


def run_pattern(
    resource: PureState,
    p: MeasurementPattern,
    outcomes: Sequence[int] | None = None,
    rng: np.random.Generator | int | None = None,
) -> PatternRun:
    """Measure the pattern's sites in order with feed-forward.

    Pass ``outcomes`` to force a branch; otherwise outcomes are sampled from
    the Born rule with ``rng`` (a Generator or a seed). A step's angle is
    negated when the parity of its dependencies' outcomes is odd.
    """
    if resource.dims != (2,) * p.n_sites:
        raise ValueError(f"resource dims {resource.dims} do not match {p.n_sites} qubits")
    if outcomes is not None and len(outcomes) != len(p.steps):
        raise ValueError("one forced outcome per step is required")
    if outcomes is None and not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    t = resource.amplitudes.reshape(resource.dims)
    alive = list(range(p.n_sites))
    got: list[int] = []
    prob = 1.0
    for k, step in enumerate(p.steps):
        angle = -step.angle if _parity(got, step.deps) else step.angle
        axis = alive.index(step.site)
        branches = [np.tensordot(_basis_bra(step.plane, angle, s), t, axes=([0], [axis])) for s in (0, 1)]
        weights = [float(np.vdot(b, b).real) for b in branches]
        if outcomes is not None:
            s = int(outcomes[k])
            if weights[s] < 1e-12:
                raise ImpossibleBranch(f"step {k} outcome {s} has probability {weights[s]:.3g}")
        else:
            s = int(rng.random() >= weights[0] / (weights[0] + weights[1]))
        prob *= weights[s]
        t = branches[s] / math.sqrt(weights[s])
        alive.pop(axis)
        got.append(s)
    t = t.transpose([alive.index(o) for o in p.outputs])
    x_bits = [_parity(got, d) for d in p.x_deps]
    z_bits = [_parity(got, d) for d in p.z_deps]
    n_out = len(p.outputs)
    return PatternRun(tuple(got), PauliString(tuple(x_bits), tuple(z_bits)), PureState(t.reshape(-1), (2,) * n_out), prob)


def euler_wire_angles(u: np.ndarray) -> tuple[float, float, float, float]:
    """Angles (a1, a2, a3, a4) with J(a4) J(a3) J(a2) J(a1) = u up to phase.

    ``a1 = 0`` so the product is ``X(a4) Z(a3) X(a2)`` where
    ``X(t) = H Z(t) H``; the rest is a ZXZ Euler split of ``H u H``.
    """
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2) or not is_unitary(u, 1e-9):
        raise ValueError("u must be a 2x2 unitary")
    v = H @ u @ H
    v = v / np.sqrt(np.linalg.det(v))
    alpha, beta = v[0, 0], v[0, 1]
    b = 2 * math.atan2(abs(beta), abs(alpha))
    s = -2 * cmath.phase(alpha) if abs(alpha) > 1e-12 else 0.0
    d = -2 * (cmath.phase(beta) + math.pi / 2) if abs(beta) > 1e-12 else 0.0
    a, c = (s + d) / 2, (s - d) / 2
    return (0.0, c, b, a)


# sign deps and output byproduct for four J steps, derived by pushing
# X^x Z^z through each J(a): angle sign (-1)^x, then x' = s + z, z' = x
WIRE_SIGN_DEPS = ((), (0,), (1,), (0, 2))
WIRE_X_DEPS = (1, 3)
WIRE_Z_DEPS = (0, 2)


def compile_1q_gate(u: np.ndarray) -> MeasurementPattern:
    """Pattern on a 5-site path: site 0 holds the input, site 4 the output."""
    angles = euler_wire_angles(u)
    steps = tuple(MeasurementStep(k, "XY", angles[k], WIRE_SIGN_DEPS[k]) for k in range(4))
    return MeasurementPattern(5, steps, (0,), (4,), (WIRE_X_DEPS,), (WIRE_Z_DEPS,))


def wire_resource(psi: PureState | np.ndarray, length: int = 5) -> PureState:
    """|psi> on site 0 followed by ``length - 1`` |+> sites, CZ-linked in a path."""
    vec = psi.amplitudes if isinstance(psi, PureState) else np.asarray(psi, dtype=complex)
    plus = np.ones(2 ** (length - 1)) / 2 ** ((length - 1) / 2)
    state = PureState(np.kron(vec, plus), (2,) * length)
    return entangle(state, [(i, i + 1) for i in range(length - 1)])


def embedded_wire(register: PureState, qubit: int, u: np.ndarray) -> tuple[PureState, MeasurementPattern]:
    """Attach a 4-site wire to ``qubit`` of ``register`` and compile ``u`` onto it.

    The returned pattern's outputs keep the register order, with the wire
    end standing in for ``qubit``.
    """
    n = register.n_sites
    check_cap(n + 4, "embedded wire")
    fresh = np.ones(16) / 4
    state = PureState(np.kron(register.amplitudes, fresh), (2,) * (n + 4))
    chain = [qubit, n, n + 1, n + 2, n + 3]
    state = entangle(state, list(zip(chain[:-1], chain[1:])))
    angles = euler_wire_angles(u)
    steps = tuple(MeasurementStep(chain[k], "XY", angles[k], WIRE_SIGN_DEPS[k]) for k in range(4))
    outputs = tuple(n + 3 if q == qubit else q for q in range(n))
    x_deps = tuple(WIRE_X_DEPS if q == qubit else () for q in range(n))
    z_deps = tuple(WIRE_Z_DEPS if q == qubit else () for q in range(n))
    return state, MeasurementPattern(n + 4, steps, (qubit,), outputs, x_deps, z_deps)


def all_branches(resource: PureState, p: MeasurementPattern) -> list[PatternRun]:
    """Every outcome branch with nonzero probability."""
    runs = []
    for bits in range(2 ** len(p.steps)):
        outs = [(bits >> (len(p.steps) - 1 - k)) & 1 for k in range(len(p.steps))]
        try:
            runs.append(run_pattern(resource, p, outs))
        except ImpossibleBranch:
            continue
    return runs


@dataclass(frozen=True)
class TwoWayStep:
    state: PureState
    outcome: int
    byproduct: PauliString
    active: int


def two_way_step(
    register: PureState,
    angle: float,
    active: int = 0,
    outcome: int | None = None,
    rng: np.random.Generator | int | None = None,
) -> TwoWayStep:
    """CZ the pair, measure ``active`` at ``angle``, reset it to |+>.

    The data hops to the other qubit carrying ``X^s H Z(angle)``; the
    returned ``active`` index is where the data now lives.
    """
    if register.dims != (2, 2):
        raise ValueError("register must be two qubits")
    if active not in (0, 1):
        raise ValueError("active must be 0 or 1")
    pattern = MeasurementPattern(2, (MeasurementStep(active, "XY", angle),), (active,), (1 - active,), ((0,),), ((),))
    run = run_pattern(entangle(register, [(0, 1)]), pattern, None if outcome is None else [outcome], rng)
    plus = np.ones(2) / math.sqrt(2)
    data = run.final_state.amplitudes
    vec = np.kron(plus, data) if active == 0 else np.kron(data, plus)
    byp = ["I", "I"]
    byp[1 - active] = "X" if run.outcomes[0] else "I"
    return TwoWayStep(PureState(vec, (2, 2)), run.outcomes[0], PauliString.from_str("".join(byp)), 1 - active)


def two_way_sequence(
    psi: PureState | np.ndarray,
    angles: Sequence[float],
    outcomes: Sequence[int] | None = None,
    rng: np.random.Generator | int | None = None,
) -> tuple[PureState, tuple[int, ...]]:
    """Run J steps back and forth on two qubits with adaptive signs.

    Returns the byproduct-corrected data state and the outcomes seen.
    """
    vec = psi.amplitudes if isinstance(psi, PureState) else np.asarray(psi, dtype=complex)
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    reg = PureState(np.kron(vec, np.ones(2) / math.sqrt(2)), (2, 2))
    active, x, z = 0, 0, 0
    seen = []
    for k, a in enumerate(angles):
        step = two_way_step(reg, -a if x else a, active, None if outcomes is None else outcomes[k], rng)
        seen.append(step.outcome)
        x, z = step.outcome ^ z, x
        reg, active = step.state, step.active
    data = reg.amplitudes.reshape(2, 2)
    data = data[:, 0] if active == 0 else data[0, :]
    data = data * math.sqrt(2)
    corr = np.linalg.matrix_power(Z, z) @ np.linalg.matrix_power(X, x)
    return PureState(corr @ data, (2,)), tuple(seen)


def wire_unitary(angles: Sequence[float]) -> np.ndarray:
    u = I2
    for a in angles:
        u = j_gate(a) @ u
    return u


def branch_spread(states: Sequence[PureState]) -> float:
    """Largest pairwise phase-aligned distance between corrected outputs."""
    worst = 0.0
    for i in range(len(states)):
        for j in range(i + 1, len(states)):
            a = states[i].amplitudes[:, None]
            b = states[j].amplitudes[:, None]
            worst = max(worst, phase_aligned_distance(a, b))
    return worst

