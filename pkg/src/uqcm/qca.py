"""Local Hamiltonians, Trotterized layer dynamics, MPU layers, quantum walks.

Time evolution is always ``exp(-i t H)``; pass a negative ``t`` for the
opposite sign.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import expm

from .circuit import Circuit, Gate, circuit_unitary
from .core import (
    DimensionError,
    PureState,
    UnitaryOp,
    check_cap,
    dagger,
    embed,
    is_hermitian,
)
from .tensor import MPU, mpu_from_local_gates


@dataclass(frozen=True)
class LocalHamiltonian:
    """Sum of Hermitian terms, each given as ``(matrix, support)`` on qubits."""

    terms: tuple[tuple[np.ndarray, tuple[int, ...]], ...]
    n: int
    locality: int | None = None

    def __post_init__(self) -> None:
        terms = []
        for m, support in self.terms:
            m = np.asarray(m, dtype=complex)
            support = tuple(int(s) for s in support)
            if len(set(support)) != len(support) or any(s < 0 or s >= self.n for s in support):
                raise ValueError(f"invalid support {support} for {self.n} sites")
            if m.shape != (2 ** len(support),) * 2:
                raise DimensionError(f"term of shape {m.shape} does not fit support {support}")
            if not is_hermitian(m, 1e-10):
                raise ValueError(f"term on {support} is not Hermitian")
            if self.locality is not None and len(support) > self.locality:
                raise ValueError(f"term on {support} exceeds locality {self.locality}")
            m = m.copy()
            m.setflags(write=False)
            terms.append((m, support))
        object.__setattr__(self, "terms", tuple(terms))

    def dense(self) -> np.ndarray:
        check_cap(self.n, "Hamiltonian")
        dims = (2,) * self.n
        out = np.zeros((2**self.n, 2**self.n), dtype=complex)
        for m, support in self.terms:
            out += embed(m, support, dims)
        return out

    def scaled(self, factor: float) -> "LocalHamiltonian":
        return LocalHamiltonian(tuple((factor * m, s) for m, s in self.terms), self.n, self.locality)

    def __add__(self, other: "LocalHamiltonian") -> "LocalHamiltonian":
        if other.n != self.n:
            raise DimensionError("Hamiltonians act on different system sizes")
        return LocalHamiltonian(self.terms + other.terms, self.n)


def transverse_field_ising(n: int, coupling: float = 1.0, field: float = 1.0, periodic: bool = False) -> LocalHamiltonian:
    zz = np.kron(np.diag([1.0, -1.0]), np.diag([1.0, -1.0])).astype(complex)
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    bonds = [(i, i + 1) for i in range(n - 1)] + ([(n - 1, 0)] if periodic and n > 2 else [])
    terms = [(-coupling * zz, b) for b in bonds] + [(-field * x, (i,)) for i in range(n)]
    return LocalHamiltonian(tuple(terms), n, 2)


def exact_evolve(h: LocalHamiltonian, t: float, s: PureState) -> PureState:
    if s.dims != (2,) * h.n:
        raise DimensionError("state does not match the Hamiltonian's register")
    w, v = np.linalg.eigh(h.dense())
    u = (v * np.exp(-1j * t * w)) @ dagger(v)
    return PureState(u @ s.amplitudes, s.dims)


def exact_unitary(h: LocalHamiltonian, t: float) -> np.ndarray:
    w, v = np.linalg.eigh(h.dense())
    return (v * np.exp(-1j * t * w)) @ dagger(v)


@dataclass(frozen=True)
class TrotterPlan:
    hamiltonian: LocalHamiltonian
    t: float
    r: int
    order: int
    layers: tuple[tuple[int, ...], ...]

    @property
    def dt(self) -> float:
        return self.t / self.r


def greedy_layers(h: LocalHamiltonian) -> tuple[tuple[int, ...], ...]:
    """Colour the term-overlap graph greedily; each colour is a layer of disjoint terms."""
    layers: list[list[int]] = []
    occupied: list[set[int]] = []
    for j, (_, support) in enumerate(h.terms):
        for layer, occ in zip(layers, occupied):
            if not occ & set(support):
                layer.append(j)
                occ.update(support)
                break
        else:
            layers.append([j])
            occupied.append(set(support))
    return tuple(tuple(layer) for layer in layers)


def trotter_plan(h: LocalHamiltonian, t: float, r: int, order: int = 1) -> TrotterPlan:
    if r < 1:
        raise ValueError("r must be at least 1")
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    return TrotterPlan(h, t, r, order, greedy_layers(h))


def _layer_gates(h: LocalHamiltonian, layer: Sequence[int], dt: float) -> list[Gate]:
    return [Gate("Custom", h.terms[j][1], expm(-1j * dt * h.terms[j][0])) for j in layer]


def plan_circuit(plan: TrotterPlan) -> Circuit:
    h = plan.hamiltonian
    if plan.order == 1:
        step = [g for layer in plan.layers for g in _layer_gates(h, layer, plan.dt)]
    else:
        half = plan.dt / 2
        step = [g for layer in plan.layers for g in _layer_gates(h, layer, half)]
        step += [g for layer in reversed(plan.layers) for g in _layer_gates(h, layer, half)]
    return Circuit(h.n, tuple(step) * plan.r)


def trotterize(h: LocalHamiltonian, t: float, r: int, order: int = 1) -> Circuit:
    """Product-formula circuit for exp(-i t H) with ``r`` steps (Lie or Strang)."""
    return plan_circuit(trotter_plan(h, t, r, order))


def layer_unitary(plan: TrotterPlan, layer_index: int) -> np.ndarray:
    h = plan.hamiltonian
    dims = (2,) * h.n
    u = np.eye(2**h.n, dtype=complex)
    for g in _layer_gates(h, plan.layers[layer_index], plan.dt):
        u = embed(g.matrix, g.targets, dims) @ u
    return u


def layer_to_mpu(plan: TrotterPlan, layer_index: int) -> MPU:
    """MPU of one layer over a single step ``dt = t / r``; supports must be 1D local."""
    h = plan.hamiltonian
    gates = []
    for j in plan.layers[layer_index]:
        m, support = h.terms[j]
        if len(support) > 2 or (len(support) == 2 and abs(support[0] - support[1]) != 1):
            raise ValueError(f"term on {support} is not nearest-neighbour on a chain")
        gates.append((expm(-1j * plan.dt * m), support))
    return mpu_from_local_gates(h.n, gates)


def quantum_walk_evolve(adjacency: np.ndarray, start_vertex: int, t: float) -> np.ndarray:
    """Continuous-time walk amplitudes exp(-i t A) e_start."""
    a = np.asarray(adjacency, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or not np.array_equal(a, a.T):
        raise ValueError("adjacency must be a symmetric square matrix")
    if not 0 <= start_vertex < a.shape[0]:
        raise ValueError("start vertex out of range")
    w, v = np.linalg.eigh(a)
    return (v * np.exp(-1j * t * w)) @ v[start_vertex].conj()


def _check_schedule(f: Callable[[float], float], samples: int = 257) -> None:
    grid = np.array([f(x) for x in np.linspace(0.0, 1.0, samples)])
    if np.any(np.diff(grid) < -1e-12):
        raise ValueError("schedule is not monotone")
    if grid.min() < -1e-12 or grid.max() > 1 + 1e-12:
        raise ValueError("schedule leaves [0, 1]")


def controlled_evolve(
    h_of: Callable[[float, int], np.ndarray],
    schedules: Sequence[Callable[[float], float]],
    total_time: float,
    steps: int,
    supports: Sequence[Sequence[int]],
    n: int,
) -> UnitaryOp:
    """Time-ordered evolution where term ``j`` follows its own local schedule.

    At step ``k`` (midpoint time ``tau``) term ``j`` is ``h_of(schedules[j](tau / T), j)``.
    Each step is one first-order product over the greedy layers of the
    support pattern, so a static Hamiltonian reproduces ``trotterize``.
    """
    if steps < 1:
        raise ValueError("steps must be at least 1")
    if len(schedules) != len(supports):
        raise ValueError("one schedule per term is required")
    for f in schedules:
        _check_schedule(f)
    check_cap(n, "controlled evolution")
    dims = (2,) * n
    u = np.eye(2**n, dtype=complex)
    if total_time == 0:
        return UnitaryOp(u, dims)
    dt = total_time / steps
    probe = LocalHamiltonian(tuple((np.zeros((2 ** len(s),) * 2), tuple(s)) for s in supports), n)
    order = [j for layer in greedy_layers(probe) for j in layer]
    for k in range(steps):
        frac = (k + 0.5) / steps
        for j in order:
            term = np.asarray(h_of(schedules[j](frac), j), dtype=complex)
            u = embed(expm(-1j * dt * term), tuple(supports[j]), dims) @ u
    return UnitaryOp(u, dims)


def trotter_error(h: LocalHamiltonian, t: float, r: int, order: int = 1) -> float:
    """Spectral-norm distance between the product formula and exp(-i t H)."""
    return float(np.linalg.norm(circuit_unitary(trotterize(h, t, r, order)).matrix - exact_unitary(h, t), 2))


def random_local_hamiltonian(n: int, rng: np.random.Generator, scale: float = 1.0) -> LocalHamiltonian:
    """Random nearest-neighbour 2-local plus 1-local qubit Hamiltonian."""
    terms = []
    for i in range(n - 1):
        g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        terms.append((scale * (g + g.conj().T) / 4, (i, i + 1)))
    for i in range(n):
        g = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        terms.append((scale * (g + g.conj().T) / 4, (i,)))
    return LocalHamiltonian(tuple(terms), n, 2)


def walk_probabilities(amplitudes: np.ndarray) -> np.ndarray:
    return np.abs(amplitudes) ** 2


def cycle_graph(n: int) -> np.ndarray:
    a = np.zeros((n, n))
    for i in range(n):
        a[i, (i + 1) % n] = a[(i + 1) % n, i] = 1
    return a


def path_graph(n: int) -> np.ndarray:
    a = np.zeros((n, n))
    for i in range(n - 1):
        a[i, i + 1] = a[i + 1, i] = 1
    return a

