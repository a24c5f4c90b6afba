"""Circuit-to-Hamiltonian clock construction, history states, adiabatic paths.

Register layout for clock Hamiltonians: the circuit's data wires first, then
``N`` clock qubits. Clock value ``t`` is the unary word ``1^t 0^(N-t)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import expm

from .circuit import Circuit, simulate
from .core import DimensionError, PureState, check_cap, dagger, fidelity
from .qca import LocalHamiltonian, _check_schedule


class EnergyTie(ValueError):
    """Two codewords share an energy, so the energetic order is undefined."""


_P0 = np.diag([1.0, 0.0]).astype(complex)
_P1 = np.diag([0.0, 1.0]).astype(complex)
_RAISE = np.array([[0, 0], [1, 0]], dtype=complex)  # |1><0|


def _clock_window(t: int, n_steps: int) -> tuple[list[int], np.ndarray, np.ndarray, np.ndarray]:
    """Clock qubits touched by transition t-1 -> t, with |t-1><t-1|, |t><t|, |t><t-1|.

    The window is (c_{t-1}, c_t, c_{t+1}) clipped to the chain; c_{t-1} must
    read 1 and c_{t+1} must read 0, c_t flips 0 -> 1.
    """
    qubits, before, after, hop = [], [], [], []
    if t >= 2:
        qubits.append(t - 2)
        before.append(_P1), after.append(_P1), hop.append(_P1)
    qubits.append(t - 1)
    before.append(_P0), after.append(_P1), hop.append(_RAISE)
    if t <= n_steps - 1:
        qubits.append(t)
        before.append(_P0), after.append(_P0), hop.append(_P0)

    def prod(ms: Sequence[np.ndarray]) -> np.ndarray:
        out = np.eye(1, dtype=complex)
        for m in ms:
            out = np.kron(out, m)
        return out

    return qubits, prod(before), prod(after), prod(hop)


@dataclass(frozen=True)
class ClockHamiltonian:
    circuit: Circuit
    terms: LocalHamiltonian
    penalty_weights: tuple[float, float] = (1.0, 1.0)
    input_state: PureState | None = field(default=None, compare=False)
    clock_encoding: str = "unary"

    @property
    def n_data(self) -> int:
        return self.circuit.wires

    @property
    def n_clock(self) -> int:
        return len(self.circuit)

    def dense(self) -> np.ndarray:
        return self.terms.dense()

    def clock_index(self, t: int) -> int:
        """Integer value of the clock register holding unary ``t``."""
        n = self.n_clock
        return int("1" * t + "0" * (n - t), 2) if n else 0


def fkch_hamiltonian(
    c: Circuit,
    weights: tuple[float, float] = (1.0, 1.0),
    input_l: PureState | None = None,
) -> ClockHamiltonian:
    """Clock Hamiltonian whose zero-energy states are history states of ``c``.

    Terms: per gate ``t`` the propagation projector
    ``1/2 (|t-1><t-1| + |t><t| - U_t |t><t-1| - h.c.)``; a domain-wall
    penalty ``w_clock |0><0|_k |1><1|_{k+1}`` on neighbouring clock qubits;
    and, when ``input_l`` is given, ``w_edge (1 - |l><l|) |0><0|_{c_1}``.
    All terms are positive semidefinite, so the ground energy is 0.
    """
    w_clock, w_edge = (float(x) for x in weights)
    if w_clock <= 0 or w_edge <= 0:
        raise ValueError("penalty weights must be positive")
    n_data, n_steps = c.wires, len(c)
    n = n_data + n_steps
    check_cap(n, "clock Hamiltonian")
    clock = [n_data + k for k in range(n_steps)]
    terms: list[tuple[np.ndarray, tuple[int, ...]]] = []
    for t, g in enumerate(c.gates, start=1):
        cq, before, after, hop = _clock_window(t, n_steps)
        u = g.matrix
        eye = np.eye(u.shape[0])
        fwd = np.kron(u, hop)
        m = 0.5 * (np.kron(eye, before + after) - fwd - dagger(fwd))
        terms.append((m, tuple(g.targets) + tuple(clock[q] for q in cq)))
    for k in range(n_steps - 1):
        terms.append((w_clock * np.kron(_P0, _P1), (clock[k], clock[k + 1])))
    if input_l is not None:
        if input_l.dims != (2,) * n_data:
            raise DimensionError("input state does not match the circuit's wires")
        off = np.eye(input_l.dim) - np.outer(input_l.amplitudes, input_l.amplitudes.conj())
        if n_steps:
            terms.append((w_edge * np.kron(off, _P0), tuple(range(n_data)) + (clock[0],)))
        else:
            terms.append((w_edge * off, tuple(range(n_data))))
    if not terms:
        terms.append((np.zeros((2, 2)), (0,)))
    return ClockHamiltonian(c, LocalHamiltonian(tuple(terms), n), (w_clock, w_edge), input_l)


def history_state(c: Circuit, input_l: PureState) -> PureState:
    """(N+1)^(-1/2) sum_t V_t|l> (x) |unary t>."""
    if input_l.dims != (2,) * c.wires:
        raise DimensionError("input state does not match the circuit's wires")
    n_steps = len(c)
    check_cap(c.wires + n_steps, "history state")
    out = np.zeros(2 ** (c.wires + n_steps), dtype=complex)
    state = input_l
    for t in range(n_steps + 1):
        if t:
            state = simulate(Circuit(c.wires, (c.gates[t - 1],)), state)
        clock = np.zeros(2**n_steps)
        clock[int("1" * t + "0" * (n_steps - t), 2) if n_steps else 0] = 1
        out += np.kron(state.amplitudes, clock)
    return PureState(out / math.sqrt(n_steps + 1), (2,) * (c.wires + n_steps))


def project_clock(psi: PureState, n_data: int, t: int) -> PureState:
    """Data-register state conditioned on clock value ``t`` (renormalized)."""
    n_steps = psi.n_sites - n_data
    if not 0 <= t <= n_steps:
        raise ValueError(f"clock value {t} outside 0..{n_steps}")
    idx = int("1" * t + "0" * (n_steps - t), 2) if n_steps else 0
    block = psi.amplitudes.reshape(2**n_data, 2**n_steps)[:, idx]
    norm = np.linalg.norm(block)
    if norm < 1e-12:
        raise ValueError(f"state has no weight on clock value {t}")
    return PureState(block / norm, (2,) * n_data)


def ground_residual(h: ClockHamiltonian, psi: PureState) -> float:
    """||H psi - E0 psi|| with E0 the smallest eigenvalue of H."""
    m = h.dense()
    e0 = float(np.linalg.eigvalsh(m)[0])
    return float(np.linalg.norm(m @ psi.amplitudes - e0 * psi.amplitudes))


def clock_output(c: Circuit, input_l: PureState) -> PureState:
    return project_clock(history_state(c, input_l), c.wires, len(c))


def linear(s: float) -> float:
    return s


@dataclass(frozen=True)
class AdiabaticPath:
    h0: LocalHamiltonian
    hf: LocalHamiltonian
    schedule: Callable[[float], float] = linear

    def __post_init__(self) -> None:
        if self.h0.n != self.hf.n:
            raise DimensionError("endpoint Hamiltonians act on different registers")
        if abs(self.schedule(0.0)) > 1e-12 or abs(self.schedule(1.0) - 1) > 1e-12:
            raise ValueError("schedule must map 0 to 0 and 1 to 1")
        _check_schedule(self.schedule)

    def dense_at(self, s: float) -> np.ndarray:
        sigma = self.schedule(s)
        return (1 - sigma) * self.h0.dense() + sigma * self.hf.dense()


def interpolate(path: AdiabaticPath, s: float) -> LocalHamiltonian:
    """(1 - sigma) H0 + sigma Hf with sigma = schedule(s)."""
    if not 0 <= s <= 1:
        raise ValueError(f"s = {s} outside [0, 1]")
    sigma = path.schedule(s)
    if sigma == 0:
        return path.h0
    if sigma == 1:
        return path.hf
    return path.h0.scaled(1 - sigma) + path.hf.scaled(sigma)


def ground_projector(m: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    w, v = np.linalg.eigh(m)
    g = v[:, w <= w[0] + tol]
    return g @ dagger(g)


@dataclass(frozen=True)
class AdiabaticResult:
    final: PureState
    ground_overlap: float


def adiabatic_evolve(path: AdiabaticPath, total_time: float, steps: int, start: PureState) -> AdiabaticResult:
    """Piecewise-constant evolution under H(s) at step midpoints s = (k + 1/2) / steps."""
    if steps < 1:
        raise ValueError("steps must be at least 1")
    if total_time < 0:
        raise ValueError("total_time must be non-negative")
    if start.dims != (2,) * path.h0.n:
        raise DimensionError("start state does not match the path's register")
    h0, hf = path.h0.dense(), path.hf.dense()
    vec = start.amplitudes
    dt = total_time / steps
    if total_time > 0:
        for k in range(steps):
            sigma = path.schedule((k + 0.5) / steps)
            vec = expm(-1j * dt * ((1 - sigma) * h0 + sigma * hf)) @ vec
    final = PureState(vec, start.dims)
    overlap = float(np.real(np.vdot(vec, ground_projector(hf) @ vec)))
    return AdiabaticResult(final, overlap)


@dataclass(frozen=True)
class GapProfile:
    s: np.ndarray
    gaps: np.ndarray
    delta_min: float
    h_max: float
    tf_estimate: float


def gap_profile(path: AdiabaticPath, samples: int, tol: float = 1e-9) -> GapProfile:
    """E1 - E0 on a uniform grid of ``samples`` points, plus t_f ~ h_max / delta_min^2.

    A degenerate ground level gives gap 0 and an infinite time estimate.
    """
    if samples < 2:
        raise ValueError("samples must be at least 2")
    grid = np.linspace(0.0, 1.0, samples)
    hs = [path.dense_at(s) for s in grid]
    gaps = []
    for m in hs:
        w = np.linalg.eigvalsh(m)
        gap = float(w[1] - w[0]) if len(w) > 1 else math.inf
        gaps.append(0.0 if gap < tol else gap)
    gaps = np.array(gaps)
    step = grid[1] - grid[0]
    h_max = max(float(np.linalg.norm((b - a) / step, 2)) for a, b in zip(hs[:-1], hs[1:]))
    delta_min = float(gaps.min())
    if delta_min == 0:
        tf = math.inf
    else:
        tf = h_max / delta_min**2
    return GapProfile(grid, gaps, delta_min, h_max, tf)


def energetic_reencode(
    old_codewords: Sequence[tuple[np.ndarray | PureState, float]],
    new_codewords: Sequence[tuple[np.ndarray | PureState, float]],
    tol: float = 1e-9,
) -> np.ndarray:
    """Map the i-th lowest-energy new codeword onto the i-th lowest old one.

    Returns ``sum_i |old_i><new_i|``, a partial isometry that is unitary
    between the two codeword spans.
    """
    if len(old_codewords) != len(new_codewords):
        raise ValueError("codeword lists differ in length")

    def ordered(words: Sequence[tuple[np.ndarray | PureState, float]]) -> list[np.ndarray]:
        pairs = sorted(words, key=lambda p: p[1])
        for (_, e1), (_, e2) in zip(pairs[:-1], pairs[1:]):
            if abs(e2 - e1) <= tol:
                raise EnergyTie(f"energies {e1} and {e2} coincide")
        return [w.amplitudes if isinstance(w, PureState) else np.asarray(w, dtype=complex) for w, _ in pairs]

    olds, news = ordered(old_codewords), ordered(new_codewords)
    if any(o.shape != olds[0].shape for o in olds + news):
        raise DimensionError("codewords live in different spaces")
    for group in (olds, news):
        g = np.stack(group, axis=1)
        if not np.allclose(dagger(g) @ g, np.eye(len(group)), atol=1e-10):
            raise ValueError("codewords must be orthonormal")
    return sum(np.outer(o, n.conj()) for o, n in zip(olds, news))


def clock_fidelity(c: Circuit, input_l: PureState) -> float:
    """Fidelity between the clock-projected history state and direct simulation."""
    return fidelity(clock_output(c, input_l), simulate(c, input_l))
