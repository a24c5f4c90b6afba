"""Dense linear-algebra substrate.

States, unitaries, Kraus channels, Choi states, Stinespring dilations and
quantum combs, plus the distances every other module uses as its oracle.

Conventions used throughout the package:

* Tensor factors are ordered big-endian: wire 0 is the most significant
  index of a flattened amplitude vector.
* Choi states live on ``output (x) input``.
* Comparisons of states and unitaries ignore global phase.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from functools import reduce
from typing import Sequence

import numpy as np
from scipy.linalg import null_space

NORM_TOL = 1e-10
UNITARY_TOL = 1e-10
KRAUS_TOL = 1e-10
PSD_TOL = 1e-10

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
S = np.diag([1, 1j]).astype(complex)
T = np.diag([1, np.exp(1j * math.pi / 4)]).astype(complex)
CZ = np.diag([1, 1, 1, -1]).astype(complex)
CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)


class DimensionError(ValueError):
    """Operand shapes or wire labels do not fit together."""


class DeskCapExceeded(ValueError):
    """A dense object would exceed the configured qubit cap."""


def desk_cap() -> int:
    """Maximum number of qubits a dense object may span (``UQCM_DESK_CAP``)."""
    return int(os.environ.get("UQCM_DESK_CAP", "12"))


def check_cap(n_qubits: int, what: str = "register") -> None:
    cap = desk_cap()
    if n_qubits > cap:
        raise DeskCapExceeded(f"{what} needs {n_qubits} qubits; desk cap is {cap}")


def kron(*ops: np.ndarray) -> np.ndarray:
    return reduce(np.kron, ops, np.eye(1, dtype=complex))


def dagger(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def is_hermitian(a: np.ndarray, tol: float = 1e-10) -> bool:
    a = np.asarray(a)
    return a.ndim == 2 and a.shape[0] == a.shape[1] and np.allclose(a, dagger(a), atol=tol, rtol=0)


def is_unitary(a: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return False
    eye = np.eye(a.shape[0])
    return bool(
        np.linalg.norm(dagger(a) @ a - eye, 2) <= tol and np.linalg.norm(a @ dagger(a) - eye, 2) <= tol
    )


def ket(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


@dataclass(frozen=True)
class PureState:
    """Normalized amplitude vector over a register of qudits.

    The constructor accepts vectors whose norm is within ``NORM_TOL`` of one
    and rescales them exactly, so downstream code never sees drift.
    """

    amplitudes: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        dims = tuple(int(d) for d in self.dims)
        if any(d < 1 for d in dims):
            raise DimensionError(f"local dimensions must be positive, got {dims}")
        if amps.size != math.prod(dims):
            raise DimensionError(f"{amps.size} amplitudes do not fit dims {dims}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized (norm {norm:.3e})")
        amps = amps / norm
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "dims", dims)

    @classmethod
    def from_vector(cls, vec: np.ndarray, dims: Sequence[int] | None = None) -> "PureState":
        """Normalize an arbitrary nonzero vector. Qubit dims are assumed if omitted."""
        vec = np.asarray(vec, dtype=complex).reshape(-1)
        norm = np.linalg.norm(vec)
        if norm < 1e-14:
            raise ValueError("cannot normalize a zero vector")
        if dims is None:
            n = int(round(math.log2(vec.size)))
            if 2**n != vec.size:
                raise DimensionError(f"length {vec.size} is not a power of two; pass dims")
            dims = (2,) * n
        return cls(vec / norm, tuple(dims))

    @classmethod
    def basis(cls, index: int | Sequence[int], dims: Sequence[int]) -> "PureState":
        dims = tuple(dims)
        if not isinstance(index, (int, np.integer)):
            index = int(np.ravel_multi_index(tuple(index), dims))
        return cls(ket(int(index), math.prod(dims)), dims)

    @classmethod
    def zeros(cls, n: int) -> "PureState":
        return cls.basis(0, (2,) * n)

    @classmethod
    def plus(cls, n: int = 1) -> "PureState":
        return cls(np.full(2**n, 2 ** (-n / 2), dtype=complex), (2,) * n)

    @property
    def n_sites(self) -> int:
        return len(self.dims)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def tensor(self, other: "PureState") -> "PureState":
        return PureState(np.kron(self.amplitudes, other.amplitudes), self.dims + other.dims)

    def density(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())

    def expectation(self, op: np.ndarray) -> complex:
        return complex(self.amplitudes.conj() @ (np.asarray(op) @ self.amplitudes))


@dataclass(frozen=True)
class UnitaryOp:
    matrix: np.ndarray
    dims: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=complex)
        if not is_unitary(m):
            raise ValueError("matrix is not unitary within 1e-10")
        dims = tuple(self.dims)
        if not dims:
            n = int(round(math.log2(m.shape[0]))) if m.shape[0] > 1 else 0
            dims = (2,) * n if 2**n == m.shape[0] else (m.shape[0],)
        if math.prod(dims) != m.shape[0]:
            raise DimensionError(f"dims {dims} do not match matrix size {m.shape[0]}")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dims", dims)

    @property
    def dag(self) -> "UnitaryOp":
        return UnitaryOp(dagger(self.matrix), self.dims)


@dataclass(frozen=True)
class KrausChannel:
    """CPTP map in Kraus form. Operators may be rectangular (``d_out x d_in``)."""

    kraus_ops: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        ops = tuple(np.array(k, dtype=complex) for k in self.kraus_ops)
        if not ops:
            raise ValueError("a channel needs at least one Kraus operator")
        shape = ops[0].shape
        if any(k.ndim != 2 or k.shape != shape for k in ops):
            raise DimensionError("Kraus operators must be equal-shape matrices")
        gram = sum(dagger(k) @ k for k in ops)
        if np.linalg.norm(gram - np.eye(shape[1]), 2) > KRAUS_TOL:
            raise ValueError("Kraus operators are not trace preserving within 1e-10")
        for k in ops:
            k.setflags(write=False)
        object.__setattr__(self, "kraus_ops", ops)

    @classmethod
    def unitary(cls, u: np.ndarray | UnitaryOp) -> "KrausChannel":
        m = u.matrix if isinstance(u, UnitaryOp) else u
        return cls((m,))

    @classmethod
    def identity(cls, dim: int) -> "KrausChannel":
        return cls((np.eye(dim, dtype=complex),))

    @property
    def d_in(self) -> int:
        return self.kraus_ops[0].shape[1]

    @property
    def d_out(self) -> int:
        return self.kraus_ops[0].shape[0]

    def adjoint_apply(self, op: np.ndarray) -> np.ndarray:
        """Heisenberg-picture action, sum_i K_i^dag op K_i."""
        return sum(dagger(k) @ op @ k for k in self.kraus_ops)

    def then(self, other: "KrausChannel") -> "KrausChannel":
        """Channel that applies ``self`` first and ``other`` second."""
        if other.d_in != self.d_out:
            raise DimensionError("channels do not compose")
        return KrausChannel(tuple(b @ a for b in other.kraus_ops for a in self.kraus_ops))


def depolarizing(p: float, dim: int = 2) -> KrausChannel:
    """rho -> (1-p) rho + p tr(rho) 1/d, in Weyl-operator Kraus form."""
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    shift = np.roll(np.eye(dim), 1, axis=0)
    clock = np.diag(np.exp(2j * np.pi * np.arange(dim) / dim))
    weyl = [np.linalg.matrix_power(shift, a) @ np.linalg.matrix_power(clock, b) for a in range(dim) for b in range(dim)]
    weights = [1 - p + p / dim**2] + [p / dim**2] * (dim**2 - 1)
    return KrausChannel(tuple(math.sqrt(w) * u for w, u in zip(weights, weyl) if w > 0))


@dataclass(frozen=True)
class ChoiState:
    matrix: np.ndarray
    input_dim: int
    output_dim: int

    def __post_init__(self) -> None:
        m = np.array(self.matrix, dtype=complex)
        dim = self.input_dim * self.output_dim
        if m.shape != (dim, dim):
            raise DimensionError(f"Choi matrix must be {dim}x{dim}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def partial_trace_output(self) -> np.ndarray:
        r = self.matrix.reshape(self.output_dim, self.input_dim, self.output_dim, self.input_dim)
        return np.einsum("aiaj->ij", r)


@dataclass(frozen=True)
class Comb:
    """Fixed unitaries (teeth) on ``data (x) memory`` with open slots between them.

    The memory wire starts in ``|0>`` and is traced out at the end.
    """

    teeth: tuple[np.ndarray, ...]
    adversary_dim: int = 1
    slots: int = field(default=-1)

    def __post_init__(self) -> None:
        teeth = tuple(np.asarray(t, dtype=complex) for t in self.teeth)
        if not teeth:
            raise ValueError("a comb needs at least one tooth")
        slots = len(teeth) - 1 if self.slots < 0 else self.slots
        if slots != len(teeth) - 1:
            raise ValueError("slot count must equal teeth count minus one")
        size = teeth[0].shape[0]
        for t in teeth:
            if t.shape != (size, size) or not is_unitary(t):
                raise ValueError("every tooth must be a unitary of the same size")
        if size % self.adversary_dim:
            raise DimensionError("tooth size is not a multiple of the adversary dimension")
        object.__setattr__(self, "teeth", teeth)
        object.__setattr__(self, "slots", slots)

    @property
    def data_dim(self) -> int:
        return self.teeth[0].shape[0] // self.adversary_dim


def fidelity(a: PureState | np.ndarray, b: PureState | np.ndarray) -> float:
    """|<a|b>|^2 for pure states."""
    va = a.amplitudes if isinstance(a, PureState) else np.asarray(a)
    vb = b.amplitudes if isinstance(b, PureState) else np.asarray(b)
    if va.shape != vb.shape:
        raise DimensionError("states have different dimensions")
    return float(abs(np.vdot(va, vb)) ** 2)


def phase_aligned_distance(a: np.ndarray, b: np.ndarray) -> float:
    """min over phi of ||a - e^{i phi} b|| in the spectral norm.

    For unitaries this is exact: with eigenphases of b^dag a covering an arc
    of length L, the optimum is 2 sin(L/4). Otherwise the phase is aligned
    with tr(b^dag a) and the spectral norm of the difference is returned.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise DimensionError("operators have different shapes")
    if is_unitary(a, 1e-9) and is_unitary(b, 1e-9):
        return float(_unitary_phase_distance(dagger(b) @ a))
    overlap = np.trace(dagger(b) @ a)
    phase = overlap / abs(overlap) if abs(overlap) > 1e-15 else 1.0
    return float(np.linalg.norm(a - phase * b, 2))


def _unitary_phase_distance(w: np.ndarray) -> np.ndarray:
    """Batched version of the eigenphase formula; ``w`` has shape (..., d, d)."""
    phases = np.sort(np.angle(np.linalg.eigvals(w)), axis=-1)
    gaps = np.diff(phases, axis=-1, append=phases[..., :1] + 2 * np.pi)
    arc = 2 * np.pi - gaps.max(axis=-1)
    return 2 * np.sin(np.clip(arc, 0, np.pi) / 4)


def _check_targets(dims: tuple[int, ...], targets: Sequence[int]) -> list[int]:
    targets = [int(t) for t in targets]
    if len(set(targets)) != len(targets):
        raise DimensionError(f"duplicate targets {targets}")
    if any(t < 0 or t >= len(dims) for t in targets):
        raise DimensionError(f"targets {targets} out of range for {len(dims)} sites")
    return targets


def apply_matrix(vec: np.ndarray, dims: Sequence[int], op: np.ndarray, targets: Sequence[int]) -> np.ndarray:
    """Apply ``op`` to the listed sites of a flat vector (no validation of unitarity)."""
    dims = tuple(dims)
    targets = _check_targets(dims, targets)
    tdims = [dims[t] for t in targets]
    k = math.prod(tdims)
    op = np.asarray(op, dtype=complex)
    if op.shape != (k, k):
        raise DimensionError(f"operator of shape {op.shape} does not act on sites with dims {tdims}")
    psi = np.asarray(vec, dtype=complex).reshape(dims)
    psi = np.moveaxis(psi, targets, range(len(targets)))
    rest = psi.shape[len(targets):]
    psi = (op @ psi.reshape(k, -1)).reshape(tuple(tdims) + rest)
    return np.moveaxis(psi, range(len(targets)), targets).reshape(-1)


def apply_unitary(state: PureState, u: UnitaryOp | np.ndarray, targets: Sequence[int]) -> PureState:
    """Embed ``u`` on ``targets`` (in the listed order) and apply it to ``state``."""
    if not isinstance(u, UnitaryOp):
        u = UnitaryOp(u, tuple(state.dims[t] for t in _check_targets(state.dims, targets)))
    targets = _check_targets(state.dims, targets)
    if tuple(state.dims[t] for t in targets) != u.dims:
        raise DimensionError(f"target dims {[state.dims[t] for t in targets]} differ from gate dims {u.dims}")
    return PureState(apply_matrix(state.amplitudes, state.dims, u.matrix, targets), state.dims)


def embed(op: np.ndarray, targets: Sequence[int], dims: Sequence[int]) -> np.ndarray:
    """Full matrix of ``op`` acting on ``targets`` of a register with ``dims``."""
    dims = tuple(dims)
    total = math.prod(dims)
    # the identity's column index rides along as one extra trailing site
    out = apply_matrix(np.eye(total, dtype=complex).reshape(-1), dims + (total,), op, targets)
    return out.reshape(total, total)


def partial_trace(rho: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    dims = tuple(dims)
    keep = sorted(keep)
    n = len(dims)
    drop = [i for i in range(n) if i not in keep]
    r = np.asarray(rho).reshape(dims + dims)
    perm = keep + drop + [n + i for i in keep] + [n + i for i in drop]
    r = r.transpose(perm)
    dk = math.prod(dims[i] for i in keep)
    dd = math.prod(dims[i] for i in drop)
    return np.einsum("ajbj->ab", r.reshape(dk, dd, dk, dd))


def channel_apply(rho: np.ndarray, ch: KrausChannel) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (ch.d_in, ch.d_in):
        raise DimensionError(f"density matrix {rho.shape} does not match channel input {ch.d_in}")
    return sum(k @ rho @ dagger(k) for k in ch.kraus_ops)


def channel_to_choi(ch: KrausChannel) -> ChoiState:
    d_in, d_out = ch.d_in, ch.d_out
    omega = np.zeros((d_out * d_in, d_out * d_in), dtype=complex)
    for k in ch.kraus_ops:
        # (K (x) 1)|omega> has components K[a, j] / sqrt(d_in) at index (a, j)
        v = k.reshape(-1) / math.sqrt(d_in)
        omega += np.outer(v, v.conj())
    return ChoiState(omega, d_in, d_out)


def choi_to_channel(choi: ChoiState, tol: float = PSD_TOL) -> KrausChannel:
    """Kraus operators from the eigendecomposition of a Choi state."""
    m = choi.matrix
    if not is_hermitian(m, tol):
        raise ValueError("Choi matrix is not Hermitian")
    w, v = np.linalg.eigh((m + dagger(m)) / 2)
    if w.min() < -tol:
        raise ValueError(f"Choi matrix is not positive semidefinite (eigenvalue {w.min():.3e})")
    ops = [
        math.sqrt(choi.input_dim * lam) * v[:, i].reshape(choi.output_dim, choi.input_dim)
        for i, lam in enumerate(w)
        if lam > tol
    ]
    return KrausChannel(tuple(ops))


def dilate_channel(ch: KrausChannel) -> tuple[UnitaryOp, PureState]:
    """Stinespring dilation on ``data (x) ancilla`` with the ancilla starting in ``|0>``.

    The isometry sum_i K_i (x) |i> fills the columns (j, 0); the remaining
    columns are an orthonormal completion.
    """
    if ch.d_in != ch.d_out:
        raise DimensionError("dilation to a unitary needs square Kraus operators")
    d, r = ch.d_in, len(ch.kraus_ops)
    iso = np.stack(ch.kraus_ops, axis=1).reshape(d * r, d)  # row index (a, i)
    u = np.zeros((d * r, d * r), dtype=complex)
    fixed = [j * r for j in range(d)]
    u[:, fixed] = iso
    if r > 1:
        comp = null_space(dagger(iso))
        free = [c for c in range(d * r) if c not in fixed]
        u[:, free] = comp
    return UnitaryOp(u, (d, r)), PureState.basis(0, (r,))


def dilation_apply(rho: np.ndarray, u: UnitaryOp, ancilla: PureState) -> np.ndarray:
    """tr_anc[U (rho (x) |a><a|) U^dag]."""
    d, r = u.dims
    joint = u.matrix @ np.kron(rho, ancilla.density()) @ dagger(u.matrix)
    return partial_trace(joint, (d, r), [0])


def comb_compose(comb: Comb, inputs: Sequence[KrausChannel]) -> KrausChannel:
    """Plug channels into the slots of a comb and trace out its memory."""
    if len(inputs) != comb.slots:
        raise ValueError(f"comb has {comb.slots} slots, got {len(inputs)} channels")
    d, a = comb.data_dim, comb.adversary_dim
    for ch in inputs:
        if ch.d_in != d or ch.d_out != d:
            raise DimensionError("slot channels must act on the data wire")
    start = np.kron(np.eye(d), ket(0, a).reshape(a, 1))  # |psi> -> |psi>|0>
    branches = [comb.teeth[0] @ start]
    for tooth, ch in zip(comb.teeth[1:], inputs):
        lifted = [np.kron(k, np.eye(a)) for k in ch.kraus_ops]
        branches = [tooth @ k @ b for b in branches for k in lifted]
    ops = []
    for b in branches:
        for j in range(a):
            proj = np.kron(np.eye(d), ket(j, a).reshape(1, a))
            ops.append(proj @ b)
    ch = KrausChannel(tuple(ops))
    if len(ops) > d * d:
        ch = choi_to_channel(channel_to_choi(ch))
    return ch


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    diff = np.asarray(a) - np.asarray(b)
    return float(0.5 * np.abs(np.linalg.eigvalsh((diff + dagger(diff)) / 2)).sum())


def channel_distance(a: KrausChannel, b: KrausChannel) -> float:
    """Trace distance between Choi states; a cheap proxy for the diamond norm."""
    if (a.d_in, a.d_out) != (b.d_in, b.d_out):
        raise DimensionError("channels act on different spaces")
    return trace_distance(channel_to_choi(a).matrix, channel_to_choi(b).matrix)


@dataclass(frozen=True)
class UncertaintyReport:
    delta_a: float
    delta_b: float
    rs_bound: float
    tau_a: float | None = None

    @property
    def slack(self) -> float:
        """(dA)^2 (dB)^2 - bound; nonnegative up to rounding."""
        return self.delta_a**2 * self.delta_b**2 - self.rs_bound


def uncertainty_bounds(state: PureState, a: np.ndarray, b: np.ndarray, tol: float = 1e-10) -> UncertaintyReport:
    """Robertson-Schroedinger bound for (a, b), and the time scale of ``a`` under ``b``.

    ``tau_a = dA / |<dA/dt>|`` with ``dA/dt = i[b, a]`` (b read as a
    Hamiltonian); it is ``None`` when the commutator expectation vanishes.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if not (is_hermitian(a, tol) and is_hermitian(b, tol)):
        raise ValueError("observables must be Hermitian")
    if a.shape != (state.dim, state.dim) or b.shape != a.shape:
        raise DimensionError("observables do not match the state dimension")
    ea, eb = state.expectation(a).real, state.expectation(b).real
    var_a = max(state.expectation(a @ a).real - ea**2, 0.0)
    var_b = max(state.expectation(b @ b).real - eb**2, 0.0)
    anti = 0.5 * state.expectation(a @ b + b @ a) - ea * eb
    comm = state.expectation(a @ b - b @ a)
    rs = abs(anti) ** 2 + abs(comm / 2j) ** 2
    rate = abs(comm)  # |<i[b, a]>| = |<[a, b]>|
    tau = math.sqrt(var_a) / rate if rate > tol else None
    return UncertaintyReport(math.sqrt(var_a), math.sqrt(var_b), float(rs), tau)


def random_state(dims: Sequence[int] | int, rng: np.random.Generator) -> PureState:
    dims = (2,) * dims if isinstance(dims, int) else tuple(dims)
    v = rng.normal(size=math.prod(dims)) + 1j * rng.normal(size=math.prod(dims))
    return PureState.from_vector(v, dims)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR with phase correction."""
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (g + dagger(g)) / 2


def entropy_bits(probs: np.ndarray) -> float:
    p = np.asarray(probs, dtype=float)
    p = p[p > 1e-15]
    return float(-(p * np.log2(p)).sum())


def schmidt_values(state: PureState, cut: int) -> np.ndarray:
    """Schmidt coefficients across the cut after the first ``cut`` sites."""
    left = math.prod(state.dims[:cut])
    return np.linalg.svd(state.amplitudes.reshape(left, -1), compute_uv=False)


def entanglement_entropy(state: PureState, cut: int) -> float:
    return entropy_bits(schmidt_values(state, cut) ** 2)
