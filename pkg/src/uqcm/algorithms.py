"""QSP, block encodings, QSVT, LCU, select processors and classical programs.

QSVT conventions used throughout:

* the projector phase is ``exp(i phi Pi) = 1 + (e^{i phi} - 1) Pi``;
* in time order, step ``k`` applies ``U`` (k odd) or ``U^dag`` (k even),
  then the phase on ``Pi_out`` (k odd) or ``Pi_in`` (k even);
* the transformed block is ``Pi_out M Pi_in`` for odd length and
  ``Pi_in M Pi_in`` for even length.

Per singular value this reduces to ``m = diag(e^{i phi}, 1) R(sigma) m``
with the reflection ``R = [[s, c], [c, -s]]``, ``c = sqrt(1 - s^2)``; the
polynomial is ``m[0, 0]``.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import jv

from .circuit import Circuit, Gate
from .core import DimensionError, PureState, UnitaryOp, dagger, is_unitary, phase_aligned_distance

NORM_TOL = 1e-10


class NormTooLarge(ValueError):
    """Spectral norm above 1; rescale before block-encoding."""

    def __init__(self, norm: float):
        super().__init__(f"spectral norm {norm:.6g} exceeds 1; rescale the matrix first")
        self.norm = norm


class UnsupportedGate(ValueError):
    """Only H, T and CZ have a classical program encoding."""


@dataclass(frozen=True)
class PhaseSequence:
    phases: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        ph = tuple(float(p) for p in self.phases)
        if not all(math.isfinite(p) for p in ph):
            raise ValueError("phases must be finite")
        object.__setattr__(self, "phases", ph)

    def __len__(self) -> int:
        return len(self.phases)

    @property
    def parity(self) -> int:
        return len(self.phases) % 2


def _as_phases(phases: PhaseSequence | Sequence[float]) -> PhaseSequence:
    return phases if isinstance(phases, PhaseSequence) else PhaseSequence(tuple(phases))


def qsp_unitary(g: np.ndarray, phases: PhaseSequence | Sequence[float]) -> UnitaryOp:
    """Z(phi_1) G Z(phi_2) G ... Z(phi_d) G with Z(phi) = exp(i phi Z)."""
    g = np.asarray(g, dtype=complex)
    if g.shape != (2, 2) or not is_unitary(g, 1e-9):
        raise ValueError("signal operator must be a 2x2 unitary")
    out = np.eye(2, dtype=complex)
    for phi in _as_phases(phases).phases:
        out = out @ np.diag([np.exp(1j * phi), np.exp(-1j * phi)]) @ g
    return UnitaryOp(out)


@dataclass(frozen=True)
class SVDecomposition:
    w: np.ndarray
    sigma: np.ndarray
    v: np.ndarray

    def matrix(self) -> np.ndarray:
        return (self.w * self.sigma) @ dagger(self.v)


def svd_decompose(a: np.ndarray) -> SVDecomposition:
    w, s, vh = np.linalg.svd(np.asarray(a, dtype=complex))
    return SVDecomposition(w, s, dagger(vh))


def _coord_projector(dim: int, coords: Sequence[int]) -> np.ndarray:
    p = np.zeros((dim, dim))
    p[list(coords), list(coords)] = 1
    return p


@dataclass(frozen=True)
class BlockEncoding:
    """``A = subnormalization * Pi_out U Pi_in`` restricted to the selected coordinates.

    Projectors are diagonal 0/1 matrices; the encoded block uses their
    support in increasing coordinate order.
    """

    u: UnitaryOp
    pi_in: np.ndarray
    pi_out: np.ndarray
    encoded_dim: int
    subnormalization: float = 1.0

    def __post_init__(self) -> None:
        for p in (self.pi_in, self.pi_out):
            p = np.asarray(p)
            if p.shape != self.u.matrix.shape or not np.allclose(p, np.diag(np.diag(p))):
                raise ValueError("projectors must be diagonal on the dilated space")
            if not np.allclose(np.diag(p) * (1 - np.diag(p)), 0) or int(round(np.trace(p).real)) != self.encoded_dim:
                raise ValueError("projector rank must equal encoded_dim")
        if np.linalg.norm(self.block(), 2) > 1 + NORM_TOL:
            raise ValueError("encoded block has norm above 1")

    @property
    def rows(self) -> np.ndarray:
        return np.flatnonzero(np.diag(self.pi_out).real > 0.5)

    @property
    def cols(self) -> np.ndarray:
        return np.flatnonzero(np.diag(self.pi_in).real > 0.5)

    def block(self) -> np.ndarray:
        """Pi_out U Pi_in as a d x d matrix (without the subnormalization)."""
        return self.u.matrix[np.ix_(self.rows, self.cols)]

    def encoded(self) -> np.ndarray:
        return self.subnormalization * self.block()


def block_encode(a: np.ndarray) -> BlockEncoding:
    """[[A, sqrt(1 - A A^dag)], [sqrt(1 - A^dag A), -A^dag]].

    Both square roots come from one SVD of ``A`` so that the off-diagonal
    blocks intertwine exactly even when singular values touch 1.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError("block_encode expects a square matrix")
    sv = svd_decompose(a)
    norm = float(sv.sigma[0]) if sv.sigma.size else 0.0
    if norm > 1 + NORM_TOL:
        raise NormTooLarge(norm)
    d = a.shape[0]
    gap = 1 - sv.sigma**2
    # sqrt would blow rounding at sigma ~ 1 up to ~1e-8
    comp = np.sqrt(np.where(gap < 1e-12, 0.0, gap))
    left = (sv.w * comp) @ dagger(sv.w)
    right = (sv.v * comp) @ dagger(sv.v)
    u = np.block([[a, left], [right, -dagger(a)]])
    p = _coord_projector(2 * d, range(d))
    return BlockEncoding(UnitaryOp(u), p, p.copy(), d)


def _projector_phase(p: np.ndarray, phi: float) -> np.ndarray:
    return np.eye(p.shape[0]) + (np.exp(1j * phi) - 1) * p


def qsvt_unitary(be: BlockEncoding, phases: PhaseSequence | Sequence[float]) -> np.ndarray:
    """The full alternating sequence as a matrix on the dilated space."""
    u = be.u.matrix
    m = np.eye(u.shape[0], dtype=complex)
    for k, phi in enumerate(_as_phases(phases).phases, start=1):
        if k % 2:
            m = _projector_phase(be.pi_out, phi) @ u @ m
        else:
            m = _projector_phase(be.pi_in, phi) @ dagger(u) @ m
    return m


def qsvt_apply(be: BlockEncoding, phases: PhaseSequence | Sequence[float]) -> np.ndarray:
    """Transformed block: sum_i p(sigma_i)|w_i><v_i| (odd) or |v_i><v_i| (even)."""
    ph = _as_phases(phases)
    m = qsvt_unitary(be, ph)
    rows = be.rows if ph.parity else be.cols
    return m[np.ix_(rows, be.cols)]


def qsp_poly(phases: PhaseSequence | Sequence[float], sigma: float) -> complex:
    """Per-singular-value reduction: the polynomial QSVT applies at ``sigma``."""
    c = math.sqrt(max(0.0, 1 - sigma * sigma))
    r = np.array([[sigma, c], [c, -sigma]], dtype=complex)
    m = np.eye(2, dtype=complex)
    for phi in _as_phases(phases).phases:
        m = np.diag([np.exp(1j * phi), 1]) @ r @ m
    return complex(m[0, 0])


def qsvt_oracle(a: np.ndarray, phases: PhaseSequence | Sequence[float]) -> np.ndarray:
    """Dense prediction of ``qsvt_apply`` from the SVD of ``a`` and ``qsp_poly``."""
    ph = _as_phases(phases)
    sv = svd_decompose(a)
    p = np.array([qsp_poly(ph, s) for s in sv.sigma])
    left = sv.w if ph.parity else sv.v
    return (left * p) @ dagger(sv.v)


@dataclass(frozen=True)
class LCUEntry:
    beta: complex
    be: BlockEncoding
    phases: PhaseSequence = PhaseSequence()


def _padded(m: np.ndarray, dim: int) -> np.ndarray:
    out = np.eye(dim, dtype=complex)
    out[: m.shape[0], : m.shape[1]] = m
    return out


def _prepare(amps: np.ndarray) -> np.ndarray:
    """Unitary whose first column is ``amps`` (real, nonnegative, unit norm)."""
    m = len(amps)
    q, _ = np.linalg.qr(np.column_stack([amps, np.eye(m)[:, : m - 1]]) if m > 1 else amps[:, None])
    # qr may flip the sign of the first column
    return q * np.sign(q[:, 0] @ amps)


def lcu_combine(entries: Sequence[LCUEntry | tuple]) -> BlockEncoding:
    """Prepare-select-unprepare over an index register placed before the system.

    The block equals ``sum_i beta_i f_i(A_i) / sum_i |beta_i|``; the returned
    ``subnormalization`` is ``sum_i |beta_i|``. Phases of ``beta_i`` ride on
    the select unitaries, magnitudes on the preparation.
    """
    entries = [e if isinstance(e, LCUEntry) else LCUEntry(e[0], e[1], _as_phases(e[2] if len(e) > 2 else ())) for e in entries]
    if not entries:
        raise ValueError("at least one entry is required")
    d = entries[0].be.encoded_dim
    if any(e.be.encoded_dim != d for e in entries):
        raise DimensionError("entries encode blocks of different sizes")
    betas = np.array([complex(e.beta) for e in entries])
    total = float(np.abs(betas).sum())
    if total <= 0:
        raise ValueError("coefficients sum to zero magnitude")
    dim = max(e.be.u.matrix.shape[0] for e in entries)
    m = len(entries)
    selects = []
    for e, b in zip(entries, betas):
        full = qsvt_unitary(e.be, e.phases)
        # move the encoded rows/cols to the leading coordinates
        out_rows = e.be.rows if e.phases.parity else e.be.cols
        rest_r = [i for i in range(full.shape[0]) if i not in set(out_rows)]
        rest_c = [i for i in range(full.shape[0]) if i not in set(e.be.cols)]
        full = full[np.ix_(list(out_rows) + rest_r, list(e.be.cols) + rest_c)]
        phase = b / abs(b) if abs(b) > 0 else 1.0
        selects.append(phase * _padded(full, dim))
    select = np.zeros((m * dim, m * dim), dtype=complex)
    for i, s in enumerate(selects):
        select[i * dim : (i + 1) * dim, i * dim : (i + 1) * dim] = s
    prep = np.kron(_prepare(np.sqrt(np.abs(betas) / total)), np.eye(dim))
    u = dagger(prep) @ select @ prep
    p = _coord_projector(m * dim, range(d))
    return BlockEncoding(UnitaryOp(u), p, p.copy(), d, total)


def chebyshev_phases(k: int) -> tuple[PhaseSequence, int]:
    """Phases giving ``(-1)^k T_k(sigma)``; returns them with that sign."""
    return PhaseSequence((math.pi,) * k), (-1) ** k


@dataclass(frozen=True)
class HamSimResult:
    matrix: np.ndarray
    bound: float
    subnormalization: float
    warning: str | None = None


def hamiltonian_sim_lcu(h: np.ndarray, t: float, degree: int) -> HamSimResult:
    """exp(i H t) from Jacobi-Anger-truncated Chebyshev series, combined by LCU.

    cos(xt) = J_0(t) + 2 sum_k (-1)^k J_2k(t) T_2k(x) and
    sin(xt) = 2 sum_k (-1)^k J_2k+1(t) T_2k+1(x); terms up to ``degree``.
    ``bound`` is 2 sum_{k > degree} |J_k(t)|, the truncation remainder.
    """
    h = np.asarray(h, dtype=complex)
    if not np.allclose(h, dagger(h), atol=1e-10):
        raise ValueError("h must be Hermitian")
    if degree < 1:
        raise ValueError("degree must be at least 1")
    norm = float(np.linalg.norm(h, 2))
    warning = None
    tau = t
    if norm > 1:
        h, tau = h / norm, t * norm
        warning = f"rescaled H by its norm {norm:.6g}"
    if abs(tau) > 1:
        note = f"|H| t = {abs(tau):.6g} exceeds 1; raise the degree"
        warning = f"{warning}; {note}" if warning else note
    if tau == 0:
        return HamSimResult(np.eye(h.shape[0], dtype=complex), 0.0, 1.0, warning)
    be = block_encode(h)
    entries = []
    for k in range(degree + 1):
        if k == 0:
            coeff = jv(0, tau)
        elif k % 2 == 0:
            coeff = 2 * (-1) ** (k // 2) * jv(k, tau)
        else:
            coeff = 2j * (-1) ** ((k - 1) // 2) * jv(k, tau)
        phases, sign = chebyshev_phases(k)
        if abs(coeff) > 0:
            entries.append(LCUEntry(sign * coeff, be, phases))
    lcu = lcu_combine(entries)
    tail = 2 * sum(abs(jv(k, tau)) for k in range(degree + 1, degree + 60))
    return HamSimResult(lcu.encoded(), float(tail), lcu.subnormalization, warning)


@dataclass(frozen=True)
class SelectProcessor:
    g: UnitaryOp
    program_states: tuple[PureState, ...]
    data_dim: int


def build_select_processor(programs: Sequence[UnitaryOp | np.ndarray]) -> SelectProcessor:
    """G = sum_i U_i (x) |i><i| on data (x) program."""
    mats = [p.matrix if isinstance(p, UnitaryOp) else np.asarray(p, dtype=complex) for p in programs]
    if not mats:
        raise ValueError("at least one program is required")
    if len(mats) > 16:
        raise ValueError(f"{len(mats)} programs exceed the limit of 16")
    d = mats[0].shape[0]
    if any(m.shape != (d, d) for m in mats):
        raise DimensionError("programs act on different data dimensions")
    for m in mats:
        if not is_unitary(m, 1e-9):
            raise ValueError("programs must be unitary")
    n = len(mats)
    g = sum(np.kron(m, np.outer(np.eye(n)[i], np.eye(n)[i])) for i, m in enumerate(mats))
    states = tuple(PureState.basis(i, (n,)) for i in range(n))
    return SelectProcessor(UnitaryOp(g, (d, n)), states, d)


@dataclass(frozen=True)
class NoProgrammingReport:
    implements_u: bool
    implements_v: bool
    program_overlap: complex
    violation: bool = False


def _implements(g: np.ndarray, prog: np.ndarray, x: np.ndarray, tol: float) -> bool:
    d = x.shape[0]
    dp = prog.shape[0]
    ref = None
    for j in range(d):
        out = g @ np.kron(np.eye(d)[j], prog)
        target = x[:, j]
        residual_prog = dagger(target[:, None]).reshape(-1) @ out.reshape(d, dp)
        if np.linalg.norm(out - np.kron(target, residual_prog)) > tol:
            return False
        if ref is None:
            ref = residual_prog
        elif np.linalg.norm(residual_prog - ref) > tol:
            return False
    return True


def no_programming_check(
    g: UnitaryOp | np.ndarray,
    pu: PureState,
    pv: PureState,
    u: UnitaryOp | np.ndarray,
    v: UnitaryOp | np.ndarray,
    tol: float = 1e-9,
) -> NoProgrammingReport:
    """Does G run u on program pu and v on pv? Distinct gates force orthogonal programs."""
    gm = g.matrix if isinstance(g, UnitaryOp) else np.asarray(g, dtype=complex)
    um = u.matrix if isinstance(u, UnitaryOp) else np.asarray(u, dtype=complex)
    vm = v.matrix if isinstance(v, UnitaryOp) else np.asarray(v, dtype=complex)
    if gm.shape[0] != um.shape[0] * pu.dim or pu.dim != pv.dim or um.shape != vm.shape:
        raise DimensionError("dims do not compose as data (x) program")
    iu = _implements(gm, pu.amplitudes, um, tol)
    iv = _implements(gm, pv.amplitudes, vm, tol)
    overlap = complex(np.vdot(pu.amplitudes, pv.amplitudes))
    distinct = phase_aligned_distance(um, vm) > 1e-6
    violation = iu and iv and distinct and abs(overlap) > tol
    return NoProgrammingReport(iu, iv, overlap, violation)


PROGRAM_KINDS = {"H": 0b00, "T": 0b01, "CZ": 0b10}
_KIND_NAMES = {v: k for k, v in PROGRAM_KINDS.items()}
RECORD_BITS = 26  # kind:2, step:8, wire:8, wire:8
UNUSED_WIRE = 0xFF


@dataclass(frozen=True)
class ClassicalProgram:
    """Bit-string program: one 26-bit record per gate, MSB first.

    Record fields: kind (2 bits: 00 H, 01 T, 10 CZ), step (8 bits), first
    wire (8 bits), second wire (8 bits, 0xFF when unused).
    """

    wires: int
    bits: str

    def __post_init__(self) -> None:
        if set(self.bits) - {"0", "1"}:
            raise ValueError("bits must be a string of 0/1")
        if len(self.bits) % RECORD_BITS:
            raise ValueError(f"bit length {len(self.bits)} is not a multiple of {RECORD_BITS}")
        for k in range(len(self.bits) // RECORD_BITS):
            if self.bits[k * RECORD_BITS : k * RECORD_BITS + 2] == "11":
                raise ValueError(f"record {k} has reserved kind 11")

    @property
    def n_gates(self) -> int:
        return len(self.bits) // RECORD_BITS

    def records(self) -> list[tuple[int, int, int, int]]:
        out = []
        for k in range(self.n_gates):
            r = self.bits[k * RECORD_BITS : (k + 1) * RECORD_BITS]
            out.append((int(r[:2], 2), int(r[2:10], 2), int(r[10:18], 2), int(r[18:26], 2)))
        return out

    def to_bytes(self) -> bytes:
        """Header ``<B wires><H count little-endian>`` then the bit string, zero-padded."""
        padded = self.bits + "0" * (-len(self.bits) % 8)
        body = bytes(int(padded[i : i + 8], 2) for i in range(0, len(padded), 8))
        return struct.pack("<BH", self.wires, self.n_gates) + body

    @classmethod
    def from_bytes(cls, data: bytes) -> "ClassicalProgram":
        if len(data) < 3:
            raise ValueError("truncated program header")
        wires, count = struct.unpack("<BH", data[:3])
        need = math.ceil(count * RECORD_BITS / 8)
        if len(data) - 3 != need:
            raise ValueError(f"expected {need} payload bytes, found {len(data) - 3}")
        bits = "".join(f"{b:08b}" for b in data[3:])
        if set(bits[count * RECORD_BITS :]) - {"0"}:
            raise ValueError("nonzero padding bits")
        return cls(wires, bits[: count * RECORD_BITS])


def program_encode(c: Circuit) -> ClassicalProgram:
    if c.wires > UNUSED_WIRE or len(c) > 256:
        raise ValueError("circuit too large for 8-bit fields")
    parts = []
    for step, g in enumerate(c.gates):
        if g.kind not in PROGRAM_KINDS:
            raise UnsupportedGate(f"gate {g.kind!r} at step {step} has no program encoding")
        w0 = g.targets[0]
        w1 = g.targets[1] if len(g.targets) > 1 else UNUSED_WIRE
        parts.append(f"{PROGRAM_KINDS[g.kind]:02b}{step:08b}{w0:08b}{w1:08b}")
    return ClassicalProgram(c.wires, "".join(parts))


def program_decode(p: ClassicalProgram) -> Circuit:
    gates = []
    for k, (kind, step, w0, w1) in enumerate(p.records()):
        if step != k % 256:
            raise ValueError(f"record {k} carries step {step}")
        name = _KIND_NAMES[kind]
        targets = (w0,) if name != "CZ" else (w0, w1)
        if name != "CZ" and w1 != UNUSED_WIRE:
            raise ValueError(f"record {k}: single-wire gate with a second wire")
        gates.append(Gate(name, targets))
    return Circuit(p.wires, tuple(gates))


def fit_phases(
    target: Callable[[float], complex],
    n_phases: int,
    samples: int = 33,
    sweeps: int = 40,
    rng: np.random.Generator | None = None,
) -> tuple[PhaseSequence, float]:
    """Coordinate-descent search for phases with qsp_poly(., s) close to target(s).

    Heuristic only: no guarantee of a global optimum. Returns the phases and
    the final mean squared error on a uniform grid in [0, 1].
    """
    if not 1 <= n_phases <= 8:
        raise ValueError("n_phases must lie in 1..8")
    rng = rng or np.random.default_rng(0)
    grid = np.linspace(0, 1, samples)
    goal = np.array([complex(target(s)) for s in grid])
    phases = list(rng.uniform(-math.pi, math.pi, n_phases))

    def loss(ph: Sequence[float]) -> float:
        vals = np.array([qsp_poly(ph, s) for s in grid])
        return float(np.mean(np.abs(vals - goal) ** 2))

    best = loss(phases)
    for _ in range(sweeps):
        for k in range(n_phases):
            res = minimize_scalar(lambda x: loss(phases[:k] + [x] + phases[k + 1 :]), bounds=(-math.pi, math.pi), method="bounded")
            if res.fun < best:
                best = float(res.fun)
                phases[k] = float(res.x)
        if best < 1e-14:
            break
    return PhaseSequence(tuple(phases)), best
