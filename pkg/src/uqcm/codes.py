"""Stabilizer codes, Knill-Laflamme checks, recovery synthesis, logical gates.

Pauli strings are written as text, e.g. ``"XXI"``, ``"+ZZI"``, ``"-iXY"``:
an optional sign/phase prefix followed by one of ``IXYZ`` per qubit.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import (
    I2,
    X,
    Y,
    Z,
    DimensionError,
    KrausChannel,
    channel_distance,
    check_cap,
    dagger,
    embed,
    is_unitary,
    kron,
    phase_aligned_distance,
)

_LETTER = {"I": (0, 0), "X": (1, 0), "Z": (0, 1), "Y": (1, 1)}
_MATRIX = {"I": I2, "X": X, "Y": Y, "Z": Z}
_PREFIX = {"": 0, "+": 0, "+i": 1, "i": 1, "-": 2, "-i": 3}


class KLViolation(ValueError):
    """The error set is not correctable on the code."""


@dataclass(frozen=True)
class PauliString:
    """i^phase times a tensor product of single-qubit Paulis."""

    x_bits: tuple[int, ...]
    z_bits: tuple[int, ...]
    phase: int = 0

    def __post_init__(self) -> None:
        if len(self.x_bits) != len(self.z_bits):
            raise ValueError("x and z bit vectors differ in length")
        object.__setattr__(self, "x_bits", tuple(int(b) & 1 for b in self.x_bits))
        object.__setattr__(self, "z_bits", tuple(int(b) & 1 for b in self.z_bits))
        object.__setattr__(self, "phase", int(self.phase) % 4)

    @classmethod
    def from_str(cls, text: str) -> "PauliString":
        text = text.strip()
        body = text.lstrip("+-i")
        prefix = text[: len(text) - len(body)]
        if prefix not in _PREFIX or not body or any(c not in _LETTER for c in body):
            raise ValueError(f"malformed Pauli string {text!r}")
        xs, zs = zip(*(_LETTER[c] for c in body))
        return cls(xs, zs, _PREFIX[prefix])

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls((0,) * n, (0,) * n)

    @classmethod
    def single(cls, n: int, letter: str, qubit: int) -> "PauliString":
        s = ["I"] * n
        s[qubit] = letter
        return cls.from_str("".join(s))

    @property
    def n(self) -> int:
        return len(self.x_bits)

    @property
    def letters(self) -> str:
        inv = {v: k for k, v in _LETTER.items()}
        return "".join(inv[(x, z)] for x, z in zip(self.x_bits, self.z_bits))

    @property
    def weight(self) -> int:
        return sum(1 for x, z in zip(self.x_bits, self.z_bits) if x or z)

    def __str__(self) -> str:
        return ["+", "+i", "-", "-i"][self.phase] + self.letters

    def to_matrix(self) -> np.ndarray:
        return (1j**self.phase) * kron(*(_MATRIX[c] for c in self.letters))

    def commutes(self, other: "PauliString") -> bool:
        return symplectic_product(self, other) == 0

    def __mul__(self, other: "PauliString") -> "PauliString":
        if other.n != self.n:
            raise DimensionError("Pauli strings differ in length")
        phase = self.phase + other.phase
        for x1, z1, x2, z2 in zip(self.x_bits, self.z_bits, other.x_bits, other.z_bits):
            phase += _pauli_product_phase(x1, z1, x2, z2)
        xs = tuple(a ^ b for a, b in zip(self.x_bits, other.x_bits))
        zs = tuple(a ^ b for a, b in zip(self.z_bits, other.z_bits))
        return PauliString(xs, zs, phase)

    def vector(self) -> np.ndarray:
        return np.array(self.x_bits + self.z_bits, dtype=np.uint8)


def _pauli_product_phase(x1: int, z1: int, x2: int, z2: int) -> int:
    """Power of i in sigma(x1,z1) sigma(x2,z2) = i^k sigma(x1^x2, z1^z2), Y = iXZ."""
    if not (x1 or z1) or not (x2 or z2):
        return 0
    if x1 and z1:  # Y
        return (z2 - x2) % 4 if (x2 ^ z2) else 0
    if x1:  # X
        return (z2 * (2 * x2 - 1)) % 4
    return (x2 * (1 - 2 * z2)) % 4  # Z


def symplectic_product(a: PauliString, b: PauliString) -> int:
    return (sum(x * z for x, z in zip(a.x_bits, b.z_bits)) + sum(z * x for z, x in zip(a.z_bits, b.x_bits))) % 2


def gf2_rank(rows: np.ndarray) -> int:
    m = np.array(rows, dtype=np.uint8) % 2
    if m.size == 0:
        return 0
    rank = 0
    for col in range(m.shape[1]):
        pivot = next((r for r in range(rank, m.shape[0]) if m[r, col]), None)
        if pivot is None:
            continue
        m[[rank, pivot]] = m[[pivot, rank]]
        for r in range(m.shape[0]):
            if r != rank and m[r, col]:
                m[r] ^= m[rank]
        rank += 1
        if rank == m.shape[0]:
            break
    return rank


def in_span(p: PauliString, group: Sequence[PauliString]) -> bool:
    """Membership in the group generated by ``group``, ignoring phases."""
    if not group:
        return p.weight == 0
    rows = np.array([g.vector() for g in group])
    return gf2_rank(np.vstack([rows, p.vector()])) == gf2_rank(rows)


@dataclass(frozen=True)
class StabilizerCode:
    n: int
    generators: tuple[PauliString, ...]
    logical_x: PauliString | None = None
    logical_z: PauliString | None = None
    label: str | None = None

    def __post_init__(self) -> None:
        gens = tuple(PauliString.from_str(g) if isinstance(g, str) else g for g in self.generators)
        for g in gens:
            if g.n != self.n:
                raise ValueError(f"generator {g} has length {g.n}, expected {self.n}")
            if g.phase % 2:
                raise ValueError(f"generator {g} is not Hermitian")
        for a, b in itertools.combinations(gens, 2):
            if not a.commutes(b):
                raise ValueError(f"generators {a} and {b} anticommute")
        if gens and gf2_rank(np.array([g.vector() for g in gens])) != len(gens):
            raise ValueError("generators are not independent")
        object.__setattr__(self, "generators", gens)
        for name in ("logical_x", "logical_z"):
            v = getattr(self, name)
            if isinstance(v, str):
                object.__setattr__(self, name, PauliString.from_str(v))

    @classmethod
    def from_strings(cls, stabilizers: Sequence[str], logical_x: str | None = None, logical_z: str | None = None, label: str | None = None) -> "StabilizerCode":
        gens = tuple(PauliString.from_str(s) for s in stabilizers)
        n = gens[0].n if gens else len((logical_x or logical_z or "").lstrip("+-i"))
        return cls(n, gens, logical_x and PauliString.from_str(logical_x), logical_z and PauliString.from_str(logical_z), label)

    @property
    def k(self) -> int:
        return self.n - len(self.generators)


def repetition_code(n: int = 3) -> StabilizerCode:
    stabs = ["I" * i + "ZZ" + "I" * (n - i - 2) for i in range(n - 1)]
    return StabilizerCode.from_strings(stabs, "X" * n, "Z" + "I" * (n - 1), f"[[{n},1,1]]")


@dataclass(frozen=True)
class CodeProjector:
    matrix: np.ndarray
    rank: int

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=complex)
        if not (np.allclose(m @ m, m, atol=1e-10) and np.allclose(m, dagger(m), atol=1e-10)):
            raise ValueError("matrix is not an orthogonal projector")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_isometry(cls, v: np.ndarray) -> "CodeProjector":
        v = np.asarray(v, dtype=complex)
        return cls(v @ dagger(v), v.shape[1])

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def isometry(self) -> np.ndarray:
        """Orthonormal basis of the code space as columns."""
        w, v = np.linalg.eigh(self.matrix)
        return v[:, w > 0.5][:, ::-1]


def projector_from_stabilizers(code: StabilizerCode) -> CodeProjector:
    check_cap(code.n, "code projector")
    p = np.eye(2**code.n, dtype=complex)
    for g in code.generators:
        p = p @ (np.eye(2**code.n) + g.to_matrix()) / 2
    return CodeProjector(p, 2 ** (code.n - len(code.generators)))


def logical_basis(code: StabilizerCode) -> np.ndarray:
    """Columns |0_L>, |1_L> fixed by the logical operators (k = 1), else a projector basis."""
    p = projector_from_stabilizers(code)
    if code.k != 1 or code.logical_z is None or code.logical_x is None:
        return p.isometry()
    zl = code.logical_z.to_matrix()
    w, v = np.linalg.eigh(p.matrix @ (zl + dagger(zl)) / 2 @ p.matrix)
    zero = v[:, np.argmax(w)]
    one = code.logical_x.to_matrix() @ zero
    return np.stack([zero, one], axis=1)


@dataclass(frozen=True)
class KLResult:
    a: np.ndarray | None
    correctable: bool
    witness: tuple[int, int] | None = None


def kl_check(p: CodeProjector, errors: Sequence[np.ndarray], tol: float = 1e-9) -> KLResult:
    """Test P E_i^dag E_j P = a_ij P for all pairs and that [a_ij] is PSD."""
    pm = p.matrix
    m = len(errors)
    a = np.zeros((m, m), dtype=complex)
    for i, j in itertools.product(range(m), repeat=2):
        ei, ej = np.asarray(errors[i]), np.asarray(errors[j])
        if ei.shape != pm.shape or ej.shape != pm.shape:
            raise DimensionError("error operators do not match the code dimension")
        sandwich = pm @ dagger(ei) @ ej @ pm
        a[i, j] = np.trace(sandwich) / p.rank
        if np.linalg.norm(sandwich - a[i, j] * pm) > tol:
            return KLResult(None, False, (i, j))
    if not np.allclose(a, dagger(a), atol=tol) or np.linalg.eigvalsh((a + dagger(a)) / 2).min() < -tol:
        return KLResult(a, False, None)
    return KLResult(a, True, None)


def recovery_from_errors(p: CodeProjector, errors: Sequence[np.ndarray], tol: float = 1e-9) -> KrausChannel:
    """Recovery R_s = P F_s^dag / sqrt(d_s) from the diagonalized KL matrix, made TP."""
    kl = kl_check(p, errors, tol)
    if not kl.correctable:
        raise KLViolation(f"errors violate the Knill-Laflamme condition (witness {kl.witness})")
    d, u = np.linalg.eigh((kl.a + dagger(kl.a)) / 2)
    ops = []
    for s, ds in enumerate(d):
        if ds <= tol:
            continue
        f = sum(u[i, s] * np.asarray(errors[i]) for i in range(len(errors)))
        ops.append(p.matrix @ dagger(f) / math.sqrt(ds))
    gram = sum(dagger(r) @ r for r in ops)
    rest = np.eye(p.dim) - gram
    w, v = np.linalg.eigh((rest + dagger(rest)) / 2)
    if w.max() > tol:
        ops.append((v * np.sqrt(np.clip(w, 0, None))) @ dagger(v))
    return KrausChannel(tuple(ops))


def qec_accuracy(recovery: KrausChannel, noise: KrausChannel, p: CodeProjector, encoding: np.ndarray | None = None) -> float:
    """D(R o N o Enc, Enc) as a Choi trace distance; Enc defaults to a basis of P."""
    v = p.isometry() if encoding is None else np.asarray(encoding, dtype=complex)
    if noise.d_in != p.dim or recovery.d_in != noise.d_out:
        raise DimensionError("channels do not match the code dimension")
    enc = KrausChannel((v,))
    return channel_distance(enc.then(noise).then(recovery), enc)


def is_logical(op: np.ndarray | KrausChannel, p: CodeProjector, tol: float = 1e-9) -> bool:
    pm = p.matrix
    if isinstance(op, KrausChannel):
        if op.d_in != p.dim or op.d_out != p.dim:
            raise DimensionError("channel does not act on the code's space")
        heis = op.adjoint_apply(pm)
        leaks = max(np.linalg.norm((np.eye(p.dim) - pm) @ k @ pm, 2) for k in op.kraus_ops)
        return bool(np.linalg.norm(heis - pm, 2) <= tol and leaks <= tol)
    u = np.asarray(op, dtype=complex)
    if u.shape != pm.shape:
        raise DimensionError("operator does not act on the code's space")
    return bool(np.linalg.norm(u @ pm - pm @ u, 2) <= tol)


def _regroup(u: np.ndarray, blocks: Sequence[Sequence[int]], n: int) -> tuple[np.ndarray, list[int]]:
    """Reorder wires so blocks are contiguous; returns the operator as a 2n-index tensor."""
    order = [w for b in blocks for w in b]
    t = u.reshape((2,) * (2 * n))
    t = t.transpose(order + [n + w for w in order])
    return t, [len(b) for b in blocks]


def is_transversal(u: np.ndarray, partition: Sequence[Sequence[int]], tol: float = 1e-9) -> tuple[bool, list[np.ndarray] | None]:
    """Whether ``u`` is a tensor product across the blocks; factors when it is.

    Blocks are peeled off one at a time by an operator-Schmidt SVD; any
    second singular value above ``tol`` means entanglement across the cut.
    Factors are ordered like ``partition`` and act on the block's wires in
    the listed order.
    """
    u = np.asarray(u, dtype=complex)
    n = int(round(math.log2(u.shape[0])))
    if sorted(w for b in partition for w in b) != list(range(n)):
        raise ValueError("blocks must partition the wires")
    t, sizes = _regroup(u, partition, n)
    target = t.reshape(2**n, 2**n)
    factors = []
    rest, rest_n = t, n
    for size in sizes[:-1]:
        # (block out, block in) x (remainder out, remainder in)
        axes = list(range(size)) + list(range(rest_n, rest_n + size))
        axes += list(range(size, rest_n)) + list(range(rest_n + size, 2 * rest_n))
        uu, sv, vh = np.linalg.svd(rest.transpose(axes).reshape(4**size, -1), full_matrices=False)
        if sv.size > 1 and sv[1] > tol * sv[0]:
            return False, None
        factors.append(uu[:, 0].reshape(2**size, 2**size) * math.sqrt(2**size))
        rest_n -= size
        rest = vh[0].reshape((2,) * (2 * rest_n))
    factors.append(rest.reshape(2**rest_n, 2**rest_n) * math.sqrt(2**rest_n))
    prod = kron(*factors)
    overlap = np.vdot(prod, target)
    if abs(overlap) < 1e-12:
        return False, None
    factors[0] = factors[0] * overlap / abs(overlap)
    if np.linalg.norm(kron(*factors) - target, 2) > tol:
        return False, None
    return True, factors


def transversal_logical_survey(
    code: StabilizerCode,
    single_block_gates: Sequence[tuple[str, np.ndarray]],
    max_word: int = 1,
) -> list[tuple[tuple[str, ...], np.ndarray]]:
    """Tensor-power words that act as logical gates on a one-qubit-per-block code.

    A word is a sequence of at most ``max_word`` gate names; its block
    unitary is the product in application order and the candidate is that
    unitary on every qubit. Survivors of the ``[U, P] = 0`` filter are
    returned with their action in the logical basis, one per logical action
    up to global phase (the shortest, lexicographically first word wins).
    """
    check_cap(code.n, "transversal survey")
    p = projector_from_stabilizers(code)
    basis = logical_basis(code)
    gates = [(name, np.asarray(m, dtype=complex)) for name, m in single_block_gates]
    found: list[tuple[tuple[str, ...], np.ndarray]] = []
    for length in range(max_word + 1):
        for word in itertools.product(gates, repeat=length):
            block = I2
            for _, m in word:
                block = m @ block
            u = kron(*([block] * code.n))
            if not is_logical(u, p):
                continue
            logical = dagger(basis) @ u @ basis
            if any(phase_aligned_distance(logical, prev) < 1e-9 for _, prev in found):
                continue
            found.append((tuple(name for name, _ in word), logical))
    return found


@dataclass(frozen=True)
class GaugeCode:
    n: int
    gauge_generators: tuple[PauliString, ...]
    stabilizer_generators: tuple[PauliString, ...]

    def __post_init__(self) -> None:
        g = tuple(PauliString.from_str(x) if isinstance(x, str) else x for x in self.gauge_generators)
        s = tuple(PauliString.from_str(x) if isinstance(x, str) else x for x in self.stabilizer_generators)
        for p in g + s:
            if p.n != self.n:
                raise ValueError(f"{p} has length {p.n}, expected {self.n}")
        for a in s:
            if not all(a.commutes(b) for b in g):
                raise ValueError(f"stabilizer {a} does not commute with the gauge group")
            if not in_span(a, g):
                raise ValueError(f"stabilizer {a} is not in the gauge group")
        object.__setattr__(self, "gauge_generators", g)
        object.__setattr__(self, "stabilizer_generators", s)


def _subgroup(a: Sequence[PauliString], b: Sequence[PauliString]) -> bool:
    return all(in_span(p, b) for p in a)


def gauge_fix_admissible(c1: GaugeCode, c2: GaugeCode) -> bool:
    """S1 <= S2 <= G2 <= G1, by symplectic row reduction modulo phases."""
    if c1.n != c2.n:
        raise DimensionError("codes have different lengths")
    return (
        _subgroup(c1.stabilizer_generators, c2.stabilizer_generators)
        and _subgroup(c2.stabilizer_generators, c2.gauge_generators)
        and _subgroup(c2.gauge_generators, c1.gauge_generators)
    )


def concatenate(outer_encode: np.ndarray, inner_encode: np.ndarray, m: int) -> np.ndarray:
    """V2^{(x) m} V1."""
    v1 = np.asarray(outer_encode, dtype=complex)
    v2 = np.asarray(inner_encode, dtype=complex)
    if v2.shape[1] ** m != v1.shape[0]:
        raise DimensionError(f"outer code output dim {v1.shape[0]} != inner input dim {v2.shape[1]}^{m}")
    check_cap(int(round(math.log2(v2.shape[0] ** m))), "concatenated code")
    out = kron(*([v2] * m)) @ v1
    if not np.allclose(dagger(out) @ out, np.eye(out.shape[1]), atol=1e-10):
        raise ValueError("concatenation is not an isometry")
    return out


def repetition_encoder(n: int = 3) -> np.ndarray:
    v = np.zeros((2**n, 2), dtype=complex)
    v[0, 0] = 1
    v[-1, 1] = 1
    return v


def classify_encoding(v: np.ndarray, tol: float = 1e-9) -> str:
    """``"edge"`` if V = W (x) |a> for some split of the physical wires, else ``"bulk"``.

    W acts on as many wires as there are logical qubits; the remaining wires
    only receive a fixed ancilla state.
    """
    v = np.asarray(v, dtype=complex)
    n = int(round(math.log2(v.shape[0])))
    k = int(round(math.log2(v.shape[1])))
    for keep in itertools.combinations(range(n), k):
        drop = [w for w in range(n) if w not in keep]
        if not drop:
            return "edge"
        t = v.reshape((2,) * n + (v.shape[1],)).transpose(list(drop) + list(keep) + [n])
        sv = np.linalg.svd(t.reshape(2 ** len(drop), -1), compute_uv=False)
        if sv.size < 2 or sv[1] <= tol * sv[0]:
            return "edge"
    return "bulk"


def pauli_errors(n: int, weight: int = 1, kinds: str = "XYZ") -> list[np.ndarray]:
    """Identity plus every Pauli of weight 1..``weight`` built from ``kinds``."""
    out = [np.eye(2**n, dtype=complex)]
    for w in range(1, weight + 1):
        for qubits in itertools.combinations(range(n), w):
            for letters in itertools.product(kinds, repeat=w):
                s = ["I"] * n
                for q, c in zip(qubits, letters):
                    s[q] = c
                out.append(PauliString.from_str("".join(s)).to_matrix())
    return out


def named_error_set(name: str, n: int) -> list[np.ndarray]:
    table: dict[str, Callable[[], list[np.ndarray]]] = {
        "single-x": lambda: pauli_errors(n, 1, "X"),
        "single-y": lambda: pauli_errors(n, 1, "Y"),
        "single-z": lambda: pauli_errors(n, 1, "Z"),
        "single-pauli": lambda: pauli_errors(n, 1, "XYZ"),
    }
    if name not in table:
        raise ValueError(f"unknown error set {name!r}; choose from {sorted(table)}")
    return table[name]()


def bit_flip_noise(n: int, p: float) -> KrausChannel:
    """Independent bit flips with probability ``p`` on each of ``n`` qubits."""
    ops = []
    for pattern in itertools.product((0, 1), repeat=n):
        weight = math.prod(p if b else 1 - p for b in pattern)
        ops.append(math.sqrt(weight) * kron(*(X if b else I2 for b in pattern)))
    return KrausChannel(tuple(ops))


def code_distance(code: StabilizerCode, max_weight: int | None = None) -> int | None:
    """Smallest weight of a Pauli that commutes with all stabilizers but is not one."""
    n = code.n
    limit = n if max_weight is None else max_weight
    for w in range(1, limit + 1):
        for qubits in itertools.combinations(range(n), w):
            for letters in itertools.product("XYZ", repeat=w):
                s = ["I"] * n
                for q, c in zip(qubits, letters):
                    s[q] = c
                p = PauliString.from_str("".join(s))
                if all(p.commutes(g) for g in code.generators) and not in_span(p, code.generators):
                    return w
    return None


def single_qubit_ops(n: int, op: np.ndarray, qubit: int) -> np.ndarray:
    return embed(op, [qubit], (2,) * n)


def is_unitary_logical(u: np.ndarray, p: CodeProjector) -> bool:
    return is_unitary(u) and is_logical(u, p)
