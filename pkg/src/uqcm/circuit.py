"""Gate-sequence IR, dense simulation, and brute-force SU(2) compilation.

List order is application order: ``Circuit([g1, g2])`` implements
``U = U2 @ U1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .core import (
    CNOT,
    CZ,
    H,
    I2,
    S,
    T,
    X,
    Z,
    DimensionError,
    PureState,
    UnitaryOp,
    _unitary_phase_distance,
    apply_matrix,
    check_cap,
    is_unitary,
)

GATE_MATRICES: dict[str, np.ndarray] = {
    "H": H,
    "T": T,
    "S": S,
    "X": X,
    "Z": Z,
    "I": I2,
    "CZ": CZ,
    "CNOT": CNOT,
}
UNIVERSAL_SET = ("H", "T", "CZ")


class NotFound(LookupError):
    """No gate word within the depth bound meets the tolerance."""


@dataclass(frozen=True)
class Gate:
    kind: str
    targets: tuple[int, ...]
    matrix: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        targets = tuple(int(t) for t in self.targets)
        object.__setattr__(self, "targets", targets)
        if self.kind == "Custom":
            m = np.asarray(self.matrix, dtype=complex)
            if not is_unitary(m):
                raise ValueError("custom gate matrix is not unitary")
            m = m.copy()
            m.setflags(write=False)
            object.__setattr__(self, "matrix", m)
        elif self.kind in GATE_MATRICES:
            object.__setattr__(self, "matrix", GATE_MATRICES[self.kind])
        else:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if 2 ** len(targets) != self.matrix.shape[0]:
            raise ValueError(f"{self.kind} acts on {int(math.log2(self.matrix.shape[0]))} wires, got targets {targets}")
        if len(set(targets)) != len(targets) or any(t < 0 for t in targets):
            raise ValueError(f"invalid targets {targets}")

    @property
    def arity(self) -> int:
        return len(self.targets)


@dataclass(frozen=True)
class Circuit:
    wires: int
    gates: tuple[Gate, ...] = ()

    def __post_init__(self) -> None:
        gates = tuple(self.gates)
        for g in gates:
            if max(g.targets) >= self.wires:
                raise ValueError(f"gate {g.kind} targets {g.targets} exceed {self.wires} wires")
        object.__setattr__(self, "gates", gates)

    @classmethod
    def from_spec(cls, wires: int, spec: Iterable[tuple[str, Sequence[int]]]) -> "Circuit":
        """Build from ``[("H", [0]), ("CZ", [0, 1]), ...]``."""
        return cls(wires, tuple(Gate(k, tuple(t)) for k, t in spec))

    def then(self, other: "Circuit") -> "Circuit":
        if other.wires != self.wires:
            raise DimensionError("circuits have different widths")
        return Circuit(self.wires, self.gates + other.gates)

    def __len__(self) -> int:
        return len(self.gates)


def simulate(c: Circuit, initial: PureState | None = None) -> PureState:
    """Apply the gates of ``c`` in order to ``initial`` (default ``|0...0>``)."""
    if initial is None:
        initial = PureState.zeros(c.wires)
    if initial.dims != (2,) * c.wires:
        raise DimensionError(f"initial state dims {initial.dims} do not match {c.wires} qubits")
    vec = initial.amplitudes
    for g in c.gates:
        vec = apply_matrix(vec, initial.dims, g.matrix, g.targets)
    return PureState(vec, initial.dims)


def circuit_unitary(c: Circuit) -> UnitaryOp:
    check_cap(c.wires, "circuit")
    dims = (2,) * c.wires
    dim = 2**c.wires
    # trailing axis indexes the input basis state (the column)
    u = np.eye(dim, dtype=complex).reshape(dims + (dim,))
    for g in c.gates:
        k = len(g.targets)
        moved = np.moveaxis(u, g.targets, range(k))
        shape = moved.shape
        moved = (g.matrix @ moved.reshape(2**k, -1)).reshape(shape)
        u = np.moveaxis(moved, range(k), g.targets)
    u = u.reshape(dim, dim)
    return UnitaryOp(u, dims)


def compile_su2_bruteforce(target: np.ndarray, max_depth: int, eps: float) -> Circuit:
    """Shortest word over {H, T} whose product is within ``eps`` of ``target``.

    Words are enumerated length by length, lexicographically with H < T, and
    the first hit is returned. Distance is the phase-aligned spectral norm;
    a 1e-10 allowance absorbs rounding so that ``eps=0`` finds exact words.
    """
    target = np.asarray(target, dtype=complex)
    if target.shape != (2, 2) or not is_unitary(target, 1e-9):
        raise ValueError("target must be a 2x2 unitary")
    if not 0 <= max_depth <= 20:
        raise ValueError("max_depth must lie in [0, 20]")
    letters = np.stack([H, T])
    names = ("H", "T")
    products = np.eye(2, dtype=complex)[None]
    tdag = target.conj().T
    for depth in range(max_depth + 1):
        if depth:
            # word w + [g] has product g @ P(w); index w * 2 + g keeps lexicographic order
            products = np.einsum("gab,wbc->wgac", letters, products).reshape(-1, 2, 2)
        dist = _unitary_phase_distance(tdag[None] @ products)
        hits = np.flatnonzero(dist <= eps + 1e-10)
        if hits.size:
            idx = int(hits[0])
            word = [names[(idx >> (depth - 1 - p)) & 1] for p in range(depth)]
            return Circuit(1, tuple(Gate(w, (0,)) for w in word))
    raise NotFound(f"no {{H,T}} word of length <= {max_depth} within {eps}")
