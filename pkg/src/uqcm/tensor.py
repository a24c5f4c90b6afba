"""Matrix-product states, sequential (QTM-style) preparation, MPUs, HO-MPS.

Amplitude convention: ``psi(i_1..i_N) = tr(B A_N^{i_N} ... A_1^{i_1})``.
Site tensors are stored as arrays of shape ``(d, chi_out, chi_in)`` so that
``A[i]`` maps the incoming bond (from the previous site) to the outgoing
one; the boundary ``B`` has shape ``(chi_0, chi_N)``. Open chains use a
rank-one ``B``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (
    DimensionError,
    PureState,
    apply_matrix,
    check_cap,
    entropy_bits,
    fidelity,
    is_unitary,
    ket,
    partial_trace,
)

ZERO_SV = 1e-13


class TruncationError(ValueError):
    def __init__(self, message: str, fidelity: float, discarded: float):
        super().__init__(message)
        self.fidelity = fidelity
        self.discarded = discarded


@dataclass(frozen=True)
class MPS:
    site_tensors: tuple[np.ndarray, ...]
    boundary: np.ndarray

    def __post_init__(self) -> None:
        tensors = tuple(np.asarray(a, dtype=complex) for a in self.site_tensors)
        if not tensors:
            raise ValueError("an MPS needs at least one site")
        for n, a in enumerate(tensors):
            if a.ndim != 3:
                raise DimensionError(f"site {n} tensor must be (d, chi_out, chi_in)")
            if n and a.shape[2] != tensors[n - 1].shape[1]:
                raise DimensionError(f"bond mismatch between sites {n - 1} and {n}")
        b = np.asarray(self.boundary, dtype=complex)
        if b.shape != (tensors[0].shape[2], tensors[-1].shape[1]):
            raise DimensionError(f"boundary must have shape {(tensors[0].shape[2], tensors[-1].shape[1])}")
        object.__setattr__(self, "site_tensors", tensors)
        object.__setattr__(self, "boundary", b)

    @property
    def n_sites(self) -> int:
        return len(self.site_tensors)

    @property
    def phys_dims(self) -> tuple[int, ...]:
        return tuple(a.shape[0] for a in self.site_tensors)

    @property
    def bond_dims(self) -> tuple[int, ...]:
        """chi at every cut, from chi_0 (before site 1) to chi_N."""
        return (self.site_tensors[0].shape[2],) + tuple(a.shape[1] for a in self.site_tensors)

    @classmethod
    def product(cls, states: Sequence[np.ndarray]) -> "MPS":
        tensors = tuple(np.asarray(s, dtype=complex).reshape(-1, 1, 1) for s in states)
        return cls(tensors, np.ones((1, 1)))


@dataclass(frozen=True)
class MPU:
    """Matrix-product operator; tensors have shape (d_out, d_in, D_out, D_in).

    ``<o|U|i> = tr(C W_N^{o_N i_N} ... W_1^{o_1 i_1})``.
    """

    site_tensors: tuple[np.ndarray, ...]
    boundary: np.ndarray

    def __post_init__(self) -> None:
        tensors = tuple(np.asarray(w, dtype=complex) for w in self.site_tensors)
        for n, w in enumerate(tensors):
            if w.ndim != 4:
                raise DimensionError(f"site {n} tensor must be (d_out, d_in, D_out, D_in)")
            if n and w.shape[3] != tensors[n - 1].shape[2]:
                raise DimensionError(f"bond mismatch between sites {n - 1} and {n}")
        c = np.asarray(self.boundary, dtype=complex)
        if c.shape != (tensors[0].shape[3], tensors[-1].shape[2]):
            raise DimensionError("MPU boundary has the wrong shape")
        object.__setattr__(self, "site_tensors", tensors)
        object.__setattr__(self, "boundary", c)

    @property
    def bond_dims(self) -> tuple[int, ...]:
        return (self.site_tensors[0].shape[3],) + tuple(w.shape[2] for w in self.site_tensors)

    @classmethod
    def identity(cls, phys_dims: Sequence[int]) -> "MPU":
        return cls(tuple(np.eye(d, dtype=complex).reshape(d, d, 1, 1) for d in phys_dims), np.ones((1, 1)))

    @classmethod
    def translation(cls, n_sites: int, d: int = 2) -> "MPU":
        """Cyclic shift |i_1 .. i_N> -> |i_N, i_1, .., i_{N-1}> with a periodic bond."""
        w = np.zeros((d, d, d, d), dtype=complex)
        for o in range(d):
            for i in range(d):
                w[o, i, i, o] = 1.0  # bond carries the previous input; output reads it
        return cls((w,) * n_sites, np.eye(d, dtype=complex))


def mps_amplitudes(m: MPS) -> np.ndarray:
    """Unnormalized amplitude tensor flattened big-endian."""
    check_cap(sum(math.log2(d) for d in m.phys_dims), "MPS contraction")
    chi0 = m.site_tensors[0].shape[2]
    # acc[idx, out_bond, chi0] = (A_n^{i_n} ... A_1^{i_1})[out, in]
    acc = np.eye(chi0, dtype=complex)[None]
    for a in m.site_tensors:
        acc = np.einsum("iab,xbc->xiac", a, acc).reshape(-1, a.shape[1], chi0)
    return np.einsum("ab,xba->x", m.boundary, acc)


def mps_contract(m: MPS) -> PureState:
    amps = mps_amplitudes(m)
    if np.linalg.norm(amps) < 1e-14:
        raise ValueError("MPS contracts to the zero vector")
    return PureState.from_vector(amps, m.phys_dims)


def state_to_mps(s: PureState, chi_max: int | None = None, tol: float = 0.0) -> MPS:
    """Left-to-right SVD factorization into a left-canonical open MPS.

    Singular values below 1e-13 of the largest are numerical zeros and always
    dropped. Beyond that, at most ``chi_max`` values are kept per cut and the
    total discarded weight must not exceed ``tol``.
    """
    dims = s.dims
    rest = s.amplitudes.reshape(1, -1)
    tensors = []
    discarded = 0.0
    for d in dims[:-1]:
        chi_in = rest.shape[0]
        mat = rest.reshape(chi_in * d, -1)
        u, sv, vh = np.linalg.svd(mat, full_matrices=False)
        keep = int(np.sum(sv > ZERO_SV * sv[0]))
        if chi_max is not None and keep > chi_max:
            discarded += float(np.sum(sv[chi_max:keep] ** 2))
            keep = chi_max
        u, sv, vh = u[:, :keep], sv[:keep], vh[:keep]
        # u[(a, i), b] -> A[i][b, a]
        tensors.append(u.reshape(chi_in, d, keep).transpose(1, 2, 0))
        rest = sv[:, None] * vh
    tensors.append(rest.reshape(rest.shape[0], dims[-1], 1).transpose(1, 2, 0))
    m = MPS(tuple(tensors), np.ones((1, 1)))
    if discarded > tol + 1e-15:
        try:
            fid = fidelity(mps_contract(m), s)
        except ValueError:
            fid = 0.0
        raise TruncationError(
            f"truncation to chi={chi_max} discards weight {discarded:.3e} > tol {tol:.1e}", fid, discarded
        )
    return m


def bond_entanglement(m: MPS, cut: int) -> float:
    """Von Neumann entropy (bits) between sites [0, cut) and [cut, N)."""
    if not 0 < cut < m.n_sites:
        raise ValueError(f"cut must lie strictly between 0 and {m.n_sites}")
    psi = mps_contract(m)
    left = math.prod(m.phys_dims[:cut])
    sv = np.linalg.svd(psi.amplitudes.reshape(left, -1), compute_uv=False)
    return entropy_bits(sv**2)


def mps_from_sequential_circuit(
    unitaries: Sequence[np.ndarray],
    adversary_dim: int,
    adversary_init: PureState,
    phys_dims: Sequence[int] | None = None,
    adversary_final: PureState | None = None,
) -> MPS:
    """MPS prepared by a chain of data-adversary unitaries (data starts in |0>).

    Each unitary acts on ``site (x) adversary``. At the end the adversary is
    projected onto ``adversary_final`` (default ``|0>``), which closes the
    chain with the boundary ``|a_init><a_final|``.
    """
    if adversary_init.dims != (adversary_dim,):
        raise DimensionError("adversary_init must be a single site of dimension adversary_dim")
    final = adversary_final or PureState.basis(0, (adversary_dim,))
    tensors = []
    for n, u in enumerate(unitaries):
        u = np.asarray(u, dtype=complex)
        if u.shape[0] % adversary_dim or not is_unitary(u, 1e-9):
            raise DimensionError(f"unitary {n} does not act on data (x) adversary")
        d = u.shape[0] // adversary_dim
        if phys_dims is not None and phys_dims[n] != d:
            raise DimensionError(f"unitary {n} implies phys dim {d}, expected {phys_dims[n]}")
        # A[i][b', b] = <i, b'| U |0, b>
        tensors.append(u.reshape(d, adversary_dim, d, adversary_dim)[:, :, 0, :])
    boundary = np.outer(adversary_init.amplitudes, final.amplitudes.conj())
    return MPS(tuple(tensors), boundary)


@dataclass(frozen=True)
class QTMResult:
    final_data: PureState
    decoupled: bool
    residual: float
    joint: PureState


def qtm_run(
    program: Sequence[tuple[np.ndarray, Sequence[int]]],
    data: PureState,
    adversary: PureState,
    tol: float = 1e-9,
) -> QTMResult:
    """Run ``(unitary, data_sites)`` steps; each acts on those sites plus the adversary.

    ``residual`` is one minus the purity of the reduced data state.
    ``final_data`` is its dominant eigenvector, which equals the data state
    when the run decouples.
    """
    joint = data.tensor(adversary)
    adv_site = data.n_sites
    vec = joint.amplitudes
    for u, sites in program:
        sites = list(sites) + [adv_site]
        vec = apply_matrix(vec, joint.dims, np.asarray(u, dtype=complex), sites)
    joint = PureState(vec, joint.dims)
    rho = partial_trace(joint.density(), joint.dims, list(range(data.n_sites)))
    purity = float(np.real(np.trace(rho @ rho)))
    residual = max(0.0, 1.0 - purity)
    w, v = np.linalg.eigh(rho)
    top = PureState.from_vector(v[:, -1], data.dims)
    return QTMResult(top, residual <= tol, residual, joint)


def mpu_to_dense(op: MPU) -> np.ndarray:
    dout = [w.shape[0] for w in op.site_tensors]
    din = [w.shape[1] for w in op.site_tensors]
    check_cap(sum(math.log2(d) for d in dout), "MPU contraction")
    d0 = op.site_tensors[0].shape[3]
    acc = np.eye(d0, dtype=complex)[None, None]
    for w in op.site_tensors:
        acc = np.einsum("oiab,xybc->xoyiac", w, acc)
        s = acc.shape
        acc = acc.reshape(s[0] * s[1], s[2] * s[3], s[4], s[5])
    return np.einsum("ab,xyba->xy", op.boundary, acc)



def apply_mpu(m: MPS, op: MPU) -> MPS:
    """A'^{o} = sum_i W^{o i} (x) A^{i}; bond dims multiply."""
    if len(op.site_tensors) != m.n_sites:
        raise DimensionError("MPU and MPS have different lengths")
    tensors = []
    for n, (w, a) in enumerate(zip(op.site_tensors, m.site_tensors)):
        if w.shape[1] != a.shape[0]:
            raise DimensionError(f"physical dimension mismatch at site {n}")
        new = np.einsum("oiab,icd->oacbd", w, a)
        s = new.shape
        tensors.append(new.reshape(s[0], s[1] * s[2], s[3] * s[4]))
    return MPS(tuple(tensors), np.kron(op.boundary, m.boundary))


def mpu_from_local_gates(n_sites: int, gates: Sequence[tuple[np.ndarray, Sequence[int]]], d: int = 2) -> MPU:
    """MPU of a product of gates with pairwise disjoint supports.

    Supports are one site or two sites ``(a, b)``; two-site gates are split by
    operator-Schmidt decomposition and the bond is carried through any sites
    strictly between ``a`` and ``b``.
    """
    site_ops: list[list[np.ndarray]] = [[np.eye(d, dtype=complex).reshape(d, d, 1, 1)] for _ in range(n_sites)]
    used: set[int] = set()
    for g, support in gates:
        support = [int(s) for s in support]
        if used & set(support):
            raise ValueError("gate supports must be disjoint")
        used |= set(support)
        g = np.asarray(g, dtype=complex)
        if len(support) == 1:
            site_ops[support[0]] = [g.reshape(d, d, 1, 1)]
        elif len(support) == 2:
            a, b = support
            if a > b:
                swap = np.eye(d * d).reshape(d, d, d, d).transpose(1, 0, 2, 3).reshape(d * d, d * d)
                g, (a, b) = swap @ g @ swap, (b, a)
            # g[(oa, ob), (ia, ib)] -> sum_k L_k[oa, ia] R_k[ob, ib]
            r = g.reshape(d, d, d, d).transpose(0, 2, 1, 3).reshape(d * d, d * d)
            u, sv, vh = np.linalg.svd(r)
            k = max(1, int(np.sum(sv > ZERO_SV * sv[0])))
            left = (u[:, :k] * sv[:k]).reshape(d, d, k, 1)
            right = vh[:k].reshape(k, d, d).transpose(1, 2, 0)[:, :, None, :]
            site_ops[a] = [left]
            site_ops[b] = [right]
            for mid in range(a + 1, b):
                if mid in used:
                    raise ValueError("gate supports must be disjoint")
                used.add(mid)
                site_ops[mid] = [np.einsum("oi,ab->oiab", np.eye(d), np.eye(k))]
        else:
            raise ValueError("only one- and two-site gates are supported")
    return MPU(tuple(ops[0] for ops in site_ops), np.ones((1, 1)))


@dataclass(frozen=True)
class HOMPS:
    """Second-layer factorization of every MPS matrix.

    ``layers[n][i]`` is a list of ``n1`` tensors of shape ``(d1, d1, chi1, chi1)``
    and ``caps[n][i]`` the ``chi1 x chi1`` boundary, so that
    ``A_n^i[mu, nu] = tr(C B_1[mu_1, nu_1] ... B_{n1}[mu_n1, nu_n1])``.
    """

    n1: int
    d1: int
    chi1: int
    layers: tuple[tuple[tuple[np.ndarray, ...], ...], ...]
    caps: tuple[tuple[np.ndarray, ...], ...]
    boundary: np.ndarray


def _perfect_power(chi: int, d1: int) -> int:
    n1, p = 0, 1
    while p < chi:
        p *= d1
        n1 += 1
    if p != chi or n1 < 1:
        raise ValueError(f"bond dimension {chi} is not a positive power of {d1}")
    return n1


def _matrix_to_mpo(a: np.ndarray, d1: int, n1: int) -> list[np.ndarray]:
    """Exact split of a d1^n1 square matrix into n1 tensors (d1, d1, left, right)."""
    t = a.reshape((d1,) * (2 * n1))
    # interleave (mu_1, nu_1, mu_2, nu_2, ...)
    order = [x for k in range(n1) for x in (k, n1 + k)]
    rest = t.transpose(order).reshape(1, -1)
    out = []
    for _ in range(n1 - 1):
        left = rest.shape[0]
        u, sv, vh = np.linalg.svd(rest.reshape(left * d1 * d1, -1), full_matrices=False)
        keep = max(1, int(np.sum(sv > ZERO_SV * max(sv[0], 1e-300))))
        out.append(u[:, :keep].reshape(left, d1, d1, keep).transpose(1, 2, 0, 3))
        rest = sv[:keep, None] * vh[:keep]
    out.append(rest.reshape(rest.shape[0], d1, d1, 1).transpose(1, 2, 0, 3))
    return out


def homps_decompose(m: MPS, d1: int) -> HOMPS:
    chis = set(m.bond_dims)
    if len(chis) != 1:
        raise ValueError("every bond of the MPS must have the same dimension")
    chi = chis.pop()
    n1 = _perfect_power(chi, d1)
    raw = [[_matrix_to_mpo(a[i], d1, n1) for i in range(a.shape[0])] for a in m.site_tensors]
    chi1 = max(max(max(b.shape[2], b.shape[3]) for b in chain) for site in raw for chain in site)
    layers = []
    caps = []
    for site in raw:
        site_layers = []
        site_caps = []
        for chain in site:
            padded = []
            for b in chain:
                p = np.zeros((d1, d1, chi1, chi1), dtype=complex)
                p[:, :, : b.shape[2], : b.shape[3]] = b
                padded.append(p)
            cap = np.zeros((chi1, chi1), dtype=complex)
            cap[0, 0] = 1.0  # open second-layer chain: tr(C M) = M[0, 0]
            site_layers.append(tuple(padded))
            site_caps.append(cap)
        layers.append(tuple(site_layers))
        caps.append(tuple(site_caps))
    return HOMPS(n1, d1, chi1, tuple(layers), tuple(caps), m.boundary)


def homps_matrix(chain: Sequence[np.ndarray], cap: np.ndarray, d1: int) -> np.ndarray:
    """Rebuild one A^i from its second-layer tensors."""
    n1 = len(chain)
    chi1 = cap.shape[0]
    acc = np.eye(chi1, dtype=complex)[None, None]  # (mu_prefix, nu_prefix, left, right)
    for b in chain:
        acc = np.einsum("xyab,mnbc->xmynac", acc, b)
        s = acc.shape
        acc = acc.reshape(s[0] * s[1], s[2] * s[3], s[4], s[5])
    dim = d1**n1
    return np.einsum("ab,xyba->xy", cap, acc).reshape(dim, dim)


def homps_reconstruct(h: HOMPS) -> MPS:
    tensors = []
    for site_layers, site_caps in zip(h.layers, h.caps):
        tensors.append(np.stack([homps_matrix(ch, c, h.d1) for ch, c in zip(site_layers, site_caps)]))
    return MPS(tuple(tensors), h.boundary)


def random_mps(phys_dims: Sequence[int], chi: int, rng: np.random.Generator, periodic: bool = True) -> MPS:
    """Random complex MPS with uniform bond dimension (periodic boundary by default)."""
    tensors = tuple(
        (rng.normal(size=(d, chi, chi)) + 1j * rng.normal(size=(d, chi, chi))) / math.sqrt(2 * chi) for d in phys_dims
    )
    if periodic:
        boundary = np.eye(chi, dtype=complex)
    else:
        boundary = np.outer(ket(0, chi), ket(0, chi))
    return MPS(tensors, boundary)
