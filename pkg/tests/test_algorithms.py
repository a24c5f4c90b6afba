import math
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from uqcm.algorithms import (
    RECORD_BITS,
    UNUSED_WIRE,
    BlockEncoding,
    ClassicalProgram,
    LCUEntry,
    NormTooLarge,
    PhaseSequence,
    UnsupportedGate,
    block_encode,
    build_select_processor,
    chebyshev_phases,
    fit_phases,
    hamiltonian_sim_lcu,
    lcu_combine,
    no_programming_check,
    program_decode,
    program_encode,
    qsp_poly,
    qsp_unitary,
    qsvt_apply,
    qsvt_oracle,
    qsvt_unitary,
    svd_decompose,
)
from uqcm.circuit import Circuit
from uqcm.core import CNOT, H, I2, X, Z, Comb, KrausChannel, PureState, UnitaryOp, channel_distance, comb_compose, dagger, fidelity, is_unitary, random_state, random_unitary


def z_phase(phi):
    return np.diag([np.exp(1j * phi), np.exp(-1j * phi)])


def random_contraction(d, rng, norm=0.95):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return norm * a / np.linalg.norm(a, 2)


def reduction_oracle(phases, sigma):
    """Alternate the 2x2 reflection with phase kicks on its first coordinate."""
    c = math.sqrt(1 - sigma**2)
    refl = np.array([[sigma, c], [c, -sigma]])
    out = np.eye(2, dtype=complex)
    for phi in phases:
        out = np.array([[np.exp(1j * phi), 0], [0, 1]]) @ refl @ out
    return out[0, 0]


def random_program_circuit(rng, wires, depth):
    spec = []
    for _ in range(depth):
        kind = str(rng.choice(["H", "T", "CZ"])) if wires > 1 else str(rng.choice(["H", "T"]))
        if kind == "CZ":
            spec.append((kind, [int(w) for w in rng.choice(wires, 2, replace=False)]))
        else:
            spec.append((kind, [int(rng.integers(wires))]))
    return Circuit.from_spec(wires, spec)


# QSP


def test_qsp_empty_is_identity():
    assert np.allclose(qsp_unitary(H, []).matrix, I2)


@pytest.mark.parametrize("phi", [0.0, 0.3, -1.2, math.pi])
def test_qsp_single_phase_identity_signal(phi):
    assert np.allclose(qsp_unitary(I2, [phi]).matrix, z_phase(phi), atol=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_qsp_matches_direct_product(seed):
    rng = np.random.default_rng(seed)
    g = random_unitary(2, rng)
    phases = rng.uniform(-math.pi, math.pi, int(rng.integers(1, 9)))
    # written order: Z(phi_1) G Z(phi_2) G ...
    direct = np.eye(2)
    for phi in phases:
        direct = direct @ z_phase(phi) @ g
    assert np.abs(qsp_unitary(g, phases).matrix - direct).max() <= 1e-12


def test_phase_sequence_rejects_nonfinite():
    with pytest.raises(ValueError):
        PhaseSequence((0.1, math.nan))


# block encodings


def test_svd_reconstructs():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    sv = svd_decompose(a)
    assert np.all(np.diff(sv.sigma) <= 0)
    assert np.abs(sv.matrix() - a).max() <= 1e-10
    assert np.allclose(dagger(sv.w) @ sv.w, np.eye(4))


def test_block_encode_unitary_has_empty_off_diagonal():
    u = random_unitary(3, np.random.default_rng(1))
    be = block_encode(u)
    full = be.u.matrix
    assert np.abs(full[:3, 3:]).max() <= 1e-10
    assert np.abs(full[3:, :3]).max() <= 1e-10
    assert np.abs(be.block() - u).max() <= 1e-10


def test_block_encode_half_identity():
    be = block_encode(np.eye(2) / 2)
    assert is_unitary(be.u.matrix, 1e-10)
    assert np.allclose(be.block(), np.eye(2) / 2, atol=1e-10)
    assert np.allclose(be.u.matrix[:2, 2:], math.sqrt(3 / 4) * np.eye(2), atol=1e-10)


def test_block_encode_norm_too_large():
    with pytest.raises(NormTooLarge) as err:
        block_encode(np.diag([1.5, 0.2]))
    assert err.value.norm == pytest.approx(1.5)


@pytest.mark.parametrize("seed", range(5))
def test_block_encode_random(seed):
    a = random_contraction(3, np.random.default_rng(seed))
    be = block_encode(a)
    assert is_unitary(be.u.matrix, 1e-10)
    assert np.abs(be.block() - a).max() <= 1e-10


def test_block_encoding_rejects_oversized_block():
    u = UnitaryOp(np.eye(4))
    with pytest.raises(ValueError):
        BlockEncoding(u, np.diag([1, 1, 0, 0]), np.diag([1, 0, 0, 0]), 2)


# QSVT


def test_qsvt_single_zero_phase_is_a():
    a = random_contraction(3, np.random.default_rng(2))
    assert np.abs(qsvt_apply(block_encode(a), [0.0]) - a).max() <= 1e-10


@pytest.mark.parametrize("seed", range(5))
def test_qsvt_diagonal_matches_oracle(seed):
    rng = np.random.default_rng(seed)
    sig = rng.uniform(0, 1, 2)
    phases = rng.uniform(-math.pi, math.pi, 4)
    b = qsvt_apply(block_encode(np.diag(sig)), phases)
    expected = np.diag([reduction_oracle(phases, s) for s in sig])
    assert np.abs(b - expected).max() <= 1e-8


@pytest.mark.parametrize("length", range(1, 9))
@pytest.mark.parametrize("seed", range(3))
def test_qsvt_random_singular_structure(length, seed):
    rng = np.random.default_rng(100 * length + seed)
    a = random_contraction(3, rng, norm=rng.uniform(0.5, 1.0))
    phases = rng.uniform(-math.pi, math.pi, length)
    b = qsvt_apply(block_encode(a), phases)
    sv = svd_decompose(a)
    left = sv.w if length % 2 else sv.v
    for i, s in enumerate(sv.sigma):
        p = reduction_oracle(phases, s)
        image = b @ sv.v[:, i]
        assert np.abs(image - p * left[:, i]).max() <= 1e-8
        if abs(p) > 1e-6:
            assert abs(np.vdot(left[:, i], image)) / np.linalg.norm(image) >= 1 - 1e-6
    got = np.sort(np.linalg.svd(b, compute_uv=False))
    want = np.sort([abs(reduction_oracle(phases, s)) for s in sv.sigma])
    assert np.abs(got - want).max() <= 1e-8
    assert np.abs(b - qsvt_oracle(a, phases)).max() <= 1e-8


@given(
    st.lists(st.floats(-math.pi, math.pi), min_size=1, max_size=8),
    st.floats(0, 1),
)
@settings(max_examples=100, deadline=None)
def test_parity_of_reduction(phases, sigma):
    d = len(phases)
    # the reflection at -sigma is conjugate to the one at sigma by Z
    plus = qsp_poly(phases, sigma)
    c = math.sqrt(1 - sigma**2)
    refl = np.array([[-sigma, c], [c, sigma]])
    m = np.eye(2, dtype=complex)
    for phi in phases:
        m = np.diag([np.exp(1j * phi), 1]) @ refl @ m
    assert m[0, 0] == pytest.approx((-1) ** d * plus, abs=1e-10)
    assert reduction_oracle(phases, sigma) == pytest.approx(plus, abs=1e-12)
    b = qsvt_apply(block_encode(np.diag([sigma, -sigma])), phases)
    assert b[0, 0] == pytest.approx(plus, abs=1e-8)
    assert b[1, 1] == pytest.approx((-1) ** d * plus, abs=1e-8)


@pytest.mark.parametrize("k", range(6))
def test_chebyshev_phases(k):
    phases, sign = chebyshev_phases(k)
    for s in np.linspace(0, 1, 7):
        assert sign * qsp_poly(phases, s) == pytest.approx(np.cos(k * np.arccos(s)), abs=1e-10)


@pytest.mark.parametrize("seed", range(3))
def test_qsvt_sequence_as_comb(seed):
    rng = np.random.default_rng(seed)
    be = block_encode(random_contraction(2, rng))
    phases = rng.uniform(-math.pi, math.pi, 4)
    u = be.u.matrix
    teeth = [np.eye(4)]
    slots = []
    for k, phi in enumerate(phases, start=1):
        proj = be.pi_out if k % 2 else be.pi_in
        teeth.append(np.eye(4) + (np.exp(1j * phi) - 1) * proj)
        slots.append(KrausChannel.unitary(u if k % 2 else dagger(u)))
    composed = comb_compose(Comb(tuple(teeth)), slots)
    direct = KrausChannel.unitary(qsvt_unitary(be, phases))
    assert channel_distance(composed, direct) <= 1e-10


# LCU


def test_lcu_single_entry():
    rng = np.random.default_rng(3)
    be = block_encode(random_contraction(2, rng))
    phases = PhaseSequence((0.4, -0.9, 1.3))
    out = lcu_combine([LCUEntry(1.0, be, phases)])
    assert out.subnormalization == pytest.approx(1)
    assert np.abs(out.encoded() - qsvt_apply(be, phases)).max() <= 1e-8


def test_lcu_identical_halves():
    rng = np.random.default_rng(4)
    be = block_encode(random_contraction(2, rng))
    phases = PhaseSequence((0.7, 0.2))
    single = lcu_combine([(1.0, be, phases)]).encoded()
    halves = lcu_combine([(0.5, be, phases), (0.5, be, phases)])
    assert halves.subnormalization == pytest.approx(1)
    assert np.abs(halves.encoded() - single).max() <= 1e-8


@pytest.mark.parametrize("betas", [(0.3, 0.7), (1.0, -0.5), (0.4j, 0.6 - 0.2j)])
def test_lcu_noncommuting_seeds(betas):
    a1, a2 = 0.6 * X, 0.8 * Z
    ph1, ph2 = PhaseSequence((0.3,)), PhaseSequence((1.1, -0.4, 0.8))
    out = lcu_combine([(betas[0], block_encode(a1), ph1), (betas[1], block_encode(a2), ph2)])
    dense = betas[0] * qsvt_oracle(a1, ph1) + betas[1] * qsvt_oracle(a2, ph2)
    assert np.abs(out.encoded() - dense).max() <= 1e-8
    assert out.subnormalization == pytest.approx(sum(abs(b) for b in betas))
    assert np.abs(out.block() - dense / out.subnormalization).max() <= 1e-8


@pytest.mark.parametrize("seed", range(3))
def test_lcu_linearity(seed):
    rng = np.random.default_rng(seed)
    def entry():
        be = block_encode(random_contraction(2, rng))
        ph = PhaseSequence(tuple(rng.uniform(-math.pi, math.pi, int(rng.integers(1, 5)))))
        return (complex(rng.normal(), rng.normal()), be, ph)
    beta = [entry() for _ in range(2)]
    gamma = [entry() for _ in range(3)]
    whole = lcu_combine(beta + gamma).encoded()
    parts = lcu_combine(beta).encoded() + lcu_combine(gamma).encoded()
    assert np.abs(whole - parts).max() <= 1e-8


def test_lcu_dimension_mismatch():
    with pytest.raises(ValueError):
        lcu_combine([(1.0, block_encode(np.eye(2) / 2)), (1.0, block_encode(np.eye(3) / 2))])


# Hamiltonian simulation


def test_ham_sim_zero_time():
    res = hamiltonian_sim_lcu(0.5 * X, 0.0, 4)
    assert np.allclose(res.matrix, np.eye(2))


def test_ham_sim_pm_one_spectrum():
    h = (X + Z) / math.sqrt(2)
    res = hamiltonian_sim_lcu(h, 1.0, 10)
    err = np.linalg.norm(res.matrix - expm(1j * h), 2)
    assert err <= 1e-6
    assert err <= res.bound + 1e-12
    assert res.warning is None


@pytest.mark.parametrize("seed", range(3))
def test_ham_sim_degree_monotone(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    h = (a + dagger(a)) / 2
    h /= np.linalg.norm(h, 2)
    exact = expm(0.9j * h)
    errs = []
    for d in range(1, 12, 2):
        res = hamiltonian_sim_lcu(h, 0.9, d)
        errs.append(np.linalg.norm(res.matrix - exact, 2))
        assert errs[-1] <= res.bound + 1e-12
    assert all(b < a for a, b in zip(errs, errs[1:]))


def test_ham_sim_rescales_with_warning():
    h = 3 * Z
    res = hamiltonian_sim_lcu(h, 0.2, 14)
    assert "rescaled" in res.warning
    assert np.linalg.norm(res.matrix - expm(0.2j * h), 2) <= 1e-6


def test_ham_sim_warns_on_long_time():
    res = hamiltonian_sim_lcu(Z, 3.0, 20)
    assert res.warning is not None
    assert np.linalg.norm(res.matrix - expm(3j * Z), 2) <= res.bound + 1e-12


# programmable processors


def test_select_single_program():
    u = random_unitary(2, np.random.default_rng(5))
    proc = build_select_processor([u])
    assert np.allclose(proc.g.matrix, u)


def test_select_identity_and_x():
    proc = build_select_processor([I2, X])
    out = proc.g.matrix @ np.kron([1, 0], proc.program_states[1].amplitudes)
    assert np.allclose(out, np.kron([0, 1], [0, 1]))


def test_select_random_programs():
    rng = np.random.default_rng(6)
    progs = [random_unitary(2, rng) for _ in range(5)]
    proc = build_select_processor(progs)
    for _ in range(20):
        phi = random_state(1, rng).amplitudes
        for u, p in zip(progs, proc.program_states):
            out = proc.g.matrix @ np.kron(phi, p.amplitudes)
            want = np.kron(u @ phi, p.amplitudes)
            assert fidelity(out, want) == pytest.approx(1, abs=1e-12)


def test_select_limits():
    with pytest.raises(ValueError):
        build_select_processor([I2] * 17)
    with pytest.raises(ValueError):
        build_select_processor([I2, np.eye(4)])


def test_no_programming_on_select():
    u, v = H, Z
    proc = build_select_processor([u, v])
    pu, pv = proc.program_states
    rep = no_programming_check(proc.g, pu, pv, u, v)
    assert rep.implements_u and rep.implements_v
    assert rep.program_overlap == 0
    assert not rep.violation


def test_no_programming_same_program():
    proc = build_select_processor([H, Z])
    p = proc.program_states[0]
    rep = no_programming_check(proc.g, p, p, H, H)
    assert rep.implements_u and rep.implements_v
    assert rep.program_overlap == pytest.approx(1)


def test_no_programming_overlapping_programs_fail():
    # program qubit controls an X on the data
    g = np.kron(I2, np.diag([1, 0])) + np.kron(X, np.diag([0, 1]))
    p0 = PureState.basis(0, (2,))
    plus = PureState.from_vector(np.array([1, 1]))
    rep = no_programming_check(g, p0, plus, I2, X)
    assert rep.implements_u
    assert not rep.implements_v
    assert not rep.violation


def test_no_programming_cnot_target_program():
    # data controls a flip of the program: the program absorbs which-gate info
    g = CNOT
    p = PureState.basis(0, (2,))
    rep = no_programming_check(g, p, p, I2, I2)
    assert not rep.implements_u


# classical programs


def test_program_h_bits():
    prog = program_encode(Circuit.from_spec(1, [("H", [0])]))
    assert prog.bits.startswith("00")
    assert prog.bits == "00" + "0" * 8 + "0" * 8 + "1" * 8
    assert len(prog.bits) == RECORD_BITS


def test_program_kind_codes():
    prog = program_encode(Circuit.from_spec(3, [("H", [2]), ("T", [0]), ("CZ", [1, 2])]))
    assert [r[0] for r in prog.records()] == [0b00, 0b01, 0b10]
    assert prog.records()[2] == (0b10, 2, 1, 2)
    assert prog.records()[0][3] == UNUSED_WIRE


def test_program_byte_layout():
    prog = program_encode(Circuit.from_spec(2, [("T", [1]), ("CZ", [0, 1])]))
    data = prog.to_bytes()
    assert data[:3] == struct.pack("<BH", 2, 2)
    assert len(data) == 3 + math.ceil(2 * RECORD_BITS / 8)
    bits = "".join(f"{b:08b}" for b in data[3:])
    assert bits[: 2 * RECORD_BITS] == prog.bits
    assert set(bits[2 * RECORD_BITS :]) <= {"0"}
    assert ClassicalProgram.from_bytes(data) == prog


@pytest.mark.parametrize("seed", range(20))
def test_program_round_trip(seed):
    rng = np.random.default_rng(seed)
    c = random_program_circuit(rng, int(rng.integers(1, 5)), int(rng.integers(0, 15)))
    prog = program_encode(c)
    assert program_decode(prog) == c
    assert ClassicalProgram.from_bytes(prog.to_bytes()) == prog


def test_program_unsupported_gate():
    with pytest.raises(UnsupportedGate):
        program_encode(Circuit.from_spec(1, [("X", [0])]))


@pytest.mark.parametrize(
    "data",
    [b"\x01", struct.pack("<BH", 1, 1) + b"\x00", struct.pack("<BH", 1, 1) + b"\x00\x00\x00\xff"],
)
def test_program_bad_bytes(data):
    with pytest.raises(ValueError):
        ClassicalProgram.from_bytes(data)


def test_program_reserved_kind():
    with pytest.raises(ValueError):
        ClassicalProgram(1, "11" + "0" * 24)


# phase search


def test_fit_phases_finds_identity_polynomial():
    phases, mse = fit_phases(lambda s: s, 1)
    assert mse <= 1e-10
    assert qsp_poly(phases, 0.3) == pytest.approx(0.3, abs=1e-5)


def test_fit_phases_rejects_long_sequences():
    with pytest.raises(ValueError):
        fit_phases(lambda s: s, 9)
