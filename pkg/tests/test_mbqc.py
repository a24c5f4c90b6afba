import math

import numpy as np
import pytest

from uqcm.circuit import Circuit, simulate
from uqcm.core import CZ, H, I2, S, T, X, Z, PureState, entanglement_entropy, fidelity, phase_aligned_distance, random_state, random_unitary
from uqcm.mbqc import (
    Graph,
    ImpossibleBranch,
    MeasurementPattern,
    MeasurementStep,
    all_branches,
    branch_spread,
    cluster_state,
    compile_1q_gate,
    embedded_wire,
    euler_wire_angles,
    j_gate,
    run_pattern,
    two_way_sequence,
    two_way_step,
    wire_resource,
    wire_unitary,
    z_rot,
)

PLUS = np.ones(2) / math.sqrt(2)


def test_single_vertex_is_plus():
    assert np.allclose(cluster_state(Graph(1)).amplitudes, PLUS)


def test_single_edge():
    assert np.allclose(cluster_state(Graph.path(2)).amplitudes, CZ @ np.kron(PLUS, PLUS))


def test_path_of_three_entropy():
    psi = cluster_state(Graph.path(3))
    assert entanglement_entropy(psi, 1) == pytest.approx(1.0, abs=1e-10)
    assert entanglement_entropy(psi, 2) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("edges", [[(0, 0)], [(0, 3)]])
def test_graph_validation(edges):
    with pytest.raises(ValueError):
        Graph(3, frozenset(edges))


@pytest.mark.parametrize("seed", range(5))
def test_edge_order_independence(seed):
    rng = np.random.default_rng(seed)
    n = 6
    edges = [(a, b) for a in range(n) for b in range(a + 1, n) if rng.random() < 0.5]
    g = Graph(n, frozenset(edges))
    ref = cluster_state(g).amplitudes
    for _ in range(5):
        order = [edges[i] for i in rng.permutation(len(edges))]
        assert np.abs(cluster_state(g, order).amplitudes - ref).max() <= 1e-12


def test_disconnected_plus_measured_in_x():
    rng = np.random.default_rng(0)
    rest = random_state(2, rng)
    resource = PureState(np.kron(rest.amplitudes, PLUS), (2, 2, 2))
    p = MeasurementPattern(3, (MeasurementStep(2, "XY", 0.0),), (), (0, 1))
    for seed in range(5):
        run = run_pattern(resource, p, rng=seed)
        assert run.outcomes == (0,)
        assert np.allclose(run.final_state.amplitudes, rest.amplitudes)
    with pytest.raises(ImpossibleBranch):
        run_pattern(resource, p, outcomes=[1])


def two_site_oracle(psi, alpha, s):
    """Project site 0 of CZ(psi (x) |+>) onto the XY-basis vector for outcome s."""
    joint = CZ @ np.kron(psi, PLUS)
    ket = np.array([1, (-1) ** s * np.exp(-1j * alpha)]) / math.sqrt(2)
    proj = np.kron(np.outer(ket, ket.conj()), I2) @ joint
    out = proj.reshape(2, 2)[np.argmax(np.abs(ket))] / ket[np.argmax(np.abs(ket))].conj()
    return out / np.linalg.norm(out)


@pytest.mark.parametrize("alpha", [0.0, 0.4, math.pi / 4, -2.1])
def test_two_site_gate(alpha):
    rng = np.random.default_rng(1)
    psi = random_state(1, rng).amplitudes
    resource = PureState(CZ @ np.kron(psi, PLUS), (2, 2))
    p = MeasurementPattern(2, (MeasurementStep(0, "XY", alpha),), (0,), (1,), ((0,),), ((),))
    run = run_pattern(resource, p, outcomes=[0])
    expected = H @ z_rot(alpha) @ psi
    assert fidelity(run.final_state, PureState.from_vector(expected)) == pytest.approx(1, abs=1e-12)
    assert fidelity(run.final_state, PureState.from_vector(two_site_oracle(psi, alpha, 0))) == pytest.approx(1)
    # outcome 1 carries an X byproduct that the record undoes
    run1 = run_pattern(resource, p, outcomes=[1])
    assert fidelity(run1.final_state, PureState.from_vector(two_site_oracle(psi, alpha, 1))) == pytest.approx(1)
    assert str(run1.byproduct) == "+X"
    assert fidelity(run1.corrected(), PureState.from_vector(expected)) == pytest.approx(1, abs=1e-12)


def test_random_branch_corrects_to_zero_branch():
    rng = np.random.default_rng(2)
    psi = random_state(1, rng)
    p = compile_1q_gate(random_unitary(2, rng))
    res = wire_resource(psi)
    zero = run_pattern(res, p, outcomes=[0, 0, 0, 0]).corrected()
    for seed in range(10):
        assert fidelity(run_pattern(res, p, rng=seed).corrected(), zero) >= 1 - 1e-9


def test_z_measurement_deletes_site():
    p = MeasurementPattern(3, (MeasurementStep(1, "Z"),), (), (0, 2))
    run = run_pattern(cluster_state(Graph.path(3)), p, outcomes=[0])
    assert np.allclose(run.final_state.amplitudes, np.kron(PLUS, PLUS))


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(steps=(MeasurementStep(0), MeasurementStep(0)), outputs=(1,)),
        dict(steps=(MeasurementStep(0, deps=(1,)), MeasurementStep(1)), outputs=()),
        dict(steps=(MeasurementStep(0),), outputs=(0, 1)),
        dict(steps=(MeasurementStep(0),), outputs=()),
    ],
)
def test_pattern_validation(kwargs):
    with pytest.raises(ValueError):
        MeasurementPattern(2, inputs=(0,), **kwargs)


def test_euler_angles_reproduce_gate():
    rng = np.random.default_rng(3)
    for u in [I2, H, T, S, X, Z @ H] + [random_unitary(2, rng) for _ in range(20)]:
        assert phase_aligned_distance(wire_unitary(euler_wire_angles(u)), u) < 1e-9


@pytest.mark.parametrize("name, u", [("I", I2), ("H", H), ("T", T), ("X", X), ("ZH", Z @ H)])
def test_compiled_gate_all_branches(name, u):
    rng = np.random.default_rng(4)
    psi = random_state(1, rng)
    runs = all_branches(wire_resource(psi), compile_1q_gate(u))
    assert len(runs) == 16
    target = PureState.from_vector(u @ psi.amplitudes)
    corrected = [r.corrected() for r in runs]
    for c in corrected:
        assert fidelity(c, target) >= 1 - 1e-9
    assert branch_spread(corrected) <= 1e-9
    assert sum(r.probability for r in runs) == pytest.approx(1)


@pytest.mark.parametrize("seed", range(5))
def test_random_gates_are_deterministic(seed):
    rng = np.random.default_rng(10 + seed)
    u = random_unitary(2, rng)
    psi = random_state(1, rng)
    corrected = [r.corrected() for r in all_branches(wire_resource(psi), compile_1q_gate(u))]
    assert branch_spread(corrected) <= 1e-9
    assert fidelity(corrected[0], PureState.from_vector(u @ psi.amplitudes)) >= 1 - 1e-9


def test_random_single_qubit_circuits_match_simulation():
    rng = np.random.default_rng(5)
    for _ in range(20):
        spec = [(str(rng.choice(["H", "T", "S", "X", "Z"])), [0]) for _ in range(int(rng.integers(1, 8)))]
        c = Circuit.from_spec(1, spec)
        psi = random_state(1, rng)
        state = psi
        for g in c.gates:
            state = run_pattern(wire_resource(state), compile_1q_gate(g.matrix), rng=rng).corrected()
        assert fidelity(state, simulate(c, psi)) >= 1 - 1e-9


def test_embedded_wire_on_register():
    rng = np.random.default_rng(6)
    reg = random_state(2, rng)
    u = random_unitary(2, rng)
    resource, p = embedded_wire(reg, 1, u)
    expected = PureState.from_vector(np.kron(I2, u) @ reg.amplitudes)
    for seed in range(8):
        assert fidelity(run_pattern(resource, p, rng=seed).corrected(), expected) >= 1 - 1e-9


def test_two_way_step_hadamard():
    rng = np.random.default_rng(7)
    psi = random_state(1, rng).amplitudes
    step = two_way_step(PureState(np.kron(psi, PLUS), (2, 2)), 0.0, outcome=0)
    assert step.active == 1 and step.outcome == 0
    # data moved to qubit 1 and qubit 0 is a fresh |+>
    expected = np.kron(PLUS, H @ psi)
    assert fidelity(step.state, PureState.from_vector(expected)) == pytest.approx(1, abs=1e-12)


def test_two_way_step_back_and_forth_keeps_slots_straight():
    rng = np.random.default_rng(8)
    psi = random_state(1, rng).amplitudes
    first = two_way_step(PureState(np.kron(psi, PLUS), (2, 2)), 0.3, 0, outcome=0)
    second = two_way_step(first.state, 0.0, first.active, outcome=0)
    assert second.active == 0
    expected = np.kron(H @ j_gate(0.3) @ psi, PLUS)
    assert fidelity(second.state, PureState.from_vector(expected)) == pytest.approx(1, abs=1e-12)


@pytest.mark.parametrize("outcomes", [(0, 0), (0, 1), (1, 0), (1, 1)])
def test_two_way_hh_is_identity(outcomes):
    psi = random_state(1, np.random.default_rng(9))
    out, seen = two_way_sequence(psi, [0.0, 0.0], outcomes)
    assert seen == outcomes
    assert fidelity(out, psi) == pytest.approx(1, abs=1e-12)


@pytest.mark.parametrize("bits", range(16))
def test_two_way_t_gate_every_branch(bits):
    psi = random_state(1, np.random.default_rng(11))
    outcomes = tuple((bits >> (3 - k)) & 1 for k in range(4))
    out, _ = two_way_sequence(psi, euler_wire_angles(T), outcomes)
    assert fidelity(out, PureState.from_vector(T @ psi.amplitudes)) >= 1 - 1e-9


@pytest.mark.parametrize("seed", range(5))
def test_two_way_random_su2(seed):
    rng = np.random.default_rng(30 + seed)
    u, psi = random_unitary(2, rng), random_state(1, rng)
    out, _ = two_way_sequence(psi, euler_wire_angles(u), rng=rng)
    assert fidelity(out, PureState.from_vector(u @ psi.amplitudes)) >= 1 - 1e-9
