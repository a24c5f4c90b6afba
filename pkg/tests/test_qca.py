import math

import numpy as np
import pytest
from scipy.linalg import expm

from uqcm.circuit import circuit_unitary, simulate
from uqcm.core import X, Z, PureState, embed, fidelity, phase_aligned_distance, random_state
from uqcm.qca import (
    LocalHamiltonian,
    controlled_evolve,
    cycle_graph,
    exact_evolve,
    exact_unitary,
    greedy_layers,
    layer_to_mpu,
    layer_unitary,
    path_graph,
    quantum_walk_evolve,
    random_local_hamiltonian,
    transverse_field_ising,
    trotter_error,
    trotter_plan,
    trotterize,
)
from uqcm.tensor import mpu_to_dense

ZI = LocalHamiltonian(((Z, (0,)), (Z, (1,))), 2)


def test_exact_evolve_t_zero():
    psi = random_state(3, np.random.default_rng(0))
    out = exact_evolve(transverse_field_ising(3), 0.0, psi)
    assert np.allclose(out.amplitudes, psi.amplitudes)


def test_exact_evolve_z_on_plus():
    h = LocalHamiltonian(((Z, (0,)),), 1)
    out = exact_evolve(h, math.pi / 2, PureState.plus(1))
    oracle = expm(-1j * math.pi / 2 * Z) @ np.array([1, 1]) / math.sqrt(2)
    assert np.allclose(out.amplitudes, oracle)
    assert fidelity(out, PureState.from_vector(np.array([1, -1]))) == pytest.approx(1)


def test_negated_hamiltonian_inverts():
    rng = np.random.default_rng(1)
    h = random_local_hamiltonian(3, rng)
    psi = random_state(3, rng)
    back = exact_evolve(h.scaled(-1), 0.8, exact_evolve(h, 0.8, psi))
    assert np.allclose(back.amplitudes, psi.amplitudes, atol=1e-12)


def test_non_hermitian_term_rejected():
    with pytest.raises(ValueError):
        LocalHamiltonian(((np.array([[0, 1], [0, 0]]), (0,)),), 1)


def test_locality_enforced():
    with pytest.raises(ValueError):
        LocalHamiltonian(((np.eye(8), (0, 1, 2)),), 3, 2)


@pytest.mark.parametrize("r", [1, 2, 7])
@pytest.mark.parametrize("order", [1, 2])
def test_commuting_terms_are_exact(r, order):
    u = circuit_unitary(trotterize(ZI, 1.3, r, order)).matrix
    assert np.abs(u - exact_unitary(ZI, 1.3)).max() < 1e-10


def test_first_order_ratio():
    h = transverse_field_ising(3)
    ratio = trotter_error(h, 1.0, 200) / trotter_error(h, 1.0, 100)
    assert 0.4 <= ratio <= 0.6


def test_second_order_ratio():
    h = transverse_field_ising(3)
    ratio = trotter_error(h, 1.0, 200, 2) / trotter_error(h, 1.0, 100, 2)
    assert 0.2 <= ratio <= 0.3


@pytest.mark.parametrize("seed", range(10))
def test_first_order_convergence_slope(seed):
    h = random_local_hamiltonian(3, np.random.default_rng(seed))
    rs = np.array([8, 16, 32, 64, 128])
    errs = np.array([trotter_error(h, 1.0, int(r)) for r in rs])
    assert np.all(np.diff(errs) < 0)
    slope = np.polyfit(np.log(rs), np.log(errs), 1)[0]
    assert -1.2 <= slope <= -0.8


def test_trotter_circuit_matches_state_evolution():
    h = transverse_field_ising(3)
    psi = random_state(3, np.random.default_rng(4))
    out = simulate(trotterize(h, 0.5, 400, 2), psi)
    assert fidelity(out, exact_evolve(h, 0.5, psi)) > 1 - 1e-8


@pytest.mark.parametrize("bad", [dict(r=0), dict(order=3)])
def test_plan_validation(bad):
    kw = dict(r=1, order=1) | bad
    with pytest.raises(ValueError):
        trotter_plan(ZI, 1.0, **kw)


@pytest.mark.parametrize("seed", range(5))
def test_layers_commute_and_cover(seed):
    rng = np.random.default_rng(seed)
    h = random_local_hamiltonian(4, rng) + transverse_field_ising(4, periodic=True)
    layers = greedy_layers(h)
    assert sorted(j for layer in layers for j in layer) == list(range(len(h.terms)))
    dims = (2,) * h.n
    for layer in layers:
        mats = [embed(h.terms[j][0], h.terms[j][1], dims) for j in layer]
        for a in mats:
            for b in mats:
                assert np.linalg.norm(a @ b - b @ a, 2) <= 1e-10


def test_single_site_layer_has_unit_bond():
    h = LocalHamiltonian(tuple((X, (i,)) for i in range(3)), 3)
    plan = trotter_plan(h, 0.4, 1)
    op = layer_to_mpu(plan, 0)
    assert set(op.bond_dims) == {1}
    assert np.allclose(mpu_to_dense(op), layer_unitary(plan, 0), atol=1e-10)


@pytest.mark.parametrize("seed", range(5))
def test_brickwork_layers_match_dense(seed):
    h = random_local_hamiltonian(4, np.random.default_rng(seed))
    plan = trotter_plan(h, 0.7, 2)
    for k in range(len(plan.layers)):
        op = layer_to_mpu(plan, k)
        assert max(op.bond_dims) <= 4
        assert np.abs(mpu_to_dense(op) - layer_unitary(plan, k)).max() <= 1e-9


def test_zero_time_layer_is_identity():
    plan = trotter_plan(transverse_field_ising(3), 0.0, 1)
    for k in range(len(plan.layers)):
        assert np.allclose(mpu_to_dense(layer_to_mpu(plan, k)), np.eye(8), atol=1e-12)


def test_layer_mpu_rejects_long_range():
    h = LocalHamiltonian(((np.kron(Z, Z), (0, 2)),), 3)
    with pytest.raises(ValueError):
        layer_to_mpu(trotter_plan(h, 1.0, 1), 0)


def test_walk_at_zero():
    amps = quantum_walk_evolve(cycle_graph(5), 2, 0.0)
    assert np.allclose(amps, np.eye(5)[2])


@pytest.mark.parametrize("t", [0.3, 1.0, 2.5])
def test_two_vertex_walk(t):
    amps = quantum_walk_evolve(path_graph(2), 0, t)
    assert amps[1] == pytest.approx(-1j * math.sin(t))
    assert amps[0] == pytest.approx(math.cos(t))


def test_cycle_walk_is_translation_symmetric():
    n, t = 6, 1.7
    base = np.abs(quantum_walk_evolve(cycle_graph(n), 0, t)) ** 2
    for s in range(1, n):
        probs = np.abs(quantum_walk_evolve(cycle_graph(n), s, t)) ** 2
        assert np.allclose(np.roll(base, s), probs, atol=1e-12)


@pytest.mark.parametrize("t", np.round(np.arange(0.1, 10.01, 0.1), 1))
def test_walk_conserves_probability(t):
    amps = quantum_walk_evolve(path_graph(5), 1, t)
    assert np.sum(np.abs(amps) ** 2) == pytest.approx(1, abs=1e-10)


def test_walk_rejects_asymmetric():
    with pytest.raises(ValueError):
        quantum_walk_evolve(np.array([[0, 1], [0, 0]]), 0, 1.0)


def _ising_terms(n):
    h = transverse_field_ising(n)
    return h, [s for _, s in h.terms], [m for m, _ in h.terms]


def test_controlled_static_reduces_to_trotter():
    h, supports, mats = _ising_terms(3)
    u = controlled_evolve(lambda s, j: s * mats[j], [lambda x: 1.0] * len(mats), 1.0, 10, supports, 3)
    assert np.allclose(u.matrix, circuit_unitary(trotterize(h, 1.0, 10)).matrix, atol=1e-12)


def test_controlled_step_doubling_converges():
    _, supports, mats = _ising_terms(3)
    # sites switch on one after another
    scheds = [lambda x, c=c: min(1.0, max(0.0, 2 * x - c)) for c in np.linspace(0, 1, len(mats))]
    outs = [controlled_evolve(lambda s, j: s * mats[j], scheds, 2.0, k, supports, 3).matrix for k in (8, 16, 32, 64)]
    diffs = [phase_aligned_distance(a, b) for a, b in zip(outs, outs[1:])]
    assert all(b < a for a, b in zip(diffs, diffs[1:]))


def test_controlled_zero_time():
    _, supports, mats = _ising_terms(2)
    u = controlled_evolve(lambda s, j: mats[j], [lambda x: x] * len(mats), 0.0, 5, supports, 2)
    assert np.allclose(u.matrix, np.eye(4))


def test_controlled_rejects_non_monotone():
    _, supports, mats = _ising_terms(2)
    with pytest.raises(ValueError):
        controlled_evolve(lambda s, j: mats[j], [lambda x: 1 - x] * len(mats), 1.0, 5, supports, 2)
