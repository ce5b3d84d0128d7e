import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from eprsim.qcore import (
    PAULI,
    MixedState,
    PureState,
    StateError,
    Unitary,
    X,
    apply,
    collapse,
    correlator,
    embed,
    embed_matrix,
    expectation,
    ket,
    measure_qubit,
    outcome_probability,
    partial_trace,
    pauli_string,
    phase_distance,
    rotation,
    sigma_theta,
    tensor,
    white_noise_mix,
)
from eprsim.source import SINGLET

angles = st.floats(-4 * math.pi, 4 * math.pi, allow_nan=False)
axes = st.sampled_from("xyz")


def random_pure(n, rng):
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return PureState(n, v / np.linalg.norm(v))


def random_mixed(n, rng, rank=3):
    a = rng.normal(size=(2**n, rank)) + 1j * rng.normal(size=(2**n, rank))
    rho = a @ a.conj().T
    return MixedState(n, rho / np.trace(rho).real)


# rotations ---------------------------------------------------------------

def test_rotation_examples():
    assert np.allclose(rotation("z", 0).matrix, np.eye(2), atol=0)
    assert np.allclose(rotation("x", math.pi).matrix, [[0, -1j], [-1j, 0]], atol=1e-15)
    assert np.allclose(rotation("y", math.pi / 2).matrix, np.array([[1, -1], [1, 1]]) / math.sqrt(2), atol=1e-15)


@given(axes, angles)
def test_rotation_matches_matrix_exponential(axis, theta):
    oracle = expm(-0.5j * theta * PAULI[axis])
    assert np.allclose(rotation(axis, theta).matrix, oracle, atol=1e-12)


@given(axes, angles, angles)
def test_rotations_compose_about_one_axis(axis, a, b):
    lhs = rotation(axis, a) @ rotation(axis, b)
    assert np.allclose(lhs.matrix, rotation(axis, a + b).matrix, atol=1e-12)


def test_rotation_rejects_bad_input():
    with pytest.raises(StateError):
        rotation("w", 1.0)
    with pytest.raises(StateError):
        rotation("x", math.inf)


# embedding and application ---------------------------------------------

def test_embed_identity_and_bit_flip():
    assert np.array_equal(embed(Unitary.identity(2), [0], 2).matrix, np.eye(4))
    out = apply(embed(Unitary(2, X), [1], 2), ket("00"))
    assert np.allclose(out.amplitudes, ket("01").amplitudes)


def test_embed_ry_on_msb():
    out = apply(embed(rotation("y", math.pi / 2), [0], 2), ket("00"))
    expected = (ket("00").amplitudes + ket("10").amplitudes) / math.sqrt(2)
    assert np.allclose(out.amplitudes, expected, atol=1e-15)


@given(st.permutations([0, 1, 2]))
def test_embed_matrix_matches_kron_after_permutation(order):
    rng = np.random.default_rng(sum(i * 10**k for k, i in enumerate(order)))
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    full = embed_matrix(a, order[:2], 3)
    # oracle: kron in natural order then conjugate with the qubit permutation
    oracle = np.kron(a, np.eye(2)).reshape((2,) * 6)
    rest = [q for q in range(3) if q not in order[:2]]
    src = list(order[:2]) + rest
    perm = [src.index(q) for q in range(3)]
    oracle = oracle.transpose(perm + [p + 3 for p in perm]).reshape(8, 8)
    assert np.allclose(full, oracle)


def test_apply_examples():
    up = ket("0")
    assert np.allclose(apply(Unitary.identity(2), up).amplitudes, up.amplitudes)
    assert np.allclose(apply(rotation("x", math.pi), up).amplitudes, [0, -1j])
    twice = apply(rotation("x", math.pi / 2), apply(rotation("x", math.pi / 2), up))
    assert np.allclose(twice.amplitudes, apply(rotation("x", math.pi), up).amplitudes)


def test_apply_dimension_mismatch():
    with pytest.raises(StateError):
        apply(rotation("x", 1.0), ket("00"))


@settings(max_examples=50)
@given(st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_unitaries_preserve_state_invariants(n, seed):
    rng = np.random.default_rng(seed)
    q = int(rng.integers(n))
    u = embed(rotation("xyz"[int(rng.integers(3))], rng.uniform(-7, 7)), [q], n)
    out = apply(u, random_mixed(n, rng))
    assert abs(np.trace(out.rho) - 1) < 1e-12
    assert np.linalg.eigvalsh(out.rho).min() > -1e-12


# measurement ------------------------------------------------------------

def test_outcome_probabilities():
    assert outcome_probability(ket("0"), 0, 0.0, 1) == pytest.approx(1.0, abs=1e-15)
    assert outcome_probability(ket("0"), 0, math.pi / 2, 1) == pytest.approx(0.5, abs=1e-15)


def test_singlet_sequential_measurement_is_anticorrelated():
    rng = np.random.default_rng(4)
    for theta in np.linspace(0, 2 * math.pi, 25):
        rec_l, after = measure_qubit(SINGLET, 0, theta, rng)
        rec_r, _ = measure_qubit(after, 1, theta, rng)
        assert rec_l.outcome == -rec_r.outcome
        assert rec_l.basis_angle == theta


def test_measurement_frequency_matches_born_rule():
    rng = np.random.default_rng(9)
    s = apply(rotation("y", 1.1), ket("0"))
    p = outcome_probability(s, 0, 0.3)
    hits = sum(measure_qubit(s, 0, 0.3, rng)[0].outcome == 1 for _ in range(20000))
    assert abs(hits / 20000 - p) < 4 * math.sqrt(p * (1 - p) / 20000)


def test_collapse_zero_probability_raises():
    with pytest.raises(StateError):
        collapse(ket("0"), 0, 0.0, -1)


def test_projector_readout_convention():
    # sigma_theta eigenvector with eigenvalue +1 is R_y(theta)|0>
    for theta in np.linspace(-3, 3, 7):
        v = rotation("y", theta).matrix[:, 0]
        assert np.allclose(sigma_theta(theta) @ v, v)


# expectations ------------------------------------------------------------

def test_singlet_correlator_examples():
    assert expectation(SINGLET, correlator([0.4, 0.4])) == pytest.approx(-1.0)
    assert expectation(SINGLET, correlator([0.4, 0.4 + math.pi / 2])) == pytest.approx(0.0, abs=1e-15)


@given(angles, angles)
def test_singlet_correlation_law(a, b):
    assert expectation(SINGLET, correlator([a, b])) == pytest.approx(-math.cos(a - b), abs=1e-12)


def test_expectation_rejects_non_hermitian():
    with pytest.raises(StateError):
        expectation(ket("0"), np.array([[0, 1], [0, 0]]))


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1))
def test_expectation_of_hermitian_is_real_and_bounded(seed):
    rng = np.random.default_rng(seed)
    s = random_mixed(2, rng)
    label = "".join(rng.choice(list("ixyz"), 2))
    assert -1 - 1e-12 <= expectation(s, pauli_string(label)) <= 1 + 1e-12


# composition -------------------------------------------------------------

def test_tensor_and_partial_trace():
    assert np.allclose(tensor(ket("0"), ket("1")).amplitudes, ket("01").amplitudes)
    assert np.allclose(partial_trace(SINGLET, [0]).rho, np.eye(2) / 2)
    rng = np.random.default_rng(1)
    a, b = random_mixed(1, rng, 2), random_mixed(2, rng)
    assert np.allclose(partial_trace(tensor(a, b), [0]).rho, a.rho)
    assert np.allclose(partial_trace(tensor(a, b), [1, 2]).rho, b.rho)


def test_partial_trace_rejects_bad_keep():
    with pytest.raises(StateError):
        partial_trace(SINGLET, [])
    with pytest.raises(StateError):
        partial_trace(SINGLET, [2])


# validation --------------------------------------------------------------

def test_state_validation():
    with pytest.raises(StateError):
        PureState(1, [1, 1])
    with pytest.raises(StateError):
        PureState(5, np.eye(32)[0])
    with pytest.raises(StateError):
        MixedState(1, [[0.5, 0.1], [0.2, 0.5]])
    with pytest.raises(StateError):
        MixedState(1, [[1.2, 0], [0, -0.2]])
    with pytest.raises(StateError):
        Unitary(2, [[1, 1], [0, 1]])


def test_arrays_are_read_only():
    s = ket("0")
    with pytest.raises(ValueError):
        s.amplitudes[0] = 0
    with pytest.raises(ValueError):
        s.density().rho[0, 0] = 0


@given(axes, angles, st.floats(-math.pi, math.pi))
def test_phase_distance_ignores_global_phase(axis, theta, phi):
    u = rotation(axis, theta)
    assert phase_distance(u, np.exp(1j * phi) * u.matrix) < 1e-12
    assert phase_distance(u, u) == 0.0


def test_phase_distance_of_orthogonal_unitaries():
    # tr(X^dag Z) = 0 so no phase helps: distance sqrt(2 + 2) = 2
    assert phase_distance(np.array(X), PAULI["z"]) == pytest.approx(2.0)


def test_white_noise_mix():
    mixed = white_noise_mix(SINGLET, 0.0)
    assert np.allclose(mixed.rho, np.eye(4) / 4)
    with pytest.raises(StateError):
        white_noise_mix(SINGLET, 1.5)
    assert white_noise_mix(SINGLET, 1.0).purity() == pytest.approx(1.0)
