import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eprsim.measure import CHSHSettings, chsh_S, conditional_std, fringe_scan
from eprsim.qcore import StateError, collapse, correlator, expectation, ket, partial_trace, pauli_string
from eprsim.source import (
    CONSTANTS,
    GHZ_HYPER,
    PATH_SINGLET,
    SINGLET,
    DissociationSpec,
    GaussianPairState,
    PreparationConfig,
    catalog_json,
    dissociation_catalog,
    prepare_cv_state,
    prepare_ghz_hyper,
    prepare_path_state,
    prepare_singlet,
)


def test_singlet_amplitudes():
    expected = (ket("01").amplitudes - ket("10").amplitudes) / math.sqrt(2)
    assert np.allclose(SINGLET.amplitudes, expected)
    assert np.allclose(prepare_singlet(PreparationConfig(singlet_fidelity=1.0)).rho, SINGLET.density().rho)


def test_white_noise_singlet_has_no_chsh_violation():
    rho = prepare_singlet(PreparationConfig(singlet_fidelity=0.0))
    assert np.allclose(rho.rho, np.eye(4) / 4)
    for seed in range(5):
        a = np.random.default_rng(seed).uniform(-math.pi, math.pi, 4)
        assert chsh_S(CHSHSettings(*a), rho).value == pytest.approx(0.0, abs=1e-15)


def test_werner_singlet_equal_angle_correlation():
    rho = prepare_singlet(PreparationConfig(singlet_fidelity=0.97))
    for theta in (0.0, 0.7, 2.0):
        # oracle: trace against the explicitly mixed density matrix
        oracle = 0.97 * -1.0 + 0.03 * 0.0
        assert expectation(rho, correlator([theta, theta])) == pytest.approx(oracle, abs=1e-12)


def test_path_state():
    assert np.allclose(PATH_SINGLET.amplitudes, [0, 1 / math.sqrt(2), -1 / math.sqrt(2), 0])
    reduced = partial_trace(prepare_path_state(PreparationConfig(singlet_fidelity=1.0)), [0])
    assert np.allclose(reduced.rho, np.eye(2) / 2)


def test_path_state_fidelity_sets_fringe_visibility():
    grid = np.linspace(0, 2 * math.pi, 9)
    scan = fringe_scan(grid, grid, prepare_path_state(PreparationConfig(singlet_fidelity=0.9)))
    assert scan.visibility == pytest.approx(0.9, abs=1e-12)


def test_ghz_correlators():
    assert expectation(GHZ_HYPER, pauli_string("zzzz")) == pytest.approx(1.0, abs=1e-15)
    assert expectation(GHZ_HYPER, pauli_string("xxxx")) == pytest.approx(-1.0, abs=1e-15)
    assert np.allclose(prepare_ghz_hyper(PreparationConfig(singlet_fidelity=1.0)).rho, GHZ_HYPER.density().rho)


def test_ghz_spin_measurement_leaves_product_state():
    post = collapse(GHZ_HYPER, 0, 0.0, +1)
    rest = partial_trace(post, [1, 2, 3])
    assert rest.purity() == pytest.approx(1.0)
    # each single-qubit marginal is pure, so the three qubits factorize
    for q in (1, 2, 3):
        assert partial_trace(post, [q]).purity() == pytest.approx(1.0)
    assert np.allclose(rest.rho, ket("011").density().rho)


@pytest.mark.parametrize("bad", [-0.1, 1.1])
def test_preparation_config_validation(bad):
    with pytest.raises(ValueError):
        PreparationConfig(singlet_fidelity=bad)


# dissociation catalog ------------------------------------------------------

def test_catalog_entries():
    cat = {row["method"]: row for row in dissociation_catalog()}
    assert cat["rf_spin_flip"]["timescale"] == "sub-ms"
    assert cat["field_sweep"]["timescale"] == "0.5–10 ms"
    assert cat["photodissociation"]["suitable"] is False
    assert cat["photodissociation"]["reason"] == "photon recoil; spontaneous emission"


def test_catalog_round_trips_exactly():
    text = catalog_json()
    assert json.loads(text) == dissociation_catalog()
    assert catalog_json() == text
    assert json.dumps(json.loads(text), indent=2, ensure_ascii=False) == text


def test_dissociation_spec_validation():
    with pytest.raises(ValueError):
        DissociationSpec(method="laser")
    with pytest.raises(ValueError):
        DissociationSpec(method="field_sweep", timescale=0.1, validate=True)
    DissociationSpec(method="field_sweep", timescale=2e-3, validate=True)
    with pytest.raises(ValueError):
        DissociationSpec(momentum_spread=0.0)


# Gaussian pair state -------------------------------------------------------

def test_cv_momentum_correlation_recovered():
    spec = DissociationSpec(mean_momentum=10.0, momentum_spread=0.02)
    cv = prepare_cv_state(spec, 1e-3)
    dp = conditional_std(cv.cov[np.ix_([1, 3], [1, 3])])
    assert dp == pytest.approx(0.02 * CONSTANTS.k_rec, rel=1e-3)
    assert cv.mean[1] == pytest.approx(10 * CONSTANTS.k_rec)
    assert cv.mean[3] == pytest.approx(-10 * CONSTANTS.k_rec)


def test_uncorrelated_gaussian_conditional_equals_marginal():
    cov = np.diag([4.0, 0.25, 9.0, 1.0])
    g = GaussianPairState(np.zeros(4), cov)
    assert conditional_std(cov[np.ix_([0, 2], [0, 2])]) == pytest.approx(3.0)
    assert conditional_std(cov[np.ix_([1, 3], [1, 3])]) == pytest.approx(1.0)
    assert g.is_physical()


def test_gaussian_state_rejects_unphysical_input():
    with pytest.raises(StateError):
        GaussianPairState(np.zeros(4), np.diag([1.0, 1.0, 1.0, -1.0]))
    with pytest.raises(StateError):
        GaussianPairState(np.zeros(4), np.diag([0.1, 0.1, 1.0, 1.0]))
    with pytest.raises(StateError):
        prepare_cv_state(DissociationSpec(), 0.0)


@settings(max_examples=200)
@given(
    st.floats(1e-4, 10.0),
    st.floats(1e-3, 1.0),
    st.floats(-20.0, 20.0),
    st.one_of(st.none(), st.floats(1e-3, 1e3)),
)
def test_prepared_cv_state_is_always_physical(sigma0, spread, p0, marginal):
    spec = DissociationSpec(mean_momentum=p0, momentum_spread=spread)
    cv = prepare_cv_state(spec, sigma0, marginal)
    assert cv.is_physical()
    # the relative and centre-of-mass spreads are the requested ones
    rel = cv.cov[0, 0] + cv.cov[2, 2] - 2 * cv.cov[0, 2]
    com = cv.cov[1, 1] + cv.cov[3, 3] + 2 * cv.cov[1, 3]
    # sums of large entries: allow rounding at the scale of the biggest one
    tol = 1e-14 * np.abs(cv.cov).max()
    assert rel == pytest.approx(2 * sigma0**2, rel=1e-6, abs=tol)
    assert com == pytest.approx((spread * CONSTANTS.k_rec) ** 2, rel=1e-6, abs=tol)


def test_constants():
    assert CONSTANTS.k_rec == pytest.approx(2 * math.pi / 0.671)
    assert CONSTANTS.hbar_over_m == pytest.approx(10558.0, rel=1e-4)
