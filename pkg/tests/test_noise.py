import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eprsim.measure import CHSHSettings, chsh_S, joint_probabilities
from eprsim.noise import (
    T2_CAP,
    FieldNoiseSpec,
    NoiseConfig,
    apply_noise_channels,
    coherence_factor,
    dephase,
    effective_visibility,
    flip_outcome,
    flip_outcomes,
    load_calibration,
    predicted_S,
    readout_contrast,
    t2_estimate,
)
from eprsim.qcore import MixedState, Z, correlator, embed_matrix, expectation, pauli_string
from eprsim.source import SINGLET, PreparationConfig, prepare_singlet

probs = st.floats(0.0, 1.0)


def test_t2_estimates():
    assert t2_estimate(FieldNoiseSpec(5.0, 1.0)) == 0.2
    assert t2_estimate(FieldNoiseSpec(5.0, 0.1)) == 2.0
    assert t2_estimate(FieldNoiseSpec(5.0, 0.0)) == T2_CAP


def test_ideal_visibility():
    assert effective_visibility(NoiseConfig.ideal()) == 1.0
    assert predicted_S(NoiseConfig.ideal()) == pytest.approx(2 * math.sqrt(2), abs=1e-15)


def test_predicted_S_without_residual():
    cfg = NoiseConfig(0.99, 0.97, 0.2, 0.0, 1.0)
    assert predicted_S(cfg) == pytest.approx(0.98**2 * 0.97 * 2 * math.sqrt(2))
    assert predicted_S(cfg) == pytest.approx(2.635, abs=1e-3)


def _flip_channel_S(cfg: NoiseConfig, settings: CHSHSettings) -> float:
    """Oracle: joint outcome table from the mixed state, then every flip pattern enumerated."""
    rho = prepare_singlet(PreparationConfig(singlet_fidelity=cfg.singlet_fidelity)).rho
    rho = cfg.residual_visibility * rho + (1 - cfg.residual_visibility) * np.eye(4) / 4
    es = []
    for tl, tr in settings.pairs():
        p = joint_probabilities(rho, tl, tr)
        e = 0.0
        for (a, b), pab in zip(itertools.product((1, -1), repeat=2), p):
            for fa, fb in itertools.product((0, 1), repeat=2):
                w = (cfg.detection_fidelity if not fa else 1 - cfg.detection_fidelity) * (
                    cfg.detection_fidelity if not fb else 1 - cfg.detection_fidelity
                )
                e += pab * w * (a * (-1) ** fa) * (b * (-1) ** fb)
        es.append(e)
    return abs(es[0] - es[1]) + abs(es[2] + es[3])


@settings(max_examples=40)
@given(st.floats(0.5, 1.0), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_predicted_S_matches_flip_channel_oracle(fd, f, res):
    cfg = NoiseConfig(fd, f, 0.2, 0.0, res)
    assert predicted_S(cfg) == pytest.approx(_flip_channel_S(cfg, CHSHSettings()), abs=1e-12)


def test_readout_contrast_lemma():
    # two independent symmetric flips: E -> (1 - 2e)^2 E with e = 1 - f_d
    for fd in (0.5, 0.9, 0.99, 1.0):
        e = 1 - fd
        assert readout_contrast(fd) == pytest.approx((1 - 2 * e) ** 2)


def test_shipped_calibration():
    cfg = load_calibration("chsh_calibrated")
    assert predicted_S(cfg) == pytest.approx(2.45, abs=0.005)
    deg = load_calibration("fringes_degraded")
    assert effective_visibility(deg) == pytest.approx(0.80, abs=1e-4)


@given(probs, probs, probs, probs, probs, probs)
def test_predicted_S_is_monotone(fd1, fd2, f1, f2, r1, r2):
    lo = NoiseConfig(min(fd1, fd2), min(f1, f2), 0.2, 0.0, min(r1, r2))
    for hi in (
        NoiseConfig(max(fd1, fd2), lo.singlet_fidelity, 0.2, 0.0, lo.residual_visibility),
        NoiseConfig(lo.detection_fidelity, max(f1, f2), 0.2, 0.0, lo.residual_visibility),
        NoiseConfig(lo.detection_fidelity, lo.singlet_fidelity, 0.2, 0.0, max(r1, r2)),
    ):
        # (2 f_d - 1)^2 is only monotone for f_d >= 1/2
        if hi.detection_fidelity != lo.detection_fidelity and lo.detection_fidelity < 0.5:
            continue
        assert predicted_S(hi) >= predicted_S(lo) - 1e-15


def test_noise_config_round_trip_and_strictness():
    cfg = NoiseConfig(0.95, 0.9, 0.5, 0.01, 0.8)
    assert NoiseConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(KeyError):
        NoiseConfig.from_dict({"detection_fidelty": 0.9})
    with pytest.raises(ValueError):
        NoiseConfig(detection_fidelity=1.5)
    with pytest.raises(ValueError):
        NoiseConfig(t2_prime=0.0)
    spec = FieldNoiseSpec(3.0, 0.5)
    assert FieldNoiseSpec.from_dict(spec.to_dict()) == spec
    with pytest.raises(KeyError):
        FieldNoiseSpec.from_dict({"sensitivty": 1})


# dephasing -----------------------------------------------------------------

def test_zero_elapsed_is_identity():
    cfg = NoiseConfig()
    out = apply_noise_channels(SINGLET, cfg, 0.0)
    assert np.allclose(out.rho, SINGLET.density().rho, atol=1e-15)


def test_long_elapsed_kills_coherences_keeps_populations():
    cfg = NoiseConfig(t2_prime=0.2)
    out = apply_noise_channels(SINGLET, cfg, 1e3)
    assert np.allclose(out.rho, np.diag(np.diag(out.rho)), atol=1e-12)
    assert expectation(out, pauli_string("zz")) == pytest.approx(-1.0)


def _kraus_dephase(rho, n, qubit, factor):
    q = (1 - factor) / 2
    k0 = math.sqrt(1 - q) * np.eye(2**n)
    k1 = math.sqrt(q) * embed_matrix(Z, [qubit], n)
    return k0 @ rho @ k0.conj().T + k1 @ rho @ k1.conj().T


def test_equatorial_correlation_after_one_t2():
    cfg = NoiseConfig(t2_prime=0.2)
    out = apply_noise_channels(SINGLET, cfg, 0.2)
    e0 = expectation(SINGLET, correlator([math.pi / 2, math.pi / 2]))
    e = expectation(out, correlator([math.pi / 2, math.pi / 2]))
    # each qubit's coherence carries exp(-1); the two-qubit coherence carries both
    assert e == pytest.approx(e0 * math.exp(-2), abs=1e-12)
    oracle = SINGLET.density().rho
    for q in (0, 1):
        oracle = _kraus_dephase(oracle, 2, q, math.exp(-1))
    assert np.allclose(out.rho, oracle, atol=1e-14)


@settings(max_examples=50)
@given(st.floats(0, 2.0), st.floats(0, 2.0), st.integers(0, 2**32 - 1))
def test_dephasing_semigroup(t1, t2, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho = MixedState(2, a @ a.conj().T / np.trace(a @ a.conj().T).real)
    cfg = NoiseConfig(t2_prime=0.3)
    two_step = apply_noise_channels(apply_noise_channels(rho, cfg, t1), cfg, t2)
    one_step = apply_noise_channels(rho, cfg, t1 + t2)
    assert np.allclose(two_step.rho, one_step.rho, atol=1e-12)


def test_dephase_single_qubit_and_errors():
    out = dephase(SINGLET, 1, 0.0)
    assert isinstance(out, MixedState)
    with pytest.raises(ValueError):
        coherence_factor(-1.0, 0.2)


# detection flips -------------------------------------------------------------

def test_flip_outcome_rate():
    rng = np.random.default_rng(0)
    flips = sum(flip_outcome(1, 0.9, rng) == -1 for _ in range(20000))
    assert abs(flips / 20000 - 0.1) < 4 * math.sqrt(0.09 / 20000)
    assert flip_outcome(-1, 1.0, rng) == -1
    arr = flip_outcomes(np.ones(100000, dtype=int), 0.99, rng)
    assert abs(np.mean(arr == -1) - 0.01) < 4 * math.sqrt(0.0099 / 100000)


def test_monte_carlo_chsh_matches_prediction():
    cfg = load_calibration("chsh_calibrated")
    state = prepare_singlet(PreparationConfig(singlet_fidelity=cfg.singlet_fidelity))
    res = chsh_S(CHSHSettings(), state, shots=10**6, noise=cfg, seed=2024)
    assert abs(res.value - predicted_S(cfg)) < 4 * res.std_error
