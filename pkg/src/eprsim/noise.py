"""Scalar noise model: detection flips, Werner mixing, dephasing, misalignment."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields
from importlib import resources

import numpy as np

from .qcore import MixedState, State, Z, embed_matrix

T2_CAP = 1e4  # seconds, returned when the field noise vanishes


@dataclass(frozen=True)
class NoiseConfig:
    detection_fidelity: float = 0.99
    singlet_fidelity: float = 0.97
    t2_prime: float = 0.2
    basis_misalignment_sigma: float = 0.0
    residual_visibility: float = 1.0

    def __post_init__(self):
        for name in ("detection_fidelity", "singlet_fidelity", "residual_visibility"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and 0.0 <= v <= 1.0):
                raise ValueError(f"{name} must lie in [0, 1], got {v!r}")
        if not (isinstance(self.t2_prime, (int, float)) and self.t2_prime > 0):
            raise ValueError(f"t2_prime must be positive, got {self.t2_prime!r}")
        s = self.basis_misalignment_sigma
        if not (isinstance(s, (int, float)) and math.isfinite(s) and s >= 0):
            raise ValueError(f"basis_misalignment_sigma must be >= 0, got {s!r}")

    @classmethod
    def ideal(cls) -> "NoiseConfig":
        return cls(1.0, 1.0, T2_CAP, 0.0, 1.0)

    @classmethod
    def from_dict(cls, d: dict) -> "NoiseConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise KeyError(f"unknown noise keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class FieldNoiseSpec:
    sensitivity: float = 5.0  # Hz/mG
    field_stability: float = 1.0  # mG

    def __post_init__(self):
        if self.sensitivity < 0 or self.field_stability < 0:
            raise ValueError("sensitivity and field_stability must be non-negative")

    @classmethod
    def from_dict(cls, d: dict) -> "FieldNoiseSpec":
        unknown = set(d) - {"sensitivity", "field_stability"}
        if unknown:
            raise KeyError(f"unknown field-noise keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)


def t2_estimate(spec: FieldNoiseSpec) -> float:
    """Coherence time as the inverse rms frequency excursion."""
    rate = spec.sensitivity * spec.field_stability
    if rate == 0:
        return T2_CAP
    return min(1.0 / rate, T2_CAP)


def readout_contrast(detection_fidelity: float) -> float:
    """Correlator scaling ``(2 f_d - 1)^2`` from independent flips on both atoms."""
    return (2 * detection_fidelity - 1) ** 2


def misalignment_factor(sigma: float) -> float:
    """Mean of ``cos(dL - dR)`` for independent N(0, sigma^2) angle errors."""
    return math.exp(-sigma**2)


def effective_visibility(cfg: NoiseConfig) -> float:
    return (
        readout_contrast(cfg.detection_fidelity)
        * cfg.singlet_fidelity
        * cfg.residual_visibility
        * misalignment_factor(cfg.basis_misalignment_sigma)
    )


def predicted_S(cfg: NoiseConfig) -> float:
    return 2 * math.sqrt(2) * effective_visibility(cfg)


def coherence_factor(elapsed: float, t2_prime: float) -> float:
    if elapsed < 0:
        raise ValueError("elapsed time must be non-negative")
    return math.exp(-elapsed / t2_prime)


def dephase(s: State, qubit: int, factor: float) -> MixedState:
    """Phase damping that multiplies the qubit's coherences by ``factor``.

    Implemented as the phase-flip mixture ``(1-q) rho + q Z rho Z`` with
    ``1 - 2q = factor``.
    """
    q = (1.0 - factor) / 2
    rho = s.density().rho
    z = embed_matrix(Z, [qubit], s.n_qubits)
    return MixedState(s.n_qubits, (1 - q) * rho + q * (z @ rho @ z))


def apply_noise_channels(s: State, cfg: NoiseConfig, elapsed: float, qubits=None) -> MixedState:
    """Dephase every listed qubit (default: all) for ``elapsed`` seconds."""
    factor = coherence_factor(elapsed, cfg.t2_prime)
    out = s.density()
    for q in range(s.n_qubits) if qubits is None else qubits:
        out = dephase(out, q, factor)
    return out


def flip_outcome(outcome: int, detection_fidelity: float, rng: np.random.Generator) -> int:
    return -outcome if rng.random() < 1.0 - detection_fidelity else outcome


def flip_outcomes(outcomes: np.ndarray, detection_fidelity: float, rng: np.random.Generator) -> np.ndarray:
    """Vectorized :func:`flip_outcome` over an array of +-1 values."""
    flips = rng.random(outcomes.shape) < 1.0 - detection_fidelity
    return np.where(flips, -outcomes, outcomes)


def load_calibration(name: str = "chsh_calibrated") -> NoiseConfig:
    """Shipped noise calibration from ``eprsim/data/<name>.json``."""
    text = resources.files("eprsim").joinpath(f"data/{name}.json").read_text()
    return NoiseConfig.from_dict(json.loads(text)["noise"])
