"""Entangled resource states produced by dissociating a single Feshbach molecule.

Discrete-variable states are returned as Werner mixtures of the ideal target
with white noise.  The continuous-variable pair is a zero-mean-fluctuation
Gaussian described by its second moments over ``(x1, p1, x2, p2)``.

Units: lengths in um, momenta in hbar/um, hbar = 1.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .qcore import MixedState, PureState, StateError, ket, white_noise_mix


@dataclass(frozen=True)
class PhysicalConstants:
    hbar_si: float = 1.054571817e-34  # J s
    amu_si: float = 1.66053906660e-27  # kg
    mass_li6_amu: float = 6.0151228874
    wavelength_um: float = 0.671  # Li D-line

    @property
    def mass_li6(self) -> float:
        """Mass of 6Li in kg."""
        return self.mass_li6_amu * self.amu_si

    @property
    def k_rec(self) -> float:
        """Recoil wavenumber in 1/um, so hbar*k_rec is in hbar/um."""
        return 2 * math.pi / self.wavelength_um

    @property
    def hbar_over_m(self) -> float:
        """hbar/m for 6Li in um^2/s; velocity = p * hbar_over_m for p in hbar/um."""
        return self.hbar_si / self.mass_li6 * 1e12


CONSTANTS = PhysicalConstants()

SPIN_L, PATH_L, SPIN_R, PATH_R = range(4)
GHZ_LABELS = ("spin_L", "path_L", "spin_R", "path_R")

SINGLET = PureState(2, (ket("01").amplitudes - ket("10").amplitudes) / math.sqrt(2))
# |A>_L|B>_R - |B>_L|A>_R with A -> 0, B -> 1
PATH_SINGLET = SINGLET
GHZ_HYPER = PureState(4, (ket("0011").amplitudes - ket("1100").amplitudes) / math.sqrt(2))


def _check_prob(name: str, value: float) -> None:
    if not (isinstance(value, (int, float)) and 0.0 <= value <= 1.0):
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")


@dataclass(frozen=True)
class PreparationConfig:
    pair_prep_fidelity: float = 0.97
    singlet_fidelity: float = 1.0
    association_fidelity: float = 1.0

    def __post_init__(self):
        for k, v in asdict(self).items():
            _check_prob(k, v)


def prepare_singlet(cfg: PreparationConfig = PreparationConfig()) -> MixedState:
    return white_noise_mix(SINGLET, cfg.singlet_fidelity)


def prepare_path_state(cfg: PreparationConfig = PreparationConfig()) -> MixedState:
    return white_noise_mix(PATH_SINGLET, cfg.singlet_fidelity)


def prepare_ghz_hyper(cfg: PreparationConfig = PreparationConfig()) -> MixedState:
    """Four qubits ordered (spin_L, path_L, spin_R, path_R); up, A -> 0."""
    return white_noise_mix(GHZ_HYPER, cfg.singlet_fidelity)


# Dissociation --------------------------------------------------------------

METHODS = ("rf_spin_flip", "field_sweep", "photodissociation")

# allowed timescale window (seconds) per method when validating
_TIMESCALE_RANGE = {
    "rf_spin_flip": (0.0, 1e-3),
    "field_sweep": (0.5e-3, 10e-3),
    "photodissociation": (1e-9, 1e-6),
}


@dataclass(frozen=True)
class DissociationSpec:
    method: str = "rf_spin_flip"
    timescale: float = 1e-4  # s
    mean_momentum: float = 1.0  # hbar*k_rec per atom
    momentum_spread: float = 0.02  # relative spread, hbar*k_rec
    binding_coupling: Optional[float] = None  # g_updown, opaque
    validate: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown dissociation method {self.method!r}")
        if not self.timescale > 0:
            raise ValueError("timescale must be positive")
        if not self.momentum_spread > 0:
            raise ValueError("momentum_spread must be positive")
        if self.validate:
            lo, hi = _TIMESCALE_RANGE[self.method]
            ok = (lo < self.timescale < hi) if self.method == "rf_spin_flip" else lo <= self.timescale <= hi
            if not ok:
                raise ValueError(
                    f"timescale {self.timescale:g} s outside the {self.method} window [{lo:g}, {hi:g}] s"
                )


def dissociation_catalog() -> list[dict]:
    return [
        {
            "method": "rf_spin_flip",
            "label": "RF spin-flip",
            "timescale": "sub-ms",
            "timescale_range_s": [0.0, 1e-3],
            "features": "Fast, coherent, minimal recoil",
            "limitations": "Requires strong, homogeneous RF fields",
            "suitable": True,
            "reason": "",
        },
        {
            "method": "field_sweep",
            "label": "Magnetic-field sweep",
            "timescale": "0.5–10 ms",
            "timescale_range_s": [0.5e-3, 10e-3],
            "features": "Deterministic, tunable momentum spectrum",
            "limitations": "Relatively slow",
            "suitable": True,
            "reason": "",
        },
        {
            "method": "photodissociation",
            "label": "Optical photodissociation",
            "timescale": "ns–µs",
            "timescale_range_s": [1e-9, 1e-6],
            "features": "Fast, precise timing",
            "limitations": "Photon recoil; spontaneous emission",
            "suitable": False,
            "reason": "photon recoil; spontaneous emission",
        },
    ]


def catalog_json(indent: int | None = 2) -> str:
    return json.dumps(dissociation_catalog(), indent=indent, ensure_ascii=False)


# Continuous variables ------------------------------------------------------

_OMEGA = np.array(
    [[0, 1, 0, 0], [-1, 0, 0, 0], [0, 0, 0, 1], [0, 0, -1, 0]], dtype=float
)


@dataclass(frozen=True, eq=False)
class GaussianPairState:
    """Second-moment model over ``(x1, p1, x2, p2)``."""

    mean: np.ndarray
    cov: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).reshape(-1)
        cov = np.asarray(self.cov, dtype=float)
        if mean.shape != (4,) or cov.shape != (4, 4):
            raise StateError("GaussianPairState needs a 4-vector mean and a 4x4 covariance")
        if not np.all(np.isfinite(cov)) or not np.all(np.isfinite(mean)):
            raise StateError("non-finite moments")
        if np.max(np.abs(cov - cov.T)) > 1e-12 * max(1.0, np.max(np.abs(cov))):
            raise StateError("covariance is not symmetric")
        eig = np.linalg.eigvalsh(cov)
        if eig.min() <= 0:
            raise StateError(f"covariance is not positive definite (min eigenvalue {eig.min():.3e})")
        for i in (0, 2):
            prod = cov[i, i] * cov[i + 1, i + 1]
            if prod < 0.25 * (1 - 1e-9):
                raise StateError(
                    f"particle {i // 2 + 1} violates Var(x)Var(p) >= 1/4 (got {prod:.4g})"
                )
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    def is_physical(self, tol: float = 1e-9) -> bool:
        """Robertson-Schroedinger condition ``cov + i Omega / 2 >= 0``."""
        m = self.cov + 0.5j * _OMEGA
        return bool(np.linalg.eigvalsh(m).min() >= -tol * max(1.0, np.max(np.abs(self.cov))))


def prepare_cv_state(
    spec: DissociationSpec,
    initial_size: float,
    marginal_position_std: float | None = None,
    constants: PhysicalConstants = CONSTANTS,
) -> GaussianPairState:
    """Gaussian pair with ``Var(x1-x2) = 2 sigma0^2`` and ``Var(p1+p2) = dp^2``.

    Each atom's marginals default to ``Var(x) = (10 sigma0)^2`` and
    ``Var(p) = p0^2/4 + dp^2``. Both are raised to the smallest value for which
    the centre-of-mass and relative modes respect the uncertainty relation, so
    the returned covariance is always a physical state.
    """
    sigma0 = float(initial_size)
    if not (math.isfinite(sigma0) and sigma0 > 0):
        raise StateError(f"initial size must be positive and finite, got {initial_size!r}")
    dp = spec.momentum_spread * constants.k_rec
    p0 = spec.mean_momentum * constants.k_rec
    sx = 10 * sigma0 if marginal_position_std is None else float(marginal_position_std)
    if not (math.isfinite(sx) and sx > 0):
        raise StateError("marginal position spread must be positive and finite")

    vx = max(sx**2, sigma0**2 / 2 + 1 / (4 * dp**2))
    vp = max(p0**2 / 4 + dp**2, dp**2 / 4 + 1 / (8 * sigma0**2))
    cx = vx - sigma0**2
    cp = dp**2 / 2 - vp
    cov = np.array(
        [[vx, 0, cx, 0], [0, vp, 0, cp], [cx, 0, vx, 0], [0, cp, 0, vp]], dtype=float
    )
    mean = np.array([0.0, p0, 0.0, -p0])
    state = GaussianPairState(
        mean, cov, meta={"initial_size_um": sigma0, "relative_momentum_spread": dp, "mean_momentum": p0}
    )
    if not state.is_physical():
        raise StateError("covariance violates the two-mode uncertainty relation")
    return state
