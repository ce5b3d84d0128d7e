"""Analytic evaluators and shot estimators for the entanglement witnesses.

Every estimator runs in two modes: ``shots == 0`` evaluates the Born-rule
expectation exactly, ``shots > 0`` samples outcomes through the sharded shot
engine and reports a standard error.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from . import sampling
from .noise import NoiseConfig, apply_noise_channels, misalignment_factor, readout_contrast
from .qcore import (
    PAULI,
    MixedState,
    State,
    StateError,
    embed_matrix,
    expectation,
    rotation,
    sigma_theta,
    white_noise_mix,
)
from .source import CONSTANTS, GaussianPairState, PhysicalConstants

OPTIMAL_CHSH = (3 * math.pi / 4, math.pi / 4, math.pi / 2, 0.0)


@dataclass(frozen=True)
class CHSHSettings:
    theta_L: float = OPTIMAL_CHSH[0]
    theta_Lp: float = OPTIMAL_CHSH[1]
    theta_R: float = OPTIMAL_CHSH[2]
    theta_Rp: float = OPTIMAL_CHSH[3]

    def __post_init__(self):
        if not all(math.isfinite(v) for v in asdict(self).values()):
            raise ValueError("CHSH angles must be finite")

    def pairs(self) -> list[tuple[float, float]]:
        return [
            (self.theta_L, self.theta_R),
            (self.theta_L, self.theta_Rp),
            (self.theta_Lp, self.theta_R),
            (self.theta_Lp, self.theta_Rp),
        ]


@dataclass
class ExperimentResult:
    estimator: str
    value: float
    std_error: float
    shots: int
    seed: int | None
    settings: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.std_error < 0:
            raise ValueError("std_error must be >= 0")

    @property
    def analytic(self) -> bool:
        return self.shots == 0

    def to_dict(self) -> dict:
        return asdict(self)


def _require_qubits(s: State, n: int) -> None:
    if s.n_qubits != n:
        raise StateError(f"expected a {n}-qubit state, got {s.n_qubits}")


# Two-qubit outcome statistics ---------------------------------------------

def _bloch_data(rho: np.ndarray):
    """Local Bloch vectors and correlation tensor of a two-qubit state."""
    paulis = [PAULI["x"], PAULI["y"], PAULI["z"]]
    a = np.array([np.trace(rho @ np.kron(p, PAULI["i"])).real for p in paulis])
    b = np.array([np.trace(rho @ np.kron(PAULI["i"], p)).real for p in paulis])
    t = np.array([[np.trace(rho @ np.kron(p, q)).real for q in paulis] for p in paulis])
    return a, b, t


def _direction(theta):
    theta = np.asarray(theta, dtype=float)
    return np.stack([np.sin(theta), np.zeros_like(theta), np.cos(theta)], axis=-1)


def joint_probabilities(rho: np.ndarray, theta_l, theta_r) -> np.ndarray:
    """Probabilities of outcomes (++, +-, -+, --) for sigma_theta readouts.

    Accepts scalar or array angles; returns shape ``(..., 4)``.
    """
    a, b, t = _bloch_data(rho)
    nl, nr = _direction(theta_l), _direction(theta_r)
    la = nl @ a
    rb = nr @ b
    corr = np.einsum("...i,ij,...j->...", nl, t, nr)
    out = []
    for sa in (1, -1):
        for sb in (1, -1):
            out.append(0.25 * (1 + sa * la + sb * rb + sa * sb * corr))
    return np.clip(np.stack(out, axis=-1), 0.0, 1.0)


_OUTCOMES = np.array([[1, 1], [1, -1], [-1, 1], [-1, -1]])


def _prepare_readout_state(state: State, noise: NoiseConfig | None, elapsed: float) -> MixedState:
    rho = state.density()
    if noise is None:
        return rho
    if elapsed > 0:
        rho = apply_noise_channels(rho, noise, elapsed)
    return white_noise_mix(rho, noise.residual_visibility)


def _analytic_correlator(rho: MixedState, tl: float, tr: float, noise: NoiseConfig | None) -> float:
    e = expectation(rho, np.kron(sigma_theta(tl), sigma_theta(tr)))
    if noise is not None:
        e *= readout_contrast(noise.detection_fidelity) * misalignment_factor(noise.basis_misalignment_sigma)
    return e


def sample_pair_outcomes(
    rho: MixedState,
    tl: float,
    tr: float,
    shots: int,
    seed: int,
    label: str,
    noise: NoiseConfig | None = None,
    workers: int | None = None,
) -> np.ndarray:
    """Sampled (L, R) outcome pairs of shape ``(shots, 2)``, values +-1.

    Per shot: optional Gaussian jitter of both analysis angles, a Born-rule
    draw, then independent detection flips on each atom.
    """
    sigma = noise.basis_misalignment_sigma if noise else 0.0
    fd = noise.detection_fidelity if noise else 1.0
    fixed = joint_probabilities(rho.rho, tl, tr)

    def chunk(rng: np.random.Generator, n: int) -> np.ndarray:
        if sigma > 0:
            jl = tl + sigma * rng.standard_normal(n)
            jr = tr + sigma * rng.standard_normal(n)
            cdf = np.cumsum(joint_probabilities(rho.rho, jl, jr), axis=1)
            cdf /= cdf[:, -1:]
            idx = (rng.random(n)[:, None] >= cdf).sum(axis=1).clip(0, 3)
        else:
            idx = sampling.sample_categorical(fixed, rng, n)
        out = _OUTCOMES[idx]
        if fd < 1.0:
            flips = rng.random((n, 2)) < 1.0 - fd
            out = np.where(flips, -out, out)
        return out

    return sampling.run_sharded(chunk, shots, seed, label, workers)


def chsh_S(
    settings: CHSHSettings,
    state: State,
    shots: int = 0,
    noise: NoiseConfig | None = None,
    seed: int | None = None,
    workers: int | None = None,
    elapsed: float = 0.0,
) -> ExperimentResult:
    """``S = |E(L,R) - E(L,R')| + |E(L',R) + E(L',R')|``.

    ``noise`` acts at readout only: residual-visibility mixing, optional
    dephasing for ``elapsed`` seconds, angle jitter and detection flips. The
    singlet fidelity is a property of ``state`` and is not re-applied here.
    With ``shots > 0`` each of the four correlators gets ``shots`` samples.
    """
    _require_qubits(state, 2)
    rho = _prepare_readout_state(state, noise, elapsed)
    es, vs = [], []
    for k, (tl, tr) in enumerate(settings.pairs()):
        if shots == 0:
            es.append(_analytic_correlator(rho, tl, tr, noise))
            vs.append(0.0)
        else:
            out = sample_pair_outcomes(rho, tl, tr, shots, seed, f"chsh/{k}", noise, workers)
            prod = out[:, 0] * out[:, 1]
            e = float(prod.mean())
            es.append(e)
            vs.append(max(1.0 - e * e, 0.0) / shots)
    value = abs(es[0] - es[1]) + abs(es[2] + es[3])
    return ExperimentResult(
        "chsh_S",
        float(value),
        math.sqrt(sum(vs)),
        shots,
        seed if shots else None,
        {**asdict(settings), "correlators": [float(e) for e in es]},
    )


# Wigner --------------------------------------------------------------------

@dataclass
class WignerResult:
    p_ab: ExperimentResult
    p_ac: ExperimentResult
    p_cb: ExperimentResult
    margin: float  # P(a,b) - P(a,c) - P(c,b); positive means violation
    margin_std_error: float
    violation: bool

    @property
    def n_sigma(self) -> float:
        if self.margin_std_error == 0:
            return math.inf if self.margin > 0 else 0.0
        return self.margin / self.margin_std_error

    def results(self) -> list[ExperimentResult]:
        extra = ExperimentResult(
            "wigner_margin",
            self.margin,
            self.margin_std_error,
            self.p_ab.shots,
            self.p_ab.seed,
            {"violation": self.violation},
        )
        return [self.p_ab, self.p_ac, self.p_cb, extra]


def wigner_test(
    a: float,
    b: float,
    c: float,
    state: State,
    shots: int = 0,
    seed: int | None = None,
    workers: int | None = None,
) -> WignerResult:
    """Same-outcome probabilities ``P++`` for the pairs (a,b), (a,c), (c,b).

    The inequality ``P++(a,b) <= P++(a,c) + P++(c,b)`` is flagged as violated
    when the margin exceeds three standard errors (or is positive beyond
    1e-12 in analytic mode).
    """
    _require_qubits(state, 2)
    rho = state.density()
    res = []
    for name, (x, y) in (("p_ab", (a, b)), ("p_ac", (a, c)), ("p_cb", (c, b))):
        if shots == 0:
            p = float(joint_probabilities(rho.rho, x, y)[0])
            res.append(ExperimentResult(f"wigner_{name}", p, 0.0, 0, None, {"theta_L": x, "theta_R": y}))
        else:
            out = sample_pair_outcomes(rho, x, y, shots, seed, f"wigner/{name}", None, workers)
            p = float(np.mean((out[:, 0] == 1) & (out[:, 1] == 1)))
            se = math.sqrt(p * (1 - p) / shots)
            res.append(ExperimentResult(f"wigner_{name}", p, se, shots, seed, {"theta_L": x, "theta_R": y}))
    margin = res[0].value - res[1].value - res[2].value
    se = math.sqrt(sum(r.std_error**2 for r in res))
    violation = margin > 3 * se if shots else margin > 1e-12
    return WignerResult(res[0], res[1], res[2], margin, se, bool(violation))


# Path interferometer ------------------------------------------------------

# Left arm: phase shifter then a 50:50 recombiner, reading cos(phi) X - sin(phi) Y.
# Right arm: a fixed pi/2 input coupler ahead of the same phase shifter and
# recombiner, reading cos(phi) X + sin(phi) Z. Right-hand detector labels are
# mirrored, so "+" means both atoms leave through corresponding ports.
_RECOMBINER = rotation("y", -math.pi / 2).matrix
_RIGHT_COUPLER = rotation("x", math.pi / 2).matrix


def interferometer_unitary(phi: float, side: str) -> np.ndarray:
    u = _RECOMBINER @ rotation("z", phi).matrix
    if side == "R":
        u = u @ _RIGHT_COUPLER
    elif side != "L":
        raise ValueError("side must be 'L' or 'R'")
    return u


def fringe_probabilities(rho: MixedState, phi_l: float, phi_r: float) -> tuple[float, float]:
    """Analytic ``(P+, P-)`` for one phase setting."""
    u = np.kron(interferometer_unitary(phi_l, "L"), interferometer_unitary(phi_r, "R"))
    probs = np.clip(np.real(np.diag(u @ rho.rho @ u.conj().T)), 0.0, 1.0)
    # ports |00>,|01>,|10>,|11>; mirrored right labels make 01 and 10 the "+" events
    p_plus = float(probs[1] + probs[2])
    return p_plus, 1.0 - p_plus


@dataclass
class FringeScan:
    phi_L: np.ndarray
    phi_R: np.ndarray
    p_plus: np.ndarray
    p_minus: np.ndarray
    std_error: np.ndarray
    visibility: float
    visibility_std_error: float
    shots: int
    seed: int | None

    def results(self) -> list[ExperimentResult]:
        out = [
            ExperimentResult(
                "fringe_visibility", self.visibility, self.visibility_std_error, self.shots, self.seed,
                {"grid": [int(self.phi_L.shape[0]), int(self.phi_L.shape[1])]},
            )
        ]
        for i in range(self.phi_L.shape[0]):
            for j in range(self.phi_L.shape[1]):
                out.append(
                    ExperimentResult(
                        "fringe_p_plus", float(self.p_plus[i, j]), float(self.std_error[i, j]), self.shots,
                        self.seed, {"phi_L": float(self.phi_L[i, j]), "phi_R": float(self.phi_R[i, j])},
                    )
                )
        return out


def fit_visibility(phi_l, phi_r, p_plus, std_error=None) -> tuple[float, float]:
    """Least-squares ``V`` in ``P+ = (1 + V cos(phi_L) cos(phi_R)) / 2``."""
    c = np.cos(phi_l) * np.cos(phi_r)
    denom = float(np.sum(c * c))
    if denom < 1e-12 * c.size:
        raise ValueError("grid carries no fringe information (all cos products vanish)")
    v = 2 * float(np.sum(c * (p_plus - 0.5))) / denom
    if std_error is None:
        return v, 0.0
    var = 4 * float(np.sum(c * c * std_error**2)) / denom**2
    return v, math.sqrt(var)


def fringe_scan(
    phi_l: Sequence[float],
    phi_r: Sequence[float],
    path_state: State,
    shots: int = 0,
    noise: NoiseConfig | None = None,
    seed: int | None = None,
    workers: int | None = None,
) -> FringeScan:
    """Scan the two-atom interferometer over the grid ``phi_l x phi_r``.

    ``noise`` lowers the visibility through residual mixing and detection
    flips; the path state's own Werner weight is taken as given.
    """
    _require_qubits(path_state, 2)
    gl, gr = np.meshgrid(np.asarray(phi_l, float), np.asarray(phi_r, float), indexing="ij")
    if gl.size == 0:
        raise ValueError("phase grid is empty")
    rho = _prepare_readout_state(path_state, noise, 0.0)
    fd = noise.detection_fidelity if noise else 1.0
    p_plus = np.empty(gl.shape)
    se = np.zeros(gl.shape)
    for i in range(gl.shape[0]):
        for j in range(gl.shape[1]):
            pp, _ = fringe_probabilities(rho, gl[i, j], gr[i, j])
            if shots == 0:
                # independent flips on both detectors
                c = readout_contrast(fd)
                p_plus[i, j] = 0.5 + c * (pp - 0.5)
            else:
                p_eff = 0.5 + readout_contrast(fd) * (pp - 0.5)

                def chunk(rng, n, p=p_eff):
                    return (rng.random(n) < p).astype(np.int8)

                hits = sampling.run_sharded(chunk, shots, seed, f"fringe/{i}/{j}", workers)
                p = float(hits.mean())
                p_plus[i, j] = p
                se[i, j] = math.sqrt(max(p * (1 - p), 0.25 / shots) / shots)
    v, v_se = fit_visibility(gl, gr, p_plus, se if shots else None)
    return FringeScan(gl, gr, p_plus, 1.0 - p_plus, se, v, v_se, shots, seed if shots else None)


# Continuous-variable EPR inference ----------------------------------------

@dataclass
class EPRResult:
    delta_x: float  # um, Delta(x2 | x1)
    delta_p: float  # hbar/um, Delta(p2 | p1)
    product: float  # units of hbar
    heisenberg_bound: float = 0.5
    delta_x_std_error: float = 0.0
    delta_p_std_error: float = 0.0
    product_std_error: float = 0.0
    tof_systematic: float = 0.0  # product shift caused by the initial positions in time of flight
    shots: int = 0
    seed: int | None = None

    def __post_init__(self):
        if min(self.delta_x, self.delta_p, self.product) < 0:
            raise ValueError("conditional spreads must be non-negative")

    @property
    def entangled(self) -> bool:
        return self.product < self.heisenberg_bound

    def results(self, settings: dict | None = None) -> list[ExperimentResult]:
        s = dict(settings or {})
        return [
            ExperimentResult("epr_delta_x", self.delta_x, self.delta_x_std_error, self.shots, self.seed, s),
            ExperimentResult("epr_delta_p", self.delta_p, self.delta_p_std_error, self.shots, self.seed, s),
            ExperimentResult(
                "epr_product", self.product, self.product_std_error, self.shots, self.seed,
                {**s, "heisenberg_bound": self.heisenberg_bound, "entangled": self.entangled,
                 "tof_systematic": self.tof_systematic},
            ),
        ]


def conditional_std(cov2: np.ndarray) -> float:
    """``sqrt(Var(y2) - Cov(y1, y2)^2 / Var(y1))`` for a 2x2 covariance."""
    v = cov2[1, 1] - cov2[0, 1] ** 2 / cov2[0, 0]
    return math.sqrt(max(v, 0.0))


def _measurement_maps(sigma_img: float, t_tof: float, constants: PhysicalConstants):
    """Linear readout maps and added noise covariances for both branches.

    ``sigma_img`` is the resolution on the pair separation; each atom's image
    is blurred by ``sigma_img / sqrt(2)``. Time of flight maps
    ``x(t) = x0 + p (hbar/m) t`` and the momentum estimate divides by
    ``(hbar/m) t``; ``t_tof = inf`` is the far-field limit.
    """
    blur = sigma_img / math.sqrt(2)
    pos_map = np.array([[1.0, 0, 0, 0], [0, 0, 1.0, 0]])
    pos_noise = blur**2 * np.eye(2)
    if math.isinf(t_tof):
        mom_map = np.array([[0, 1.0, 0, 0], [0, 0, 0, 1.0]])
        mom_noise = np.zeros((2, 2))
    else:
        scale = 1.0 / (constants.hbar_over_m * t_tof)  # um -> hbar/um
        mom_map = np.array([[scale, 1.0, 0, 0], [0, 0, scale, 1.0]])
        mom_noise = (blur * scale) ** 2 * np.eye(2)
    return pos_map, pos_noise, mom_map, mom_noise


def epr_infer(
    cv: GaussianPairState,
    sigma_img: float,
    t_tof: float = math.inf,
    shots: int = 0,
    seed: int | None = None,
    workers: int | None = None,
    constants: PhysicalConstants = CONSTANTS,
) -> EPRResult:
    """Inferred ``Delta(x2|x1) * Delta(p2|p1)`` from blurred in-situ and TOF images.

    Analytic mode conditions the Gaussian readout covariance directly; sampled
    mode draws ``shots`` pairs for each of the two (independent) ensembles and
    uses linear-regression residuals.
    """
    if sigma_img < 0:
        raise ValueError("sigma_img must be >= 0")
    if not t_tof > 0:
        raise ValueError("t_tof must be positive")
    eig = np.linalg.eigvalsh(cv.cov)
    if eig.min() <= 0:
        raise StateError("covariance is not positive definite")
    pos_map, pos_noise, mom_map, mom_noise = _measurement_maps(sigma_img, t_tof, constants)
    cov_x = pos_map @ cv.cov @ pos_map.T + pos_noise
    cov_p = mom_map @ cv.cov @ mom_map.T + mom_noise

    # far-field reference for the time-of-flight systematic
    _, _, ff_map, _ = _measurement_maps(sigma_img, math.inf, constants)
    dp_far = conditional_std(ff_map @ cv.cov @ ff_map.T)

    if shots == 0:
        dx, dp = conditional_std(cov_x), conditional_std(cov_p)
        return EPRResult(dx, dp, dx * dp, tof_systematic=dx * (dp - dp_far))

    chol = np.linalg.cholesky(cv.cov)

    def branch(readout, noise_cov, label):
        noise_chol = np.linalg.cholesky(noise_cov) if np.any(noise_cov) else None

        def chunk(rng, n):
            z = rng.standard_normal((n, 4)) @ chol.T + cv.mean
            y = z @ readout.T
            if noise_chol is not None:
                y = y + rng.standard_normal((n, 2)) @ noise_chol.T
            return y

        y = sampling.run_sharded(chunk, shots, seed, label, workers)
        c = np.cov(y, rowvar=False)
        return conditional_std(c)

    dx = branch(pos_map, pos_noise, "epr/position")
    dp = branch(mom_map, mom_noise, "epr/momentum")
    # residual-variance estimator: relative standard error ~ 1/sqrt(2 (n - 2))
    rel = 1.0 / math.sqrt(2 * (shots - 2)) if shots > 2 else math.inf
    return EPRResult(
        dx, dp, dx * dp,
        delta_x_std_error=dx * rel,
        delta_p_std_error=dp * rel,
        product_std_error=dx * dp * rel * math.sqrt(2),
        tof_systematic=dx * (conditional_std(cov_p) - dp_far),
        shots=shots,
        seed=seed,
    )


# GHZ correlations ----------------------------------------------------------

def basis_rotation(basis) -> np.ndarray:
    """Unitary ``B`` with ``B^dag Z B`` equal to the requested observable.

    ``basis`` is ``'x'``, ``'y'``, ``'z'`` or an angle for ``sigma_theta``.
    """
    if basis == "z":
        return np.eye(2, dtype=complex)
    if basis == "x":
        return rotation("y", -math.pi / 2).matrix
    if basis == "y":
        return rotation("x", math.pi / 2).matrix
    if isinstance(basis, (int, float)):
        return rotation("y", -float(basis)).matrix
    raise ValueError(f"unknown basis {basis!r}")


def basis_observable(basis) -> np.ndarray:
    b = basis_rotation(basis)
    return b.conj().T @ PAULI["z"] @ b


def _parse_bases(bases, n: int) -> list:
    if isinstance(bases, str):
        bases = list(bases)
    bases = list(bases)
    if len(bases) != n:
        raise ValueError(f"need one basis per qubit ({n}), got {len(bases)}")
    return bases


def product_observable(bases) -> np.ndarray:
    out = np.array([[1.0]], dtype=complex)
    for b in bases:
        out = np.kron(out, basis_observable(b))
    return out


def outcome_distribution(state: State, bases) -> np.ndarray:
    """Probabilities over the 2^n joint outcomes, index bit 1 meaning -1."""
    bases = _parse_bases(bases, state.n_qubits)
    u = np.array([[1.0]], dtype=complex)
    for b in bases:
        u = np.kron(u, basis_rotation(b))
    rho = state.density().rho
    return np.clip(np.real(np.diag(u @ rho @ u.conj().T)), 0.0, 1.0)


def sample_outcomes(
    state: State, bases, shots: int, seed: int, label: str, workers: int | None = None
) -> np.ndarray:
    """``(shots, n)`` array of +-1 outcomes in the requested bases."""
    n = state.n_qubits
    probs = outcome_distribution(state, bases)
    signs = np.array([[1 - 2 * ((k >> (n - 1 - q)) & 1) for q in range(n)] for k in range(2**n)], dtype=np.int8)

    def chunk(rng, m):
        return signs[sampling.sample_categorical(probs, rng, m)]

    return sampling.run_sharded(chunk, shots, seed, label, workers)


def ghz_correlations(
    state: State,
    settings: Sequence,
    shots: int = 0,
    seed: int | None = None,
    workers: int | None = None,
    condition: tuple[int, object, int] | None = None,
) -> list[ExperimentResult]:
    """Products of single-qubit outcomes for each basis setting.

    ``settings`` is a list of per-qubit basis specs (e.g. ``["zzzz", "xxxx"]``).
    With ``condition = (qubit, basis, outcome)`` the correlators run over the
    other three qubits, given that ``qubit`` was found at ``outcome`` in
    ``basis``: by collapse in analytic mode, by post-selection when sampled.
    The conditioning qubit's entry in each setting is ignored.
    """
    _require_qubits(state, 4)
    results = []
    for k, setting in enumerate(settings):
        bases = _parse_bases(setting, 4)
        info = {"bases": [b if isinstance(b, str) else float(b) for b in bases]}
        keep = list(range(4))
        if condition is not None:
            q, cb, co = condition
            if co not in (1, -1) or not 0 <= q < 4:
                raise ValueError(f"invalid condition {condition!r}")
            keep.remove(q)
            bases[q] = cb
            info["condition"] = {"qubit": q, "basis": cb if isinstance(cb, str) else float(cb), "outcome": co}
        label = "".join(str(bases[i]) for i in keep)
        if shots == 0:
            s = state if condition is None else collapse_in_basis(state, q, cb, co)
            obs = [basis_observable(bases[i]) if i in keep else np.eye(2) for i in range(4)]
            full = obs[0]
            for o in obs[1:]:
                full = np.kron(full, o)
            results.append(ExperimentResult(f"ghz_{label}", expectation(s, full), 0.0, 0, None, info))
            continue
        out = sample_outcomes(state, bases, shots, seed, f"ghz/{k}", workers)
        if condition is not None:
            out = out[out[:, q] == co]
        prod = np.prod(out[:, keep], axis=1)
        m = prod.shape[0]
        if m == 0:
            raise StateError("post-selection kept no shots")
        e = float(prod.mean())
        info["kept_shots"] = int(m)
        results.append(ExperimentResult(f"ghz_{label}", e, math.sqrt(max(1 - e * e, 0.0) / m), shots, seed, info))
    return results


def collapse_in_basis(state: State, qubit: int, basis, outcome: int) -> MixedState:
    """Post-measurement state after reading ``qubit`` in ``basis``."""
    proj = (np.eye(2) + outcome * basis_observable(basis)) / 2
    p = embed_matrix(proj, [qubit], state.n_qubits)
    rho = p @ state.density().rho @ p
    tr = np.trace(rho).real
    if tr < 1e-12:
        raise StateError("outcome has zero probability")
    return MixedState(state.n_qubits, rho / tr)
