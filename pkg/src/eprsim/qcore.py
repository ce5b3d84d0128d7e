"""Dense few-qubit state algebra.

Conventions used throughout the package:

* ``rotation(axis, theta) = exp(-i theta sigma_axis / 2)``.
* Qubit 0 is the leftmost label of a ket, i.e. the most significant bit of the
  basis index.
* A spin measurement at angle ``theta`` reads out
  ``sigma_theta = cos(theta) Z + sin(theta) X``.
* Global phases are kept; use :func:`phase_distance` to compare operators.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

MAX_QUBITS = 4
_NORM_TOL = 1e-10
_HERM_TOL = 1e-10
_PSD_TOL = 1e-10

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = {"i": I2, "x": X, "y": Y, "z": Z}


class StateError(ValueError):
    """Raised when a state, operator or index violates its contract."""


def _check_n(n: int) -> None:
    if not isinstance(n, (int, np.integer)) or not 1 <= n <= MAX_QUBITS:
        raise StateError(f"n_qubits must be an integer in 1..{MAX_QUBITS}, got {n!r}")


@dataclass(frozen=True, eq=False)
class PureState:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        _check_n(self.n_qubits)
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape != (2**self.n_qubits,):
            raise StateError(f"expected {2**self.n_qubits} amplitudes, got {amps.shape[0]}")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > _NORM_TOL:
            raise StateError(f"state is not normalized (norm^2 = {norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    def density(self) -> "MixedState":
        return MixedState(self.n_qubits, np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True, eq=False)
class MixedState:
    n_qubits: int
    rho: np.ndarray

    def __post_init__(self):
        _check_n(self.n_qubits)
        d = 2**self.n_qubits
        rho = np.asarray(self.rho, dtype=complex)
        if rho.shape != (d, d):
            raise StateError(f"expected a {d}x{d} density matrix, got shape {rho.shape}")
        if np.max(np.abs(rho - rho.conj().T)) > _HERM_TOL:
            raise StateError("density matrix is not Hermitian")
        tr = np.trace(rho).real
        if abs(tr - 1.0) > _NORM_TOL:
            raise StateError(f"density matrix trace is {tr!r}, expected 1")
        if np.linalg.eigvalsh(rho).min() < -_PSD_TOL:
            raise StateError("density matrix has a negative eigenvalue")
        rho = rho.copy()
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    def density(self) -> "MixedState":
        return self

    def purity(self) -> float:
        return float(np.trace(self.rho @ self.rho).real)


State = Union[PureState, MixedState]


@dataclass(frozen=True, eq=False)
class Unitary:
    dim: int
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (self.dim, self.dim):
            raise StateError(f"expected a {self.dim}x{self.dim} matrix, got shape {m.shape}")
        if np.max(np.abs(m.conj().T @ m - np.eye(self.dim))) > 1e-12:
            raise StateError("matrix is not unitary")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def identity(cls, dim: int) -> "Unitary":
        return cls(dim, np.eye(dim, dtype=complex))

    @property
    def n_qubits(self) -> int:
        return int(round(math.log2(self.dim)))

    def __matmul__(self, other: "Unitary") -> "Unitary":
        if self.dim != other.dim:
            raise StateError("dimension mismatch in operator product")
        return Unitary(self.dim, self.matrix @ other.matrix)

    def dagger(self) -> "Unitary":
        return Unitary(self.dim, self.matrix.conj().T)


@dataclass(frozen=True)
class MeasurementRecord:
    qubit_index: int
    basis_angle: float
    outcome: int

    def __post_init__(self):
        if self.outcome not in (-1, 1):
            raise StateError(f"outcome must be +1 or -1, got {self.outcome!r}")


def rotation(axis: str, theta: float) -> Unitary:
    """``exp(-i theta sigma_axis / 2)`` for axis in ``{'x', 'y', 'z'}``."""
    if axis not in ("x", "y", "z"):
        raise StateError(f"unknown rotation axis {axis!r}")
    theta = float(theta)
    if not math.isfinite(theta):
        raise StateError("rotation angle must be finite")
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return Unitary(2, c * I2 - 1j * s * PAULI[axis])


def sigma_theta(theta: float) -> np.ndarray:
    """Spin observable along ``(sin theta, 0, cos theta)``."""
    return math.cos(theta) * Z + math.sin(theta) * X


def ket(bits: str) -> PureState:
    """Computational basis state from a bit string, e.g. ``ket('01')``."""
    idx = int(bits, 2)
    amps = np.zeros(2 ** len(bits), dtype=complex)
    amps[idx] = 1.0
    return PureState(len(bits), amps)


def _permute_operator(op: np.ndarray, order: Sequence[int], n: int) -> np.ndarray:
    """Reorder an operator written on qubits ``order`` into natural order."""
    t = op.reshape((2,) * (2 * n))
    inv = list(np.argsort(order))
    t = t.transpose(inv + [n + i for i in inv])
    return t.reshape(2**n, 2**n)


def embed_matrix(m: np.ndarray, targets: Sequence[int], n: int) -> np.ndarray:
    """Lift a ``2^k x 2^k`` matrix on ``targets`` to the full ``n``-qubit space."""
    targets = [int(t) for t in targets]
    k = len(targets)
    if len(set(targets)) != k:
        raise StateError(f"duplicate targets {targets}")
    if any(t < 0 or t >= n for t in targets):
        raise StateError(f"targets {targets} out of range for {n} qubits")
    if m.shape != (2**k, 2**k):
        raise StateError(f"operator of shape {m.shape} does not act on {k} qubit(s)")
    rest = [q for q in range(n) if q not in targets]
    full = np.kron(m, np.eye(2 ** len(rest), dtype=complex))
    return _permute_operator(full, targets + rest, n)


def embed(u: Unitary, targets: Sequence[int], n: int) -> Unitary:
    _check_n(n)
    if u.dim != 2 ** len(targets):
        raise StateError(f"unitary of dim {u.dim} does not match {len(targets)} target(s)")
    return Unitary(2**n, embed_matrix(u.matrix, targets, n))


def apply(u: Unitary, s: State) -> State:
    if u.dim != s.dim:
        raise StateError(f"unitary dim {u.dim} does not match state dim {s.dim}")
    if isinstance(s, PureState):
        return PureState(s.n_qubits, u.matrix @ s.amplitudes)
    return MixedState(s.n_qubits, u.matrix @ s.rho @ u.matrix.conj().T)


def expectation(s: State, observable: np.ndarray) -> float:
    obs = np.asarray(observable, dtype=complex)
    if obs.shape != (s.dim, s.dim):
        raise StateError(f"observable shape {obs.shape} does not match state dim {s.dim}")
    if np.max(np.abs(obs - obs.conj().T)) > _HERM_TOL:
        raise StateError("observable is not Hermitian")
    # dividing by the norm removes the rounding left in amplitudes such as 1/sqrt(2)
    if isinstance(s, PureState):
        val = np.vdot(s.amplitudes, obs @ s.amplitudes) / np.vdot(s.amplitudes, s.amplitudes).real
    else:
        val = np.trace(s.rho @ obs) / np.trace(s.rho).real
    if abs(val.imag) > 1e-10:
        raise StateError(f"expectation has imaginary part {val.imag!r}")
    return float(val.real)


def correlator(thetas: Sequence[float]) -> np.ndarray:
    """Tensor product of ``sigma_theta`` observables, one angle per qubit."""
    out = np.array([[1.0]], dtype=complex)
    for th in thetas:
        out = np.kron(out, sigma_theta(th))
    return out


def pauli_string(label: str) -> np.ndarray:
    """``pauli_string('xxz')`` -> X (x) X (x) Z."""
    out = np.array([[1.0]], dtype=complex)
    for ch in label.lower():
        out = np.kron(out, PAULI[ch])
    return out


def projector(theta: float, outcome: int) -> np.ndarray:
    """Projector onto the ``outcome`` eigenspace of ``sigma_theta``.

    Built as ``R_y(theta) |b><b| R_y(theta)^dag`` so that the readout is a
    rotation by ``R_y(-theta)`` followed by a Z measurement.
    """
    r = rotation("y", theta).matrix
    b = np.zeros((2, 2), dtype=complex)
    b[0 if outcome == 1 else 1, 0 if outcome == 1 else 1] = 1.0
    return r @ b @ r.conj().T


def outcome_probability(s: State, qubit: int, theta: float, outcome: int = 1) -> float:
    p = embed_matrix(projector(theta, outcome), [qubit], s.n_qubits)
    if isinstance(s, PureState):
        val = np.vdot(s.amplitudes, p @ s.amplitudes).real
    else:
        val = np.trace(p @ s.rho).real
    return float(min(max(val, 0.0), 1.0))


def measure_qubit(s: State, qubit: int, theta: float, rng: np.random.Generator):
    """Projective measurement of ``sigma_theta`` on one qubit.

    Returns ``(MeasurementRecord, post_measurement_state)``; the collapsed
    state keeps all ``n`` qubits and the input's kind.
    """
    if not 0 <= qubit < s.n_qubits:
        raise StateError(f"qubit {qubit} out of range for {s.n_qubits} qubits")
    p_plus = outcome_probability(s, qubit, theta, 1)
    outcome = 1 if rng.random() < p_plus else -1
    return MeasurementRecord(qubit, float(theta), outcome), collapse(s, qubit, theta, outcome)


def collapse(s: State, qubit: int, theta: float, outcome: int) -> State:
    """Post-measurement state for a given outcome (renormalized)."""
    p = embed_matrix(projector(theta, outcome), [qubit], s.n_qubits)
    if isinstance(s, PureState):
        v = p @ s.amplitudes
        norm = np.linalg.norm(v)
        if norm < 1e-12:
            raise StateError("outcome has zero probability")
        return PureState(s.n_qubits, v / norm)
    r = p @ s.rho @ p
    tr = np.trace(r).real
    if tr < 1e-12:
        raise StateError("outcome has zero probability")
    return MixedState(s.n_qubits, r / tr)


def tensor(a: State, b: State) -> State:
    n = a.n_qubits + b.n_qubits
    if isinstance(a, PureState) and isinstance(b, PureState):
        return PureState(n, np.kron(a.amplitudes, b.amplitudes))
    return MixedState(n, np.kron(a.density().rho, b.density().rho))


def partial_trace(s: State, keep: Sequence[int]) -> MixedState:
    keep = sorted(int(k) for k in keep)
    if not keep:
        raise StateError("keep set must be non-empty")
    n = s.n_qubits
    if len(set(keep)) != len(keep) or any(k < 0 or k >= n for k in keep):
        raise StateError(f"invalid keep set {keep} for {n} qubits")
    rho = s.density().rho.reshape((2,) * (2 * n))
    traced = [q for q in range(n) if q not in keep]
    # contract each traced qubit's bra index with its ket index, highest first
    for q in sorted(traced, reverse=True):
        m = rho.ndim // 2
        rho = np.trace(rho, axis1=q, axis2=q + m)
    k = len(keep)
    return MixedState(k, rho.reshape(2**k, 2**k))


def phase_distance(u: Unitary | np.ndarray, v: Unitary | np.ndarray) -> float:
    """``min_phi ||U - exp(i phi) V||_F``."""
    a = u.matrix if isinstance(u, Unitary) else np.asarray(u, dtype=complex)
    b = v.matrix if isinstance(v, Unitary) else np.asarray(v, dtype=complex)
    overlap = np.vdot(b, a)  # tr(V^dag U)
    phase = overlap / abs(overlap) if abs(overlap) > 1e-300 else 1.0
    return float(np.linalg.norm(a - phase * b))


def fidelity(a: State, b: PureState) -> float:
    """Overlap ``<b|rho_a|b>`` with a pure reference."""
    return float(np.vdot(b.amplitudes, a.density().rho @ b.amplitudes).real)


def white_noise_mix(s: State, weight: float) -> MixedState:
    """``weight * rho + (1 - weight) * I/d``."""
    if not 0.0 <= weight <= 1.0:
        raise StateError(f"mixing weight must lie in [0, 1], got {weight!r}")
    d = s.dim
    return MixedState(s.n_qubits, weight * s.density().rho + (1 - weight) * np.eye(d) / d)
