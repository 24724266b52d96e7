"""Simulated Pauli-basis state tomography and the noise model.

Qubit labels here are *local* qubits of the measured density matrix: local
qubit ``k`` is bit ``k`` of the matrix index.  For a reduced state rho_A this
means A2 qubits first, then A1 (see ``Partition.a_local_qubits``).

A setting assigns one of X, Y, Z to every local qubit; outcome bit ``k`` is 0
for the +1 eigenvalue of that qubit's Pauli operator.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, IncompleteDataError, InfeasibleTargetError, ValidationError
from .qstate import DensityMatrix, Partition, StateVector, purity, reduced_density_array

MAX_TOMOGRAPHY_QUBITS = 8
PURITY_TOL = 1e-6

_PAULI = {
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}
_PAULI_STACK = np.stack([_PAULI[k] for k in "IXYZ"])
_LABEL_CODE = {"X": 1, "Y": 2, "Z": 3}

_H = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)
# rotate the eigenbasis of each Pauli onto the computational basis
_BASIS_CHANGE = {
    "X": _H,
    "Y": _H @ np.diag([1, -1j]),
    "Z": np.eye(2, dtype=np.complex128),
}


@dataclass(frozen=True)
class PauliSetting:
    """Measurement basis per local qubit; ``bases[k]`` belongs to local qubit k."""

    bases: tuple

    def __post_init__(self):
        bases = tuple(str(b).upper() for b in self.bases)
        if any(b not in _LABEL_CODE for b in bases):
            raise DomainError(f"setting labels must be X, Y or Z, got {bases}")
        object.__setattr__(self, "bases", bases)

    @property
    def n_qubits(self) -> int:
        return len(self.bases)

    @property
    def label(self) -> str:
        return "".join(self.bases)


@dataclass(frozen=True)
class ShotRecord:
    setting: PauliSetting
    counts: np.ndarray
    shots: int  # 0 marks exact-expectation records whose counts are probabilities

    def frequencies(self) -> np.ndarray:
        return self.counts / (self.shots if self.shots else self.counts.sum())

    def to_dict(self) -> dict:
        return {"setting": self.setting.label, "shots": self.shots, "counts": self.counts.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "ShotRecord":
        return cls(PauliSetting(tuple(d["setting"])), np.asarray(d["counts"]), int(d["shots"]))


def all_settings(n_qubits: int) -> list:
    return [PauliSetting(tuple(b)) for b in itertools.product("XYZ", repeat=n_qubits)]


def _basis_change(setting: PauliSetting) -> np.ndarray:
    v = np.ones((1, 1), dtype=np.complex128)
    for label in reversed(setting.bases):  # most significant qubit first
        v = np.kron(v, _BASIS_CHANGE[label])
    return v


def setting_probabilities(rho: np.ndarray, setting: PauliSetting) -> np.ndarray:
    v = _basis_change(setting)
    p = np.einsum("ij,jk,ik->i", v, rho, v.conj()).real
    p = np.clip(p, 0.0, None)
    return p / p.sum()


def measure_density_matrix(
    rho,
    shots_per_setting: int,
    rng: np.random.Generator | None = None,
    max_qubits: int = MAX_TOMOGRAPHY_QUBITS,
) -> list:
    """One ShotRecord per setting of the full 3**n product-basis set.

    ``shots_per_setting = 0`` selects exact mode: counts are the Born
    probabilities themselves.
    """
    rho = rho.elements if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=np.complex128)
    n = int(rho.shape[0]).bit_length() - 1
    if n > max_qubits:
        raise DomainError(f"refusing tomography on {n} qubits (3^{n} settings); limit is {max_qubits}")
    if shots_per_setting < 0:
        raise DomainError(f"shots_per_setting must be >= 0, got {shots_per_setting}")
    if shots_per_setting and rng is None:
        raise DomainError("finite-shot tomography needs a random generator")
    records = []
    for setting in all_settings(n):
        p = setting_probabilities(rho, setting)
        if shots_per_setting == 0:
            counts = p
        else:
            counts = rng.multinomial(shots_per_setting, p)
        records.append(ShotRecord(setting, counts, shots_per_setting))
    return records


def simulate_measurements(
    state: StateVector,
    partition: Partition,
    shots_per_setting: int,
    rng: np.random.Generator | None = None,
    max_qubits: int = MAX_TOMOGRAPHY_QUBITS,
) -> list:
    """Pauli tomography records for rho_A of ``state`` (exact Born statistics)."""
    rho = reduced_density_array(state, partition)
    return measure_density_matrix(rho, shots_per_setting, rng, max_qubits)


def _walsh_hadamard(f: np.ndarray) -> np.ndarray:
    """out[m] = sum_o f[o] (-1)^popcount(o & m)."""
    out = np.array(f, dtype=float)
    h = 1
    while h < out.size:
        out = out.reshape(-1, 2, h)
        out = np.stack([out[:, 0] + out[:, 1], out[:, 0] - out[:, 1]], axis=1).reshape(-1)
        h *= 2
    return out


def _pauli_coefficients(records: Sequence[ShotRecord]) -> tuple:
    if not records:
        raise IncompleteDataError("no tomography records")
    n = records[0].setting.n_qubits
    seen = {r.setting.bases for r in records}
    expected = set(itertools.product("XYZ", repeat=n))
    if any(r.setting.n_qubits != n for r in records) or not expected <= seen:
        missing = len(expected - seen)
        raise IncompleteDataError(f"tomography data is missing {missing} of {3 ** n} settings")

    dim = 1 << n
    bits = (np.arange(dim)[:, None] >> np.arange(n)[None, :]) & 1  # mask -> support bits
    place = 4 ** np.arange(n)
    totals = np.zeros(4 ** n)
    hits = np.zeros(4 ** n)
    for rec in records:
        digits = np.array([_LABEL_CODE[b] for b in rec.setting.bases])
        codes = bits @ (digits * place)
        totals[codes] += _walsh_hadamard(rec.frequencies())
        hits[codes] += 1
    return totals / hits, n


def linear_inversion(records: Sequence[ShotRecord]) -> np.ndarray:
    """rho = 2^-n sum_P <P> P over all 4^n Pauli strings.

    Each expectation averages every setting that agrees with P on its
    support.  The identity coefficient is exactly 1, so the trace is 1.
    """
    coeffs, n = _pauli_coefficients(records)
    t = coeffs.reshape((4,) * n) if n else coeffs.reshape(())
    for _ in range(n):
        t = np.tensordot(t, _PAULI_STACK, axes=([0], [0]))
    # axes are now (row_{n-1}, col_{n-1}, ..., row_0, col_0)
    t = t.transpose(list(range(0, 2 * n, 2)) + list(range(1, 2 * n, 2)))
    rho = t.reshape(1 << n, 1 << n) / (1 << n)
    return 0.5 * (rho + rho.conj().T)


def _project_eigenvalues(w: np.ndarray) -> np.ndarray:
    """Clip-and-redistribute on a unit-sum eigenvalue vector; returns values in input order.

    Walking up from the most negative eigenvalue, each eigenvalue that would
    stay negative after sharing the accumulated deficit is set to zero and its
    value added to the deficit; the deficit is then spread equally over the
    remaining eigenvalues.
    """
    order = np.argsort(w)[::-1]
    mu = np.asarray(w, dtype=float)[order]  # descending
    deficit = 0.0
    i = mu.size - 1
    while i >= 0 and mu[i] + deficit / (i + 1) < 0:
        deficit += mu[i]
        mu[i] = 0.0
        i -= 1
    mu[: i + 1] += deficit / (i + 1)
    out = np.empty_like(mu)
    out[order] = mu
    return out


def _from_eigh(w: np.ndarray, v: np.ndarray) -> DensityMatrix:
    rho = (v * w) @ v.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    n = int(rho.shape[0]).bit_length() - 1
    return DensityMatrix(n, rho / np.trace(rho).real)


def project_physical(matrix) -> DensityMatrix:
    """Closest unit-trace PSD matrix in Frobenius norm (eigenvalue clip and redistribute).

    Eigenvectors are kept; only the eigenvalues move (see ``_project_eigenvalues``).
    """
    m = matrix.elements if isinstance(matrix, DensityMatrix) else np.asarray(matrix, dtype=np.complex128)
    m = 0.5 * (m + m.conj().T)
    tr = np.trace(m).real
    if abs(tr - 1.0) > 1e-8:
        raise ValidationError(f"projection expects unit trace, got {tr!r}")
    w, v = np.linalg.eigh(m)
    return _from_eigh(_project_eigenvalues(w), v)


def depolarize(rho, epsilon: float) -> DensityMatrix:
    """(1 - eps) rho + eps I/L."""
    if not 0.0 <= epsilon <= 1.0:
        raise DomainError(f"epsilon must lie in [0, 1], got {epsilon}")
    m = rho.elements if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=np.complex128)
    dim = m.shape[0]
    n = dim.bit_length() - 1
    return DensityMatrix(n, (1.0 - epsilon) * m + epsilon * np.eye(dim) / dim)


def purity_rescale(rho, target_purity: float) -> DensityMatrix:
    """Adjust the mixedness of ``rho`` so that Tr(rho'^2) equals ``target_purity``.

    Lowering the purity mixes with I/L: rho' = lam rho + (1 - lam) I/L with
    lam^2 (P - 1/L) + 1/L = target.  Raising it inverts that channel,
    rho' = (rho - (1 - lam) I/L) / lam, projected back to a physical state;
    lam is found by root bracketing because the projection shifts the purity.
    """
    m = rho.elements if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=np.complex128)
    dim = m.shape[0]
    n = dim.bit_length() - 1
    floor = 1.0 / dim
    if not floor - 1e-12 <= target_purity <= 1.0 + 1e-12:
        raise DomainError(f"target purity {target_purity} outside [1/L, 1] = [{floor}, 1]")
    current = purity(m)
    eye = np.eye(dim) / dim

    if abs(target_purity - current) <= 1e-12:
        return DensityMatrix(n, m.copy())
    if target_purity < current:
        lam = np.sqrt((target_purity - floor) / (current - floor))
        return DensityMatrix(n, lam * m + (1.0 - lam) * eye)

    if current - floor <= 1e-15:
        raise InfeasibleTargetError("the maximally mixed state cannot be made purer")

    # projection keeps eigenvectors, so the search runs on the eigenvalues alone
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))

    def inverted(lam):
        raw = (w - (1.0 - lam) / dim) / lam
        # small lam amplifies rounding in the trace
        return _project_eigenvalues(raw / raw.sum())

    def gap(lam):
        return float(np.sum(inverted(lam) ** 2)) - target_purity

    lo = 1e-9
    if gap(lo) < 0:
        raise InfeasibleTargetError(
            f"target purity {target_purity} unreachable by inverting depolarization of this state"
        )
    lam = brentq(gap, lo, 1.0, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    out = _from_eigh(inverted(lam), v)
    achieved = purity(out)
    if abs(achieved - target_purity) > PURITY_TOL:
        raise InfeasibleTargetError(
            f"purity rescaling reached {achieved!r} instead of {target_purity!r}"
        )
    return out
