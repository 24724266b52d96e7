"""Statevectors, reduced density matrices and the partial transpose.

Bit convention: qubit ``k`` is bit ``k`` of the basis-state integer, so qubit 0
is the least significant bit.  Inside a reduced density matrix of subsystem
``A = A1 + A2`` the A1 qubits form the most significant index block:

    index = (a1_index << N_A2) | a2_index

and within each block the listed qubits keep the global LSB-first order
(``a1_qubits[0]`` is bit 0 of ``a1_index``).  With this layout the partial
transpose over A1 is a block transpose with stride ``L_A2``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError, ValidationError

logger = logging.getLogger(__name__)

NORM_TOL = 1e-10
HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-8
EIGS_HERMITIAN_TOL = 1e-8
UNITARY_TOL = 1e-10


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class StateVector:
    """Pure state of ``n_qubits`` qubits; ``amplitudes`` has length ``2**n_qubits``."""

    n_qubits: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        if self.n_qubits < 0 or amps.size != 1 << self.n_qubits:
            raise DomainError(
                f"amplitude vector of length {amps.size} does not match {self.n_qubits} qubits"
            )
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValidationError(f"state is not normalized: <psi|psi> = {norm!r}")
        object.__setattr__(self, "amplitudes", _readonly(amps))

    @classmethod
    def from_array(cls, amplitudes, normalize: bool = False) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
        n = int(amps.size).bit_length() - 1
        if amps.size == 0 or 1 << n != amps.size:
            raise DomainError(f"length {amps.size} is not a power of two")
        if normalize:
            amps = amps / np.linalg.norm(amps)
        return cls(n, amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite matrix on ``n_qubits`` qubits.

    Eigenvalues in ``[-PSD_TOL, 0)`` are tolerated (rounding on the exact
    simulation path) and logged at debug level.
    """

    n_qubits: int
    elements: np.ndarray = field(repr=False)

    def __post_init__(self):
        rho = np.array(self.elements, dtype=np.complex128)
        dim = 1 << self.n_qubits
        if rho.shape != (dim, dim):
            raise DomainError(f"matrix of shape {rho.shape} does not match {self.n_qubits} qubits")
        asym = float(np.max(np.abs(rho - rho.conj().T))) if dim else 0.0
        if asym > HERMITIAN_TOL:
            raise ValidationError(f"density matrix is not Hermitian (max asymmetry {asym:.3e})")
        tr = complex(np.trace(rho))
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValidationError(f"density matrix trace is {tr!r}, expected 1")
        lam_min = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])
        if lam_min < -PSD_TOL:
            raise ValidationError(f"density matrix has eigenvalue {lam_min:.3e} < -{PSD_TOL}")
        if lam_min < 0:
            logger.debug("density matrix min eigenvalue %.3e accepted within tolerance", lam_min)
        object.__setattr__(self, "elements", _readonly(rho))

    @property
    def dim(self) -> int:
        return self.elements.shape[0]

    @classmethod
    def from_pure(cls, state: StateVector) -> "DensityMatrix":
        psi = state.amplitudes
        return cls(state.n_qubits, np.outer(psi, psi.conj()))

    @classmethod
    def maximally_mixed(cls, n_qubits: int) -> "DensityMatrix":
        dim = 1 << n_qubits
        return cls(n_qubits, np.eye(dim, dtype=np.complex128) / dim)


@dataclass(frozen=True)
class HermitianSpectrum:
    eigenvalues: np.ndarray
    eigenvectors: Optional[np.ndarray] = None


@dataclass(frozen=True)
class Partition:
    """Assignment of qubits to the subsystems A1, A2 and the environment B."""

    a1_qubits: tuple
    a2_qubits: tuple
    b_qubits: tuple

    def __post_init__(self):
        a1, a2, b = (tuple(int(q) for q in part) for part in (self.a1_qubits, self.a2_qubits, self.b_qubits))
        object.__setattr__(self, "a1_qubits", a1)
        object.__setattr__(self, "a2_qubits", a2)
        object.__setattr__(self, "b_qubits", b)
        everything = a1 + a2 + b
        if len(set(everything)) != len(everything):
            raise DomainError(f"partition lists overlap: {a1}, {a2}, {b}")
        if set(everything) != set(range(len(everything))):
            raise DomainError(f"partition does not cover qubits 0..{len(everything) - 1}: {sorted(everything)}")

    @classmethod
    def from_sizes(cls, n_a1: int, n_a2: int, n_b: int) -> "Partition":
        """Contiguous assignment: A1 = 0..n_a1-1, A2 next, B last."""
        if min(n_a1, n_a2, n_b) < 0:
            raise DomainError("subsystem sizes must be non-negative")
        return cls(
            tuple(range(n_a1)),
            tuple(range(n_a1, n_a1 + n_a2)),
            tuple(range(n_a1 + n_a2, n_a1 + n_a2 + n_b)),
        )

    @property
    def n_a1(self) -> int:
        return len(self.a1_qubits)

    @property
    def n_a2(self) -> int:
        return len(self.a2_qubits)

    @property
    def n_b(self) -> int:
        return len(self.b_qubits)

    @property
    def n_a(self) -> int:
        return self.n_a1 + self.n_a2

    @property
    def n_qubits(self) -> int:
        return self.n_a + self.n_b

    @property
    def l_a1(self) -> int:
        return 1 << self.n_a1

    @property
    def l_a2(self) -> int:
        return 1 << self.n_a2

    @property
    def l_b(self) -> int:
        return 1 << self.n_b

    @property
    def l_a(self) -> int:
        return 1 << self.n_a

    def sizes(self) -> tuple:
        return (self.n_a1, self.n_a2, self.n_b)

    def swapped(self) -> "Partition":
        """Same qubits with the roles of A1 and A2 exchanged."""
        return Partition(self.a2_qubits, self.a1_qubits, self.b_qubits)

    def a_local_qubits(self) -> tuple:
        """Global qubit index of each local qubit (bit) of rho_A, LSB first."""
        return self.a2_qubits + self.a1_qubits

    def to_dict(self) -> dict:
        return {"a1": list(self.a1_qubits), "a2": list(self.a2_qubits), "b": list(self.b_qubits)}

    @classmethod
    def from_dict(cls, d: dict) -> "Partition":
        return cls(tuple(d["a1"]), tuple(d["a2"]), tuple(d["b"]))


def basis_state(n_qubits: int, bitstring: int = 0) -> StateVector:
    if n_qubits < 0:
        raise DomainError(f"n_qubits must be non-negative, got {n_qubits}")
    dim = 1 << n_qubits
    if not 0 <= bitstring < dim:
        raise DomainError(f"bitstring {bitstring} out of range for {n_qubits} qubits")
    amps = np.zeros(dim, dtype=np.complex128)
    amps[bitstring] = 1.0
    return StateVector(n_qubits, amps)


def check_unitary(gate: np.ndarray, tol: float = UNITARY_TOL) -> np.ndarray:
    gate = np.asarray(gate, dtype=np.complex128)
    if gate.ndim != 2 or gate.shape[0] != gate.shape[1]:
        raise ValidationError(f"gate must be square, got shape {gate.shape}")
    err = float(np.max(np.abs(gate.conj().T @ gate - np.eye(gate.shape[0]))))
    if err > tol:
        raise ValidationError(f"gate is not unitary (max |U^dag U - I| = {err:.3e})")
    return gate


def _apply_1q(psi: np.ndarray, n_qubits: int, gate: np.ndarray, target: int) -> np.ndarray:
    """Raw kernel: apply a 2x2 gate to bit ``target`` of the flat amplitude array."""
    view = psi.reshape(1 << (n_qubits - 1 - target), 2, 1 << target)
    return np.einsum("ij,ajb->aib", gate, view).reshape(-1)


def apply_single_qubit_gate(state: StateVector, gate, target: int) -> StateVector:
    gate = check_unitary(gate)
    if gate.shape != (2, 2):
        raise ValidationError(f"single-qubit gate must be 2x2, got {gate.shape}")
    if not 0 <= target < state.n_qubits:
        raise DomainError(f"target {target} out of range for {state.n_qubits} qubits")
    out = _apply_1q(state.amplitudes, state.n_qubits, gate, target)
    return StateVector(state.n_qubits, out)


def _check_partition(n_qubits: int, partition: Partition) -> None:
    if partition.n_qubits != n_qubits:
        raise DomainError(
            f"partition covers {partition.n_qubits} qubits but the state has {n_qubits}"
        )


def _state_matrix(psi: np.ndarray, n_qubits: int, partition: Partition) -> np.ndarray:
    """Reshape amplitudes into an (L_A, L_B) matrix in the rho_A index layout."""
    tensor = psi.reshape((2,) * n_qubits) if n_qubits else psi.reshape(())
    # C-order axis of qubit q is n-1-q; list qubits from most to least significant
    order = (
        [n_qubits - 1 - q for q in reversed(partition.a1_qubits)]
        + [n_qubits - 1 - q for q in reversed(partition.a2_qubits)]
        + [n_qubits - 1 - q for q in reversed(partition.b_qubits)]
    )
    if n_qubits:
        tensor = np.transpose(tensor, order)
    return np.ascontiguousarray(tensor).reshape(partition.l_a, partition.l_b)


def reduced_density_array(state: StateVector, partition: Partition) -> np.ndarray:
    """rho_A as a bare array (no validation); see :func:`partial_trace_to_A`."""
    _check_partition(state.n_qubits, partition)
    m = _state_matrix(state.amplitudes, state.n_qubits, partition)
    rho = m @ m.conj().T
    return 0.5 * (rho + rho.conj().T)


def partial_trace_to_A(state: StateVector, partition: Partition) -> DensityMatrix:
    """Trace out the environment B, returning rho_A with A1 as the high index block."""
    return DensityMatrix(partition.n_a, reduced_density_array(state, partition))


def partial_trace_to_B(state: StateVector, partition: Partition) -> DensityMatrix:
    _check_partition(state.n_qubits, partition)
    m = _state_matrix(state.amplitudes, state.n_qubits, partition)
    rho = m.T @ m.conj()
    return DensityMatrix(partition.n_b, 0.5 * (rho + rho.conj().T))


def _as_matrix(rho) -> np.ndarray:
    if isinstance(rho, DensityMatrix):
        return rho.elements
    return np.asarray(rho, dtype=np.complex128)


def partial_transpose(rho, partition: Partition) -> np.ndarray:
    """Transpose the A1 factor of rho_A; returns a plain Hermitian array."""
    mat = _as_matrix(rho)
    la1, la2 = partition.l_a1, partition.l_a2
    if mat.shape != (la1 * la2, la1 * la2):
        raise DomainError(
            f"matrix of shape {mat.shape} does not match L_A = {la1 * la2} for this partition"
        )
    t = mat.reshape(la1, la2, la1, la2).transpose(2, 1, 0, 3)
    return np.ascontiguousarray(t).reshape(la1 * la2, la1 * la2)


def hermitian_eigs(matrix, vectors: bool = False, tol: float = EIGS_HERMITIAN_TOL) -> HermitianSpectrum:
    """Eigenvalues (ascending) of a Hermitian matrix after symmetrizing (M + M^dag)/2."""
    m = _as_matrix(matrix)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"matrix must be square, got shape {m.shape}")
    asym = float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0
    if asym > tol:
        raise ValidationError(f"matrix is not Hermitian (max asymmetry {asym:.3e})")
    h = 0.5 * (m + m.conj().T)
    if vectors:
        w, v = np.linalg.eigh(h)
        return HermitianSpectrum(w, v)
    return HermitianSpectrum(np.linalg.eigvalsh(h))


def purity(rho) -> float:
    """Tr(rho^2), computed as the squared Frobenius norm."""
    m = _as_matrix(rho)
    return float(np.sum(np.abs(m) ** 2))


def random_state(n_qubits: int, rng: np.random.Generator) -> StateVector:
    """Haar-random pure state (normalized complex Gaussian vector)."""
    dim = 1 << n_qubits
    z = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return StateVector(n_qubits, z / np.linalg.norm(z))
