"""Pseudo-random circuits: Haar SU(2) gates, xy-plane rotations and the global XY entangler.

One layer applies an independent Haar-random SU(2) gate to every qubit (each
realised as two successive xy-plane rotations) followed by the global
excitation-conserving gate

    U = exp(-i tau sum_{i<j} J_ij (s+_i s-_j + s+_j s-_i)).

The entangler is evaluated by a Chebyshev expansion of the propagator on the
sparse Hamiltonian.  Spectral bounds and the sparse matrix are cached per
coupling matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh
from scipy.special import jv

from .errors import DecompositionError, DomainError, NumericalError, ValidationError
from .qstate import StateVector, _apply_1q, basis_state, check_unitary

TWO_PI = 2.0 * math.pi

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
IDENTITY = np.eye(2, dtype=np.complex128)

# Chebyshev coefficients below this magnitude (past the Bessel turning point) end the series.
CHEB_COEFF_TOL = 1e-18
# relative padding applied to the numerically estimated spectral bounds
CHEB_BOUND_PAD = 1e-3
NORM_CHECK_TOL = 1e-9


def _wrap(angle: float) -> float:
    a = math.fmod(float(angle), TWO_PI)
    if a < 0:
        a += TWO_PI
    # fmod can return exactly 2pi after the shift for tiny negative inputs
    return 0.0 if a >= TWO_PI else a


@dataclass(frozen=True)
class RotationParams:
    """Rotation by ``theta`` about the xy-plane axis at azimuth ``phi``; angles wrapped to [0, 2pi)."""

    theta: float
    phi: float

    def __post_init__(self):
        object.__setattr__(self, "theta", _wrap(self.theta))
        object.__setattr__(self, "phi", _wrap(self.phi))


class CouplingMatrix:
    """Symmetric, zero-diagonal coupling strengths J_ij between qubits.

    Immutable; equality and hashing use the exact bytes of ``J`` so that
    cached entanglers are shared between identical couplings.
    """

    __slots__ = ("n_qubits", "J", "_key")

    def __init__(self, J):
        J = np.array(J, dtype=np.float64)
        if J.ndim != 2 or J.shape[0] != J.shape[1]:
            raise ValidationError(f"coupling matrix must be square, got shape {J.shape}")
        if not np.array_equal(J, J.T):
            raise ValidationError("coupling matrix must be symmetric")
        if np.any(np.diag(J) != 0):
            raise ValidationError("coupling matrix must have a zero diagonal")
        J.setflags(write=False)
        object.__setattr__(self, "n_qubits", J.shape[0])
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "_key", (J.shape[0], J.tobytes()))

    def __setattr__(self, name, value):
        raise AttributeError("CouplingMatrix is immutable")

    def __reduce__(self):
        return (CouplingMatrix, (np.array(self.J),))

    @classmethod
    def uniform(cls, n_qubits: int, strength: float = 1.0) -> "CouplingMatrix":
        J = np.full((n_qubits, n_qubits), float(strength))
        np.fill_diagonal(J, 0.0)
        return cls(J)

    def __eq__(self, other):
        return isinstance(other, CouplingMatrix) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        return f"CouplingMatrix(n_qubits={self.n_qubits})"

    def to_list(self) -> list:
        return self.J.tolist()


@dataclass(frozen=True)
class LayerSpec:
    single_gates: tuple  # one (first, second) RotationParams pair per qubit
    tau_ent: float
    coupling: CouplingMatrix


@dataclass(frozen=True)
class CircuitSpec:
    n_qubits: int
    layers: tuple

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        for k, layer in enumerate(self.layers):
            if len(layer.single_gates) != self.n_qubits:
                raise ValidationError(
                    f"layer {k} has {len(layer.single_gates)} gate pairs for {self.n_qubits} qubits"
                )
            if not layer.tau_ent > 0:
                raise ValidationError(f"layer {k} has non-positive tau_ent {layer.tau_ent}")
            if layer.coupling.n_qubits != self.n_qubits:
                raise ValidationError(f"layer {k} coupling does not cover {self.n_qubits} qubits")

    @property
    def depth(self) -> int:
        return len(self.layers)

    def to_dict(self) -> dict:
        """JSON-ready form; couplings are stored once and referenced by index."""
        couplings: list = []
        layers = []
        for layer in self.layers:
            if layer.coupling not in couplings:
                couplings.append(layer.coupling)
            layers.append(
                {
                    "tau_ent": layer.tau_ent,
                    "coupling": couplings.index(layer.coupling),
                    "gates": [
                        [[g1.theta, g1.phi], [g2.theta, g2.phi]] for g1, g2 in layer.single_gates
                    ],
                }
            )
        return {
            "n_qubits": self.n_qubits,
            "couplings": [c.to_list() for c in couplings],
            "layers": layers,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CircuitSpec":
        couplings = [CouplingMatrix(J) for J in d["couplings"]]
        layers = tuple(
            LayerSpec(
                single_gates=tuple(
                    (RotationParams(*g1), RotationParams(*g2)) for g1, g2 in layer["gates"]
                ),
                tau_ent=float(layer["tau_ent"]),
                coupling=couplings[layer["coupling"]],
            )
            for layer in d["layers"]
        )
        return cls(int(d["n_qubits"]), layers)


def rotation_matrix(params: RotationParams) -> np.ndarray:
    """R_phi(theta) = cos(theta/2) I - i sin(theta/2) (cos(phi) X + sin(phi) Y)."""
    c = math.cos(params.theta / 2)
    s = math.sin(params.theta / 2)
    e = complex(math.cos(params.phi), math.sin(params.phi))
    return np.array([[c, -1j * s * e.conjugate()], [-1j * s * e, c]], dtype=np.complex128)


def sample_haar_su2(rng: np.random.Generator) -> np.ndarray:
    """Haar-random SU(2) element from a uniformly distributed unit quaternion."""
    q = rng.standard_normal(4)
    q /= np.linalg.norm(q)
    a = complex(q[0], q[1])
    b = complex(q[2], q[3])
    return np.array([[a, -b.conjugate()], [b, a.conjugate()]])


def decompose_to_xy_rotations(U, imag_tol: float = 1e-12) -> tuple:
    """Write ``U`` (up to global phase) as ``R(second) @ R(first)`` with xy-plane axes.

    Closed form.  After removing the global phase, U = [[a, -b*], [b, a*]].
    If ``a`` is real the gate is already a single xy rotation and ``second``
    is the identity.  Otherwise both rotations get the same angle theta with
    cos^2(theta/2) = (1 - |a|^2) / (2 (1 - Re a)); the azimuth difference
    follows from the (0, 0) element and the common azimuth from the (1, 0)
    element.
    """
    U = check_unitary(U, tol=1e-9)
    if U.shape != (2, 2):
        raise ValidationError(f"expected a 2x2 unitary, got shape {U.shape}")
    det = complex(np.linalg.det(U))
    V = U / np.sqrt(det)
    a = complex(V[0, 0])
    b = complex(V[1, 0])

    if abs(a.imag) <= imag_tol:
        if abs(b) <= imag_tol:
            # +-identity
            first = RotationParams(0.0, 0.0)
        else:
            half = math.atan2(abs(b), a.real)
            first = RotationParams(2.0 * half, np.angle(1j * b))
        second = RotationParams(0.0, 0.0)
    else:
        x = (1.0 - abs(a) ** 2) / (2.0 * (1.0 - a.real))
        x = min(max(x, 0.0), 1.0)
        theta = 2.0 * math.acos(math.sqrt(x))
        delta = np.angle(x - a)
        if abs(b) <= imag_tol:
            phi2 = 0.0
        else:
            phi2 = np.angle(b) + math.pi / 2 - np.angle(1.0 - a)
        first = RotationParams(theta, phi2 + delta)
        second = RotationParams(theta, phi2)

    recon = rotation_matrix(second) @ rotation_matrix(first)
    phase = np.vdot(recon.reshape(-1), U.reshape(-1))
    phase /= abs(phase)
    err = float(np.max(np.abs(phase * recon - U)))
    if err > 1e-9:
        raise DecompositionError(
            f"xy decomposition failed: reconstruction error {err:.3e} for a={a!r}, b={b!r}"
        )
    return first, second


class XYHamiltonian:
    """sum_{i<j} J_ij (s+_i s-_j + h.c.) on a chosen list of active qubits.

    The operator acts on ``2**len(active)`` amplitudes; local bit ``k``
    corresponds to ``active[k]``.  Only basis states of equal Hamming weight
    that differ by one hopped excitation are connected.
    """

    def __init__(self, coupling: CouplingMatrix, active: Sequence[int] | None = None):
        if active is None:
            active = range(coupling.n_qubits)
        active = tuple(int(q) for q in active)
        if len(set(active)) != len(active):
            raise DomainError(f"active qubits must be distinct: {active}")
        if any(not 0 <= q < coupling.n_qubits for q in active):
            raise DomainError(f"active qubits {active} out of range for {coupling.n_qubits} qubits")
        self.coupling = coupling
        self.active = active
        self.n_qubits = len(active)
        self.terms = [
            (i, j, float(coupling.J[active[i], active[j]]))
            for i in range(self.n_qubits)
            for j in range(i + 1, self.n_qubits)
            if coupling.J[active[i], active[j]] != 0.0
        ]

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    def sparse(self) -> sp.csr_matrix:
        x = np.arange(self.dim, dtype=np.int64)
        rows, cols, vals = [], [], []
        for i, j, jij in self.terms:
            hop = ((x >> i) & 1) != ((x >> j) & 1)
            src = x[hop]
            rows.append(src ^ ((1 << i) | (1 << j)))
            cols.append(src)
            vals.append(np.full(src.size, jij))
        if not rows:
            return sp.csr_matrix((self.dim, self.dim), dtype=np.float64)
        h = sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(self.dim, self.dim),
        )
        h.sort_indices()
        return h

    def dense(self) -> np.ndarray:
        return self.sparse().toarray()

    def sector_blocks(self) -> dict:
        """Dense block of H for every Hamming weight, keyed by weight."""
        h = self.sparse()
        weights = np.array([bin(s).count("1") for s in range(self.dim)])
        return {
            w: h[np.ix_(weights == w, weights == w)].toarray() for w in range(self.n_qubits + 1)
        }


class _Propagator:
    """Cached sparse Hamiltonian and spectral interval for one coupling matrix."""

    def __init__(self, coupling: CouplingMatrix):
        self.h = XYHamiltonian(coupling).sparse()
        dim = self.h.shape[0]
        if self.h.nnz == 0:
            lo = hi = 0.0
        elif dim <= 2048:
            w = np.linalg.eigvalsh(self.h.toarray())
            lo, hi = float(w[0]), float(w[-1])
        else:
            v0 = np.ones(dim) / math.sqrt(dim)
            hi = float(eigsh(self.h, k=1, which="LA", v0=v0, return_eigenvectors=False, tol=1e-10)[0])
            lo = float(eigsh(self.h, k=1, which="SA", v0=v0, return_eigenvectors=False, tol=1e-10)[0])
        pad = CHEB_BOUND_PAD * max(hi - lo, 1.0)
        self.center = 0.5 * (hi + lo)
        self.radius = 0.5 * (hi - lo) + pad

    def apply(self, psi: np.ndarray, tau: float) -> np.ndarray:
        x = self.radius * tau
        if self.h.nnz == 0 or x == 0.0:
            return np.exp(-1j * self.center * tau) * psi
        kmax = int(x + 30 + 8 * math.log(x + 2)) * 2 + 10
        coeffs = jv(np.arange(kmax), x)
        h, c, r = self.h, self.center, self.radius

        def scaled(v):
            return (h @ v - c * v) / r

        t_prev = psi
        t_cur = scaled(psi)
        out = coeffs[0] * t_prev + 2.0 * (-1j) * coeffs[1] * t_cur
        phase = -1j
        for k in range(2, kmax):
            if k > x and abs(coeffs[k]) < CHEB_COEFF_TOL:
                break
            t_prev, t_cur = t_cur, 2.0 * scaled(t_cur) - t_prev
            phase *= -1j
            out += 2.0 * phase * coeffs[k] * t_cur
        else:
            raise NumericalError(
                f"Chebyshev series did not converge within {kmax} terms "
                f"(radius*tau = {x:.3g}, last coefficient {abs(coeffs[-1]):.3e})"
            )
        return np.exp(-1j * c * tau) * out


@lru_cache(maxsize=32)
def _propagator(coupling: CouplingMatrix) -> _Propagator:
    return _Propagator(coupling)


def build_entangler_hamiltonian(coupling: CouplingMatrix, active: Sequence[int] | None = None) -> XYHamiltonian:
    return XYHamiltonian(coupling, active)


def _entangle_raw(psi: np.ndarray, coupling: CouplingMatrix, tau: float) -> np.ndarray:
    if tau == 0:
        return psi.copy()
    before = float(np.vdot(psi, psi).real)
    out = _propagator(coupling).apply(psi, tau)
    after = float(np.vdot(out, out).real)
    if abs(after - before) > NORM_CHECK_TOL:
        raise NumericalError(
            f"entangler lost norm: {before!r} -> {after!r} (tau={tau}, n={coupling.n_qubits})"
        )
    return out


def apply_entangler(state: StateVector, coupling: CouplingMatrix, tau: float) -> StateVector:
    """exp(-i tau H_XY) applied to ``state``; all qubits of ``coupling`` are active."""
    if tau < 0:
        raise DomainError(f"tau must be non-negative, got {tau}")
    if coupling.n_qubits != state.n_qubits:
        raise DomainError(
            f"coupling covers {coupling.n_qubits} qubits but the state has {state.n_qubits}"
        )
    if tau == 0:
        return state
    out = _entangle_raw(state.amplitudes, coupling, float(tau))
    return StateVector(state.n_qubits, out / np.linalg.norm(out))


def build_random_circuit(
    n_qubits: int,
    d_layers: int,
    coupling: CouplingMatrix,
    tau: float,
    rng: np.random.Generator,
) -> CircuitSpec:
    """Draw ``d_layers`` layers of Haar SU(2) gates (stored as xy-rotation pairs)."""
    if d_layers < 0:
        raise DomainError(f"d_layers must be non-negative, got {d_layers}")
    layers = []
    for _ in range(d_layers):
        gates = tuple(decompose_to_xy_rotations(sample_haar_su2(rng)) for _ in range(n_qubits))
        layers.append(LayerSpec(gates, float(tau), coupling))
    return CircuitSpec(n_qubits, tuple(layers))


def run_circuit(spec: CircuitSpec) -> StateVector:
    """Apply every layer to |0...0>: single-qubit gates first, then the entangler."""
    psi = basis_state(spec.n_qubits, 0).amplitudes.copy()
    n = spec.n_qubits
    for layer in spec.layers:
        for q, (first, second) in enumerate(layer.single_gates):
            psi = _apply_1q(psi, n, rotation_matrix(second) @ rotation_matrix(first), q)
        psi = _entangle_raw(psi, layer.coupling, layer.tau_ent)
    return StateVector(n, psi / np.linalg.norm(psi))
