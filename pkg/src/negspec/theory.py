"""Reference laws for random mixed states and random-circuit output statistics.

Covers the semicircle law for the negativity spectrum, the phase classifier
(PPT / ES / ME), the averaged log-negativity predictor, a Marchenko-Pastur
comparison density, and Porter-Thomas statistics with a binned KL divergence.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import DivergenceUndefinedError, DomainError, ValidationError
from .qstate import Partition, StateVector


class PhaseLabel(str, enum.Enum):
    PPT = "PPT"
    ES = "ES"
    ME = "ME"
    BOUNDARY = "BOUNDARY"


class EdgeSign(str, enum.Enum):
    POSITIVE = "positive"
    ZERO = "zero"
    NEGATIVE = "negative"


def c1(base: float = 2.0) -> float:
    """Finite offset log(8 / (3 pi)) of the saturation branch, in the given log base."""
    return math.log(8.0 / (3.0 * math.pi)) / math.log(base)


@dataclass(frozen=True)
class SemicircleParams:
    center: float
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise DomainError(f"semicircle radius must be positive, got {self.radius}")

    @classmethod
    def from_dims(cls, l_a: int, l_b: int) -> "SemicircleParams":
        return cls(1.0 / l_a, 2.0 / math.sqrt(l_a * l_b))

    @classmethod
    def from_partition(cls, partition: Partition) -> "SemicircleParams":
        return cls.from_dims(partition.l_a, partition.l_b)

    @property
    def support(self) -> tuple:
        return (self.center - self.radius, self.center + self.radius)


def semicircle_density(xi, params: SemicircleParams, l_a: int):
    """P(xi) = 2 L_A / (pi a^2) sqrt(a^2 - (xi - 1/L_A)^2); integrates to L_A."""
    xi = np.asarray(xi, dtype=float)
    a = params.radius
    inside = np.clip(a * a - (xi - params.center) ** 2, 0.0, None)
    out = 2.0 * l_a / (math.pi * a * a) * np.sqrt(inside)
    return out if out.ndim else float(out)


def semicircle_cdf(xi, params: SemicircleParams):
    """Normalized cumulative distribution (total mass 1) of the semicircle."""
    u = np.clip((np.asarray(xi, dtype=float) - params.center) / params.radius, -1.0, 1.0)
    out = 0.5 + (u * np.sqrt(1.0 - u * u) + np.arcsin(u)) / math.pi
    return out if out.ndim else float(out)


def semicircle_ks_distance(eigenvalues, params: SemicircleParams) -> float:
    """Kolmogorov-Smirnov distance between pooled eigenvalues and the semicircle CDF."""
    return float(stats.kstest(np.asarray(eigenvalues, float), lambda x: semicircle_cdf(x, params)).statistic)


def semicircle_edge_sign(partition: Partition) -> EdgeSign:
    """Sign of the lower support edge 1/L_A - 2/sqrt(L_A L_B), in exact integer arithmetic.

    1/L_A > 2/sqrt(L_A L_B)  <=>  L_B > 4 L_A, so the edge touches zero at N_B = N_A + 2.
    """
    lhs, rhs = partition.l_b, 4 * partition.l_a
    if lhs > rhs:
        return EdgeSign.POSITIVE
    if lhs == rhs:
        return EdgeSign.ZERO
    return EdgeSign.NEGATIVE


def _sizes(partition) -> tuple:
    if isinstance(partition, Partition):
        return partition.sizes()
    n_a1, n_a2, n_b = partition
    return int(n_a1), int(n_a2), int(n_b)


def classify_phase(partition) -> PhaseLabel:
    """PPT above N_B = N_A + 2, then ME when |N_A1 - N_A2| > N_B, else ES.

    Exact equality in either condition gives BOUNDARY.
    """
    n_a1, n_a2, n_b = _sizes(partition)
    n_a = n_a1 + n_a2
    if n_b > n_a + 2:
        return PhaseLabel.PPT
    if n_b == n_a + 2:
        return PhaseLabel.BOUNDARY
    imbalance = abs(n_a1 - n_a2)
    if imbalance > n_b:
        return PhaseLabel.ME
    if imbalance == n_b:
        return PhaseLabel.BOUNDARY
    return PhaseLabel.ES


def predict_avg_log_negativity(partition, base: float = 2.0) -> float:
    """Large-N estimate of the ensemble-averaged log-negativity.

    0 when N_A < N_B; (N_A - N_B)/2 + c1 when max(N_A1, N_A2) < N/2 and
    N_A > N_B; min(N_A1, N_A2) otherwise.  The linear terms count qubits, so
    for a base other than 2 they are rescaled by log(2)/log(base).
    """
    n_a1, n_a2, n_b = _sizes(partition)
    n_a = n_a1 + n_a2
    n = n_a + n_b
    unit = math.log(2.0) / math.log(base)
    if n_a < n_b:
        return 0.0
    if 2 * max(n_a1, n_a2) < n and n_a > n_b:
        return 0.5 * (n_a - n_b) * unit + c1(base)
    return float(min(n_a1, n_a2)) * unit


def mp_edges(shape: float, scale: float) -> tuple:
    r = math.sqrt(shape)
    return scale * (1.0 - r) ** 2, scale * (1.0 + r) ** 2


def mp_density(x, shape: float, scale: float):
    """Marchenko-Pastur density with ratio ``shape`` and variance ``scale``.

    Support is scale * (1 -+ sqrt(shape))^2.  For shape > 1 the law has an
    atom of weight 1 - 1/shape at zero; the returned density describes the
    nonzero part only and is renormalized to unit mass.
    """
    if not shape > 0 or not scale > 0:
        raise DomainError(f"shape and scale must be positive, got shape={shape}, scale={scale}")
    lo, hi = mp_edges(shape, scale)
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    mask = (x > lo) & (x < hi) & (x > 0)
    xm = x[mask]
    out[mask] = np.sqrt((hi - xm) * (xm - lo)) / (2.0 * math.pi * scale * shape * xm)
    if shape > 1:
        out *= shape
    return out if out.ndim else float(out)


def pt_density(p, L: int):
    """Porter-Thomas density L exp(-L p) of bit-string probabilities."""
    p = np.asarray(p, dtype=float)
    if np.any(p < 0):
        raise DomainError("Porter-Thomas density is defined for p >= 0")
    out = L * np.exp(-L * p)
    return out if out.ndim else float(out)


def bitstring_probabilities(state: StateVector) -> np.ndarray:
    p = np.abs(state.amplitudes) ** 2
    total = float(p.sum())
    if abs(total - 1.0) > 1e-9:
        raise ValidationError(f"probabilities sum to {total!r}")
    return p


@dataclass(frozen=True)
class PTHistogram:
    """Binned distribution of the scaled probabilities L*p; last bin is the overflow bin."""

    edges: np.ndarray  # in units of 1/L; final edge is inf
    counts: np.ndarray
    measured: np.ndarray  # bin probabilities
    reference: np.ndarray  # exact Porter-Thomas bin masses
    L: int


def _pooled_probabilities(probabilities) -> np.ndarray:
    p = np.asarray(probabilities, dtype=float)
    rows = p.reshape(1, -1) if p.ndim == 1 else p.reshape(p.shape[0], -1)
    sums = rows.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > 1e-6):
        raise ValidationError(f"each probability vector must sum to 1 (got {sums.tolist()[:4]} ...)")
    return rows.reshape(-1)


def pt_bin_edges(bins: int, range_multiplier: float) -> np.ndarray:
    """Edges of the scaled variable L*p: ``bins`` uniform bins and a final overflow bin to inf."""
    return np.append(np.arange(bins + 1) * (range_multiplier / bins), np.inf)


def pt_reference_masses(bins: int, range_multiplier: float) -> np.ndarray:
    """Exact Porter-Thomas probability of each bin of :func:`pt_bin_edges`."""
    edges = pt_bin_edges(bins, range_multiplier)
    return np.exp(-edges[:-1]) - np.exp(-edges[1:])


def pt_histogram(probabilities, L: int, bins: int = 24, range_multiplier: float = 6.0) -> PTHistogram:
    """Histogram of L*p on ``bins`` uniform bins over [0, range_multiplier] plus an overflow bin.

    ``probabilities`` is one probability vector or a stack of them (pooled).
    """
    if bins < 5:
        raise DomainError(f"bins must be >= 5, got {bins}")
    scaled = _pooled_probabilities(probabilities) * L
    idx = np.minimum(np.floor(scaled * (bins / range_multiplier)).astype(np.int64), bins)
    counts = np.bincount(idx, minlength=bins + 1)
    return PTHistogram(
        pt_bin_edges(bins, range_multiplier),
        counts,
        counts / scaled.size,
        pt_reference_masses(bins, range_multiplier),
        int(L),
    )


def kl_from_counts(counts, bins: int = 24, range_multiplier: float = 6.0) -> float:
    """KL divergence (nats) of binned counts against the Porter-Thomas bin masses.

    Empty measured bins contribute nothing.
    """
    counts = np.asarray(counts, dtype=float)
    reference = pt_reference_masses(bins, range_multiplier)
    if counts.shape != reference.shape:
        raise DomainError(f"expected {reference.size} bin counts, got {counts.size}")
    q = counts / counts.sum()
    occupied = q > 0
    if np.any(reference[occupied] <= 0):
        raise DivergenceUndefinedError("an occupied bin has zero Porter-Thomas mass")
    return float(np.sum(q[occupied] * np.log(q[occupied] / reference[occupied])))


def kl_divergence(probabilities, L: int, bins: int = 24, range_multiplier: float = 6.0) -> float:
    """Binned KL divergence sum q log(q / q_PT) of measured vs Porter-Thomas bin masses (nats)."""
    return kl_from_counts(pt_histogram(probabilities, L, bins, range_multiplier).counts, bins, range_multiplier)
