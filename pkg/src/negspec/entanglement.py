"""Negativity spectra and (logarithmic) negativity between A1 and A2."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import ConsistencyError, DomainError, EmptyResultError, InsufficientDataError, ValidationError
from .qstate import Partition, hermitian_eigs, partial_transpose

SPECTRUM_TRACE_TOL = 1e-9
DUAL_FORMULA_TOL = 1e-6


@dataclass(frozen=True)
class NegativitySpectrum:
    """Ascending eigenvalues of the partial transpose of rho_A over A1."""

    eigenvalues: np.ndarray = field(repr=False)
    partition: Partition

    def __post_init__(self):
        w = np.sort(np.asarray(self.eigenvalues, dtype=np.float64).reshape(-1))
        if w.size != self.partition.l_a:
            raise ValidationError(f"spectrum has {w.size} values, expected L_A = {self.partition.l_a}")
        total = float(np.sum(w))
        if abs(total - 1.0) > SPECTRUM_TRACE_TOL:
            raise ValidationError(f"negativity spectrum sums to {total!r}, expected 1")
        w.setflags(write=False)
        object.__setattr__(self, "eigenvalues", w)

    @property
    def min(self) -> float:
        return float(self.eigenvalues[0])


@dataclass(frozen=True)
class NegativityResult:
    negativity: float
    log_negativity: float
    base: float = 2.0


def negativity_spectrum(rho_A, partition: Partition) -> NegativitySpectrum:
    pt = partial_transpose(rho_A, partition)
    return NegativitySpectrum(hermitian_eigs(pt).eigenvalues, partition)


def log_negativity_from(neg: float, base: float = 2.0) -> float:
    return math.log1p(2.0 * neg) / math.log(base)


def negativity(spectrum, base: float = 2.0) -> NegativityResult:
    """Negativity from both the trace norm and the sum of negative eigenvalues.

    The two routes must agree; a mismatch means the spectrum does not come
    from a unit-trace matrix.  A spectrum without negative entries has
    negativity exactly zero.
    """
    w = spectrum.eigenvalues if isinstance(spectrum, NegativitySpectrum) else np.asarray(spectrum, float)
    trace_norm_form = (float(np.sum(np.abs(w))) - 1.0) / 2.0
    negative_sum_form = abs(float(np.sum(w[w < 0])))
    if abs(trace_norm_form - negative_sum_form) > DUAL_FORMULA_TOL:
        raise ConsistencyError(
            f"negativity routes disagree: trace norm gives {trace_norm_form!r}, "
            f"negative eigenvalues give {negative_sum_form!r} (trace {float(np.sum(w))!r})"
        )
    neg = 0.0 if negative_sum_form == 0.0 else max(trace_norm_form, 0.0)
    return NegativityResult(neg, log_negativity_from(neg, base), base)


def _pool(spectra) -> tuple:
    """Concatenate spectra (objects or arrays); returns (values, instance count)."""
    if isinstance(spectra, NegativitySpectrum):
        spectra = [spectra]
    if isinstance(spectra, np.ndarray) and spectra.ndim == 1:
        return spectra.astype(float), 1
    arrays = [s.eigenvalues if isinstance(s, NegativitySpectrum) else np.asarray(s, float) for s in spectra]
    if not arrays:
        return np.empty(0), 0
    return np.concatenate(arrays), len(arrays)


@dataclass(frozen=True)
class SpectrumHistogram:
    edges: np.ndarray
    counts: np.ndarray
    density: np.ndarray
    retained: int
    instances: int
    exclusion_epsilon: float

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)


def spectrum_histogram(
    spectra,
    bins: int = 40,
    exclusion_epsilon: float = 0.0,
    value_range: Optional[tuple] = None,
) -> SpectrumHistogram:
    """Pooled histogram of eigenvalues with ``|xi| >= exclusion_epsilon``.

    ``density`` integrates to retained/instances, i.e. it is on the same
    footing as the semicircle density whose integral is L_A.
    """
    if bins < 2:
        raise DomainError(f"bins must be >= 2, got {bins}")
    if exclusion_epsilon < 0:
        raise DomainError(f"exclusion_epsilon must be >= 0, got {exclusion_epsilon}")
    values, instances = _pool(spectra)
    kept = values[np.abs(values) >= exclusion_epsilon]
    if kept.size == 0:
        raise EmptyResultError(f"no eigenvalues left after excluding |xi| < {exclusion_epsilon}")
    if value_range is None:
        value_range = (float(kept.min()), float(kept.max()))
    counts, edges = np.histogram(kept, bins=bins, range=value_range)
    density = counts / (instances * np.diff(edges))
    return SpectrumHistogram(edges, counts, density, int(kept.size), instances, float(exclusion_epsilon))


@dataclass(frozen=True)
class LobeSummary:
    n_lobes: int
    gaps: tuple  # accepted (lower edge, upper edge) pairs, ascending
    gap_width: float  # widest accepted gap, 0 for a single lobe
    gap_location: float  # midpoint of the widest accepted gap, nan for a single lobe
    threshold: float
    retained: int
    exclusion_epsilon: float
    lobe_sizes: tuple


def detect_lobes(
    spectra,
    exclusion_epsilon: float = 0.0,
    gap_factor: float = 3.0,
    min_fraction: float = 0.05,
    min_gap_fraction: float = 0.05,
) -> LobeSummary:
    """Split pooled eigenvalues into disjoint clusters at unusually large gaps.

    Gaps are examined from the largest down.  A gap splits a cluster when it
    exceeds both ``gap_factor`` times the median nearest-neighbour spacing and
    ``min_gap_fraction`` of the full span of the retained pool, and both
    resulting pieces hold at least ``min_fraction`` of the retained
    eigenvalues.  The span condition stops ordinary level-spacing fluctuations
    in a large pool from counting as gaps; the size condition keeps sparse
    tails from counting as lobes.
    """
    values, _ = _pool(spectra)
    kept = np.sort(values[np.abs(values) >= exclusion_epsilon])
    if kept.size < 4:
        raise InsufficientDataError(
            f"only {kept.size} eigenvalues retained after excluding |xi| < {exclusion_epsilon}"
        )
    spacing = np.diff(kept)
    threshold = max(gap_factor * float(np.median(spacing)), min_gap_fraction * float(kept[-1] - kept[0]))
    min_size = max(2, int(math.ceil(min_fraction * kept.size)))

    cuts: list = []  # index i means a cut between kept[i] and kept[i + 1]
    for i in np.argsort(spacing, kind="stable")[::-1]:
        if spacing[i] <= threshold:
            break
        bounds = [-1] + sorted(cuts) + [kept.size - 1]
        # cluster containing the gap: (lo, hi] in cut-index terms
        k = int(np.searchsorted(bounds, i))
        lo, hi = bounds[k - 1], bounds[k]
        if i - lo >= min_size and hi - i >= min_size:
            cuts.append(int(i))

    cuts.sort()
    bounds = [-1] + cuts + [kept.size - 1]
    sizes = tuple(bounds[k + 1] - bounds[k] for k in range(len(bounds) - 1))
    gaps = tuple((float(kept[i]), float(kept[i + 1])) for i in cuts)
    if gaps:
        widest = max(gaps, key=lambda g: g[1] - g[0])
        width, location = widest[1] - widest[0], 0.5 * (widest[0] + widest[1])
    else:
        width, location = 0.0, float("nan")
    return LobeSummary(
        n_lobes=len(cuts) + 1,
        gaps=gaps,
        gap_width=float(width),
        gap_location=float(location),
        threshold=threshold,
        retained=int(kept.size),
        exclusion_epsilon=float(exclusion_epsilon),
        lobe_sizes=sizes,
    )
