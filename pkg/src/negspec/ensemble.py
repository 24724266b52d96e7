"""Seeded ensemble execution over pseudo-random circuit instances.

Every instance draws from its own generator, seeded with a 64-bit value
derived from ``(master seed, point index, instance index)`` through numpy's
``SeedSequence`` (entropy = master seed, spawn_key = (point, instance)).
Results are merged by instance index, so the output is a pure function of
the configuration regardless of how many workers run it.

Noise model: depolarizing with probability eps after each layer commutes with
every unitary, so after d layers the global state is F |psi><psi| + (1 - F) I/L
with F = (1 - eps)^d.  Reduced states and bit-string probabilities follow by
linearity without evolving a density matrix.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .circuits import build_random_circuit, run_circuit
from .config import RunConfig
from .entanglement import NegativitySpectrum, negativity, negativity_spectrum, spectrum_histogram
from .errors import ConfigError, NegspecError, RunError
from .qstate import Partition, purity, reduced_density_array
from .theory import (
    SemicircleParams,
    classify_phase,
    kl_from_counts,
    predict_avg_log_negativity,
    pt_bin_edges,
    pt_density,
    pt_histogram,
    semicircle_density,
    semicircle_edge_sign,
    semicircle_ks_distance,
)
from .tomography import linear_inversion, measure_density_matrix, project_physical, purity_rescale

logger = logging.getLogger(__name__)

SWEEP_AXES = ("environment_size", "split_ratio", "depth")


def instance_seed(master_seed: int, instance_index: int, point_index: int = 0) -> int:
    """64-bit seed of one instance; fixed mixing, covered by a regression test."""
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(point_index), int(instance_index)))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass
class InstanceRecord:
    index: int
    seed: int
    status: str = "ok"
    error: Optional[str] = None
    spectrum: Optional[np.ndarray] = None
    negativity: Optional[float] = None
    log_negativity: Optional[float] = None
    purity: Optional[float] = None
    negativity_uncorrected: Optional[float] = None
    log_negativity_uncorrected: Optional[float] = None
    purity_exact: Optional[float] = None
    pt_counts: Optional[np.ndarray] = None
    probabilities: Optional[np.ndarray] = None
    circuit: Optional[dict] = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"


@dataclass
class RunResult:
    config: RunConfig
    records: list
    aggregates: dict
    point_index: int = 0
    code_version: str = __version__

    @property
    def partition(self) -> Partition:
        return self.config.partition

    def ok_records(self) -> list:
        return [r for r in self.records if r.ok]

    def spectra(self) -> list:
        return [NegativitySpectrum(r.spectrum, self.partition) for r in self.ok_records()]

    def pooled_eigenvalues(self) -> np.ndarray:
        return np.concatenate([r.spectrum for r in self.ok_records()])


def _noisy_rho(rho: np.ndarray, fidelity: float) -> np.ndarray:
    if fidelity == 1.0:
        return rho
    dim = rho.shape[0]
    return fidelity * rho + (1.0 - fidelity) * np.eye(dim) / dim


def run_instance(config: RunConfig, instance_index: int, point_index: int = 0) -> InstanceRecord:
    """Build, run and analyse one circuit instance; errors are captured in the record."""
    if not 0 <= instance_index < config.instances:
        raise ConfigError(f"instance index {instance_index} outside 0..{config.instances - 1}")
    seed = instance_seed(config.seed, instance_index, point_index)
    record = InstanceRecord(index=instance_index, seed=seed)
    try:
        _fill_record(record, config)
    except Exception as exc:  # recorded, never dropped
        logger.warning("instance %d failed: %s", instance_index, exc)
        record.status = "error"
        record.error = f"{type(exc).__name__}: {exc}"
        record.spectrum = None
    return record


def _fill_record(record: InstanceRecord, config: RunConfig) -> None:
    rng = np.random.default_rng(record.seed)
    partition = config.partition
    depth = config.depth
    circuit = build_random_circuit(config.n_qubits, depth, config.coupling_matrix(), config.tau_ent, rng)
    record.circuit = circuit.to_dict()
    state = run_circuit(circuit)

    fidelity = (1.0 - config.noise.depolarizing_per_layer) ** depth
    probs = np.abs(state.amplitudes) ** 2
    if fidelity != 1.0:
        probs = fidelity * probs + (1.0 - fidelity) / probs.size
    record.pt_counts = pt_histogram(probs, probs.size, config.kl.bins, config.kl.range_multiplier).counts
    if config.store_probabilities():
        record.probabilities = probs

    rho_exact = reduced_density_array(state, partition)
    record.purity_exact = purity(rho_exact)
    rho = _noisy_rho(rho_exact, fidelity)

    tomo = config.tomography
    if tomo.enabled:
        records = measure_density_matrix(rho, tomo.shots_per_setting, rng)
        rho = project_physical(linear_inversion(records)).elements
        if tomo.purity_correction is not None:
            raw = negativity(negativity_spectrum(rho, partition))
            record.negativity_uncorrected = raw.negativity
            record.log_negativity_uncorrected = raw.log_negativity
            target = record.purity_exact if tomo.purity_correction == "ideal" else float(tomo.purity_correction)
            rho = purity_rescale(rho, min(max(target, 1.0 / rho.shape[0]), 1.0)).elements

    spectrum = negativity_spectrum(rho, partition)
    result = negativity(spectrum)
    record.spectrum = np.array(spectrum.eigenvalues)
    record.negativity = result.negativity
    record.log_negativity = result.log_negativity
    record.purity = purity(rho)


def _mean_stderr(values: Sequence[float]) -> tuple:
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return float("nan"), float("nan")
    mean = float(math.fsum(v) / v.size)
    if v.size == 1:
        return mean, 0.0
    var = math.fsum((x - mean) ** 2 for x in v) / (v.size - 1)
    return mean, math.sqrt(var / v.size)


def compute_aggregates(config: RunConfig, records: Sequence[InstanceRecord]) -> dict:
    """Ensemble statistics; a pure function of the config and the per-instance records."""
    ok = [r for r in records if r.ok]
    partition = config.partition
    agg: dict = {
        "instances_ok": len(ok),
        "instances_failed": len(records) - len(ok),
        "depth": config.depth,
        "phase": classify_phase(partition).value,
        "predicted_log_negativity": predict_avg_log_negativity(partition),
        "semicircle_edge": semicircle_edge_sign(partition).value,
    }
    if not ok:
        return agg
    agg["mean_log_negativity"], agg["stderr_log_negativity"] = _mean_stderr([r.log_negativity for r in ok])
    agg["mean_negativity"], agg["stderr_negativity"] = _mean_stderr([r.negativity for r in ok])
    agg["mean_purity"], _ = _mean_stderr([r.purity for r in ok])
    if all(r.log_negativity_uncorrected is not None for r in ok):
        agg["mean_log_negativity_uncorrected"], agg["stderr_log_negativity_uncorrected"] = _mean_stderr(
            [r.log_negativity_uncorrected for r in ok]
        )

    pooled = np.concatenate([r.spectrum for r in ok])
    agg["pooled_min"] = float(pooled.min())
    agg["pooled_max"] = float(pooled.max())
    agg["fraction_below_minus_1e-3"] = float(np.count_nonzero(pooled < -1e-3) / pooled.size)
    if partition.n_b > 0:
        params = SemicircleParams.from_partition(partition)
        agg["semicircle_ks_distance"] = semicircle_ks_distance(pooled, params)

    pt_counts = np.sum([r.pt_counts for r in ok], axis=0)
    agg["kl_divergence"] = kl_from_counts(pt_counts, config.kl.bins, config.kl.range_multiplier)
    return agg


def spectrum_table(result: RunResult) -> dict:
    """Pooled histogram of the run plus the semicircle density at the bin centres."""
    cfg = result.config
    h = spectrum_histogram(result.spectra(), cfg.spectrum.bins, cfg.spectrum.exclusion_epsilon)
    if result.partition.n_b > 0:
        theory = semicircle_density(h.centers, SemicircleParams.from_partition(result.partition), result.partition.l_a)
    else:
        theory = np.full(h.centers.shape, np.nan)
    return {"bin_lo": h.edges[:-1], "bin_hi": h.edges[1:], "count": h.counts, "density": h.density, "theory_density": theory}


def pt_table(result: RunResult) -> dict:
    """Pooled bit-string probability histogram in units of p; the last bin is the overflow."""
    cfg = result.config
    L = 1 << cfg.n_qubits
    counts = np.sum([r.pt_counts for r in result.ok_records()], axis=0)
    edges = pt_bin_edges(cfg.kl.bins, cfg.kl.range_multiplier) / L
    finite = np.isfinite(edges[1:])
    density = np.full(counts.shape, np.nan)
    density[finite] = counts[finite] / (counts.sum() * np.diff(edges)[finite])
    theory = np.full(counts.shape, np.nan)
    theory[finite] = pt_density(0.5 * (edges[:-1] + edges[1:])[finite], L)
    return {"bin_lo": edges[:-1], "bin_hi": edges[1:], "count": counts, "density": density, "theory_density": theory}


def _run_one(args):
    config, index, point = args
    with threadpool_limits(limits=1):
        return run_instance(config, index, point)


def run_ensemble(config: RunConfig, workers: int = 1, point_index: int = 0) -> RunResult:
    """Run every instance (optionally in a process pool) and aggregate."""
    jobs = [(config, i, point_index) for i in range(config.instances)]
    if workers <= 1:
        records = [_run_one(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_one, jobs))
    records.sort(key=lambda r: r.index)
    if not any(r.ok for r in records):
        raise RunError(f"all {len(records)} instances failed; first error: {records[0].error}")
    return RunResult(config, records, compute_aggregates(config, records), point_index)


def sweep_point_config(template: RunConfig, axis: str, value: int) -> RunConfig:
    n_a1, n_a2, n_b = template.partition.sizes()
    if axis == "environment_size":
        if value < 0:
            raise ConfigError(f"environment size must be >= 0, got {value}")
        return template.with_changes(partition=Partition.from_sizes(n_a1, n_a2, value))
    if axis == "split_ratio":
        n_a = n_a1 + n_a2
        if not 0 <= value <= n_a:
            raise ConfigError(f"N_A1 = {value} outside 0..{n_a}")
        return template.with_changes(partition=Partition.from_sizes(value, n_a - value, n_b))
    if axis == "depth":
        if value < 0:
            raise ConfigError(f"depth must be >= 0, got {value}")
        return template.with_changes(layers=int(value))
    raise ConfigError(f"unknown sweep axis {axis!r}; choose from {SWEEP_AXES}")


@dataclass
class SweepResult:
    axis: str
    values: list
    results: list  # RunResult or None per value
    errors: list  # error message or None per value

    def table(self) -> list:
        rows = []
        for value, res, err in zip(self.values, self.results, self.errors):
            if res is None:
                rows.append({"value": value, "error": err})
                continue
            a = res.aggregates
            n_a1, n_a2, n_b = res.partition.sizes()
            rows.append(
                {
                    "value": value,
                    "n_a1": n_a1,
                    "n_a2": n_a2,
                    "n_b": n_b,
                    "layers": res.config.depth,
                    "mean_log_negativity": a.get("mean_log_negativity"),
                    "stderr_log_negativity": a.get("stderr_log_negativity"),
                    "kl_divergence": a.get("kl_divergence"),
                    "phase": a["phase"],
                    "predicted_log_negativity": a["predicted_log_negativity"],
                    "error": None,
                }
            )
        return rows


def sweep(template: RunConfig, axis: str, values: Sequence[int], workers: int = 1) -> SweepResult:
    """One fresh ensemble per value; invalid points are reported, not fatal."""
    if axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {axis!r}; choose from {SWEEP_AXES}")
    results, errors = [], []
    for point, value in enumerate(values):
        try:
            cfg = sweep_point_config(template, axis, int(value))
            results.append(run_ensemble(cfg, workers=workers, point_index=point))
            errors.append(None)
        except NegspecError as exc:
            results.append(None)
            errors.append(f"{type(exc).__name__}: {exc}")
    return SweepResult(axis, [int(v) for v in values], results, errors)
