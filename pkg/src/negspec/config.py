"""Run configuration and its JSON document form.

A config document looks like::

    {
      "partition": {"a1": 2, "a2": 4, "b": 9},
      "layers": 5,
      "instances": 20,
      "coupling": {"uniform": 1.0},
      "tau_ent": 1.0,
      "seed": 12345,
      "tomography": {"enabled": false, "shots_per_setting": 3000, "purity_correction": null},
      "noise": {"depolarizing_per_layer": 0.0},
      "spectrum": {"bins": 40, "exclusion_epsilon": 0.0},
      "kl": {"bins": 24, "range_multiplier": 6.0},
      "probabilities": {"max_qubits": 14, "force": false}
    }

Partition entries are either subsystem sizes (contiguous assignment A1, A2,
B) or explicit qubit lists.  ``layers`` may be ``"auto"``.  ``coupling`` is
``{"uniform": strength}`` or ``{"matrix": [[...]]}``.  ``purity_correction``
is null, a target purity, or ``"ideal"`` (the instance's noiseless purity).
Missing keys take the defaults shown.
"""

from __future__ import annotations

import copy
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional, Union

from .circuits import CouplingMatrix
from .errors import ConfigError
from .qstate import Partition

DEFAULT_SEED = 12345


def default_depth(n_b: int) -> int:
    """Four layers for small environments (N_B <= 3), five otherwise."""
    return 4 if n_b <= 3 else 5


@dataclass(frozen=True)
class TomographyConfig:
    enabled: bool = False
    shots_per_setting: int = 3000
    purity_correction: Union[None, float, str] = None


@dataclass(frozen=True)
class NoiseConfig:
    depolarizing_per_layer: float = 0.0


@dataclass(frozen=True)
class SpectrumConfig:
    bins: int = 40
    exclusion_epsilon: float = 0.0


@dataclass(frozen=True)
class KLConfig:
    bins: int = 24
    range_multiplier: float = 6.0


@dataclass(frozen=True)
class ProbabilityConfig:
    """Bit-string probabilities are stored only up to ``max_qubits`` unless ``force``."""

    max_qubits: int = 14
    force: bool = False


@dataclass(frozen=True)
class RunConfig:
    partition: Partition
    layers: Union[int, str] = "auto"
    instances: int = 20
    coupling: dict = field(default_factory=lambda: {"uniform": 1.0})
    tau_ent: float = 1.0
    seed: int = DEFAULT_SEED
    tomography: TomographyConfig = TomographyConfig()
    noise: NoiseConfig = NoiseConfig()
    spectrum: SpectrumConfig = SpectrumConfig()
    kl: KLConfig = KLConfig()
    probabilities: ProbabilityConfig = ProbabilityConfig()

    def __post_init__(self):
        validate(self)

    @property
    def n_qubits(self) -> int:
        return self.partition.n_qubits

    @property
    def depth(self) -> int:
        return default_depth(self.partition.n_b) if self.layers == "auto" else int(self.layers)

    def coupling_matrix(self) -> CouplingMatrix:
        if "uniform" in self.coupling:
            return CouplingMatrix.uniform(self.n_qubits, float(self.coupling["uniform"]))
        return CouplingMatrix(self.coupling["matrix"])

    def store_probabilities(self) -> bool:
        return self.probabilities.force or self.n_qubits <= self.probabilities.max_qubits

    def with_changes(self, **changes) -> "RunConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["partition"] = self.partition.to_dict()
        d["n_qubits"] = self.n_qubits
        return d


def validate(cfg: RunConfig) -> None:
    if not isinstance(cfg.partition, Partition):
        raise ConfigError("partition must be a Partition")
    if cfg.layers != "auto" and (not isinstance(cfg.layers, int) or cfg.layers < 0):
        raise ConfigError(f"layers must be a non-negative integer or 'auto', got {cfg.layers!r}")
    if not isinstance(cfg.instances, int) or cfg.instances < 1:
        raise ConfigError(f"instances must be >= 1, got {cfg.instances!r}")
    if not cfg.tau_ent > 0:
        raise ConfigError(f"tau_ent must be positive, got {cfg.tau_ent!r}")
    if not isinstance(cfg.seed, int) or not 0 <= cfg.seed < 2 ** 64:
        raise ConfigError(f"seed must be a 64-bit unsigned integer, got {cfg.seed!r}")
    keys = set(cfg.coupling)
    if keys == {"uniform"}:
        pass
    elif keys == {"matrix"}:
        try:
            cm = CouplingMatrix(cfg.coupling["matrix"])
        except Exception as exc:
            raise ConfigError(f"invalid coupling matrix: {exc}") from exc
        if cm.n_qubits != cfg.partition.n_qubits:
            raise ConfigError(
                f"coupling matrix covers {cm.n_qubits} qubits, partition has {cfg.partition.n_qubits}"
            )
    else:
        raise ConfigError(f"coupling must be {{'uniform': J}} or {{'matrix': [...]}}, got {cfg.coupling!r}")
    t = cfg.tomography
    if t.shots_per_setting < 0:
        raise ConfigError("tomography.shots_per_setting must be >= 0")
    pc = t.purity_correction
    if pc is not None and pc != "ideal":
        if isinstance(pc, str) or not 0 < float(pc) <= 1:
            raise ConfigError(f"purity_correction must be null, 'ideal' or a purity in (0, 1], got {pc!r}")
    if not 0.0 <= cfg.noise.depolarizing_per_layer <= 1.0:
        raise ConfigError("noise.depolarizing_per_layer must lie in [0, 1]")
    if cfg.spectrum.bins < 2 or cfg.spectrum.exclusion_epsilon < 0:
        raise ConfigError("spectrum.bins must be >= 2 and exclusion_epsilon >= 0")
    if cfg.kl.bins < 5 or not cfg.kl.range_multiplier > 0:
        raise ConfigError("kl.bins must be >= 5 and kl.range_multiplier > 0")


def _partition_from(doc) -> Partition:
    if isinstance(doc, Partition):
        return doc
    if isinstance(doc, (list, tuple)) and len(doc) == 3:
        return Partition.from_sizes(*(int(x) for x in doc))
    if not isinstance(doc, dict) or set(doc) != {"a1", "a2", "b"}:
        raise ConfigError(f"partition needs keys a1, a2, b; got {doc!r}")
    if all(isinstance(doc[k], int) for k in ("a1", "a2", "b")):
        return Partition.from_sizes(doc["a1"], doc["a2"], doc["b"])
    return Partition(tuple(doc["a1"]), tuple(doc["a2"]), tuple(doc["b"]))


_SECTIONS = {
    "tomography": TomographyConfig,
    "noise": NoiseConfig,
    "spectrum": SpectrumConfig,
    "kl": KLConfig,
    "probabilities": ProbabilityConfig,
}


def config_from_dict(doc: dict) -> RunConfig:
    doc = copy.deepcopy(doc)
    known = {"partition", "layers", "instances", "coupling", "tau_ent", "seed", "n_qubits"} | set(_SECTIONS)
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "partition" not in doc:
        raise ConfigError("config needs a partition")
    try:
        partition = _partition_from(doc.pop("partition"))
        n_qubits = doc.pop("n_qubits", None)
        if n_qubits is not None and n_qubits != partition.n_qubits:
            raise ConfigError(f"n_qubits = {n_qubits} disagrees with the partition ({partition.n_qubits})")
        for name, cls in _SECTIONS.items():
            if name in doc:
                doc[name] = cls(**doc[name])
        return RunConfig(partition=partition, **doc)
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(f"invalid config: {exc}") from exc


def load_config(path) -> RunConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return config_from_dict(doc)


PRESETS = {
    # N_A1 = 2, N_A2 = 4 with the environment sizes of the negativity-spectrum panels
    "fig2d": {"partition": {"a1": 2, "a2": 4, "b": 9}, "layers": 5},
    "fig2e": {"partition": {"a1": 2, "a2": 4, "b": 8}, "layers": 5},
    "fig2f": {"partition": {"a1": 2, "a2": 4, "b": 7}, "layers": 5},
    "fig2g": {"partition": {"a1": 2, "a2": 4, "b": 3}, "layers": 4},
    "fig2h": {"partition": {"a1": 2, "a2": 4, "b": 2}, "layers": 4},
    "fig2i": {
        "partition": {"a1": 2, "a2": 4, "b": 1},
        "layers": 4,
        "spectrum": {"bins": 40, "exclusion_epsilon": 1e-6},
    },
    "fig3a": {"partition": {"a1": 2, "a2": 4, "b": 9}},
    "fig3b": {"partition": {"a1": 2, "a2": 4, "b": 3}, "layers": 4},
    "fig3b-pure": {"partition": {"a1": 2, "a2": 4, "b": 0}, "layers": 4},
    "fig4": {"partition": {"a1": 2, "a2": 4, "b": 3}, "layers": 3},
}


def preset(name: str, **overrides) -> RunConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    doc = copy.deepcopy(PRESETS[name])
    doc.update(overrides)
    return config_from_dict(doc)
