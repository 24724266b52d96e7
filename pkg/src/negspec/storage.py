"""Writing and reading run results.

A result directory holds::

    summary.json        schema version, code version, config echo, aggregates,
                        scalar per-instance fields and Porter-Thomas bin counts
    circuits.json       the circuit of every successful instance
    spectra.csv         instance, index, xi
    negativity.csv      instance, N, E, purity
    histogram.csv       bin_lo, bin_hi, count, density, theory_density
    pt.csv              bin_lo, bin_hi, count, density, theory_density (p units)
    semicircle.csv      xi, density  (sampled reference curve, when N_B > 0)
    probabilities.csv   instance, index, p  (only when the size gate allows)

Every CSV starts with ``#`` comment lines carrying the schema version and the
config echo.  Floats are written with ``repr`` so they read back bit-exactly,
and keys are sorted, so persisting the same result twice gives the same bytes.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .config import config_from_dict
from .ensemble import InstanceRecord, RunResult, SweepResult, compute_aggregates, pt_table, spectrum_table
from .errors import ConsistencyError, SchemaVersionError
from .theory import SemicircleParams, semicircle_density

SCHEMA_VERSION = "negspec-result/1"
SWEEP_SCHEMA_VERSION = "negspec-sweep/1"
AGGREGATE_TOL = 1e-12
SEMICIRCLE_SAMPLES = 201

_SCALARS = (
    "negativity",
    "log_negativity",
    "purity",
    "negativity_uncorrected",
    "log_negativity_uncorrected",
    "purity_exact",
)


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1) + "\n"


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def _write_csv(path: Path, header: list, rows, comments: list) -> None:
    lines = [f"# {c}" for c in comments]
    lines.append(",".join(header))
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n")


def _read_csv(path: Path) -> tuple:
    """Returns (comment dict, header, rows of strings)."""
    comments, body = {}, []
    for line in path.read_text().splitlines():
        if line.startswith("# "):
            key, _, value = line[2:].partition("=")
            comments[key] = value
        else:
            body.append(line)
    reader = csv.reader(body)
    header = next(reader)
    return comments, header, list(reader)


def _comments(result: RunResult) -> list:
    cfg = json.dumps(result.config.to_dict(), sort_keys=True, separators=(",", ":"))
    return [f"schema_version={SCHEMA_VERSION}", f"code_version={result.code_version}", f"config={cfg}"]


def _table_rows(table: dict) -> list:
    cols = ["bin_lo", "bin_hi", "count", "density", "theory_density"]
    return [[table[c][i] for c in cols] for i in range(len(table["count"]))]


def persist(result: RunResult, path) -> Path:
    """Write ``result`` to the directory ``path`` (created if needed)."""
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    comments = _comments(result)
    records = []
    for r in result.records:
        rec = {"index": r.index, "seed": r.seed, "status": r.status, "error": r.error}
        rec.update({k: getattr(r, k) for k in _SCALARS})
        rec["pt_counts"] = None if r.pt_counts is None else [int(c) for c in r.pt_counts]
        records.append(rec)
    summary = {
        "schema_version": SCHEMA_VERSION,
        "code_version": result.code_version,
        "point_index": result.point_index,
        "config": result.config.to_dict(),
        "aggregates": result.aggregates,
        "records": records,
    }
    (out / "summary.json").write_text(_dumps(summary))
    circuits = {str(r.index): r.circuit for r in result.records if r.circuit is not None}
    (out / "circuits.json").write_text(
        _dumps({"schema_version": SCHEMA_VERSION, "config": result.config.to_dict(), "circuits": circuits})
    )

    ok = result.ok_records()
    _write_csv(
        out / "spectra.csv",
        ["instance", "index", "xi"],
        ([r.index, k, x] for r in ok for k, x in enumerate(r.spectrum)),
        comments,
    )
    _write_csv(
        out / "negativity.csv",
        ["instance", "N", "E", "purity"],
        ([r.index, r.negativity, r.log_negativity, r.purity] for r in ok),
        comments,
    )
    header = ["bin_lo", "bin_hi", "count", "density", "theory_density"]
    _write_csv(out / "histogram.csv", header, _table_rows(spectrum_table(result)), comments)
    _write_csv(out / "pt.csv", header, _table_rows(pt_table(result)), comments)

    partition = result.partition
    if partition.n_b > 0:
        params = SemicircleParams.from_partition(partition)
        xs = np.linspace(*params.support, SEMICIRCLE_SAMPLES)
        ys = semicircle_density(xs, params, partition.l_a)
        _write_csv(out / "semicircle.csv", ["xi", "density"], zip(xs, ys), comments)

    if any(r.probabilities is not None for r in ok):
        _write_csv(
            out / "probabilities.csv",
            ["instance", "index", "p"],
            ([r.index, k, p] for r in ok if r.probabilities is not None for k, p in enumerate(r.probabilities)),
            comments,
        )
    return out


def _check_schema(found, expected: str, where: Path) -> None:
    if found != expected:
        raise SchemaVersionError(f"{where}: schema version {found!r} is not the supported {expected!r}")


def _close(a, b) -> bool:
    if isinstance(a, str) or isinstance(b, str) or a is None or b is None:
        return a == b
    a, b = float(a), float(b)
    if math.isnan(a) or math.isnan(b):
        return math.isnan(a) and math.isnan(b)
    return abs(a - b) <= AGGREGATE_TOL


def check_aggregates(stored: dict, recomputed: dict) -> None:
    """Raise ConsistencyError unless both aggregate dicts agree within 1e-12."""
    if set(stored) != set(recomputed):
        raise ConsistencyError(f"aggregate keys differ: {sorted(set(stored) ^ set(recomputed))}")
    bad = [k for k in stored if not _close(stored[k], recomputed[k])]
    if bad:
        raise ConsistencyError(
            "stored aggregates do not match the per-instance records: "
            + ", ".join(f"{k} ({stored[k]!r} vs {recomputed[k]!r})" for k in bad)
        )


def load(path) -> RunResult:
    """Read a result directory; aggregates are recomputed and checked against the stored ones."""
    root = Path(path)
    summary = json.loads((root / "summary.json").read_text())
    _check_schema(summary.get("schema_version"), SCHEMA_VERSION, root / "summary.json")
    config = config_from_dict(summary["config"])

    records = []
    for rec in summary["records"]:
        counts = rec.get("pt_counts")
        records.append(
            InstanceRecord(
                index=rec["index"],
                seed=rec["seed"],
                status=rec["status"],
                error=rec["error"],
                pt_counts=None if counts is None else np.asarray(counts, dtype=np.int64),
                **{k: rec.get(k) for k in _SCALARS},
            )
        )
    by_index = {r.index: r for r in records}

    circuits = json.loads((root / "circuits.json").read_text())
    _check_schema(circuits.get("schema_version"), SCHEMA_VERSION, root / "circuits.json")
    for key, circ in circuits["circuits"].items():
        by_index[int(key)].circuit = circ

    for name, column in (("spectra.csv", "spectrum"), ("probabilities.csv", "probabilities")):
        file = root / name
        if not file.exists():
            continue
        comments, _, rows = _read_csv(file)
        _check_schema(comments.get("schema_version"), SCHEMA_VERSION, file)
        values: dict = {}
        for inst, _, x in rows:
            values.setdefault(int(inst), []).append(float(x))
        for inst, xs in values.items():
            setattr(by_index[inst], column, np.array(xs))

    aggregates = summary["aggregates"]
    check_aggregates(aggregates, json.loads(json.dumps(compute_aggregates(config, records))))
    return RunResult(config, records, aggregates, summary["point_index"], summary["code_version"])


def persist_sweep(result: SweepResult, path) -> Path:
    """``sweep.json`` and ``sweep.csv`` summaries plus one result directory per point."""
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    rows = result.table()
    template = next((r.config.to_dict() for r in result.results if r is not None), None)
    doc = {
        "schema_version": SWEEP_SCHEMA_VERSION,
        "axis": result.axis,
        "values": result.values,
        "errors": result.errors,
        "config": template,
        "points": [None if r is None else f"point_{i:03d}" for i, r in enumerate(result.results)],
        "table": rows,
    }
    (out / "sweep.json").write_text(_dumps(doc))
    cfg = json.dumps(template, sort_keys=True, separators=(",", ":"))
    header = [
        "value", "n_a1", "n_a2", "n_b", "layers", "mean_log_negativity", "stderr_log_negativity",
        "kl_divergence", "phase", "predicted_log_negativity", "error",
    ]
    _write_csv(
        out / "sweep.csv",
        header,
        ([row.get(c) for c in header] for row in rows),
        [f"schema_version={SWEEP_SCHEMA_VERSION}", f"axis={result.axis}", f"config={cfg}"],
    )
    for i, res in enumerate(result.results):
        if res is not None:
            persist(res, out / f"point_{i:03d}")
    return out


def load_sweep(path) -> SweepResult:
    root = Path(path)
    doc = json.loads((root / "sweep.json").read_text())
    _check_schema(doc.get("schema_version"), SWEEP_SCHEMA_VERSION, root / "sweep.json")
    results = [None if p is None else load(root / p) for p in doc["points"]]
    return SweepResult(doc["axis"], doc["values"], results, doc["errors"])
