import filecmp
import json

import numpy as np
import pytest

from negspec.config import config_from_dict
from negspec.ensemble import run_ensemble, sweep
from negspec.errors import ConsistencyError, SchemaVersionError
from negspec.storage import SCHEMA_VERSION, load, load_sweep, persist, persist_sweep
from negspec.theory import SemicircleParams, semicircle_density


def small(**overrides):
    doc = {"partition": {"a1": 1, "a2": 2, "b": 2}, "layers": 3, "instances": 3}
    doc.update(overrides)
    return config_from_dict(doc)


def read_table(path):
    lines = [l for l in path.read_text().splitlines() if not l.startswith("#")]
    header = lines[0].split(",")
    return header, [l.split(",") for l in lines[1:]]


@pytest.fixture(scope="module")
def result():
    return run_ensemble(small())


def same_tree(a, b):
    cmp = filecmp.dircmp(a, b)
    if cmp.left_only or cmp.right_only:
        return False
    _, mismatch, errors = filecmp.cmpfiles(a, b, cmp.common_files, shallow=False)
    return not mismatch and not errors and all(same_tree(a / d, b / d) for d in cmp.common_dirs)


def test_round_trip_is_byte_identical(result, tmp_path):
    persist(result, tmp_path / "a")
    loaded = load(tmp_path / "a")
    persist(loaded, tmp_path / "b")
    assert same_tree(tmp_path / "a", tmp_path / "b")
    for x, y in zip(result.records, loaded.records):
        assert x.spectrum.tobytes() == y.spectrum.tobytes()
        np.testing.assert_array_equal(x.probabilities, y.probabilities)
        assert x.circuit == y.circuit and x.seed == y.seed
    assert loaded.aggregates == json.loads(json.dumps(result.aggregates))


def test_expected_files_and_headers(result, tmp_path):
    out = persist(result, tmp_path)
    names = {p.name for p in out.iterdir()}
    assert names == {
        "summary.json", "circuits.json", "spectra.csv", "negativity.csv",
        "histogram.csv", "pt.csv", "semicircle.csv", "probabilities.csv",
    }
    for name in names:
        text = (out / name).read_text()
        assert SCHEMA_VERSION in text and '"partition"' in text
    assert read_table(out / "negativity.csv")[0] == ["instance", "N", "E", "purity"]
    assert read_table(out / "pt.csv")[0] == ["bin_lo", "bin_hi", "count", "density", "theory_density"]


def test_spectra_row_count(result, tmp_path):
    persist(result, tmp_path)
    header, rows = read_table(tmp_path / "spectra.csv")
    assert header == ["instance", "index", "xi"]
    assert len(rows) == result.config.instances * result.partition.l_a


def test_histogram_theory_column_is_semicircle(result, tmp_path):
    persist(result, tmp_path)
    _, rows = read_table(tmp_path / "histogram.csv")
    lo = np.array([float(r[0]) for r in rows])
    hi = np.array([float(r[1]) for r in rows])
    theory = np.array([float(r[4]) for r in rows])
    params = SemicircleParams.from_partition(result.partition)
    np.testing.assert_array_equal(theory, semicircle_density(0.5 * (lo + hi), params, result.partition.l_a))
    assert sum(int(r[2]) for r in rows) == result.config.instances * result.partition.l_a


def test_schema_mismatch(result, tmp_path):
    persist(result, tmp_path)
    summary = json.loads((tmp_path / "summary.json").read_text())
    summary["schema_version"] = "negspec-result/0"
    (tmp_path / "summary.json").write_text(json.dumps(summary))
    with pytest.raises(SchemaVersionError):
        load(tmp_path)


def test_tampered_aggregates(result, tmp_path):
    persist(result, tmp_path)
    summary = json.loads((tmp_path / "summary.json").read_text())
    summary["aggregates"]["mean_log_negativity"] += 1e-9
    (tmp_path / "summary.json").write_text(json.dumps(summary))
    with pytest.raises(ConsistencyError):
        load(tmp_path)


def test_failed_instance_survives_round_trip(tmp_path, monkeypatch):
    import negspec.ensemble as ensemble

    real = ensemble._fill_record

    def flaky(record, config):
        if record.index == 0:
            raise ArithmeticError("injected")
        real(record, config)

    monkeypatch.setattr(ensemble, "_fill_record", flaky)
    res = run_ensemble(small())
    persist(res, tmp_path / "a")
    loaded = load(tmp_path / "a")
    assert loaded.records[0].status == "error" and loaded.records[0].error == "ArithmeticError: injected"
    persist(loaded, tmp_path / "b")
    assert same_tree(tmp_path / "a", tmp_path / "b")


def test_pure_state_run_has_no_semicircle(tmp_path):
    res = run_ensemble(small(partition=[1, 2, 0], instances=2))
    out = persist(res, tmp_path)
    assert not (out / "semicircle.csv").exists()
    assert load(out).aggregates == json.loads(json.dumps(res.aggregates))


def test_sweep_round_trip(tmp_path):
    res = sweep(small(instances=2), "split_ratio", [1, 9])
    persist_sweep(res, tmp_path / "a")
    header, rows = read_table(tmp_path / "a" / "sweep.csv")
    assert header[0] == "value" and len(rows) == 2 and rows[1][-1].startswith("ConfigError")
    loaded = load_sweep(tmp_path / "a")
    assert loaded.results[1] is None and loaded.errors == res.errors
    persist_sweep(loaded, tmp_path / "b")
    assert same_tree(tmp_path / "a", tmp_path / "b")
