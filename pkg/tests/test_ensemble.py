import random

import numpy as np
import pytest

import negspec.ensemble as ensemble
from negspec.circuits import CouplingMatrix, build_random_circuit
from negspec.config import config_from_dict
from negspec.ensemble import (
    compute_aggregates,
    instance_seed,
    run_ensemble,
    run_instance,
    sweep,
)
from negspec.errors import ConfigError, RunError


def small(**overrides):
    doc = {"partition": {"a1": 1, "a2": 2, "b": 2}, "layers": 3, "instances": 4}
    doc.update(overrides)
    return config_from_dict(doc)


class TestSeeds:
    def test_regression(self):
        # fixed mixing: SeedSequence(entropy=master, spawn_key=(point, instance)) -> first uint64 word
        assert [instance_seed(12345, i) for i in range(3)] == [
            8675000357229432475,
            11451201289649763924,
            2654405894662402076,
        ]
        assert instance_seed(12345, 0, point_index=1) == 7276911938237341081
        assert instance_seed(1, 5, 2) == 14085065707196205510

    def test_matches_documented_mixing(self):
        ss = np.random.SeedSequence(entropy=99, spawn_key=(3, 7))
        assert instance_seed(99, 7, 3) == int(ss.generate_state(1, dtype=np.uint64)[0])

    def test_no_duplicate_layer_parameters(self):
        coupling = CouplingMatrix.uniform(2)
        seen = set()
        for i in range(1000):
            rng = np.random.default_rng(instance_seed(12345, i))
            spec = build_random_circuit(2, 1, coupling, 1.0, rng)
            params = tuple((p.theta, p.phi) for pair in spec.layers[0].single_gates for p in pair)
            seen.add(params)
        assert len(seen) == 1000


class TestRunInstance:
    def test_deterministic(self):
        cfg = small()
        a, b = run_instance(cfg, 2), run_instance(cfg, 2)
        assert a.spectrum.tobytes() == b.spectrum.tobytes()
        assert a.circuit == b.circuit and a.log_negativity == b.log_negativity

    def test_indices_differ(self):
        cfg = small()
        assert run_instance(cfg, 0).circuit != run_instance(cfg, 1).circuit

    def test_zero_depth_is_product_state(self):
        rec = run_instance(small(layers=0), 0)
        assert rec.negativity == 0.0 and rec.log_negativity == 0.0

    def test_index_out_of_range(self):
        with pytest.raises(ConfigError):
            run_instance(small(), 4)

    def test_noise_mixes_reduced_state(self):
        clean = run_instance(small(), 0)
        eps = 0.05
        noisy = run_instance(small(noise={"depolarizing_per_layer": eps}), 0)
        f = (1 - eps) ** 3
        l_a = 8
        assert noisy.purity == pytest.approx(f * f * clean.purity + (1 - f * f) / l_a, abs=1e-12)
        assert noisy.purity_exact == clean.purity
        assert noisy.negativity <= clean.negativity

    def test_exact_tomography_matches_direct(self):
        direct = run_instance(small(), 1)
        tomo = run_instance(small(tomography={"enabled": True, "shots_per_setting": 0}), 1)
        np.testing.assert_allclose(tomo.spectrum, direct.spectrum, atol=1e-9)

    def test_finite_shot_tomography_with_purity_correction(self):
        cfg = small(tomography={"enabled": True, "shots_per_setting": 2000, "purity_correction": "ideal"})
        rec = run_instance(cfg, 0)
        assert rec.ok
        assert rec.log_negativity_uncorrected is not None
        assert rec.purity == pytest.approx(rec.purity_exact, abs=1e-6)

    def test_probability_gate(self):
        assert run_instance(small(), 0).probabilities is not None
        gated = small(probabilities={"max_qubits": 4})
        assert run_instance(gated, 0).probabilities is None
        forced = small(probabilities={"max_qubits": 4, "force": True})
        np.testing.assert_allclose(run_instance(forced, 0).probabilities.sum(), 1.0)

    def test_failure_is_recorded(self):
        cfg = config_from_dict({"partition": [4, 5, 0], "layers": 1, "instances": 1, "tomography": {"enabled": True}})
        rec = run_instance(cfg, 0)
        assert rec.status == "error" and "DomainError" in rec.error


class TestRunEnsemble:
    def test_single_instance_aggregates(self):
        res = run_ensemble(small(instances=1))
        rec = res.records[0]
        assert res.aggregates["mean_log_negativity"] == rec.log_negativity
        assert res.aggregates["stderr_log_negativity"] == 0.0
        assert res.aggregates["pooled_min"] == rec.spectrum[0]

    def test_record_count_and_order(self):
        res = run_ensemble(small())
        assert [r.index for r in res.records] == [0, 1, 2, 3]

    def test_aggregates_independent_of_order(self):
        cfg = small(instances=6)
        res = run_ensemble(cfg)
        shuffled = list(res.records)
        random.Random(0).shuffle(shuffled)
        assert compute_aggregates(cfg, shuffled) == res.aggregates

    def test_workers_give_identical_records(self):
        cfg = small()
        one, two = run_ensemble(cfg, workers=1), run_ensemble(cfg, workers=2)
        for a, b in zip(one.records, two.records):
            assert a.spectrum.tobytes() == b.spectrum.tobytes()
        assert one.aggregates == two.aggregates

    def test_mean_and_stderr(self):
        res = run_ensemble(small(instances=5))
        e = np.array([r.log_negativity for r in res.records])
        assert res.aggregates["mean_log_negativity"] == pytest.approx(e.mean(), abs=1e-15)
        assert res.aggregates["stderr_log_negativity"] == pytest.approx(e.std(ddof=1) / np.sqrt(5), abs=1e-15)

    def test_labels(self):
        agg = run_ensemble(small(instances=1)).aggregates
        assert agg["phase"] == "ES" and agg["semicircle_edge"] == "negative"
        assert agg["predicted_log_negativity"] == pytest.approx(0.5 + np.log2(8 / (3 * np.pi)))

    def test_partial_failure(self, monkeypatch):
        real = ensemble._fill_record

        def flaky(record, config):
            if record.index == 1:
                raise FloatingPointError("injected")
            real(record, config)

        monkeypatch.setattr(ensemble, "_fill_record", flaky)
        res = run_ensemble(small())
        assert res.aggregates["instances_failed"] == 1 and res.aggregates["instances_ok"] == 3
        assert res.records[1].error == "FloatingPointError: injected"

    def test_all_failed(self):
        cfg = config_from_dict({"partition": [4, 5, 0], "layers": 1, "instances": 2, "tomography": {"enabled": True}})
        with pytest.raises(RunError):
            run_ensemble(cfg)


class TestSweep:
    def test_environment(self):
        res = sweep(small(instances=2), "environment_size", [3, 0])
        assert [r.partition.n_b for r in res.results] == [3, 0]
        assert [r.point_index for r in res.results] == [0, 1]
        rows = res.table()
        assert rows[0]["n_b"] == 3 and rows[1]["phase"] == "ME"

    def test_fresh_seeds_per_point(self):
        res = sweep(small(instances=1), "depth", [2, 2])
        assert res.results[0].records[0].seed != res.results[1].records[0].seed

    def test_split_with_invalid_point(self):
        res = sweep(small(instances=1), "split_ratio", [0, 3, 4])
        assert res.results[2] is None and "ConfigError" in res.errors[2]
        assert res.results[1].partition.sizes() == (3, 0, 2)

    def test_depth(self):
        res = sweep(small(instances=2), "depth", [1, 4])
        kl = [row["kl_divergence"] for row in res.table()]
        assert all(k >= 0 for k in kl)
        assert [r.config.depth for r in res.results] == [1, 4]

    def test_unknown_axis(self):
        with pytest.raises(ConfigError):
            sweep(small(), "temperature", [1])

    def test_auto_depth_follows_environment(self):
        res = sweep(small(instances=1, layers="auto"), "environment_size", [4, 3])
        assert [r.config.depth for r in res.results] == [5, 4]
