import json

import numpy as np
import pytest

from app.services import checkpoint
from app.services.experiment import ablation, run_baseline, run_binplay
from app.services.replay import reconstruct, reconstruct_many
from app.services.reporting import (
    RunPaths,
    dump_images,
    image_file,
    load_run_state,
    memory_report,
    quantize,
    read_metrics,
)
from app.utils.exceptions import IndexOutOfRangeError, InvalidScenarioError, MissingCheckpointError

pytestmark = pytest.mark.slow


@pytest.fixture
def finished_run(tiny_config, tiny_data):
    metrics = run_binplay(tiny_config, data=tiny_data)
    return RunPaths(tiny_config.run.out), metrics


class TestRunBinplay:
    def test_one_row_per_batch(self, finished_run):
        paths, metrics = finished_run
        assert [r.batch for r in metrics.rows] == [1, 2, 3]
        rows = read_metrics(paths.metrics)
        assert list(rows[0]) == [
            "batch", "test_avg_acc", "acc_c01", "acc_c23", "acc_c45", "seen_acc", "ae_recon_mse", "ae_drift_mse",
        ]
        assert rows[0]["ae_drift_mse"] == ""
        assert rows[1]["ae_drift_mse"] != ""
        for row in metrics.rows:
            assert 0.0 <= row.test_avg_acc <= 1.0
            assert 0.0 <= row.seen_acc <= 1.0

    def test_metrics_csv_is_byte_identical_across_runs(self, tiny_config, tiny_data, tmp_path):
        run_binplay(tiny_config, tmp_path / "a", tiny_data)
        run_binplay(tiny_config, tmp_path / "b", tiny_data)
        assert (tmp_path / "a" / "metrics.csv").read_bytes() == (tmp_path / "b" / "metrics.csv").read_bytes()

    def test_summary_records_status_and_hash(self, finished_run):
        paths, metrics = finished_run
        summary = json.loads(paths.summary.read_text())
        assert summary["status"] == "completed"
        assert summary["config_hash"] == metrics.config_hash
        assert summary["final_accuracy"] == pytest.approx(metrics.rows[-1].test_avg_acc)
        assert len(summary["batch_wall_s"]) == 3

    def test_only_models_ledger_and_assignments_persist(self, finished_run):
        paths, _ = finished_run
        suffixes = {p.suffix for p in paths.root.rglob("*") if p.is_file()}
        assert suffixes <= {".env", ".json", ".csv", ".bin", ".log"}
        assert paths.checkpoint_batches("ae") == [1, 2, 3]
        assert paths.checkpoint_batches("clf") == [1, 2, 3]

    def test_checkpoint_sizes_constant(self, finished_run):
        _, metrics = finished_run
        assert len(set(metrics.checkpoint_bytes["autoencoder"])) == 1
        assert len(set(metrics.checkpoint_bytes["classifier"])) == 1

    def test_aborted_run_writes_summary(self, tiny_config, tiny_data):
        config = tiny_config.model_copy(
            update={"scenario": tiny_config.scenario.model_copy(update={"per_class_cap": 50})}
        )
        with pytest.raises(InvalidScenarioError):
            run_binplay(config, data=tiny_data)
        summary = json.loads(RunPaths(config.run.out).summary.read_text())
        assert summary["status"] == "aborted"
        assert summary["rows"] == []


class TestRunState:
    def test_rebuilds_replay_state(self, finished_run):
        paths, _ = finished_run
        state = load_run_state(paths.root)
        assert state.batch == 3
        assert state.ledger.total == 36
        assert sorted(state.autoencoder.assignments) == [1, 2, 3]
        assert state.scenario.image_shape == [4, 4]

    def test_earlier_batch_uses_its_checkpoint(self, finished_run):
        paths, _ = finished_run
        state = load_run_state(paths.root, batch=1)
        assert state.ledger.total == 12
        (decoder_params,) = checkpoint.load(paths.autoencoder(1))[1:]
        np.testing.assert_array_equal(state.autoencoder.decoder.layers[0].weight, decoder_params.layers[0].weight)

    def test_missing_batch(self, finished_run):
        with pytest.raises(MissingCheckpointError):
            load_run_state(finished_run[0].root, batch=7)

    def test_batch_zero_is_not_the_latest(self, finished_run):
        with pytest.raises(MissingCheckpointError):
            load_run_state(finished_run[0].root, batch=0)

    def test_reconstructions_need_no_stored_codes(self, finished_run):
        paths, _ = finished_run
        state = load_run_state(paths.root)
        indices = range(1, state.ledger.total + 1)
        first = reconstruct_many(state.autoencoder, indices, state.ledger)
        state.autoencoder.clear_code_cache()
        np.testing.assert_array_equal(reconstruct_many(state.autoencoder, indices, state.ledger), first)
        rebuilt = load_run_state(paths.root)
        np.testing.assert_array_equal(reconstruct_many(rebuilt.autoencoder, indices, rebuilt.ledger), first)


class TestReports:
    def test_memory_report(self, finished_run, tiny_config):
        paths, _ = finished_run
        report = memory_report(paths.root)
        assert report.decoder_constant
        assert [s.batch for s in report.batches] == [1, 2, 3]
        n, hidden = 16, tiny_config.autoencoder.hidden
        decoder_size = checkpoint.serialized_size([(n, hidden, 1), (hidden, 16, 2)])
        assert report.generative_bytes == decoder_size
        first = report.batches[0]
        assert first.total_bytes == first.encoder_bytes + first.decoder_bytes + first.classifier_bytes
        assert report.batches[0].total_bytes == report.batches[-1].total_bytes

    def test_memory_report_without_checkpoints(self, tmp_path):
        with pytest.raises(MissingCheckpointError):
            memory_report(tmp_path)

    def test_dump_images(self, finished_run, tmp_path):
        paths, _ = finished_run
        first = dump_images(paths.root, [1, 30], out_dir=tmp_path / "a")
        second = dump_images(paths.root, [1, 30], out_dir=tmp_path / "b")
        assert [p.name for p in first] == ["recon_3_1.pgm", "recon_3_30.pgm"]
        payload = first[0].read_bytes()
        assert payload.startswith(b"P5\n4 4\n255\n")
        assert len(payload) == len(b"P5\n4 4\n255\n") + 16
        assert payload == second[0].read_bytes()
        state = load_run_state(paths.root)
        expected = np.floor(255 * reconstruct(state.autoencoder, 1, state.ledger) + 0.5).astype(np.uint8)
        assert payload[-16:] == expected.tobytes()

    def test_dump_rejects_unseen_index(self, finished_run):
        with pytest.raises(IndexOutOfRangeError):
            dump_images(finished_run[0].root, [37])

    def test_quantize_and_colour_header(self):
        assert quantize(np.array([0.0, 0.5, 1.0, 1.2])) == bytes([0, 128, 255, 255])
        image = np.zeros(3 * 2 * 2)
        assert image_file(image, (3, 2, 2)).startswith(b"P6\n2 2\n255\n")


class TestBaselines:
    def test_finetune_has_one_row_per_batch(self, tiny_config, tiny_data, tmp_path):
        metrics = run_baseline(tiny_config, "finetune", tmp_path / "ft", tiny_data)
        assert metrics.mode == "finetune"
        assert len(metrics.rows) == 3
        assert not RunPaths(tmp_path / "ft").checkpoint_batches("ae")

    def test_joint_trains_once(self, tiny_config, tiny_data, tmp_path):
        metrics = run_baseline(tiny_config, "joint", tmp_path / "joint", tiny_data)
        assert len(metrics.rows) == 1
        assert metrics.rows[0].seen_acc == metrics.rows[0].test_avg_acc

    def test_ablation_table(self, tiny_config, tiny_data, tmp_path):
        rows = ablation(tiny_config, [0], tmp_path / "ablate", tiny_data)
        assert [r.variant for r in rows] == ["reference", "preprocess", "soft_targets"]
        lines = (tmp_path / "ablate" / "ablation.csv").read_text().splitlines()
        assert lines[0] == "variant,seeds,final_accuracies,mean_final_acc"
        assert len(lines) == 4
