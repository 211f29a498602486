"""
Experiment orchestration: BinPlay runs, baselines and the ablation study
"""
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np

from app.models.config import ExperimentConfig
from app.models.ledger import BatchLedger
from app.models.metrics import AblationRow, BatchMetrics, RunMetrics
from app.models.scenario import Scenario
from app.services import checkpoint
from app.services.assign import write_assignment
from app.services.classifier import (
    build_classifier,
    evaluate,
    snapshot_classifier,
    train_batch_classifier,
    train_supervised,
)
from app.services.config import config_hash, layout_from_config
from app.services.datasets import N_CLASSES, Dataset, load_split
from app.services.network import ModelParams
from app.services.replay import build_autoencoder, train_batch
from app.services.reporting import (
    RunPaths,
    write_ablation,
    write_ae_log,
    write_clf_log,
    write_config,
    write_metrics,
    write_summary,
)
from app.services.scenario import build_scenario, group_name
from app.services.seeding import Stream, rng_for
from app.utils.logger import add_run_sink, logger

ABLATION_VARIANTS: Dict[str, Dict[str, bool]] = {
    "reference": {"preprocess_current": False, "soft_targets": False},
    "preprocess": {"preprocess_current": True, "soft_targets": False},
    "soft_targets": {"preprocess_current": True, "soft_targets": True},
}


@dataclass
class ExperimentData:
    train: Dataset
    test: Dataset


def load_data(config: ExperimentConfig, data: Optional[ExperimentData] = None) -> ExperimentData:
    if data is not None:
        return data
    return ExperimentData(train=load_split(config, "train"), test=load_split(config, "test"))


def _prepare(config: ExperimentConfig, data: ExperimentData) -> Tuple[Scenario, List[Dataset], Dataset]:
    seed = config.run.seed
    scenario, batches = build_scenario(
        data.train,
        config.scenario.class_groups,
        config.scenario.per_class_cap,
        seed,
        rng_for(seed, Stream.SCENARIO),
    )
    scenario.image_shape = list(data.train.image_shape)
    return scenario, batches, scenario_test_split(data.test, scenario)


def scenario_test_split(test: Dataset, scenario: Scenario) -> Dataset:
    """Test samples of the classes the scenario trains on"""
    return test.subset(np.isin(test.labels, scenario.classes))


def evaluate_row(
    params: ModelParams,
    test: Dataset,
    scenario: Scenario,
    seen_classes: Sequence[int],
    batch: int,
) -> BatchMetrics:
    """Full-test, per class-group and seen-class accuracy after a batch"""
    overall = evaluate(params, test.images, test.labels)
    groups = {}
    for entry in scenario.batches:
        hits = [overall.per_class[c] * np.sum(test.labels == c) for c in entry.classes if c in overall.per_class]
        count = sum(int(np.sum(test.labels == c)) for c in entry.classes)
        if count:
            groups[group_name(entry.classes)] = float(sum(hits) / count)
    seen = np.isin(test.labels, list(seen_classes))
    seen_acc = evaluate(params, test.images[seen], test.labels[seen]).average if seen.any() else 0.0
    return BatchMetrics(batch=batch, test_avg_acc=overall.average, seen_acc=seen_acc, group_acc=groups)


def _group_names(scenario: Scenario) -> List[str]:
    return [group_name(b.classes) for b in scenario.batches]


def run_binplay(
    config: ExperimentConfig,
    out_dir: Optional[Path] = None,
    data: Optional[ExperimentData] = None,
) -> RunMetrics:
    """
    Train the autoencoder and the classifier batch by batch

    Between batches only the checkpoints, the ledger and the frozen
    assignments are kept; past images are dropped once their batch is done.
    metrics.csv is rewritten after every batch so an aborted run keeps its
    completed rows.
    """
    paths = RunPaths(out_dir or config.run.out)
    seed = config.run.seed
    data = load_data(config, data)
    sink = add_run_sink(paths.root)
    metrics = RunMetrics(mode="binplay", seed=seed, config_hash=config_hash(config))
    status = "aborted"
    started = time.perf_counter()
    try:
        write_config(paths, config)
        scenario, batches, test = _prepare(config, data)
        paths.scenario.write_text(scenario.model_dump_json(indent=2))
        data = None

        image_size = batches[0].images.shape[1]
        autoencoder = build_autoencoder(image_size, layout_from_config(config), config.autoencoder.hidden,
                                        rng_for(seed, Stream.AE_INIT))
        classifier = build_classifier(image_size, config.classifier.hidden, N_CLASSES, rng_for(seed, Stream.CLF_INIT))
        ae_rng = rng_for(seed, Stream.AE_TRAIN)
        clf_rng = rng_for(seed, Stream.CLF_TRAIN)
        replay_rng = rng_for(seed, Stream.REPLAY)
        ledger = BatchLedger()
        logger.info(f"BinPlay run: {len(batches)} batches, seed {seed}, output {paths.root}")

        for b in range(1, len(batches) + 1):
            batch_started = time.perf_counter()
            current, batches[b - 1] = batches[b - 1], None
            record = ledger.register(len(current), scenario.batches[b - 1].classes)

            result = train_batch(autoencoder, current.images, ledger, config.autoencoder, ae_rng)
            write_assignment(paths.assignment(b), result.assignment, record.first)
            write_ae_log(paths.ae_log(b), result.log)
            ae_bytes = checkpoint.save(paths.autoencoder(b), autoencoder.encoder, autoencoder.decoder)

            if b > 1:
                snapshot_classifier(classifier)
            clf_log = train_batch_classifier(
                classifier, autoencoder, ledger, current.images, current.labels,
                config.classifier, clf_rng, replay_rng,
            )
            classifier.frozen = None
            write_clf_log(paths.clf_log(b), clf_log)
            clf_bytes = checkpoint.save(paths.classifier(b), classifier.params)
            paths.ledger.write_text(ledger.model_dump_json(indent=2))
            del current

            row = evaluate_row(classifier.params, test, scenario, ledger.seen_classes, b)
            row.ae_recon_mse = result.recon_mse
            row.ae_drift_mse = result.drift_mse
            metrics.rows.append(row)
            metrics.checkpoint_bytes.setdefault("autoencoder", []).append(ae_bytes)
            metrics.checkpoint_bytes.setdefault("classifier", []).append(clf_bytes)
            metrics.batch_wall_s.append(time.perf_counter() - batch_started)
            write_metrics(paths.metrics, metrics.rows, _group_names(scenario))
            logger.info(
                f"[batch {b}] test accuracy {row.test_avg_acc:.4f} (seen {row.seen_acc:.4f})",
                extra={"groups": row.group_acc},
            )
        status = "completed"
        return metrics
    except Exception as e:
        logger.bind(completed_batches=len(metrics.rows)).error(f"BinPlay run aborted: {e}")
        raise
    finally:
        metrics.wall_s = time.perf_counter() - started
        if paths.root.exists():
            write_summary(paths, metrics, status)
        logger.remove(sink)


def run_baseline(
    config: ExperimentConfig,
    mode: Literal["finetune", "joint"],
    out_dir: Optional[Path] = None,
    data: Optional[ExperimentData] = None,
) -> RunMetrics:
    """
    Reference bounds with the same classifier and scenario

    finetune trains sequentially on raw batches with no replay; joint trains
    once on the union of all batches.
    """
    paths = RunPaths(out_dir or config.run.out)
    seed = config.run.seed
    data = load_data(config, data)
    sink = add_run_sink(paths.root)
    metrics = RunMetrics(mode=mode, seed=seed, config_hash=config_hash(config))
    status = "aborted"
    started = time.perf_counter()
    try:
        write_config(paths, config)
        scenario, batches, test = _prepare(config, data)
        paths.scenario.write_text(scenario.model_dump_json(indent=2))
        image_size = batches[0].images.shape[1]
        classifier = build_classifier(image_size, config.classifier.hidden, N_CLASSES, rng_for(seed, Stream.CLF_INIT))
        rng = rng_for(seed, Stream.CLF_TRAIN)

        if mode == "joint":
            stages = [(len(batches), np.concatenate([b.images for b in batches]),
                       np.concatenate([b.labels for b in batches]), scenario.classes)]
        else:
            stages = [(k, b.images, b.labels, [c for s in scenario.batches[:k] for c in s.classes])
                      for k, b in enumerate(batches, start=1)]

        for b, images, labels, seen in stages:
            batch_started = time.perf_counter()
            log = train_supervised(classifier, images, labels, config.classifier, rng)
            write_clf_log(paths.clf_log(b), log)
            metrics.checkpoint_bytes.setdefault("classifier", []).append(
                checkpoint.save(paths.classifier(b), classifier.params)
            )
            metrics.rows.append(evaluate_row(classifier.params, test, scenario, seen, b))
            metrics.batch_wall_s.append(time.perf_counter() - batch_started)
            write_metrics(paths.metrics, metrics.rows, _group_names(scenario))
            logger.info(f"[{mode} {b}] test accuracy {metrics.rows[-1].test_avg_acc:.4f}")
        status = "completed"
        return metrics
    finally:
        metrics.wall_s = time.perf_counter() - started
        if paths.root.exists():
            write_summary(paths, metrics, status)
        logger.remove(sink)


def with_seed(config: ExperimentConfig, seed: int) -> ExperimentConfig:
    return config.model_copy(update={"run": config.run.model_copy(update={"seed": seed})})


def ablation(
    config: ExperimentConfig,
    seeds: Sequence[int],
    out_dir: Optional[Path] = None,
    data: Optional[ExperimentData] = None,
) -> List[AblationRow]:
    """
    Final accuracy of three classifier variants, each over every seed

    reference: raw current samples and hard labels on replay;
    preprocess: current samples passed through the autoencoder;
    soft_targets: preprocessing plus soft targets from the frozen copy.
    """
    root = Path(out_dir or config.run.out)
    data = load_data(config, data)
    rows = []
    for variant, options in ABLATION_VARIANTS.items():
        accuracies = []
        for seed in seeds:
            variant_config = with_seed(config, seed).model_copy(
                update={"classifier": config.classifier.model_copy(update=options)}
            )
            metrics = run_binplay(variant_config, root / variant / f"seed_{seed}", data)
            accuracies.append(metrics.final_accuracy)
        rows.append(AblationRow(variant=variant, seeds=list(seeds), final_accuracies=accuracies))
        logger.info(f"Ablation {variant}: mean final accuracy {rows[-1].mean_accuracy:.4f}")
    write_ablation(root / "ablation.csv", rows)
    return rows
