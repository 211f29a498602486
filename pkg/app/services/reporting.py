"""
Run directory persistence, memory accounting and image dumps
"""
import csv
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from app.models.config import ExperimentConfig
from app.models.ledger import BatchLedger
from app.models.metrics import (
    AblationRow,
    AutoencoderLogRow,
    BatchMetrics,
    ClassifierLogRow,
    ComponentSizes,
    MemoryReport,
    RunMetrics,
)
from app.models.scenario import Scenario
from app.services import checkpoint
from app.services.assign import read_assignment
from app.services.classifier import ClassifierState
from app.services.config import dump_config, layout_from_config, load_config
from app.services.datasets import N_CLASSES
from app.services.replay import AutoencoderState, reconstruct
from app.utils.exceptions import IndexOutOfRangeError, MemoryGrowthError, MissingCheckpointError, NotFoundError
from app.utils.logger import logger

CHECKPOINT_RE = re.compile(r"^(ae|clf)_batch(\d+)\.bin$")


class RunPaths:
    def __init__(self, root: Path):
        self.root = Path(root)

    @property
    def config(self) -> Path:
        return self.root / "config.env"

    @property
    def ledger(self) -> Path:
        return self.root / "ledger.json"

    @property
    def scenario(self) -> Path:
        return self.root / "scenario.json"

    @property
    def metrics(self) -> Path:
        return self.root / "metrics.csv"

    @property
    def summary(self) -> Path:
        return self.root / "summary.json"

    def autoencoder(self, batch: int) -> Path:
        return self.root / "checkpoints" / f"ae_batch{batch}.bin"

    def classifier(self, batch: int) -> Path:
        return self.root / "checkpoints" / f"clf_batch{batch}.bin"

    def assignment(self, batch: int) -> Path:
        return self.root / "assignments" / f"batch{batch}.csv"

    def ae_log(self, batch: int) -> Path:
        return self.root / "logs" / f"ae_batch{batch}.csv"

    def clf_log(self, batch: int) -> Path:
        return self.root / "logs" / f"clf_batch{batch}.csv"

    def checkpoint_batches(self, kind: str) -> List[int]:
        directory = self.root / "checkpoints"
        if not directory.exists():
            return []
        found = []
        for path in directory.iterdir():
            match = CHECKPOINT_RE.match(path.name)
            if match and match.group(1) == kind:
                found.append(int(match.group(2)))
        return sorted(found)


def _fmt(value: Optional[float]) -> str:
    return "" if value is None else f"{value:.6f}"


def _write_rows(path: Path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def write_config(paths: RunPaths, config: ExperimentConfig) -> None:
    paths.root.mkdir(parents=True, exist_ok=True)
    paths.config.write_text(dump_config(config))


def write_ae_log(path: Path, rows: Sequence[AutoencoderLogRow]) -> None:
    _write_rows(path, ["phase", "epoch", "recon_mse", "reg_loss"],
                [[r.phase, r.epoch, _fmt(r.recon_mse), _fmt(r.reg_loss)] for r in rows])


def write_clf_log(path: Path, rows: Sequence[ClassifierLogRow]) -> None:
    _write_rows(path, ["epoch", "ce_loss", "distill_loss", "train_acc"],
                [[r.epoch, _fmt(r.ce_loss), _fmt(r.distill_loss), _fmt(r.train_acc)] for r in rows])


def write_metrics(path: Path, rows: Sequence[BatchMetrics], groups: Sequence[str]) -> None:
    """metrics.csv: deterministic columns only (wall clock lives in summary.json)"""
    header = ["batch", "test_avg_acc", *[f"acc_{g}" for g in groups], "seen_acc", "ae_recon_mse", "ae_drift_mse"]
    body = [
        [r.batch, _fmt(r.test_avg_acc), *[_fmt(r.group_acc.get(g)) for g in groups],
         _fmt(r.seen_acc), _fmt(r.ae_recon_mse), _fmt(r.ae_drift_mse)]
        for r in rows
    ]
    _write_rows(path, header, body)


def read_metrics(path: Path) -> List[Dict[str, str]]:
    path = Path(path)
    if not path.exists():
        raise NotFoundError(resource=f"Metrics file {path}")
    with path.open(newline="") as f:
        return list(csv.DictReader(f))


def write_summary(paths: RunPaths, metrics: RunMetrics, status: str) -> None:
    payload = metrics.model_dump()
    payload["status"] = status
    payload["final_accuracy"] = metrics.final_accuracy
    paths.summary.write_text(json.dumps(payload, indent=2, sort_keys=True))


def write_ablation(path: Path, rows: Sequence[AblationRow]) -> None:
    _write_rows(path, ["variant", "seeds", "final_accuracies", "mean_final_acc"], [
        [r.variant, ";".join(str(s) for s in r.seeds),
         ";".join(_fmt(a) for a in r.final_accuracies), _fmt(r.mean_accuracy)]
        for r in rows
    ])


@dataclass
class RunState:
    config: ExperimentConfig
    ledger: BatchLedger
    scenario: Scenario
    autoencoder: AutoencoderState
    classifier: ClassifierState
    batch: int


def load_run_state(run_dir: Path, batch: Optional[int] = None) -> RunState:
    """
    Rebuild the replay state of a run after a given batch (latest by default)

    Only checkpoints, the ledger and the frozen assignments are read; codes are
    recomputed from the layout.

    Raises:
        MissingCheckpointError: If the run has no checkpoint for that batch
    """
    paths = RunPaths(run_dir)
    available = paths.checkpoint_batches("ae")
    if not available:
        raise MissingCheckpointError(str(paths.root / "checkpoints"))
    if batch is None:
        batch = available[-1]
    if batch not in available:
        raise MissingCheckpointError(str(paths.autoencoder(batch)))
    if not paths.ledger.exists():
        raise NotFoundError(resource=f"Ledger {paths.ledger}")

    config = load_config(paths.config)
    full_ledger = BatchLedger.model_validate_json(paths.ledger.read_text())
    ledger = BatchLedger(records=full_ledger.records[:batch])
    scenario = Scenario.model_validate_json(paths.scenario.read_text())
    encoder, decoder = checkpoint.load(paths.autoencoder(batch))
    (classifier_params,) = checkpoint.load(paths.classifier(batch))
    autoencoder = AutoencoderState(encoder=encoder, decoder=decoder, layout=layout_from_config(config))
    for record in ledger.records:
        autoencoder.assignments[record.batch] = read_assignment(paths.assignment(record.batch)).codes
    return RunState(
        config=config,
        ledger=ledger,
        scenario=scenario,
        autoencoder=autoencoder,
        classifier=ClassifierState(params=classifier_params, n_classes=N_CLASSES),
        batch=batch,
    )


def memory_report(run_dir: Path) -> MemoryReport:
    """
    Serialized size of encoder, decoder and classifier after every batch

    Raises:
        MissingCheckpointError: If checkpoints are absent or incomplete
        MemoryGrowthError: If the decoder size changes between batches
    """
    paths = RunPaths(run_dir)
    batches = paths.checkpoint_batches("ae")
    if not batches:
        raise MissingCheckpointError(str(paths.root / "checkpoints"))
    report = MemoryReport()
    for b in batches:
        encoder, decoder = checkpoint.load(paths.autoencoder(b))
        classifier_path = paths.classifier(b)
        if not classifier_path.exists():
            raise MissingCheckpointError(str(classifier_path))
        report.batches.append(ComponentSizes(
            batch=b,
            encoder_bytes=len(checkpoint.to_bytes(encoder)),
            decoder_bytes=len(checkpoint.to_bytes(decoder)),
            classifier_bytes=classifier_path.stat().st_size,
        ))
    decoder_sizes = [s.decoder_bytes for s in report.batches]
    if len(set(decoder_sizes)) != 1:
        raise MemoryGrowthError("decoder", decoder_sizes)
    report.decoder_constant = True
    return report


def quantize(image: np.ndarray) -> bytes:
    """Pixel bytes as round(255 * x), clipped to 0..255"""
    return np.clip(np.floor(255.0 * np.asarray(image) + 0.5), 0, 255).astype(np.uint8).tobytes()


def image_file(image: np.ndarray, shape: Sequence[int]) -> bytes:
    """Binary PGM (P5) for single-channel shapes, PPM (P6) for channel-planar RGB"""
    if len(shape) == 2:
        rows, cols = shape
        return f"P5\n{cols} {rows}\n255\n".encode("ascii") + quantize(image)
    channels, rows, cols = shape
    interleaved = np.asarray(image).reshape(channels, rows, cols).transpose(1, 2, 0)
    return f"P6\n{cols} {rows}\n255\n".encode("ascii") + quantize(interleaved)


def dump_images(run_dir: Path, indices: Sequence[int], batch: Optional[int] = None, out_dir: Optional[Path] = None) -> List[Path]:
    """
    Write the reconstruction of each index after the given batch

    Files are named recon_<batch>_<index>.pgm (or .ppm for colour data).

    Raises:
        IndexOutOfRangeError: If an index was not observed by that batch
    """
    state = load_run_state(run_dir, batch)
    shape = state.scenario.image_shape
    out_dir = Path(out_dir or Path(run_dir) / "images")
    out_dir.mkdir(parents=True, exist_ok=True)
    suffix = "pgm" if len(shape) == 2 else "ppm"
    written = []
    for i in indices:
        if not 1 <= i <= state.ledger.total:
            raise IndexOutOfRangeError(message=f"Index {i} outside 1..{state.ledger.total}")
        path = out_dir / f"recon_{state.batch}_{i}.{suffix}"
        path.write_bytes(image_file(reconstruct(state.autoencoder, i, state.ledger), shape))
        written.append(path)
    logger.info(f"Wrote {len(written)} reconstructions after batch {state.batch} to {out_dir}")
    return written


__all__ = [
    "RunPaths",
    "RunState",
    "dump_images",
    "load_run_state",
    "memory_report",
    "read_metrics",
    "write_ablation",
    "write_ae_log",
    "write_clf_log",
    "write_config",
    "write_metrics",
    "write_summary",
]
