from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, Field, computed_field


class AutoencoderLogRow(BaseModel):
    phase: Literal["warmup", "assign", "decoder"]
    epoch: int
    recon_mse: float
    reg_loss: float


class ClassifierLogRow(BaseModel):
    epoch: int
    ce_loss: float
    distill_loss: float
    train_acc: float


class Evaluation(BaseModel):
    average: float = Field(..., ge=0, le=1)
    per_class: Dict[int, float] = Field(default_factory=dict)
    count: int


class BatchMetrics(BaseModel):
    """One row of metrics.csv."""

    batch: int
    test_avg_acc: float
    seen_acc: float
    group_acc: Dict[str, float]
    ae_recon_mse: Optional[float] = None
    ae_drift_mse: Optional[float] = None


class RunMetrics(BaseModel):
    mode: Literal["binplay", "finetune", "joint"] = "binplay"
    seed: int
    config_hash: str
    rows: List[BatchMetrics] = Field(default_factory=list)
    checkpoint_bytes: Dict[str, List[int]] = Field(default_factory=dict)
    wall_s: float = 0.0
    batch_wall_s: List[float] = Field(default_factory=list)

    @property
    def final_accuracy(self) -> float:
        return self.rows[-1].test_avg_acc if self.rows else 0.0


class AblationRow(BaseModel):
    variant: Literal["reference", "preprocess", "soft_targets"]
    seeds: List[int]
    final_accuracies: List[float]

    @property
    def mean_accuracy(self) -> float:
        return sum(self.final_accuracies) / len(self.final_accuracies)


class ComponentSizes(BaseModel):
    batch: int
    encoder_bytes: int
    decoder_bytes: int
    classifier_bytes: int

    @computed_field
    @property
    def total_bytes(self) -> int:
        return self.encoder_bytes + self.decoder_bytes + self.classifier_bytes

    @computed_field
    @property
    def total_mb(self) -> float:
        return self.total_bytes / 2 ** 20


class MemoryReport(BaseModel):
    batches: List[ComponentSizes] = Field(default_factory=list)
    decoder_constant: bool = True

    @property
    def generative_bytes(self) -> int:
        """Only the decoder is needed to replay past samples."""
        return self.batches[-1].decoder_bytes if self.batches else 0
