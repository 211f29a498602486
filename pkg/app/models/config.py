from typing import List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator


def _split(value, sep: str = ","):
    if isinstance(value, str):
        return [part.strip() for part in value.split(sep) if part.strip()]
    return value


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DataConfig(_Section):
    name: Literal["mnist", "fashion_mnist", "cifar10"] = "mnist"
    dir: Optional[str] = None
    test_limit: Optional[int] = Field(default=None, ge=1)


class ScenarioConfig(_Section):
    class_groups: List[List[int]] = Field(default_factory=lambda: [[0, 1], [2, 3], [4, 5], [6, 7], [8, 9]])
    per_class_cap: Optional[int] = Field(default=500, ge=1)

    @field_validator("class_groups", mode="before")
    @classmethod
    def _parse_groups(cls, value):
        if isinstance(value, str):
            return [[int(c) for c in group.split()] for group in _split(value)]
        return value

    @field_validator("per_class_cap", mode="before")
    @classmethod
    def _parse_cap(cls, value):
        if isinstance(value, str) and value.strip().lower() in ("", "none", "all"):
            return None
        return value


class CodesConfig(_Section):
    index_bits: int = Field(default=16, ge=1, le=63)
    index_primes: List[int] = Field(default_factory=lambda: [3, 5, 7, 11])
    prefix_bits: int = Field(default=8, ge=1, le=63)
    prefix_prime: int = 3

    @field_validator("index_primes", mode="before")
    @classmethod
    def _parse_primes(cls, value):
        return _split(value)


class AutoencoderConfig(_Section):
    hidden: int = Field(default=512, ge=1)
    warmup_epochs: int = Field(default=5, ge=0)
    assign_epoch_cap: int = Field(default=30, ge=1)
    stable_window: int = Field(default=3, ge=1)
    decoder_epochs: int = Field(default=40, ge=0)
    minibatch: int = Field(default=64, ge=1)
    learning_rate: float = Field(default=1e-3, gt=0)
    reg_weight: float = Field(default=0.1, ge=0)


class ClassifierConfig(_Section):
    hidden: int = Field(default=256, ge=1)
    epochs: int = Field(default=10, ge=1)
    current_minibatch: int = Field(default=32, ge=1)
    replay_minibatch: int = Field(default=32, ge=0)
    learning_rate: float = Field(default=1e-3, gt=0)
    replay_weight: Union[Literal["auto"], float] = "auto"
    preprocess_current: bool = True
    soft_targets: bool = True


class RunConfig(_Section):
    seed: int = Field(default=0, ge=0, lt=2 ** 64)
    out: str = "runs/default"


class ExperimentConfig(_Section):
    data: DataConfig = Field(default_factory=DataConfig)
    scenario: ScenarioConfig = Field(default_factory=ScenarioConfig)
    codes: CodesConfig = Field(default_factory=CodesConfig)
    autoencoder: AutoencoderConfig = Field(default_factory=AutoencoderConfig)
    classifier: ClassifierConfig = Field(default_factory=ClassifierConfig)
    run: RunConfig = Field(default_factory=RunConfig)
