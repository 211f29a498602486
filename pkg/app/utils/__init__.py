"""
Utility modules for the application
"""
from app.utils.logger import logger, add_run_sink
from app.utils.exceptions import (
    AppException,
    InvalidSpecError,
    IndexOutOfCapacityError,
    BatchOutOfCapacityError,
    InvalidRangeError,
    ShapeMismatchError,
    SizeMismatchError,
    InvalidDistributionError,
    LabelOutOfRangeError,
    EmptyPoolError,
    IndexOutOfRangeError,
    InvalidScenarioError,
    ConfigError,
    EmptyTestSetError,
    BadMagicError,
    TruncatedFileError,
    CountMismatchError,
    ChecksumMismatchError,
    CheckpointError,
    NotFoundError,
    MissingCheckpointError,
    MissingSnapshotError,
    NonFiniteLossError,
    MemoryGrowthError,
)

__all__ = [
    "logger",
    "add_run_sink",
    "AppException",
    "InvalidSpecError",
    "IndexOutOfCapacityError",
    "BatchOutOfCapacityError",
    "InvalidRangeError",
    "ShapeMismatchError",
    "SizeMismatchError",
    "InvalidDistributionError",
    "LabelOutOfRangeError",
    "EmptyPoolError",
    "IndexOutOfRangeError",
    "InvalidScenarioError",
    "ConfigError",
    "EmptyTestSetError",
    "BadMagicError",
    "TruncatedFileError",
    "CountMismatchError",
    "ChecksumMismatchError",
    "CheckpointError",
    "NotFoundError",
    "MissingCheckpointError",
    "MissingSnapshotError",
    "NonFiniteLossError",
    "MemoryGrowthError",
]
