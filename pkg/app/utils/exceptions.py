"""
Custom exceptions for the application
"""
from fastapi import status
from typing import Optional


class AppException(Exception):
    """Base exception for application errors"""
    def __init__(
        self,
        message: str,
        status_code: int = status.HTTP_500_INTERNAL_SERVER_ERROR,
        detail: Optional[str] = None,
        error_code: Optional[str] = None,
    ):
        self.message = message
        self.status_code = status_code
        self.detail = detail or message
        self.error_code = error_code or "APP_ERROR"
        super().__init__(self.message)


class _ClientError(AppException):
    error_code_value = "BAD_REQUEST"
    status_code_value = status.HTTP_400_BAD_REQUEST

    def __init__(self, message: str, detail: Optional[str] = None):
        super().__init__(
            message=message,
            status_code=self.status_code_value,
            detail=detail,
            error_code=self.error_code_value,
        )


class InvalidSpecError(_ClientError):
    """Raised when a subvector spec or code layout is invalid"""
    error_code_value = "INVALID_SPEC"


class IndexOutOfCapacityError(_ClientError):
    """Raised when a sample index exceeds the code capacity"""
    error_code_value = "INDEX_OUT_OF_CAPACITY"


class BatchOutOfCapacityError(_ClientError):
    """Raised when a batch index exceeds the prefix capacity"""
    error_code_value = "BATCH_OUT_OF_CAPACITY"


class InvalidRangeError(_ClientError):
    """Raised when an index range is empty or reversed"""
    error_code_value = "INVALID_RANGE"


class ShapeMismatchError(_ClientError):
    """Raised when array shapes do not chain or match"""
    error_code_value = "SHAPE_MISMATCH"


class SizeMismatchError(_ClientError):
    """Raised when latents and codebook differ in size"""
    error_code_value = "SIZE_MISMATCH"


class InvalidDistributionError(_ClientError):
    """Raised when a target is not a probability vector"""
    error_code_value = "INVALID_DISTRIBUTION"


class LabelOutOfRangeError(_ClientError):
    """Raised when a class label is outside the output width"""
    error_code_value = "LABEL_OUT_OF_RANGE"


class EmptyPoolError(_ClientError):
    """Raised when no code is left to assign"""
    error_code_value = "EMPTY_POOL"


class IndexOutOfRangeError(_ClientError):
    """Raised when a sample index is outside the observed range"""
    error_code_value = "INDEX_OUT_OF_RANGE"


class InvalidScenarioError(_ClientError):
    """Raised when a class-incremental scenario cannot be built"""
    error_code_value = "INVALID_SCENARIO"


class ConfigError(_ClientError):
    """Raised when the experiment configuration is invalid"""
    error_code_value = "CONFIG_ERROR"


class EmptyTestSetError(_ClientError):
    """Raised when evaluating on an empty test set"""
    error_code_value = "EMPTY_TEST_SET"


class DataFormatError(AppException):
    """Raised when a dataset file cannot be parsed"""
    def __init__(self, message: str, error_code: str, detail: Optional[str] = None):
        super().__init__(
            message=message,
            status_code=status.HTTP_422_UNPROCESSABLE_ENTITY,
            detail=detail,
            error_code=error_code,
        )


class BadMagicError(DataFormatError):
    """Raised when a file header carries an unexpected magic number"""
    def __init__(self, path: str, value: int, expected: int):
        super().__init__(
            message=f"Bad magic 0x{value:08x} in {path} (expected 0x{expected:08x})",
            error_code="BAD_MAGIC",
        )
        self.value = value


class TruncatedFileError(DataFormatError):
    """Raised when a file ends before its header says it should"""
    def __init__(self, path: str, expected: int, actual: int):
        super().__init__(
            message=f"Truncated file {path}: expected {expected} bytes, got {actual}",
            error_code="TRUNCATED_FILE",
        )


class CountMismatchError(DataFormatError):
    """Raised when image and label files disagree on the item count"""
    def __init__(self, images: int, labels: int):
        super().__init__(
            message=f"Count mismatch: {images} images vs {labels} labels",
            error_code="COUNT_MISMATCH",
        )


class BadLabelError(DataFormatError):
    """Raised when a label file holds a class id outside 0..n_classes-1"""
    def __init__(self, path: str, value: int, n_classes: int):
        super().__init__(
            message=f"Label {value} in {path} is outside 0..{n_classes - 1}",
            error_code="BAD_LABEL",
        )
        self.value = value


class ChecksumMismatchError(DataFormatError):
    """Raised when a file does not match its recorded SHA-256"""
    def __init__(self, path: str):
        super().__init__(
            message=f"Checksum mismatch for {path}",
            error_code="CHECKSUM_MISMATCH",
        )


class CheckpointError(DataFormatError):
    """Raised when a checkpoint stream is malformed"""
    def __init__(self, message: str):
        super().__init__(message=message, error_code="CHECKPOINT_ERROR")


class NotFoundError(AppException):
    """Raised when a resource is not found"""
    def __init__(self, resource: str = "Resource", detail: Optional[str] = None, error_code: str = "NOT_FOUND"):
        super().__init__(
            message=f"{resource} not found",
            status_code=status.HTTP_404_NOT_FOUND,
            detail=detail or f"{resource} not found",
            error_code=error_code,
        )


class MissingCheckpointError(NotFoundError):
    """Raised when a run directory lacks an expected checkpoint"""
    def __init__(self, path: str):
        super().__init__(resource=f"Checkpoint {path}", error_code="MISSING_CHECKPOINT")


class TrainingError(AppException):
    """Base for failures during a training run"""
    def __init__(self, message: str, error_code: str, detail: Optional[str] = None):
        super().__init__(
            message=message,
            status_code=status.HTTP_500_INTERNAL_SERVER_ERROR,
            detail=detail,
            error_code=error_code,
        )


class MissingSnapshotError(TrainingError):
    """Raised when a replayed pair is requested without a frozen copy"""
    def __init__(self, message: str = "Frozen snapshot is required for replay"):
        super().__init__(message=message, error_code="MISSING_SNAPSHOT")


class NonFiniteLossError(TrainingError):
    """Raised when a loss value becomes NaN or infinite"""
    def __init__(self, stage: str, epoch: int, value: float):
        super().__init__(
            message=f"Non-finite loss {value!r} in {stage} at epoch {epoch}",
            error_code="NON_FINITE_LOSS",
            detail=f"stage={stage} epoch={epoch} value={value!r}",
        )
        self.stage = stage
        self.epoch = epoch


class MemoryGrowthError(TrainingError):
    """Raised when a model checkpoint changes size between batches"""
    def __init__(self, component: str, sizes: list[int]):
        super().__init__(
            message=f"{component} checkpoint size changed across batches: {sizes}",
            error_code="MEMORY_GROWTH",
        )
