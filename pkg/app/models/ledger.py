import bisect
from typing import List

from pydantic import BaseModel, Field, model_validator


class BatchRecord(BaseModel):
    batch: int = Field(..., ge=1)
    first: int = Field(..., ge=1)
    last: int = Field(..., ge=1)
    classes: List[int] = Field(default_factory=list)

    @property
    def size(self) -> int:
        return self.last - self.first + 1

    def contains(self, i: int) -> bool:
        return self.first <= i <= self.last


class BatchLedger(BaseModel):
    """Chronological index ranges of every batch presented so far."""

    records: List[BatchRecord] = Field(default_factory=list)

    @model_validator(mode="after")
    def _contiguous(self) -> "BatchLedger":
        expected = 1
        for n, record in enumerate(self.records, start=1):
            if record.batch != n or record.first != expected or record.last < record.first:
                raise ValueError(f"Ledger records must partition 1..N without gaps, broken at batch {n}")
            expected = record.last + 1
        return self

    @property
    def total(self) -> int:
        """N, the number of samples observed so far."""
        return self.records[-1].last if self.records else 0

    @property
    def current(self) -> BatchRecord | None:
        return self.records[-1] if self.records else None

    def register(self, size: int, classes: List[int]) -> BatchRecord:
        if size < 1:
            raise ValueError("A batch needs at least one sample")
        record = BatchRecord(
            batch=len(self.records) + 1,
            first=self.total + 1,
            last=self.total + size,
            classes=sorted(classes),
        )
        self.records.append(record)
        return record

    def batch_of(self, i: int) -> BatchRecord:
        if not 1 <= i <= self.total:
            raise IndexError(i)
        starts = [r.first for r in self.records]
        return self.records[bisect.bisect_right(starts, i) - 1]

    @property
    def seen_classes(self) -> List[int]:
        return sorted({c for r in self.records for c in r.classes})
