from typing import Literal

import numpy as np
from pydantic import BaseModel, Field, model_validator

Phase = Literal["selection", "estimation"]


class ClassCounts(BaseModel):
    """Per-class selection counts from one sampling round (class ids are 0-based)"""
    counts: list[int] = Field(min_length=2)
    total: int = Field(gt=0)

    @model_validator(mode="after")
    def _check_counts(self) -> "ClassCounts":
        if any(k < 0 for k in self.counts):
            raise ValueError("counts must be nonnegative")
        if sum(self.counts) != self.total:
            raise ValueError(f"counts sum to {sum(self.counts)}, expected total {self.total}")
        return self

    @classmethod
    def from_array(cls, counts) -> "ClassCounts":
        values = [int(k) for k in np.asarray(counts).ravel()]
        return cls(counts=values, total=sum(values))

    @property
    def num_classes(self) -> int:
        return len(self.counts)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=np.int64)


class CountsRecord(BaseModel):
    """
    One line of a counts file: sparse class -> count map for one input and
    one sampling phase. ``num_classes`` defaults to the largest class id + 1.
    """
    input_id: str = Field(min_length=1)
    phase: Phase
    n: int = Field(gt=0)
    counts: dict[int, int]
    sigma: float | None = Field(default=None, gt=0.0)
    model_tag: str | None = None
    num_classes: int | None = Field(default=None, ge=2)

    @model_validator(mode="after")
    def _check_record(self) -> "CountsRecord":
        if any(cls_id < 0 for cls_id in self.counts):
            raise ValueError("class ids must be nonnegative")
        if any(k < 0 for k in self.counts.values()):
            raise ValueError("counts must be nonnegative")
        total = sum(self.counts.values())
        if total != self.n:
            raise ValueError(f"counts sum to {total}, declared n is {self.n}")
        if self.num_classes is not None and self.counts and max(self.counts) >= self.num_classes:
            raise ValueError(f"class id {max(self.counts)} out of range for num_classes={self.num_classes}")
        return self

    @property
    def min_classes(self) -> int:
        if self.num_classes is not None:
            return self.num_classes
        return max(2, max(self.counts, default=0) + 1)

    def to_class_counts(self, num_classes: int | None = None) -> ClassCounts:
        size = num_classes if num_classes is not None else self.min_classes
        if size < self.min_classes:
            raise ValueError(f"record {self.input_id!r} needs at least {self.min_classes} classes, got {size}")
        dense = np.zeros(size, dtype=np.int64)
        for cls_id, k in self.counts.items():
            dense[cls_id] = k
        return ClassCounts.from_array(dense)


class RejectedRecord(BaseModel):
    """A counts-file line that failed validation; its input gets an error row instead of a certificate"""
    line: int | None = Field(default=None, ge=1)
    input_id: str
    message: str

    def describe(self) -> str:
        location = f"line {self.line}, " if self.line is not None else ""
        return f"{location}record {self.input_id!r}: {self.message}"


class CountsFile(BaseModel):
    """Valid records of a counts file together with the lines that were rejected"""
    records: list[CountsRecord] = []
    rejected: list[RejectedRecord] = []

    @property
    def rejected_ids(self) -> set[str]:
        return {entry.input_id for entry in self.rejected}

    def round_sizes(self, phase: Phase) -> list[int]:
        """Distinct n of the valid records of one phase, ascending"""
        return sorted({record.n for record in self.records if record.phase == phase})
