"""Core data types shared across modules."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import NonFiniteValue, UnknownLabel

FEATURE_NAMES: tuple[str, ...] = (
    "avg_degree",
    "avg_clustering",
    "transitivity",
    "density",
    "diameter",
    "global_efficiency",
    "avg_shortest_path",
)


class ClassLabel(enum.Enum):
    HEALTHY = "H"
    MYOPATHY = "M"
    NEUROPATHY = "N"

    @classmethod
    def parse(cls, text: str) -> "ClassLabel":
        key = str(text).strip()
        for member in cls:
            if key.upper() == member.value or key.lower() == member.name.lower():
                return member
        raise UnknownLabel(f"unknown class label {text!r} (expected H, M or N)")

    @property
    def index(self) -> int:
        return _LABEL_ORDER.index(self)

    def __str__(self) -> str:
        return self.value


_LABEL_ORDER = (ClassLabel.HEALTHY, ClassLabel.MYOPATHY, ClassLabel.NEUROPATHY)


@dataclass
class TimeSeries:
    """Uniformly sampled real signal.  Time is the sample index."""

    samples: np.ndarray
    sampling_rate: float
    source_id: str = ""
    label: Optional[ClassLabel] = None

    def __post_init__(self):
        self.samples = np.ascontiguousarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if not self.sampling_rate > 0:
            raise ValueError("sampling_rate must be positive")
        if not np.all(np.isfinite(self.samples)):
            raise NonFiniteValue(f"{self.source_id or 'series'}: non-finite sample")

    def __len__(self) -> int:
        return self.samples.size

    def with_samples(self, samples: np.ndarray) -> "TimeSeries":
        return TimeSeries(samples, self.sampling_rate, self.source_id, self.label)


@dataclass
class FeatureVector:
    values: np.ndarray
    label: Optional[ClassLabel] = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)


@dataclass
class FeatureMatrix:
    """Stacked labelled feature rows, columns named by ``feature_names``."""

    values: np.ndarray
    labels: list[ClassLabel]
    feature_names: tuple[str, ...] = FEATURE_NAMES
    row_ids: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValueError("feature values must be a 2-D array")
        self.feature_names = tuple(self.feature_names)
        self.labels = list(self.labels)
        m, p = self.values.shape
        if len(self.feature_names) != p:
            raise ValueError(f"{len(self.feature_names)} names for {p} columns")
        if len(self.labels) != m:
            raise ValueError(f"{len(self.labels)} labels for {m} rows")
        if self.row_ids and len(self.row_ids) != m:
            raise ValueError(f"{len(self.row_ids)} row ids for {m} rows")

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def label_indices(self) -> np.ndarray:
        return np.array([lab.index for lab in self.labels], dtype=np.int64)

    def take_columns(self, indices: Sequence[int]) -> "FeatureMatrix":
        idx = list(indices)
        return FeatureMatrix(
            self.values[:, idx], self.labels, tuple(self.feature_names[i] for i in idx), self.row_ids
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, FeatureMatrix):
            return NotImplemented
        return (
            self.feature_names == other.feature_names
            and self.labels == other.labels
            and self.values.shape == other.values.shape
            and bool(np.array_equal(self.values, other.values))
        )
