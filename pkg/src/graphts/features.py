"""Feature vectors from graphs, scaling, ANOVA ranking and box-plot summaries."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import graph_metrics as gm
from .errors import BadK, EmptyGroup, EmptyInput, TooFewGroups, UnlabeledRow
from .types import FEATURE_NAMES, ClassLabel, FeatureMatrix, FeatureVector
from .visibility import Graph

STD_GUARD = 1e-12


def extract_features(g: Graph, label: Optional[ClassLabel] = None) -> FeatureVector:
    paths = gm.path_stats(g)
    values = (
        gm.average_degree(g),
        gm.average_clustering(g),
        gm.transitivity(g),
        gm.density(g),
        float(paths.diameter),
        paths.global_efficiency,
        paths.avg_shortest_path,
    )
    return FeatureVector(np.array(values), label)


def build_matrix(vectors: Sequence[FeatureVector], row_ids: Sequence[str] = ()) -> FeatureMatrix:
    if not vectors:
        raise EmptyInput("no feature vectors")
    for i, v in enumerate(vectors):
        if v.label is None:
            raise UnlabeledRow(f"feature vector {i} has no label")
    values = np.vstack([v.values for v in vectors])
    return FeatureMatrix(values, [v.label for v in vectors], FEATURE_NAMES[: values.shape[1]], list(row_ids))


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, x: np.ndarray) -> "Standardizer":
        x = np.asarray(x, dtype=np.float64)
        if x.shape[0] == 0:
            raise EmptyInput("cannot standardize with no rows")
        mean = x.mean(axis=0)
        std = x.std(axis=0)
        # constant columns transform to zero
        scale = np.where(std < STD_GUARD, np.inf, std)
        return cls(mean, scale)

    def transform(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=np.float64) - self.mean) / self.scale


def standardize(train: FeatureMatrix, apply_to: FeatureMatrix) -> tuple[FeatureMatrix, FeatureMatrix]:
    """Z-score both matrices with the population mean/std of ``train``."""
    st = Standardizer.fit(train.values)
    return (
        FeatureMatrix(st.transform(train.values), train.labels, train.feature_names, train.row_ids),
        FeatureMatrix(st.transform(apply_to.values), apply_to.labels, apply_to.feature_names, apply_to.row_ids),
    )


@dataclass(frozen=True)
class AnovaResult:
    f: float
    group_means: dict
    df_between: int
    df_within: int


def anova_f_values(x: np.ndarray, groups: np.ndarray) -> tuple[np.ndarray, int, int]:
    """One-way F statistic per column of ``x`` for integer group codes.

    ``F = (SSB / (G - 1)) / (SSW / (m - G))``.  Columns whose group means are
    all equal give 0; a zero within-group sum of squares with unequal means
    gives ``inf``.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    codes = np.unique(groups)
    m, p = x.shape
    k = codes.size
    if k < 2:
        raise TooFewGroups(f"need at least 2 groups, got {k}")
    means = np.vstack([x[groups == c].mean(axis=0) for c in codes])
    counts = np.array([np.sum(groups == c) for c in codes], dtype=np.float64)
    grand = counts @ means / m
    ssb = counts @ (means - grand) ** 2
    ssw = sum(((x[groups == c] - means[i]) ** 2).sum(axis=0) for i, c in enumerate(codes))
    df_b, df_w = k - 1, m - k
    f = np.empty(p)
    for j in range(p):
        if np.all(means[:, j] == means[0, j]):
            f[j] = 0.0
        elif ssw[j] == 0.0 or df_w == 0:
            f[j] = np.inf
        else:
            f[j] = (ssb[j] / df_b) / (ssw[j] / df_w)
    return f, df_b, df_w


def anova_f(matrix: FeatureMatrix, feature_index: int) -> AnovaResult:
    groups = matrix.label_indices()
    col = matrix.values[:, feature_index]
    f, df_b, df_w = anova_f_values(col, groups)
    means = {lab.value: float(col[groups == lab.index].mean()) for lab in ClassLabel if np.any(groups == lab.index)}
    return AnovaResult(float(f[0]), means, df_b, df_w)


def top_k(f_values: Sequence[float], k: int) -> list[int]:
    """Indices of the ``k`` largest values, ties to the lower index, ascending."""
    f = np.asarray(f_values, dtype=np.float64)
    if not 1 <= k <= f.size:
        raise BadK(f"k must lie in [1, {f.size}], got {k}")
    order = np.lexsort((np.arange(f.size), -f))
    return sorted(int(i) for i in order[:k])


def select_features(matrix: FeatureMatrix, k: int = 3) -> list[int]:
    if not 1 <= k <= matrix.values.shape[1]:
        raise BadK(f"k must lie in [1, {matrix.values.shape[1]}], got {k}")
    f, _, _ = anova_f_values(matrix.values, matrix.label_indices())
    return top_k(f, k)


def anova_table(matrix: FeatureMatrix) -> list[dict]:
    f, df_b, df_w = anova_f_values(matrix.values, matrix.label_indices())
    rows = []
    for j, name in enumerate(matrix.feature_names):
        res = anova_f(matrix, j)
        rows.append({"feature": name, "f": float(f[j]), "df_between": df_b, "df_within": df_w,
                     "group_means": res.group_means})
    return rows


@dataclass(frozen=True)
class BoxplotStats:
    q1: float
    median: float
    q3: float
    whisker_low: float
    whisker_high: float
    outliers: list

    def to_dict(self) -> dict:
        return asdict(self)


def boxplot_from_values(values) -> BoxplotStats:
    x = np.sort(np.asarray(values, dtype=np.float64))
    if x.size == 0:
        raise EmptyGroup("no values for box plot")
    q1, med, q3 = np.quantile(x, [0.25, 0.5, 0.75], method="linear")
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = x[(x >= lo_fence) & (x <= hi_fence)]
    outliers = x[(x < lo_fence) | (x > hi_fence)]
    return BoxplotStats(float(q1), float(med), float(q3), float(inside.min()), float(inside.max()),
                        outliers.tolist())


def boxplot_stats(matrix: FeatureMatrix, feature_index: int, label: ClassLabel) -> BoxplotStats:
    mask = np.array([lab == label for lab in matrix.labels], dtype=bool)
    if not mask.any():
        raise EmptyGroup(f"no rows labelled {label.value}")
    return boxplot_from_values(matrix.values[mask, feature_index])


def boxplot_records(matrix: FeatureMatrix) -> list[dict]:
    records = []
    present = [lab for lab in ClassLabel if lab in set(matrix.labels)]
    for j, name in enumerate(matrix.feature_names):
        for lab in present:
            rec = {"feature": name, "label": lab.value}
            rec.update(boxplot_stats(matrix, j, lab).to_dict())
            records.append(rec)
    return records


def write_boxplot_json(matrix: FeatureMatrix, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(boxplot_records(matrix), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path
