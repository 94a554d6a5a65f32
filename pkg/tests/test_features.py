import json

import numpy as np
import pytest
from scipy import stats

from graphts import features as feat
from graphts.errors import BadK, EmptyGroup, EmptyInput, TooFewGroups, UnlabeledRow
from graphts.types import FEATURE_NAMES, ClassLabel, FeatureMatrix, FeatureVector
from graphts.visibility import nvg_fast

H, M, N = ClassLabel.HEALTHY, ClassLabel.MYOPATHY, ClassLabel.NEUROPATHY


def matrix(values, labels):
    values = np.asarray(values, dtype=float)
    names = tuple(f"f{j}" for j in range(values.shape[1]))
    return FeatureMatrix(values, labels, names)


def test_anova_textbook():
    x = np.array([1, 2, 3, 2, 3, 4, 3, 4, 5], dtype=float)
    g = np.repeat([0, 1, 2], 3)
    f, df_b, df_w = feat.anova_f_values(x, g)
    assert f[0] == pytest.approx(3.0, abs=1e-9)
    assert (df_b, df_w) == (2, 6)


def test_anova_against_scipy(rng):
    x = rng.standard_normal((60, 4)) + np.repeat([[0, 0.5, 1, 2]], 60, axis=0) * np.repeat([0, 1, 2], 20)[:, None]
    g = np.repeat([0, 1, 2], 20)
    f, _, _ = feat.anova_f_values(x, g)
    for j in range(4):
        ref = stats.f_oneway(*(x[g == c, j] for c in range(3))).statistic
        assert f[j] == pytest.approx(ref, rel=1e-10)


def test_anova_degenerate_cases():
    g = np.repeat([0, 1, 2], 3)
    same = np.tile([1.0, 2.0, 3.0], 3)
    assert feat.anova_f_values(same, g)[0][0] == 0.0
    assert feat.anova_f_values(np.full(9, 4.0), g)[0][0] == 0.0
    split = np.repeat([1.0, 2.0, 3.0], 3)
    assert np.isinf(feat.anova_f_values(split, g)[0][0])
    with pytest.raises(TooFewGroups):
        feat.anova_f_values(split, np.zeros(9, dtype=int))


def test_anova_affine_invariance(rng):
    for _ in range(100):
        x = rng.standard_normal((30, 3))
        g = rng.integers(0, 3, 30)
        g[:3] = [0, 1, 2]
        a = rng.uniform(0.1, 10.0) * rng.choice([-1, 1])
        b = rng.uniform(-50, 50)
        f1 = feat.anova_f_values(x, g)[0]
        f2 = feat.anova_f_values(a * x + b, g)[0]
        assert np.allclose(f1, f2, rtol=1e-8)


def test_anova_f_on_matrix():
    m = matrix([[1], [2], [3], [2], [3], [4], [3], [4], [5]], [H] * 3 + [M] * 3 + [N] * 3)
    r = feat.anova_f(m, 0)
    assert r.f == pytest.approx(3.0)
    assert r.group_means == {"H": 2.0, "M": 3.0, "N": 4.0}


def test_top_k_and_selection(rng):
    assert feat.top_k([1.0, 5.0, 5.0, 0.0], 2) == [1, 2]
    assert feat.top_k([np.inf, 0.0, 3.0], 1) == [0]
    with pytest.raises(BadK):
        feat.top_k([1.0, 2.0], 3)
    labels = [H] * 10 + [M] * 10 + [N] * 10
    g = np.repeat([0, 1, 2], 10)
    x = rng.standard_normal((30, 7)) * 0.5
    for j, shift in ((0, 3.0), (3, 2.0), (5, 4.0)):
        x[:, j] += shift * g
    assert feat.select_features(matrix(x, labels), 3) == [0, 3, 5]
    table = feat.anova_table(matrix(x, labels))
    assert [row["feature"] for row in table] == [f"f{j}" for j in range(7)]


def test_standardize():
    train = matrix([[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]], [H, M, N])
    z, other = feat.standardize(train, matrix([[4.0, 7.0]], [H]))
    assert z.values[:, 0] == pytest.approx([-1.2247449, 0.0, 1.2247449])
    # constant columns map to zero
    assert z.values[:, 1].tolist() == [0.0, 0.0, 0.0]
    assert other.values[0, 0] == pytest.approx(2.4494897)
    assert other.values[0, 1] == 0.0
    with pytest.raises(EmptyInput):
        feat.Standardizer.fit(np.empty((0, 2)))


def test_boxplot():
    b = feat.boxplot_from_values(list(range(1, 10)) + [100])
    assert (b.q1, b.median, b.q3) == pytest.approx((3.25, 5.5, 7.75))
    assert (b.whisker_low, b.whisker_high) == (1.0, 9.0)
    assert b.outliers == [100.0]
    with pytest.raises(EmptyGroup):
        feat.boxplot_from_values([])


def test_boxplot_json(tmp_path):
    m = matrix([[1.0], [2.0], [3.0], [4.0]], [H, H, N, N])
    recs = json.loads(feat.write_boxplot_json(m, tmp_path / "b.json").read_text())
    assert [(r["feature"], r["label"]) for r in recs] == [("f0", "H"), ("f0", "N")]
    with pytest.raises(EmptyGroup):
        feat.boxplot_stats(m, 0, M)


def test_extract_and_build():
    v = feat.extract_features(nvg_fast([3.0, 1.0, 2.0]), H)
    assert v.values.shape == (len(FEATURE_NAMES),)
    assert v.values[0] == pytest.approx(2.0)  # K3
    m = feat.build_matrix([v, v], ["a", "b"])
    assert m.shape == (2, 7) and m.row_ids == ["a", "b"]
    with pytest.raises(UnlabeledRow):
        feat.build_matrix([FeatureVector(np.zeros(7))])
    with pytest.raises(EmptyInput):
        feat.build_matrix([])


def test_more_examples(rng):
    b = feat.boxplot_from_values(range(1, 10))
    assert (b.q1, b.median, b.q3, b.outliers) == (3.0, 5.0, 7.0, [])
    one = feat.boxplot_from_values([4.5])
    assert (one.q1, one.median, one.q3, one.whisker_low, one.whisker_high) == (4.5,) * 5
    m = matrix(rng.standard_normal((9, 7)), [H] * 3 + [M] * 3 + [N] * 3)
    assert feat.select_features(m, 7) == list(range(7))
    with pytest.raises(BadK):
        feat.select_features(m, 0)
    g = np.repeat([0, 1, 2], 2)
    assert np.isinf(feat.anova_f_values(np.array([1.0, 1, 2, 2, 3, 3]), g)[0][0])


def test_test_rows_use_training_statistics():
    train = matrix([[0.0], [2.0]], [H, M])
    _, test = feat.standardize(train, matrix([[10.0], [12.0]], [H, M]))
    # own statistics would give (-1, 1)
    assert test.values[:, 0].tolist() == [9.0, 11.0]
