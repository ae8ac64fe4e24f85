from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from storygauge.errors import (
    InsufficientRows,
    LengthMismatch,
    SingularDesign,
    TooFewValues,
)
from storygauge.evalstats import (
    build_dataset,
    evaluate,
    iqr_outliers,
    load_ratings_csv,
    load_scores_csv,
    mean_ratings,
    outlier_story_ids,
    standardized_ols,
    vif,
    weighted_kappa,
)
from storygauge.interpret import compute_percentiles


class TestIqrOutliers:
    def test_classic_fixture_drops_only_extreme(self):
        # q25=2, q75=4, IQR=2 -> fences at -1 and 7: only 100 falls outside
        keep = iqr_outliers([1, 2, 3, 4, 100], factor=1.5)
        assert keep == [True, True, True, True, False]

    def test_constant_list_keeps_everything(self):
        assert iqr_outliers([5, 5, 5, 5]) == [True] * 4

    def test_default_factor_is_one_point_five(self):
        import inspect

        signature = inspect.signature(iqr_outliers)
        assert signature.parameters["factor"].default == 1.5

    def test_too_few_values(self):
        with pytest.raises(TooFewValues):
            iqr_outliers([1, 2, 3])

    @given(st.lists(st.floats(-100, 100, allow_nan=False), min_size=4,
                    max_size=40))
    @settings(max_examples=150, deadline=None)
    def test_interquartile_points_always_kept(self, values):
        q25, _, q75 = compute_percentiles(values)
        keep = iqr_outliers(values)
        for value, kept in zip(values, keep):
            if q25 <= value <= q75:
                assert kept


class TestMeanRatings:
    def test_arithmetic_mean(self):
        ratings = {"e1": {"s1": 3}, "e2": {"s1": 5}}
        assert mean_ratings(ratings) == {"s1": 4.0}

    def test_single_expert_identity(self):
        ratings = {"e1": {"s1": 2, "s2": 5}}
        assert mean_ratings(ratings) == {"s1": 2.0, "s2": 5.0}

    def test_excluded_story_dropped_entirely(self):
        ratings = {"e1": {"s1": 3, "s2": 4}, "e2": {"s1": 5, "s2": 4}}
        assert mean_ratings(ratings, exclude={"s1"}) == {"s2": 4.0}

    def test_outlier_story_exclusion(self):
        # e1 sorted ratings [2,3,3,3,3,3,3,4,4,5]: q25=3, q75=3.75, IQR=0.75,
        # fences 1.875..4.875 -> only the 5 (story s9) is an outlier
        ratings = {
            "e1": {f"s{i}": 3 for i in range(9)} | {"s0": 2, "s7": 4,
                                                    "s8": 4, "s9": 5},
            "e2": {f"s{i}": 3 for i in range(10)},
        }
        excluded, dropped = outlier_story_ids(ratings, factor=1.5)
        assert excluded == {"s9"}
        assert dropped == 1
        means = mean_ratings(ratings, exclude=excluded)
        assert "s9" not in means
        assert len(means) == 9


class TestWeightedKappa:
    def brute_force(self, a, b, weighting):
        observed = [[0.0] * 5 for _ in range(5)]
        for x, y in zip(a, b):
            observed[x - 1][y - 1] += 1
        n = len(a)
        row = [sum(observed[i][j] for j in range(5)) for i in range(5)]
        col = [sum(observed[i][j] for i in range(5)) for j in range(5)]
        num = 0.0
        den = 0.0
        for i in range(5):
            for j in range(5):
                w = abs(i - j) if weighting == "linear" else (i - j) ** 2
                num += w * observed[i][j]
                den += w * row[i] * col[j] / n
        return 1.0 - num / den

    def test_perfect_agreement(self):
        ratings = [1, 2, 3, 4, 5, 3, 2, 4]
        assert weighted_kappa(ratings, ratings).value == pytest.approx(1.0)

    def test_systematic_disagreement_negative(self):
        a = [1, 2, 3, 4, 5] * 4
        b = [6 - x for x in a]
        assert weighted_kappa(a, b).value < 0.0

    def test_ten_pair_oracle_quadratic(self):
        a = [1, 2, 2, 3, 3, 4, 4, 5, 5, 1]
        b = [2, 2, 3, 3, 4, 4, 5, 5, 1, 1]
        result = weighted_kappa(a, b, "quadratic")
        assert result.value == pytest.approx(
            self.brute_force(a, b, "quadratic"), abs=1e-9
        )

    def test_ten_pair_oracle_linear(self):
        a = [1, 2, 2, 3, 3, 4, 4, 5, 5, 1]
        b = [1, 3, 2, 3, 4, 4, 5, 4, 5, 2]
        result = weighted_kappa(a, b, "linear")
        assert result.value == pytest.approx(
            self.brute_force(a, b, "linear"), abs=1e-9
        )

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            weighted_kappa([1, 2], [1, 2, 3])

    def test_degenerate_single_category(self):
        result = weighted_kappa([3, 3, 3], [1, 2, 3])
        assert result.degenerate
        assert result.value is None

    def test_symmetry(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            a = list(rng.integers(1, 6, size=12))
            b = list(rng.integers(1, 6, size=12))
            ka = weighted_kappa(a, b)
            kb = weighted_kappa(b, a)
            if ka.degenerate:
                assert kb.degenerate
            else:
                assert ka.value == pytest.approx(kb.value, abs=1e-12)
                assert -1.0 <= ka.value <= 1.0


class TestStandardizedOls:
    def test_noise_free_planted_coefficients(self):
        rng = np.random.default_rng(42)
        n, p = 200, 8
        x = rng.normal(size=(n, p))
        coeffs = np.array([0.8, -0.5, 0.3, 0.0, 1.2, -0.1, 0.6, 0.0])
        y = x @ coeffs
        result = standardized_ols(x, y)
        assert result.r_squared == pytest.approx(1.0, abs=1e-9)
        expected = coeffs * x.std(axis=0, ddof=1) / y.std(ddof=1)
        for predictor, want in zip(result.predictors, expected):
            assert predictor.beta == pytest.approx(want, abs=1e-6)

    def test_independent_noise_r2_near_zero(self):
        rng = np.random.default_rng(7)
        x = rng.normal(size=(200, 2))
        y = rng.normal(size=200)
        result = standardized_ols(x, y)
        assert result.r_squared < 0.2

    def test_single_predictor_beta_is_pearson(self):
        rng = np.random.default_rng(9)
        x = rng.normal(size=(50, 1))
        y = 2.0 * x[:, 0] + rng.normal(size=50)
        result = standardized_ols(x, y)
        pearson = np.corrcoef(x[:, 0], y)[0, 1]
        assert result.predictors[0].beta == pytest.approx(pearson, abs=1e-9)

    def test_exact_collinearity_raises(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=(30, 2))
        x = np.column_stack([x, x[:, 0]])
        with pytest.raises(SingularDesign):
            standardized_ols(x, rng.normal(size=30))

    def test_insufficient_rows(self):
        with pytest.raises(InsufficientRows):
            standardized_ols(np.ones((3, 3)) + np.eye(3), np.array([1.0, 2.0, 3.0]))

    def test_constant_predictor_dropped_and_reported(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=(40, 2))
        x = np.column_stack([x[:, 0], np.full(40, 3.0), x[:, 1]])
        y = x[:, 0] + rng.normal(size=40)
        result = standardized_ols(x, y, names=["a", "const", "b"])
        assert result.dropped == ("const",)
        assert [p.name for p in result.predictors] == ["a", "b"]

    def test_r2_invariant_under_predictor_rescaling(self):
        rng = np.random.default_rng(11)
        x = rng.normal(size=(80, 3))
        y = x @ np.array([1.0, -2.0, 0.5]) + rng.normal(size=80)
        base = standardized_ols(x, y).r_squared
        scaled = x.copy()
        scaled[:, 1] = scaled[:, 1] * 1000.0 + 77.0
        assert standardized_ols(scaled, y).r_squared == pytest.approx(
            base, abs=1e-9
        )

    def test_noise_predictor_never_decreases_r2(self):
        rng = np.random.default_rng(13)
        x = rng.normal(size=(100, 2))
        y = x @ np.array([1.0, 0.5]) + rng.normal(size=100)
        base = standardized_ols(x, y).r_squared
        for seed in range(5):
            noise = np.random.default_rng(seed).normal(size=(100, 1))
            extended = np.hstack([x, noise])
            assert standardized_ols(extended, y).r_squared >= base - 1e-12


class TestVif:
    def test_orthogonal_columns_are_one(self):
        n = 64
        base = np.zeros((n, 2))
        base[: n // 2, 0] = 1.0
        base[n // 2 :, 0] = -1.0
        base[: n // 4, 1] = 1.0
        base[n // 4 : n // 2, 1] = -1.0
        base[n // 2 : 3 * n // 4, 1] = 1.0
        base[3 * n // 4 :, 1] = -1.0
        values = vif(base)
        assert values == pytest.approx([1.0, 1.0], abs=1e-9)

    def test_duplicated_column_infinite(self):
        rng = np.random.default_rng(3)
        column = rng.normal(size=40)
        values = vif(np.column_stack([column, column]))
        assert all(math.isinf(v) for v in values)

    def test_correlation_point_nine_matches_analytic(self):
        # construct an exact sample correlation of 0.9
        rng = np.random.default_rng(21)
        n = 500
        a = rng.normal(size=n)
        b = rng.normal(size=n)
        a = (a - a.mean()) / a.std(ddof=1)
        b = b - b.mean()
        b -= a * (a @ b) / (a @ a)  # orthogonalize against a
        b /= b.std(ddof=1)
        r = 0.9
        mixed = r * a + math.sqrt(1 - r * r) * b
        values = vif(np.column_stack([a, mixed]))
        analytic = 1.0 / (1.0 - r * r)
        for value in values:
            assert abs(value - analytic) / analytic < 0.05


class TestCsvPlumbing:
    def test_ratings_round_trip(self):
        text = "story_id,expert_id,rating\ns1,e1,3\ns1,e2,4\ns2,e1,5\ns2,e2,2\n"
        ratings = load_ratings_csv(text)
        assert ratings == {"e1": {"s1": 3, "s2": 5}, "e2": {"s1": 4, "s2": 2}}

    def test_ratings_reject_out_of_scale(self):
        with pytest.raises(ValueError):
            load_ratings_csv("story_id,expert_id,rating\ns1,e1,6\n")

    def test_scores_parse(self):
        names = ["m1", "m2"]
        text = "id,m1,m2\ns1,0.5,0.25\ns2,1.0,0.0\n"
        ids, matrix = load_scores_csv(text, names)
        assert ids == ["s1", "s2"]
        assert matrix.tolist() == [[0.5, 0.25], [1.0, 0.0]]

    def test_dataset_alignment(self):
        ratings = {"e1": {"s1": 3, "s2": 4}, "e2": {"s1": 4, "s2": 5}}
        dataset = build_dataset(ratings, ["s2", "s1", "s3"], ["m"],
                                np.array([[0.1], [0.2], [0.3]]))
        assert dataset.story_ids == ["s2", "s1"]
        assert dataset.metric_matrix.tolist() == [[0.1], [0.2]]


class TestEvaluate:
    def test_end_to_end_small(self):
        rng = np.random.default_rng(17)
        n = 40
        ids = [f"s{i}" for i in range(n)]
        x = rng.uniform(0, 1, size=(n, 3))
        y = 1.0 + 3.0 * x[:, 0] + rng.normal(scale=0.1, size=n)
        likert = np.clip(np.round(y), 1, 5).astype(int)
        ratings = {
            "e1": {sid: int(v) for sid, v in zip(ids, likert)},
            "e2": {
                sid: int(np.clip(v + rng.integers(-1, 2), 1, 5))
                for sid, v in zip(ids, likert)
            },
        }
        dataset = build_dataset(ratings, ids, ["a", "b", "c"], x)
        report = evaluate(dataset)
        assert report.n_stories + report.n_excluded == n
        assert 0.0 <= report.regression.r_squared <= 1.0
        assert "e1|e2" in report.kappa
        strongest = max(report.regression.predictors, key=lambda p: abs(p.beta))
        assert strongest.name == "a"
