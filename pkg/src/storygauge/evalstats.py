"""Validation-study statistics: outlier removal, inter-rater agreement, and
standardized multiple regression of metric scores on expert ratings.

The workflow mirrors how a metric suite gets validated against human
judgment: collect per-story Likert ratings from experts, drop rating
outliers with the 1.5x IQR rule, average the surviving ratings per story,
check inter-rater reliability with weighted kappa, then regress the mean
ratings on the standardized metric vector and read off R-squared,
standardized betas with two-tailed t-tests, and per-predictor VIF.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as scipy_stats

from .errors import (
    InsufficientRows,
    LengthMismatch,
    SingularDesign,
    TooFewValues,
)
from .interpret import compute_percentiles

VIF_FLAG_THRESHOLD = 4.0
DEFAULT_IQR_FACTOR = 1.5
LIKERT_CATEGORIES = (1, 2, 3, 4, 5)


def iqr_outliers(values: list[float], factor: float = DEFAULT_IQR_FACTOR) -> list[bool]:
    """Keep mask under the interquartile-range rule.

    A value is dropped iff it lies below ``q25 - factor*IQR`` or above
    ``q75 + factor*IQR``; quartiles use the same linear-interpolation method
    as the percentile bands. Needs at least four values.
    """
    if len(values) < 4:
        raise TooFewValues(f"IQR rule needs >= 4 values, got {len(values)}")
    q25, _, q75 = compute_percentiles(list(values))
    iqr = q75 - q25
    low = q25 - factor * iqr
    high = q75 + factor * iqr
    return [low <= v <= high for v in values]


def outlier_story_ids(ratings_by_expert: dict[str, dict[str, int]],
                      factor: float = DEFAULT_IQR_FACTOR,
                      pooled: bool = False) -> tuple[set[str], int]:
    """Story ids to exclude entirely, plus the count of dropped ratings.

    Fences are computed per expert by default (``pooled=True`` computes one
    fence over all ratings). A story is excluded as soon as any of its
    ratings is an outlier.
    """
    excluded: set[str] = set()
    dropped = 0
    if pooled:
        pairs = [
            (expert, sid)
            for expert, ratings in ratings_by_expert.items()
            for sid in ratings
        ]
        values = [ratings_by_expert[e][s] for e, s in pairs]
        keep = iqr_outliers(values, factor)
        for (expert, sid), kept in zip(pairs, keep):
            if not kept:
                excluded.add(sid)
                dropped += 1
        return excluded, dropped
    for expert, ratings in ratings_by_expert.items():
        story_ids = sorted(ratings)
        keep = iqr_outliers([float(ratings[s]) for s in story_ids], factor)
        for sid, kept in zip(story_ids, keep):
            if not kept:
                excluded.add(sid)
                dropped += 1
    return excluded, dropped


def mean_ratings(ratings_by_expert: dict[str, dict[str, int]],
                 exclude: set[str] | None = None) -> dict[str, float]:
    """Arithmetic mean of the expert ratings per story.

    Stories listed in ``exclude`` (e.g. because one of their ratings was an
    outlier) are removed entirely rather than averaged over fewer experts.
    """
    exclude = exclude or set()
    sums: dict[str, float] = {}
    counts: dict[str, int] = {}
    for ratings in ratings_by_expert.values():
        for sid, value in ratings.items():
            if sid in exclude:
                continue
            sums[sid] = sums.get(sid, 0.0) + value
            counts[sid] = counts.get(sid, 0) + 1
    return {sid: sums[sid] / counts[sid] for sid in sums}


@dataclass(frozen=True)
class KappaResult:
    value: float | None
    weighting: str
    degenerate: bool = False


def weighted_kappa(ratings_a: list[int], ratings_b: list[int],
                   weighting: str = "quadratic") -> KappaResult:
    """Chance-corrected ordinal agreement between two raters.

    ``kappa = 1 - sum(w*O) / sum(w*E)`` over the 5x5 Likert confusion
    matrix O and its chance-expected counterpart E (outer product of the
    marginals / n), with disagreement weights ``|i-j|`` (linear) or
    ``(i-j)^2`` (quadratic). When a rater used a single category the
    statistic is undefined and the result is flagged degenerate.
    """
    if weighting not in ("linear", "quadratic"):
        raise ValueError(f"unknown weighting: {weighting!r}")
    if len(ratings_a) != len(ratings_b):
        raise LengthMismatch(
            f"rating vectors differ in length: {len(ratings_a)} vs {len(ratings_b)}"
        )
    if len(ratings_a) < 2:
        raise LengthMismatch("need at least 2 rating pairs")
    for value in list(ratings_a) + list(ratings_b):
        if value not in LIKERT_CATEGORIES:
            raise ValueError(f"rating outside 1..5: {value!r}")
    if len(set(ratings_a)) == 1 or len(set(ratings_b)) == 1:
        return KappaResult(None, weighting, degenerate=True)

    n_cat = len(LIKERT_CATEGORIES)
    observed = np.zeros((n_cat, n_cat))
    for a, b in zip(ratings_a, ratings_b):
        observed[a - 1, b - 1] += 1
    n = observed.sum()
    expected = np.outer(observed.sum(axis=1), observed.sum(axis=0)) / n
    idx = np.arange(n_cat)
    diff = np.abs(idx[:, None] - idx[None, :])
    weights = diff.astype(float) if weighting == "linear" else (diff ** 2).astype(float)
    kappa = 1.0 - (weights * observed).sum() / (weights * expected).sum()
    return KappaResult(float(kappa), weighting)


@dataclass(frozen=True)
class PredictorStats:
    name: str
    beta: float
    t_stat: float
    p_value: float
    vif: float | None = None
    vif_flagged: bool = False

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "beta": self.beta,
            "t": self.t_stat,
            "p": self.p_value,
            "vif": None if self.vif is None or math.isinf(self.vif) else self.vif,
            "vif_infinite": self.vif is not None and math.isinf(self.vif),
            "vif_flagged": self.vif_flagged,
        }


@dataclass(frozen=True)
class RegressionResult:
    r_squared: float
    predictors: tuple[PredictorStats, ...]
    n_used: int
    df_residual: int
    dropped: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "r_squared": self.r_squared,
            "n_used": self.n_used,
            "df_residual": self.df_residual,
            "dropped_predictors": list(self.dropped),
            "predictors": [p.to_dict() for p in self.predictors],
        }


def vif(x: np.ndarray) -> list[float]:
    """Variance inflation factor per predictor column.

    ``VIF_j = 1 / (1 - R2_j)`` where ``R2_j`` regresses column j (with
    intercept) on the remaining columns. Exactly collinear columns report
    ``inf``.
    """
    x = np.asarray(x, dtype=float)
    n, p = x.shape
    if p < 2:
        raise ValueError("VIF needs at least 2 predictors")
    if n <= p:
        raise InsufficientRows(f"VIF needs n > p, got n={n}, p={p}")
    out: list[float] = []
    for j in range(p):
        target = x[:, j]
        others = np.delete(x, j, axis=1)
        design = np.column_stack([np.ones(n), others])
        coef, *_ = np.linalg.lstsq(design, target, rcond=None)
        residual = target - design @ coef
        sst = float(np.sum((target - target.mean()) ** 2))
        if sst == 0.0:
            out.append(math.inf)
            continue
        r2 = 1.0 - float(residual @ residual) / sst
        out.append(math.inf if 1.0 - r2 < 1e-12 else 1.0 / (1.0 - r2))
    return out


def standardized_ols(x: np.ndarray, y: np.ndarray,
                     names: list[str] | None = None) -> RegressionResult:
    """OLS on z-scored predictors and response.

    Both sides are standardized with the sample standard deviation, so the
    coefficients are standardized beta weights; t statistics use classical
    standard errors with ``n - p - 1`` residual degrees of freedom and
    p-values are two-tailed from the Student-t distribution. Zero-variance
    predictors are dropped (and reported); exact collinearity raises
    :class:`SingularDesign`.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if x.ndim != 2 or x.shape[0] != y.shape[0]:
        raise ValueError("X must be n x p with one y per row")
    n = x.shape[0]
    names = list(names) if names else [f"x{j}" for j in range(x.shape[1])]
    if len(names) != x.shape[1]:
        raise ValueError("one name per predictor required")

    stds = x.std(axis=0, ddof=1) if n > 1 else np.zeros(x.shape[1])
    keep = stds > 0.0
    dropped = tuple(name for name, kept in zip(names, keep) if not kept)
    x = x[:, keep]
    kept_names = [name for name, kept_flag in zip(names, keep) if kept_flag]
    p = x.shape[1]
    if p == 0:
        raise SingularDesign("no predictor with variance remains")
    if n <= p + 1:
        raise InsufficientRows(f"need n > p + 1, got n={n}, p={p}")
    if y.std(ddof=1) == 0.0:
        raise ValueError("response has zero variance")

    xs = (x - x.mean(axis=0)) / x.std(axis=0, ddof=1)
    ys = (y - y.mean()) / y.std(ddof=1)
    if np.linalg.matrix_rank(xs) < p:
        raise SingularDesign("predictors are exactly collinear")

    beta, *_ = np.linalg.lstsq(xs, ys, rcond=None)
    residual = ys - xs @ beta
    ssr = float(residual @ residual)
    sst = float(ys @ ys)  # equals n - 1 after standardization
    df = n - p - 1
    sigma2 = ssr / df
    xtx_inv = np.linalg.inv(xs.T @ xs)
    se = np.sqrt(np.clip(sigma2 * np.diag(xtx_inv), 0.0, None))
    t_stats = np.empty(p)
    for j in range(p):
        if se[j] > 0.0:
            t_stats[j] = beta[j] / se[j]
        elif beta[j] == 0.0:
            t_stats[j] = 0.0
        else:  # perfect fit: zero residual variance
            t_stats[j] = math.copysign(math.inf, beta[j])
    p_values = np.where(
        np.isinf(t_stats), 0.0, 2.0 * scipy_stats.t.sf(np.abs(t_stats), df)
    )
    r_squared = min(max(1.0 - ssr / sst, 0.0), 1.0)

    vifs: list[float | None]
    if p >= 2:
        vifs = list(vif(x))
    else:
        vifs = [None]
    predictors = tuple(
        PredictorStats(
            name=kept_names[j],
            beta=float(beta[j]),
            t_stat=float(t_stats[j]),
            p_value=float(p_values[j]),
            vif=vifs[j],
            vif_flagged=vifs[j] is not None
            and (math.isinf(vifs[j]) or vifs[j] > VIF_FLAG_THRESHOLD),
        )
        for j in range(p)
    )
    return RegressionResult(
        r_squared=r_squared,
        predictors=predictors,
        n_used=n,
        df_residual=df,
        dropped=dropped,
    )


# --- dataset plumbing ---------------------------------------------------------

@dataclass
class RatingDataset:
    """Aligned expert ratings and metric scores for one evaluation run."""

    story_ids: list[str]
    ratings_by_expert: dict[str, dict[str, int]]
    metric_names: list[str]
    metric_matrix: np.ndarray  # (len(story_ids), len(metric_names))


def load_ratings_csv(text: str) -> dict[str, dict[str, int]]:
    """Parse a ratings CSV with columns story_id, expert_id, rating."""
    reader = csv.DictReader(io.StringIO(text))
    required = {"story_id", "expert_id", "rating"}
    if reader.fieldnames is None or not required.issubset(reader.fieldnames):
        raise ValueError(
            "ratings CSV needs columns story_id, expert_id, rating; got "
            f"{reader.fieldnames}"
        )
    ratings: dict[str, dict[str, int]] = {}
    for row in reader:
        expert = row["expert_id"].strip()
        sid = row["story_id"].strip()
        value = int(row["rating"])
        if value not in LIKERT_CATEGORIES:
            raise ValueError(f"rating outside 1..5 for story {sid}: {value}")
        ratings.setdefault(expert, {})[sid] = value
    if not ratings:
        raise ValueError("ratings CSV contains no data rows")
    return ratings


def load_scores_csv(text: str, metric_names: list[str]) -> tuple[list[str], np.ndarray]:
    """Parse a batch-score CSV (id column plus one column per metric)."""
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        raise ValueError("scores CSV has no header")
    missing = [m for m in metric_names if m not in reader.fieldnames]
    if missing:
        raise ValueError(f"scores CSV missing metric columns: {missing}")
    ids: list[str] = []
    rows: list[list[float]] = []
    for row in reader:
        ids.append(row["id"].strip())
        rows.append([float(row[m]) for m in metric_names])
    if not ids:
        raise ValueError("scores CSV contains no data rows")
    return ids, np.asarray(rows)


def build_dataset(ratings_by_expert: dict[str, dict[str, int]],
                  score_ids: list[str], metric_names: list[str],
                  metric_matrix: np.ndarray) -> RatingDataset:
    """Align ratings and scores on the story ids present in both."""
    rated = set.intersection(*(set(r) for r in ratings_by_expert.values()))
    index = {sid: i for i, sid in enumerate(score_ids)}
    common = [sid for sid in score_ids if sid in rated]
    if not common:
        raise ValueError("no story id appears in both ratings and scores")
    matrix = metric_matrix[[index[sid] for sid in common], :]
    ratings = {
        expert: {sid: r[sid] for sid in common}
        for expert, r in ratings_by_expert.items()
    }
    return RatingDataset(common, ratings, list(metric_names), matrix)


@dataclass(frozen=True)
class EvaluationReport:
    regression: RegressionResult
    kappa: dict[str, KappaResult]
    n_stories: int
    n_excluded: int
    n_outlier_ratings: int

    def to_dict(self) -> dict:
        return {
            "n_stories": self.n_stories,
            "n_excluded": self.n_excluded,
            "n_outlier_ratings": self.n_outlier_ratings,
            "inter_rater": {
                pair: {
                    "kappa": result.value,
                    "weighting": result.weighting,
                    "degenerate": result.degenerate,
                }
                for pair, result in self.kappa.items()
            },
            "regression": self.regression.to_dict(),
        }


def evaluate(dataset: RatingDataset, iqr_factor: float = DEFAULT_IQR_FACTOR,
             pooled_outliers: bool = False,
             kappa_weighting: str = "quadratic") -> EvaluationReport:
    """Run the full evaluation: outliers, kappa per expert pair, regression."""
    excluded, dropped = outlier_story_ids(
        dataset.ratings_by_expert, iqr_factor, pooled_outliers
    )
    means = mean_ratings(dataset.ratings_by_expert, exclude=excluded)
    used_ids = [sid for sid in dataset.story_ids if sid in means]
    if not used_ids:
        raise ValueError("no stories left after outlier removal")
    index = {sid: i for i, sid in enumerate(dataset.story_ids)}
    x = dataset.metric_matrix[[index[sid] for sid in used_ids], :]
    y = np.array([means[sid] for sid in used_ids])

    kappa_results: dict[str, KappaResult] = {}
    experts = sorted(dataset.ratings_by_expert)
    for i, expert_a in enumerate(experts):
        for expert_b in experts[i + 1:]:
            a = [dataset.ratings_by_expert[expert_a][sid] for sid in used_ids]
            b = [dataset.ratings_by_expert[expert_b][sid] for sid in used_ids]
            kappa_results[f"{expert_a}|{expert_b}"] = weighted_kappa(
                a, b, kappa_weighting
            )

    regression = standardized_ols(x, y, dataset.metric_names)
    return EvaluationReport(
        regression=regression,
        kappa=kappa_results,
        n_stories=len(used_ids),
        n_excluded=len(excluded),
        n_outlier_ratings=dropped,
    )
