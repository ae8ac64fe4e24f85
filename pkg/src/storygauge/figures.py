"""Report figures rendered to files next to the delimited output.

Used by the CLI report paths: the evaluation command plots the expert rating
distributions (annotated with weighted kappa) and the standardized beta
weights; batch scoring plots the per-metric score distributions with their
quartile lines. All functions write a PNG and return its path.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .evalstats import KappaResult, RegressionResult
from .interpret import PercentileBands
from .metrics import CANONICAL_ORDER

_BAND_COLORS = ("#c0392b", "#e67e22", "#f1c40f", "#27ae60")


def save_rating_distributions(ratings_by_expert: dict[str, dict[str, int]],
                              kappa: dict[str, KappaResult],
                              path: str | Path) -> Path:
    """Grouped bar chart of Likert rating counts per expert."""
    path = Path(path)
    experts = sorted(ratings_by_expert)
    categories = np.arange(1, 6)
    width = 0.8 / max(len(experts), 1)
    fig, ax = plt.subplots(figsize=(7, 4))
    for i, expert in enumerate(experts):
        values = list(ratings_by_expert[expert].values())
        counts = [values.count(c) for c in categories]
        ax.bar(categories + (i - (len(experts) - 1) / 2) * width, counts,
               width=width, label=expert)
    ax.set_xlabel("rating")
    ax.set_ylabel("stories")
    ax.set_xticks(categories)
    lines = [
        f"{pair}: κ={result.value:.2f}" if result.value is not None
        else f"{pair}: κ undefined"
        for pair, result in sorted(kappa.items())
    ]
    title = "Expert rating distributions"
    if lines:
        title += "\n" + ", ".join(lines)
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_beta_weights(result: RegressionResult, path: str | Path) -> Path:
    """Horizontal bars of standardized betas with significance stars and
    VIF flags."""
    path = Path(path)
    names = [p.name for p in result.predictors]
    betas = [p.beta for p in result.predictors]
    fig, ax = plt.subplots(figsize=(7, 0.5 * len(names) + 2))
    positions = np.arange(len(names))
    colors = ["#27ae60" if b >= 0 else "#c0392b" for b in betas]
    ax.barh(positions, betas, color=colors)
    for pos, predictor in zip(positions, result.predictors):
        stars = ""
        if predictor.p_value < 0.001:
            stars = "***"
        elif predictor.p_value < 0.01:
            stars = "**"
        elif predictor.p_value < 0.05:
            stars = "*"
        label = stars + (" ◆" if predictor.vif_flagged else "")
        if label:
            ax.annotate(label, (predictor.beta, pos), textcoords="offset points",
                        xytext=(5, -3))
    ax.set_yticks(positions)
    ax.set_yticklabels(names)
    ax.invert_yaxis()
    ax.axvline(0.0, color="black", linewidth=0.8)
    ax.set_xlabel("standardized beta")
    ax.set_title(f"Regression weights (R²={result.r_squared:.2f}, "
                 f"n={result.n_used}); ◆ marks VIF>4")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_metric_distributions(scores_by_metric: dict[str, list[float]],
                              bands: PercentileBands | None,
                              path: str | Path) -> Path:
    """2x4 histogram grid of metric scores with quartile markers."""
    path = Path(path)
    fig, axes = plt.subplots(2, 4, figsize=(14, 6), sharey=True)
    for ax, metric in zip(axes.ravel(), CANONICAL_ORDER):
        values = scores_by_metric.get(metric.value, [])
        ax.hist(values, bins=np.linspace(0, 1, 21), color="#3498db")
        if bands is not None:
            for quartile, color in zip(bands.for_metric(metric), _BAND_COLORS[1:]):
                ax.axvline(quartile, color=color, linestyle="--", linewidth=1)
        ax.set_title(metric.value, fontsize=9)
        ax.set_xlim(0, 1)
    fig.suptitle("Metric score distributions with backlog quartiles")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
