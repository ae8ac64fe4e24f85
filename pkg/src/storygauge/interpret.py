"""Percentile bands and report assembly.

Raw metric values only become actionable next to the rest of the backlog:
a 0.4 readability may be perfectly normal for a given project. Training
freezes the backlog quartiles per metric; scoring classifies each value into
one of four bands that the UI colors and the tooltips explain.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import EmptyInput
from .metrics import CANONICAL_ORDER, Metric

METRIC_DESCRIPTIONS: dict[Metric, str] = {
    Metric.FORMAT_COMPLETE: "How many of the six story card slots (title, "
    "persona, what, why, acceptance criteria, attachments) are filled in.",
    Metric.READABLE: "Reading ease of the story text from sentence length "
    "and syllables per word, relative to the maximal score.",
    Metric.CUSTOMER_SPEAK: "Share of the story's unique words that belong "
    "to the project's domain glossary.",
    Metric.SMALL: "How few backlog topics the story touches; fewer topics "
    "mean a smaller, more focused story.",
    Metric.INDEPENDENT: "How dissimilar the story is from the rest of the "
    "backlog, measured by text similarity.",
    Metric.WORD_SPARSE: "Closeness of the story's word count to the backlog "
    "average; too short and too long both score low.",
    Metric.SENTENCE_SPARSE: "Closeness of the story's sentence count to the "
    "backlog average; too short and too long both score low.",
    Metric.EASY_LANGUAGE: "Share of the story's unique words that belong "
    "to a basic everyday vocabulary.",
}


class Band(str, Enum):
    LOW = "low"
    BELOW_MID = "below_mid"
    ABOVE_MID = "above_mid"
    HIGH = "high"


def compute_percentiles(values: list[float]) -> tuple[float, float, float]:
    """Lower, middle, and upper quartile by linear interpolation.

    Quantile p sits at position ``p * (n - 1)`` of the sorted values, with
    linear interpolation between neighbors.
    """
    if not values:
        raise EmptyInput("cannot compute percentiles of an empty list")
    ordered = sorted(values)
    n = len(ordered)

    def at(p: float) -> float:
        pos = p * (n - 1)
        lower = int(pos)
        upper = min(lower + 1, n - 1)
        frac = pos - lower
        return ordered[lower] * (1.0 - frac) + ordered[upper] * frac

    return at(0.25), at(0.5), at(0.75)


@dataclass(frozen=True)
class PercentileBands:
    """Frozen per-metric quartiles (q25, q50, q75) of the training backlog."""

    quartiles: dict[Metric, tuple[float, float, float]]

    def for_metric(self, metric: Metric) -> tuple[float, float, float]:
        return self.quartiles[metric]

    def to_dict(self) -> dict:
        return {
            metric.value: {"q25": q[0], "q50": q[1], "q75": q[2]}
            for metric, q in self.quartiles.items()
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PercentileBands":
        return cls(
            {
                Metric(name): (q["q25"], q["q50"], q["q75"])
                for name, q in data.items()
            }
        )


def band(value: float, bands: PercentileBands, metric: Metric) -> Band:
    """Classify a value against the metric's quartiles; boundary ties go up."""
    q25, q50, q75 = bands.for_metric(metric)
    if value >= q75:
        return Band.HIGH
    if value >= q50:
        return Band.ABOVE_MID
    if value >= q25:
        return Band.BELOW_MID
    return Band.LOW


@dataclass(frozen=True)
class ReportEntry:
    metric: Metric
    value: float | None
    band: Band | None
    tooltip: str

    @property
    def percent(self) -> int | None:
        return None if self.value is None else round(self.value * 100)


@dataclass(frozen=True)
class QualityReport:
    story_id: str
    entries: tuple[ReportEntry, ...]
    bundle_version: int

    def to_dict(self) -> dict:
        return {
            "story_id": self.story_id,
            "bundle_version": self.bundle_version,
            "metrics": [
                {
                    "name": e.metric.value,
                    "value": e.value,
                    "percent": e.percent,
                    "band": e.band.value if e.band else None,
                    "tooltip": e.tooltip,
                }
                for e in self.entries
            ],
        }


def _tooltip(metric: Metric, bands: PercentileBands) -> str:
    q25, q50, q75 = bands.for_metric(metric)
    return (
        f"{METRIC_DESCRIPTIONS[metric]} Backlog quartiles: "
        f"25% at {q25 * 100:.1f}%, 50% at {q50 * 100:.1f}%, "
        f"75% at {q75 * 100:.1f}%."
    )


def assemble_report(story_id: str, scores: dict[Metric, float | None],
                    bands: PercentileBands, bundle_version: int) -> QualityReport:
    """Combine raw scores and bands into the report served to clients.

    Metrics flagged as unavailable (``None``) keep their slot but carry no
    value or band, so the grid shape stays stable for the UI.
    """
    entries = []
    for metric in CANONICAL_ORDER:
        value = scores.get(metric)
        if value is None:
            entries.append(
                ReportEntry(
                    metric,
                    None,
                    None,
                    f"{METRIC_DESCRIPTIONS[metric]} Currently unavailable "
                    "for this story.",
                )
            )
        else:
            entries.append(
                ReportEntry(metric, value, band(value, bands, metric),
                            _tooltip(metric, bands))
            )
    return QualityReport(story_id, tuple(entries), bundle_version)
