"""The eight user story quality metrics.

Every metric maps a story onto the interval scale [0, 1] (rendered as
0-100% downstream); 0 means low quality, 1 means high quality. Metrics that
need trained artifacts receive them explicitly, so each function stays pure
and freely concurrent.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .corpus import Backlog, UserStory
from .errors import EmptyComparisonSet
from .glossary import CorpusStats, EasyWordList, Glossary
from .models import (
    SparseVector,
    TfIdfModel,
    TopicModel,
    cosine_similarity,
    topic_probabilities,
    vectorize,
)
from .textproc import (
    mean_syllables_per_word,
    mean_words_per_sentence,
    sentence_count,
    tokenize,
    word_count,
)


class Metric(str, Enum):
    FORMAT_COMPLETE = "format_complete"
    READABLE = "readable"
    CUSTOMER_SPEAK = "customer_speak"
    SMALL = "small"
    INDEPENDENT = "independent"
    WORD_SPARSE = "word_sparse"
    SENTENCE_SPARSE = "sentence_sparse"
    EASY_LANGUAGE = "easy_language"


#: Reporting order used by every output surface (CSV header, JSON, UI grid).
CANONICAL_ORDER: tuple[Metric, ...] = (
    Metric.FORMAT_COMPLETE,
    Metric.READABLE,
    Metric.CUSTOMER_SPEAK,
    Metric.SMALL,
    Metric.INDEPENDENT,
    Metric.WORD_SPARSE,
    Metric.SENTENCE_SPARSE,
    Metric.EASY_LANGUAGE,
)


@dataclass(frozen=True)
class ReadabilityProfile:
    """Constants of the reading-ease formula ``intercept - a*asw - b*asl``.

    The default profile uses the classic Flesch Reading Ease constants
    (https://en.wikipedia.org/wiki/Flesch%E2%80%93Kincaid_readability_tests);
    the 'german' profile uses Amstad's German adaptation. The maximal value
    ``mf`` of either formula is its intercept, reached on empty text.
    """

    name: str
    intercept: float
    syllable_coef: float
    sentence_coef: float

    def raw_score(self, asw: float, asl: float) -> float:
        return self.intercept - self.syllable_coef * asw - self.sentence_coef * asl


PROFILES: dict[str, ReadabilityProfile] = {
    "published": ReadabilityProfile("published", 206.835, 84.6, 1.015),
    "german": ReadabilityProfile("german", 180.0, 58.5, 1.0),
}

DEFAULT_PROFILE = PROFILES["published"]


@dataclass(frozen=True)
class MetricScore:
    metric: Metric
    value: float

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"{self.metric.value} out of range: {self.value}")


def _clamp(value: float) -> float:
    return min(max(value, 0.0), 1.0)


def _filled(text: str) -> bool:
    return bool(text and text.strip())


def format_complete(story: UserStory) -> MetricScore:
    """Fraction of the six story-card slots that carry content.

    Whitespace-only text does not count; the list slots count when at least
    one non-blank entry exists.
    """
    filled = sum(
        [
            _filled(story.title),
            _filled(story.persona),
            _filled(story.what),
            _filled(story.why),
            any(_filled(e) for e in story.acceptance_criteria),
            any(_filled(e) for e in story.attachments),
        ]
    )
    return MetricScore(Metric.FORMAT_COMPLETE, filled / 6.0)


def readable(story: UserStory, stats: CorpusStats,
             profile: ReadabilityProfile = DEFAULT_PROFILE) -> MetricScore:
    """Reading ease normalized by the maximal score ``mf`` and clamped.

    ``asw`` is the mean syllable count per token and ``asl`` the mean token
    count per sentence of the story text. Empty text scores 1.0: with both
    averages at zero the raw formula equals ``mf``.
    """
    asw = mean_syllables_per_word(story.raw_text)
    asl = mean_words_per_sentence(story.raw_text)
    raw = profile.raw_score(asw, asl)
    return MetricScore(Metric.READABLE, _clamp(raw / stats.mf))


def _overlap_ratio(story: UserStory, words: frozenset[str] | set[str]) -> float:
    unique = tokenize(story.raw_text).unique_words
    if not unique:
        return 0.0
    return len(unique & words) / len(unique)


def customer_speak(story: UserStory, glossary: Glossary) -> MetricScore:
    """Share of the story's unique words found in the domain glossary."""
    return MetricScore(Metric.CUSTOMER_SPEAK, _overlap_ratio(story, glossary.terms))


def easy_language(story: UserStory, easy_words: EasyWordList) -> MetricScore:
    """Share of the story's unique words found in the basic vocabulary."""
    return MetricScore(Metric.EASY_LANGUAGE, _overlap_ratio(story, easy_words.words))


def small(story_vector: SparseVector, topic_model: TopicModel) -> MetricScore:
    """One minus the fraction of backlog topics present in the story.

    A topic counts as present when its probability reaches the model's
    association threshold; touching every topic scores 0, touching none
    scores 1.
    """
    probs = topic_probabilities(topic_model, story_vector)
    present = int((probs >= topic_model.threshold).sum())
    return MetricScore(Metric.SMALL, 1.0 - present / topic_model.k)


def independent(story: UserStory, tfidf_model: TfIdfModel,
                backlog: Backlog | None = None) -> MetricScore:
    """One minus the story's mean cosine similarity to the rest of the backlog.

    The story itself is excluded by id when it is part of the backlog, so a
    stored story is not biased toward dependence by its own self-similarity.
    """
    story_vector = vectorize(tfidf_model, story.raw_text)
    others = [
        vec
        for sid, vec in tfidf_model.document_vectors.items()
        if sid != story.id
    ]
    if not others:
        raise EmptyComparisonSet(
            "backlog contains no story other than the one under test"
        )
    mean_sim = sum(cosine_similarity(story_vector, vec) for vec in others) / len(others)
    return MetricScore(Metric.INDEPENDENT, _clamp(1.0 - mean_sim))


def _sparse_value(n: float, minimum: float, mean: float, maximum: float) -> float:
    """Tent-shaped closeness to the backlog mean: 1.0 at the mean, falling to
    0.0 at the backlog minimum and maximum."""
    w = minimum if n <= mean else maximum
    if mean == w:
        return 1.0 if n == mean else 0.0
    return _clamp((n - w) / (mean - w))


def word_sparse(story: UserStory, stats: CorpusStats) -> MetricScore:
    return MetricScore(
        Metric.WORD_SPARSE,
        _sparse_value(
            word_count(story.raw_text),
            stats.words_min,
            stats.words_mean,
            stats.words_max,
        ),
    )


def sentence_sparse(story: UserStory, stats: CorpusStats) -> MetricScore:
    return MetricScore(
        Metric.SENTENCE_SPARSE,
        _sparse_value(
            sentence_count(story.raw_text),
            stats.sentences_min,
            stats.sentences_mean,
            stats.sentences_max,
        ),
    )


def score_all(story: UserStory, bundle) -> dict[Metric, float | None]:
    """Compute all eight metrics against a trained bundle.

    A metric that cannot be computed (e.g. independence against a backlog
    holding only the story itself) is reported as ``None`` instead of
    failing the whole request.
    """
    profile = PROFILES.get(bundle.config.readability_profile, DEFAULT_PROFILE)
    story_vector = vectorize(bundle.tfidf, story.raw_text)
    computations = {
        Metric.FORMAT_COMPLETE: lambda: format_complete(story),
        Metric.READABLE: lambda: readable(story, bundle.corpus_stats, profile),
        Metric.CUSTOMER_SPEAK: lambda: customer_speak(story, bundle.glossary),
        Metric.SMALL: lambda: small(story_vector, bundle.topics),
        Metric.INDEPENDENT: lambda: independent(story, bundle.tfidf),
        Metric.WORD_SPARSE: lambda: word_sparse(story, bundle.corpus_stats),
        Metric.SENTENCE_SPARSE: lambda: sentence_sparse(story, bundle.corpus_stats),
        Metric.EASY_LANGUAGE: lambda: easy_language(story, bundle.easy_words),
    }
    scores: dict[Metric, float | None] = {}
    for metric in CANONICAL_ORDER:
        try:
            scores[metric] = computations[metric]().value
        except Exception:
            scores[metric] = None
    return scores
