"""storygauge: backlog-trained user story quality metrics.

Train per-project language artifacts from a backlog CSV, score any story on
eight quality metrics (each on a 0-100% scale), and interpret the scores
against the backlog's own percentile bands. Ships a REST API, a CLI, and an
evaluation-statistics toolkit for validating the metrics against expert
ratings.
"""

from .corpus import (
    Backlog,
    ImportMapping,
    JIRA_MAPPING,
    UserStory,
    clean_text,
    import_csv,
    parse_patterns,
    story_from_text,
)
from .glossary import (
    CorpusStats,
    EasyWordList,
    Glossary,
    build_domain_glossary,
    compute_corpus_stats,
    load_easy_words,
)
from .interpret import (
    Band,
    PercentileBands,
    QualityReport,
    assemble_report,
    band,
    compute_percentiles,
)
from .metrics import CANONICAL_ORDER, Metric, MetricScore, score_all
from .models import (
    PatternClassifier,
    SparseVector,
    TfIdfModel,
    TopicModel,
    cosine_similarity,
    fit_tfidf,
    fit_topics,
    topic_probabilities,
    train_pattern_classifier,
    vectorize,
)
from .pipeline import (
    ModelBundle,
    ProjectConfig,
    load_bundle,
    save_bundle,
    score,
    serialize_bundle,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "Backlog",
    "Band",
    "CANONICAL_ORDER",
    "CorpusStats",
    "EasyWordList",
    "Glossary",
    "ImportMapping",
    "JIRA_MAPPING",
    "Metric",
    "MetricScore",
    "ModelBundle",
    "PatternClassifier",
    "PercentileBands",
    "ProjectConfig",
    "QualityReport",
    "SparseVector",
    "TfIdfModel",
    "TopicModel",
    "UserStory",
    "assemble_report",
    "band",
    "build_domain_glossary",
    "clean_text",
    "compute_corpus_stats",
    "compute_percentiles",
    "cosine_similarity",
    "fit_tfidf",
    "fit_topics",
    "import_csv",
    "load_bundle",
    "load_easy_words",
    "parse_patterns",
    "save_bundle",
    "score",
    "score_all",
    "serialize_bundle",
    "story_from_text",
    "topic_probabilities",
    "train",
    "train_pattern_classifier",
    "vectorize",
]
