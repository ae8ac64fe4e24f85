"""Training and scoring orchestration plus the versioned bundle store.

Training runs the full per-project preparation in one pass: fit the
vectorizer, fit topics, mine the glossary, compute corpus statistics, score
the whole backlog, and freeze the percentile bands. The result is a
:class:`ModelBundle`, a single JSON-serializable artifact that scoring reads
immutably. Bundles persist as ``projects/<id>/bundle-v<N>.json`` files;
writes are atomic and the newest version wins on load.
"""

from __future__ import annotations

import json
import math
import os
import re
import tempfile
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path

from . import metrics as metrics_mod
from .corpus import Backlog, ImportMapping, UserStory, story_from_text
from .errors import BundleMissing, CorruptBundle, EmptyBacklog, StoreIO
from .glossary import (
    CorpusStats,
    EasyWordList,
    Glossary,
    build_domain_glossary,
    compute_corpus_stats,
    load_easy_words,
)
from .interpret import (
    PercentileBands,
    QualityReport,
    assemble_report,
    compute_percentiles,
)
from .metrics import CANONICAL_ORDER, Metric, PROFILES
from .models import TfIdfModel, TopicModel, fit_tfidf, fit_topics

SCHEMA_VERSION = 1

_BUNDLE_FILE_RE = re.compile(r"bundle-v(\d+)\.json$")


@dataclass(frozen=True)
class ProjectConfig:
    """Tunable knobs of one project's training run."""

    seed: int = 42
    k: int | None = None  # topic count; None picks max(2, round(sqrt(N/2)))
    thr: float = 0.2
    top_n: int = 200
    min_len: int = 3
    min_df: int = 1
    readability_profile: str = "published"
    easy_words_path: str | None = None
    mapping: ImportMapping = field(default_factory=ImportMapping)

    def __post_init__(self):
        if not 0.0 < self.thr < 1.0:
            raise ValueError("thr must lie in (0, 1)")
        if self.k is not None and self.k < 2:
            raise ValueError("k must be >= 2")
        if self.top_n < 1 or self.min_len < 1 or self.min_df < 1:
            raise ValueError("top_n, min_len, and min_df must be >= 1")
        if self.readability_profile not in PROFILES:
            raise ValueError(
                f"unknown readability profile: {self.readability_profile!r}"
            )

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "k": self.k,
            "thr": self.thr,
            "top_n": self.top_n,
            "min_len": self.min_len,
            "min_df": self.min_df,
            "readability_profile": self.readability_profile,
            "easy_words_path": self.easy_words_path,
            "mapping": {
                "id_column": self.mapping.id_column,
                "title_column": self.mapping.title_column,
                "body_column": self.mapping.body_column,
                "ac_markers": list(self.mapping.ac_markers),
                "attachment_markers": list(self.mapping.attachment_markers),
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ProjectConfig":
        mapping_data = data.get("mapping", {})
        mapping = ImportMapping(
            id_column=mapping_data.get("id_column", "id"),
            title_column=mapping_data.get("title_column", "title"),
            body_column=mapping_data.get("body_column", "description"),
            ac_markers=tuple(mapping_data.get("ac_markers", ImportMapping().ac_markers)),
            attachment_markers=tuple(
                mapping_data.get("attachment_markers", ImportMapping().attachment_markers)
            ),
        )
        return cls(
            seed=int(data.get("seed", 42)),
            k=data.get("k"),
            thr=float(data.get("thr", 0.2)),
            top_n=int(data.get("top_n", 200)),
            min_len=int(data.get("min_len", 3)),
            min_df=int(data.get("min_df", 1)),
            readability_profile=data.get("readability_profile", "published"),
            easy_words_path=data.get("easy_words_path"),
            mapping=mapping,
        )


@dataclass
class ModelBundle:
    """Every trained artifact of one project, frozen as a unit."""

    project_id: str
    bundle_version: int
    created_at: str
    config: ProjectConfig
    tfidf: TfIdfModel
    topics: TopicModel
    glossary: Glossary
    easy_words: EasyWordList
    corpus_stats: CorpusStats
    bands: PercentileBands
    training_scores: dict[str, dict[str, float | None]]

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "project_id": self.project_id,
            "bundle_version": self.bundle_version,
            "created_at": self.created_at,
            "config": self.config.to_dict(),
            "tfidf": self.tfidf.to_dict(),
            "topics": self.topics.to_dict(),
            "glossary": self.glossary.to_dict(),
            "easy_words": {
                "source": self.easy_words.source,
                "words": sorted(self.easy_words.words),
            },
            "corpus_stats": self.corpus_stats.to_dict(),
            "bands": self.bands.to_dict(),
            "training_scores": self.training_scores,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ModelBundle":
        if data.get("schema_version") != SCHEMA_VERSION:
            raise CorruptBundle(
                f"unsupported bundle schema: {data.get('schema_version')!r}"
            )
        return cls(
            project_id=data["project_id"],
            bundle_version=int(data["bundle_version"]),
            created_at=data["created_at"],
            config=ProjectConfig.from_dict(data["config"]),
            tfidf=TfIdfModel.from_dict(data["tfidf"]),
            topics=TopicModel.from_dict(data["topics"]),
            glossary=Glossary.from_dict(data["glossary"]),
            easy_words=EasyWordList(
                frozenset(data["easy_words"]["words"]),
                data["easy_words"]["source"],
            ),
            corpus_stats=CorpusStats.from_dict(data["corpus_stats"]),
            bands=PercentileBands.from_dict(data["bands"]),
            training_scores=data.get("training_scores", {}),
        )


def serialize_bundle(bundle: ModelBundle) -> bytes:
    """Canonical JSON bytes; identical bundles serialize identically."""
    return json.dumps(
        bundle.to_dict(), sort_keys=True, ensure_ascii=False
    ).encode("utf-8")


def default_topic_count(n_stories: int) -> int:
    return max(2, round(math.sqrt(n_stories / 2)))


def train(backlog: Backlog, config: ProjectConfig | None = None) -> ModelBundle:
    """Build a complete bundle from a backlog snapshot.

    Deterministic under a fixed seed: rerunning on the same backlog and
    configuration reproduces every artifact except version and timestamp.
    """
    config = config or ProjectConfig()
    if not backlog.stories:
        raise EmptyBacklog("cannot train on an empty backlog")
    profile = PROFILES[config.readability_profile]

    tfidf = fit_tfidf(backlog, min_df=config.min_df)
    k = config.k if config.k is not None else default_topic_count(len(backlog.stories))
    topics = fit_topics(tfidf, backlog, k=k, seed=config.seed, threshold=config.thr)
    glossary = build_domain_glossary(
        backlog, tfidf, top_n=config.top_n, min_len=config.min_len
    )
    easy_words = load_easy_words(config.easy_words_path)
    corpus_stats = compute_corpus_stats(backlog, mf=profile.intercept)

    bundle = ModelBundle(
        project_id=backlog.project_id,
        bundle_version=0,
        created_at=datetime.now(timezone.utc).isoformat(),
        config=config,
        tfidf=tfidf,
        topics=topics,
        glossary=glossary,
        easy_words=easy_words,
        corpus_stats=corpus_stats,
        bands=PercentileBands({m: (0.0, 0.0, 0.0) for m in CANONICAL_ORDER}),
        training_scores={},
    )

    per_metric: dict[Metric, list[float]] = {m: [] for m in CANONICAL_ORDER}
    training_scores: dict[str, dict[str, float | None]] = {}
    for story in backlog.stories:
        scores = metrics_mod.score_all(story, bundle)
        training_scores[story.id] = {
            m.value: scores[m] for m in CANONICAL_ORDER
        }
        for metric, value in scores.items():
            if value is not None:
                per_metric[metric].append(value)
    bundle.bands = PercentileBands(
        {
            metric: compute_percentiles(values) if values else (0.0, 0.0, 0.0)
            for metric, values in per_metric.items()
        }
    )
    bundle.training_scores = training_scores
    return bundle


def score(bundle: ModelBundle, story: UserStory | str) -> QualityReport:
    """Score a story (or free text) against a trained bundle.

    Free text is cleaned and template-parsed first. The bundle is never
    mutated; identical input yields an identical report.
    """
    if bundle is None:
        raise BundleMissing("no trained bundle available")
    if isinstance(story, str):
        adhoc_id = "adhoc"
        while adhoc_id in bundle.tfidf.document_vectors:
            adhoc_id = "_" + adhoc_id
        story = story_from_text(story, story_id=adhoc_id, mapping=bundle.config.mapping)
    scores = metrics_mod.score_all(story, bundle)
    return assemble_report(story.id, scores, bundle.bands, bundle.bundle_version)


# --- bundle store -------------------------------------------------------------

def _project_dir(store: str | Path, project_id: str) -> Path:
    safe = re.sub(r"[^\w.-]", "_", project_id)
    return Path(store) / "projects" / safe


def list_versions(project_id: str, store: str | Path) -> list[int]:
    directory = _project_dir(store, project_id)
    if not directory.is_dir():
        return []
    versions = []
    for name in os.listdir(directory):
        match = _BUNDLE_FILE_RE.fullmatch(name)
        if match:
            versions.append(int(match.group(1)))
    return sorted(versions)


def save_bundle(bundle: ModelBundle, store: str | Path) -> ModelBundle:
    """Persist the bundle under the next version number; write is atomic."""
    directory = _project_dir(store, bundle.project_id)
    try:
        directory.mkdir(parents=True, exist_ok=True)
        existing = list_versions(bundle.project_id, store)
        version = (existing[-1] + 1) if existing else 1
        stamped = replace(bundle, bundle_version=version)
        payload = serialize_bundle(stamped)
        fd, tmp_path = tempfile.mkstemp(
            dir=directory, prefix=".bundle-", suffix=".tmp"
        )
        try:
            with os.fdopen(fd, "wb") as handle:
                handle.write(payload)
            os.replace(tmp_path, directory / f"bundle-v{version}.json")
        finally:
            if os.path.exists(tmp_path):
                os.unlink(tmp_path)
    except OSError as exc:
        raise StoreIO(f"cannot write bundle for {bundle.project_id}: {exc}") from exc
    return stamped


def load_bundle(project_id: str, store: str | Path) -> ModelBundle:
    """Load the highest stored version for the project."""
    versions = list_versions(project_id, store)
    if not versions:
        raise BundleMissing(f"no bundle stored for project {project_id!r}")
    path = _project_dir(store, project_id) / f"bundle-v{versions[-1]}.json"
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise StoreIO(f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(text)
        bundle = ModelBundle.from_dict(data)
    except CorruptBundle:
        raise
    except (ValueError, KeyError, TypeError) as exc:
        raise CorruptBundle(f"cannot parse bundle file {path}: {exc}") from exc
    return bundle
