"""Trainable numeric models over the backlog vocabulary.

Everything here is deterministic under a fixed seed and serializes to plain
JSON so a trained bundle can be cached, diffed, and reloaded bit-identically:

* a TF-IDF vectorizer with smoothed idf ``ln((1+N)/(1+df)) + 1`` and
  L2-normalized document vectors,
* cosine similarity over those vectors,
* spherical k-means (cosine distance, renormalized centroids) producing the
  topic model behind the "small" metric,
* a one-vs-rest hinge-loss classifier usable as template-parse fallback.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .corpus import Backlog
from .errors import (
    DimensionMismatch,
    EmptyBacklog,
    InsufficientLabels,
    TooFewDocuments,
)
from .textproc import tokenize

KMEANS_MAX_ITER = 100
KMEANS_TOL = 1e-6


@dataclass(frozen=True)
class SparseVector:
    """L2-normalized sparse vector in a fixed-dimension term space."""

    dim: int
    weights: dict[int, float]

    def norm(self) -> float:
        return math.sqrt(sum(w * w for w in self.weights.values()))

    def is_zero(self) -> bool:
        return not self.weights

    def dot(self, other: "SparseVector") -> float:
        if self.dim != other.dim:
            raise DimensionMismatch(
                f"vector dims differ: {self.dim} vs {other.dim}"
            )
        small, large = (
            (self.weights, other.weights)
            if len(self.weights) <= len(other.weights)
            else (other.weights, self.weights)
        )
        return sum(w * large[i] for i, w in small.items() if i in large)

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(self.dim)
        for i, w in self.weights.items():
            dense[i] = w
        return dense


def cosine_similarity(a: SparseVector, b: SparseVector) -> float:
    """Cosine of two vectors from the same TF-IDF space, clamped to [0, 1].

    Stored vectors are already unit length, so this is their dot product;
    a zero vector has similarity 0 with everything.
    """
    if a.is_zero() or b.is_zero():
        if a.dim != b.dim:
            raise DimensionMismatch(f"vector dims differ: {a.dim} vs {b.dim}")
        return 0.0
    return min(max(a.dot(b), 0.0), 1.0)


def _term_counts(text: str) -> dict[str, int]:
    parsed = tokenize(text)
    counts: dict[str, int] = {}
    for token in parsed.tokens:
        low = token.lower()
        if low in parsed.unique_words:
            counts[low] = counts.get(low, 0) + 1
    return counts


@dataclass
class TfIdfModel:
    vocabulary: dict[str, int]
    idf: np.ndarray
    document_vectors: dict[str, SparseVector]

    @property
    def dim(self) -> int:
        return len(self.vocabulary)

    def to_dict(self) -> dict:
        return {
            "vocabulary": self.vocabulary,
            "idf": [float(x) for x in self.idf],
            "document_vectors": {
                story_id: {str(i): w for i, w in sorted(vec.weights.items())}
                for story_id, vec in self.document_vectors.items()
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TfIdfModel":
        vocabulary = {t: int(i) for t, i in data["vocabulary"].items()}
        dim = len(vocabulary)
        vectors = {
            story_id: SparseVector(
                dim, {int(i): float(w) for i, w in weights.items()}
            )
            for story_id, weights in data["document_vectors"].items()
        }
        return cls(vocabulary, np.asarray(data["idf"], dtype=float), vectors)


def fit_tfidf(backlog: Backlog, min_df: int = 1) -> TfIdfModel:
    """Fit the vectorizer on the raw text of every backlog story.

    Term frequency is the raw in-story count, idf is the smoothed
    ``ln((1+N)/(1+df)) + 1`` (always positive), and each document vector is
    L2-normalized. Terms must appear in at least ``min_df`` documents.
    """
    if not backlog.stories:
        raise EmptyBacklog("cannot fit TF-IDF on an empty backlog")
    doc_counts = [(s.id, _term_counts(s.raw_text)) for s in backlog.stories]
    df: dict[str, int] = {}
    for _, counts in doc_counts:
        for term in counts:
            df[term] = df.get(term, 0) + 1
    vocabulary = {
        term: idx
        for idx, term in enumerate(sorted(t for t, d in df.items() if d >= min_df))
    }
    n_docs = len(doc_counts)
    idf = np.ones(len(vocabulary))
    for term, idx in vocabulary.items():
        idf[idx] = math.log((1 + n_docs) / (1 + df[term])) + 1.0
    model = TfIdfModel(vocabulary, idf, {})
    for story_id, counts in doc_counts:
        model.document_vectors[story_id] = _vector_from_counts(model, counts)
    return model


def _vector_from_counts(model: TfIdfModel, counts: dict[str, int]) -> SparseVector:
    weights = {
        model.vocabulary[term]: count * model.idf[model.vocabulary[term]]
        for term, count in counts.items()
        if term in model.vocabulary and count > 0
    }
    norm = math.sqrt(sum(w * w for w in weights.values()))
    if norm == 0.0:
        return SparseVector(model.dim, {})
    return SparseVector(model.dim, {i: w / norm for i, w in weights.items()})


def vectorize(model: TfIdfModel, text: str) -> SparseVector:
    """Embed arbitrary text; out-of-vocabulary terms are ignored and an
    all-OOV text yields the zero vector."""
    return _vector_from_counts(model, _term_counts(text))


# --- topic model -------------------------------------------------------------

@dataclass
class TopicModel:
    k: int
    centroids: np.ndarray  # (k, dim), rows unit length
    threshold: float
    seed: int
    assignments: dict[str, int] = field(default_factory=dict)
    objective_trace: tuple[float, ...] = ()

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "threshold": self.threshold,
            "seed": self.seed,
            "centroids": [[float(x) for x in row] for row in self.centroids],
            "assignments": self.assignments,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TopicModel":
        return cls(
            k=int(data["k"]),
            centroids=np.asarray(data["centroids"], dtype=float),
            threshold=float(data["threshold"]),
            seed=int(data["seed"]),
            assignments={s: int(c) for s, c in data.get("assignments", {}).items()},
        )


def _normalize_rows(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return matrix / norms


def _kmeans_pp_init(docs: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = docs.shape[0]
    centroids = np.empty((k, docs.shape[1]))
    first = int(rng.integers(n))
    centroids[0] = docs[first]
    distances = np.clip(1.0 - docs @ centroids[0], 0.0, None)
    for j in range(1, k):
        total = distances.sum()
        if total <= 0.0:
            choice = int(rng.integers(n))
        else:
            choice = int(rng.choice(n, p=distances / total))
        centroids[j] = docs[choice]
        distances = np.minimum(
            distances, np.clip(1.0 - docs @ centroids[j], 0.0, None)
        )
    return centroids


def fit_topics(model: TfIdfModel, backlog: Backlog, k: int, seed: int,
               threshold: float = 0.2) -> TopicModel:
    """Spherical k-means over the backlog document vectors.

    Seeded k-means++ initialization, cosine distance, at most 100 iterations
    or until the largest centroid movement drops below 1e-6. Centroids stay
    unit length; empty clusters are reseeded with the worst-assigned point,
    which keeps the objective non-increasing. Deterministic for a fixed seed.
    """
    if k < 2:
        raise ValueError("topic count k must be >= 2")
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    story_ids = [s.id for s in backlog.stories]
    if len(story_ids) < k:
        raise TooFewDocuments(
            f"need at least {k} stories to fit {k} topics, got {len(story_ids)}"
        )
    docs = np.vstack([model.document_vectors[sid].to_dense() for sid in story_ids])
    rng = np.random.default_rng(seed)
    centroids = _kmeans_pp_init(docs, k, rng)

    assignments = np.zeros(len(story_ids), dtype=int)
    trace: list[float] = []
    for _ in range(KMEANS_MAX_ITER):
        sims = docs @ centroids.T
        assignments = np.argmax(sims, axis=1)
        # Reseed each empty cluster with the point farthest from its centroid.
        for cluster in range(k):
            if not np.any(assignments == cluster):
                worst = int(np.argmin(sims[np.arange(len(story_ids)), assignments]))
                centroids[cluster] = docs[worst]
                assignments[worst] = cluster
                sims[:, cluster] = docs @ centroids[cluster]
        trace.append(float(np.sum(1.0 - sims[np.arange(len(story_ids)), assignments])))
        new_centroids = centroids.copy()
        for cluster in range(k):
            members = docs[assignments == cluster]
            if len(members):
                new_centroids[cluster] = members.mean(axis=0)
        new_centroids = _normalize_rows(new_centroids)
        movement = float(np.max(np.linalg.norm(new_centroids - centroids, axis=1)))
        centroids = new_centroids
        if movement < KMEANS_TOL:
            break
    assignments = np.argmax(docs @ centroids.T, axis=1)
    return TopicModel(
        k=k,
        centroids=centroids,
        threshold=threshold,
        seed=seed,
        assignments={sid: int(c) for sid, c in zip(story_ids, assignments)},
        objective_trace=tuple(trace),
    )


def topic_probabilities(topic_model: TopicModel, story_vector: SparseVector) -> np.ndarray:
    """Per-topic probability vector: clipped cosines normalized to sum to 1.

    A zero story vector (or one orthogonal to every centroid) yields the
    uniform distribution 1/k.
    """
    k = topic_model.k
    if story_vector.is_zero():
        return np.full(k, 1.0 / k)
    dense = story_vector.to_dense()
    sims = np.clip(topic_model.centroids @ dense, 0.0, None)
    total = sims.sum()
    if total <= 0.0:
        return np.full(k, 1.0 / k)
    return sims / total


# --- pattern classifier -------------------------------------------------------

PATTERN_LABELS = ("title", "persona", "what", "why", "acs", "attachments", "none")


@dataclass
class PatternClassifier:
    """One-vs-rest linear classifier over its own TF-IDF space."""

    tfidf: TfIdfModel
    classes: list[str]
    weights: np.ndarray  # (n_classes, dim)
    bias: np.ndarray  # (n_classes,)

    def predict(self, text: str) -> tuple[str, float]:
        """Return (label, margin) for a text segment; margins are finite for
        arbitrary input, and an all-OOV segment falls back to 'none'."""
        vec = vectorize(self.tfidf, text)
        if vec.is_zero():
            return "none", 0.0
        dense = vec.to_dense()
        scores = self.weights @ dense + self.bias
        best = int(np.argmax(scores))
        return self.classes[best], float(scores[best])

    def to_dict(self) -> dict:
        return {
            "tfidf": self.tfidf.to_dict(),
            "classes": self.classes,
            "weights": [[float(x) for x in row] for row in self.weights],
            "bias": [float(x) for x in self.bias],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PatternClassifier":
        return cls(
            tfidf=TfIdfModel.from_dict(data["tfidf"]),
            classes=list(data["classes"]),
            weights=np.asarray(data["weights"], dtype=float),
            bias=np.asarray(data["bias"], dtype=float),
        )


def train_pattern_classifier(
    labeled: list[tuple[str, str]],
    seed: int = 0,
    epochs: int = 40,
    learning_rate: float = 0.5,
    regularization: float = 1e-4,
) -> PatternClassifier:
    """Train the template-parse fallback classifier with SGD hinge loss.

    Needs at least two classes with five examples each. Training shuffles
    with a seeded generator, so results are reproducible.
    """
    by_class: dict[str, int] = {}
    for _, label in labeled:
        by_class[label] = by_class.get(label, 0) + 1
    if len(by_class) < 2 or any(count < 5 for count in by_class.values()):
        raise InsufficientLabels(
            "need >= 2 classes with >= 5 examples each, got "
            + ", ".join(f"{c}:{n}" for c, n in sorted(by_class.items()))
        )

    corpus = Backlog(
        project_id="_classifier",
        stories=[
            _segment_story(i, text) for i, (text, _) in enumerate(labeled)
        ],
    )
    tfidf = fit_tfidf(corpus)
    features = np.vstack(
        [vectorize(tfidf, text).to_dense() for text, _ in labeled]
    )
    classes = sorted(by_class)
    labels = np.array([classes.index(label) for _, label in labeled])

    rng = np.random.default_rng(seed)
    weights = np.zeros((len(classes), tfidf.dim))
    bias = np.zeros(len(classes))
    step = 0
    for _ in range(epochs):
        order = rng.permutation(len(labeled))
        for idx in order:
            step += 1
            lr = learning_rate / (1.0 + learning_rate * regularization * step)
            x = features[idx]
            for ci in range(len(classes)):
                y = 1.0 if labels[idx] == ci else -1.0
                margin = y * (weights[ci] @ x + bias[ci])
                weights[ci] *= 1.0 - lr * regularization
                if margin < 1.0:
                    weights[ci] += lr * y * x
                    bias[ci] += lr * y
    return PatternClassifier(tfidf, classes, weights, bias)


def _segment_story(index: int, text: str):
    from .corpus import UserStory

    return UserStory(id=f"seg-{index}", raw_text=text)
