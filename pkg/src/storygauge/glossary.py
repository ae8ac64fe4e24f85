"""Domain glossary mining, easy-word list loading, and corpus statistics."""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .corpus import Backlog
from .errors import EmptyBacklog, EmptyResource, MissingResource
from .models import TfIdfModel
from .textproc import sentence_count, tokenize, word_count

#: Suffixes stripped by the rule-based lemma grouping, longest first.
_LEMMA_SUFFIXES = ("en", "er", "e", "n", "s")


def _read_resource(name: str) -> str:
    return (
        resources.files("storygauge.data").joinpath(name).read_text(encoding="utf-8")
    )


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    """German stop words, from the shipped list or a caller-provided file."""
    if path is None:
        text = _read_resource("stopwords_de.txt")
    else:
        text = Path(path).read_text(encoding="utf-8")
    return frozenset(
        line.strip().lower()
        for line in text.splitlines()
        if line.strip() and not line.startswith("#")
    )


@dataclass
class Glossary:
    """Customer-domain vocabulary mined from the backlog.

    ``provenance`` records which selector chose each term: 'tfidf' (high
    corpus-max tf-idf weight), 'entity' (capitalization heuristic), or
    'lemma' (frequent suffix-stripped group).
    """

    terms: set[str]
    provenance: dict[str, str]

    def to_dict(self) -> dict:
        return {"provenance": dict(sorted(self.provenance.items()))}

    @classmethod
    def from_dict(cls, data: dict) -> "Glossary":
        provenance = dict(data["provenance"])
        return cls(set(provenance), provenance)


@dataclass(frozen=True)
class EasyWordList:
    words: frozenset[str]
    source: str = "easy_words_de.txt"


@dataclass(frozen=True)
class CorpusStats:
    """Backlog-wide token and sentence count statistics plus the readability
    normalizer ``mf`` (the raw readability score of empty text)."""

    words_min: float
    words_mean: float
    words_max: float
    sentences_min: float
    sentences_mean: float
    sentences_max: float
    mf: float

    def to_dict(self) -> dict:
        return {
            "words_min": self.words_min,
            "words_mean": self.words_mean,
            "words_max": self.words_max,
            "sentences_min": self.sentences_min,
            "sentences_mean": self.sentences_mean,
            "sentences_max": self.sentences_max,
            "mf": self.mf,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CorpusStats":
        return cls(**{k: float(v) for k, v in data.items()})


def _acceptable(term: str, min_len: int, stopwords: frozenset[str]) -> bool:
    return (
        len(term) >= min_len
        and term not in stopwords
        and any(ch.isalpha() for ch in term)
    )


def _tfidf_selector(model: TfIdfModel, top_n: int, min_len: int,
                    stopwords: frozenset[str]) -> list[str]:
    index_to_term = {i: t for t, i in model.vocabulary.items()}
    max_weight: dict[str, float] = {}
    for vector in model.document_vectors.values():
        for idx, weight in vector.weights.items():
            term = index_to_term[idx]
            if weight > max_weight.get(term, 0.0):
                max_weight[term] = weight
    candidates = [
        t for t in max_weight if _acceptable(t, min_len, stopwords)
    ]
    candidates.sort(key=lambda t: (-max_weight[t], t))
    return candidates[:top_n]


def _entity_selector(backlog: Backlog, min_len: int,
                     stopwords: frozenset[str]) -> list[str]:
    found: set[str] = set()
    for story in backlog.stories:
        parsed = tokenize(story.raw_text)
        initial = {start for start, _ in parsed.sentences}
        for pos, token in enumerate(parsed.tokens):
            if token.isupper() and len(token) >= 2:
                found.add(token.lower())
            elif pos not in initial and any(ch.isupper() for ch in token):
                found.add(token.lower())
    return sorted(t for t in found if _acceptable(t, min_len, stopwords))


def _lemma_stem(term: str) -> str:
    for suffix in _LEMMA_SUFFIXES:
        if term.endswith(suffix) and len(term) - len(suffix) >= 3:
            return term[: -len(suffix)]
    return term


def _lemma_selector(backlog: Backlog, top_n: int, min_len: int,
                    stopwords: frozenset[str]) -> list[str]:
    freq: dict[str, int] = {}
    for story in backlog.stories:
        parsed = tokenize(story.raw_text)
        for token in parsed.tokens:
            low = token.lower()
            if low in parsed.unique_words:
                freq[low] = freq.get(low, 0) + 1
    groups: dict[str, list[str]] = {}
    for term in freq:
        groups.setdefault(_lemma_stem(term), []).append(term)
    ranked = sorted(
        groups.items(), key=lambda kv: (-sum(freq[t] for t in kv[1]), kv[0])
    )
    selected: list[str] = []
    for _, members in ranked[:top_n]:
        selected.extend(
            t for t in sorted(members) if _acceptable(t, min_len, stopwords)
        )
    return selected


def build_domain_glossary(backlog: Backlog, tfidf_model: TfIdfModel,
                          top_n: int = 200, min_len: int = 3,
                          stopwords: frozenset[str] | None = None) -> Glossary:
    """Mine the customer glossary as the union of three selectors.

    (a) the ``top_n`` terms by corpus-max tf-idf weight, (b) an entity
    heuristic (tokens carrying capitals mid-sentence, plus all-caps tokens of
    length >= 2), and (c) the members of the ``top_n`` most frequent
    suffix-stripped token groups. Terms are lowercased, at least ``min_len``
    characters, never stop words. Provenance priority when selectors overlap:
    entity, then tfidf, then lemma.
    """
    if not backlog.stories:
        raise EmptyBacklog("cannot build a glossary from an empty backlog")
    stopwords = stopwords if stopwords is not None else load_stopwords()
    provenance: dict[str, str] = {}
    for term in _entity_selector(backlog, min_len, stopwords):
        provenance.setdefault(term, "entity")
    for term in _tfidf_selector(tfidf_model, top_n, min_len, stopwords):
        provenance.setdefault(term, "tfidf")
    for term in _lemma_selector(backlog, top_n, min_len, stopwords):
        provenance.setdefault(term, "lemma")
    return Glossary(set(provenance), provenance)


def load_easy_words(path: str | Path | None = None) -> EasyWordList:
    """Load the basic-vocabulary word list (one word per line, UTF-8)."""
    if path is None:
        text = _read_resource("easy_words_de.txt")
        source = "easy_words_de.txt"
    else:
        path = Path(path)
        if not path.exists():
            raise MissingResource(f"easy-word list not found: {path}")
        text = path.read_text(encoding="utf-8")
        source = str(path)
    words = frozenset(
        line.strip().lower()
        for line in text.splitlines()
        if line.strip() and not line.startswith("#")
    )
    if not words:
        raise EmptyResource(f"easy-word list is empty: {source}")
    return EasyWordList(words, source)


def compute_corpus_stats(backlog: Backlog, mf: float = 206.835) -> CorpusStats:
    """Min/mean/max token and sentence counts across the backlog.

    ``mf`` is the readability normalizer: the raw readability formula
    evaluated at zero syllables and zero sentence length, i.e. its intercept
    (206.835 for the default profile).
    """
    if not backlog.stories:
        raise EmptyBacklog("cannot compute corpus stats on an empty backlog")
    words = [word_count(s.raw_text) for s in backlog.stories]
    sentences = [sentence_count(s.raw_text) for s in backlog.stories]
    return CorpusStats(
        words_min=float(min(words)),
        words_mean=sum(words) / len(words),
        words_max=float(max(words)),
        sentences_min=float(min(sentences)),
        sentences_mean=sum(sentences) / len(sentences),
        sentences_max=float(max(sentences)),
        mf=mf,
    )
