"""Deterministic tokenization, sentence splitting, and syllable counting.

Every metric consumes text through this module, so the rules here are fixed
and reproducible: no external NLP toolkit, no model downloads. The target
language is German, with English-friendly fallbacks.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

# Word tokens: decimal numbers stay in one piece ("2.5"), words may contain
# internal hyphens or apostrophes ("E-Rezept", "geht's").
_WORD_RE = re.compile(r"\d+(?:[.,]\d+)*|[^\W\d_]+(?:[-'’][^\W\d_]+)*")

_TERMINAL_RE = re.compile(r"[.!?:]+")

_VOWELS = frozenset("aeiouäöüy")
# Vowel pairs pronounced as one syllable: diphthongs plus the long doubled
# vowels of native German words (Saal, See, Boot).
_ONE_SYLLABLE_PAIRS = frozenset(
    ["au", "eu", "äu", "ei", "ai", "ie", "aa", "ee", "oo"]
)


@dataclass(frozen=True)
class TokenizedText:
    """Tokens plus sentence ranges and the set of lowercased word types.

    ``sentences`` holds half-open ``(start, end)`` token-index ranges; ranges
    are disjoint, non-empty, and cover every token. ``unique_words`` contains
    only letter-bearing tokens, lowercased; pure numbers are tokens but never
    word types.
    """

    tokens: tuple[str, ...]
    sentences: tuple[tuple[int, int], ...]
    unique_words: frozenset[str]


def _load_abbreviations() -> tuple[str, ...]:
    text = (
        resources.files("storygauge.data")
        .joinpath("abbreviations_de.txt")
        .read_text(encoding="utf-8")
    )
    entries = [
        line.strip().lower()
        for line in text.splitlines()
        if line.strip() and not line.startswith("#")
    ]
    return tuple(entries)


_DEFAULT_ABBREVIATIONS = _load_abbreviations()


def _ends_with_abbreviation(prefix: str, abbreviations: tuple[str, ...]) -> bool:
    low = prefix.lower()
    for abbr in abbreviations:
        if low.endswith(abbr):
            start = len(low) - len(abbr)
            if start == 0 or not low[start - 1].isalnum():
                return True
    return False


def split_sentences(text: str, abbreviations: tuple[str, ...] | None = None) -> list[str]:
    """Split cleaned text into sentences.

    A sentence ends at a run of ``. ! ? :`` followed by whitespace and an
    uppercase letter, or at the end of the text. Splits are suppressed when
    the text up to the punctuation ends in a known abbreviation (z.B., Dr.,
    Nr., ...). Text without terminal punctuation is one sentence.
    """
    if abbreviations is None:
        abbreviations = _DEFAULT_ABBREVIATIONS
    stripped = text.strip()
    if not stripped:
        return []
    cuts = []
    for match in _TERMINAL_RE.finditer(stripped):
        end = match.end()
        follow = re.match(r"\s+(\S)", stripped[end:])
        if follow is None or not follow.group(1).isupper():
            continue
        if _ends_with_abbreviation(stripped[:end], abbreviations):
            continue
        cuts.append(end)
    pieces = []
    previous = 0
    for cut in cuts:
        piece = stripped[previous:cut].strip()
        if piece:
            pieces.append(piece)
        previous = cut
    tail = stripped[previous:].strip()
    if tail:
        pieces.append(tail)
    return pieces


@lru_cache(maxsize=4096)
def count_syllables(word: str) -> int:
    """Count syllables of a single word by scanning vowel units.

    Scanning left to right, a German diphthong or doubled long vowel
    (au, eu, äu, ei, ai, ie, aa, ee, oo) counts once; any other vowel
    (a, e, i, o, u, ä, ö, ü, y) counts once on its own. A ``u`` after ``q``
    and a ``y`` directly before another vowel are glides, not syllable
    carriers (Qualität -> 3, Yoga -> 2). Words without vowels count as one
    syllable by convention.
    """
    low = word.lower()
    count = 0
    i = 0
    n = len(low)
    while i < n:
        ch = low[i]
        if ch not in _VOWELS:
            i += 1
            continue
        if ch == "u" and i > 0 and low[i - 1] == "q":
            i += 1
            continue
        if ch == "y" and i + 1 < n and low[i + 1] in _VOWELS:
            i += 1
            continue
        if low[i : i + 2] in _ONE_SYLLABLE_PAIRS:
            count += 1
            i += 2
        else:
            count += 1
            i += 1
    return max(count, 1)


def _word_tokens(text: str) -> list[str]:
    return _WORD_RE.findall(text)


def _has_letter(token: str) -> bool:
    return any(ch.isalpha() for ch in token)


@lru_cache(maxsize=512)
def tokenize(text: str) -> TokenizedText:
    """Tokenize cleaned text into words, sentence ranges, and word types.

    Tokens split on word boundaries; pure punctuation is dropped; numbers
    stay as tokens but never enter ``unique_words``. Lowercasing keeps
    umlauts and ß intact. Deterministic: identical input, identical output.
    """
    tokens: list[str] = []
    ranges: list[tuple[int, int]] = []
    for sentence in split_sentences(text):
        start = len(tokens)
        tokens.extend(_word_tokens(sentence))
        if len(tokens) > start:
            ranges.append((start, len(tokens)))
    unique = frozenset(t.lower() for t in tokens if _has_letter(t))
    return TokenizedText(tuple(tokens), tuple(ranges), unique)


def word_count(text: str) -> int:
    return len(tokenize(text).tokens)


def sentence_count(text: str) -> int:
    return len(split_sentences(text))


def mean_syllables_per_word(text: str) -> float:
    """Average syllables per token; 0.0 for token-free text."""
    tokens = tokenize(text).tokens
    if not tokens:
        return 0.0
    return sum(count_syllables(t) for t in tokens) / len(tokens)


def mean_words_per_sentence(text: str) -> float:
    """Average tokens per sentence; 0.0 for token-free text."""
    parsed = tokenize(text)
    if not parsed.tokens or not parsed.sentences:
        return 0.0
    return len(parsed.tokens) / len(parsed.sentences)
