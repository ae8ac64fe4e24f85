"""Backlog import, text cleanup, and user story template parsing.

Stories arrive as CSV exports from issue trackers. Each row becomes one
:class:`UserStory` whose body is cleaned and decomposed into the classic
story-card slots: title, persona, what, why, acceptance criteria, and
attachments. Parsing is rule-first (template regexes for German and English
story phrasing) with an optional trained classifier as fallback for
left-over sentences.
"""

from __future__ import annotations

import csv
import io
import json
import re
import unicodedata
from dataclasses import dataclass, field

from .errors import EmptyBacklog, MalformedCsv, MissingColumn


@dataclass(frozen=True)
class ImportMapping:
    """Column names and section markers used when reading a CSV export.

    ``ac_markers`` and ``attachment_markers`` are the localized labels that
    introduce the acceptance criteria and attachment sections inside a story
    body. ``id_column`` and ``body_column`` must differ.
    """

    id_column: str = "id"
    title_column: str = "title"
    body_column: str = "description"
    ac_markers: tuple[str, ...] = (
        "Akzeptanzkriterien",
        "Acceptance Criteria",
        "AC",
        "AK",
    )
    attachment_markers: tuple[str, ...] = (
        "Anhänge",
        "Anhang",
        "Attachments",
        "Attachment",
    )

    def __post_init__(self):
        if self.id_column == self.body_column:
            raise ValueError("id and body columns must be distinct")


#: Column names as produced by a Jira CSV export.
JIRA_MAPPING = ImportMapping(
    id_column="Issue key", title_column="Summary", body_column="Description"
)


@dataclass
class UserStory:
    id: str
    title: str = ""
    persona: str = ""
    what: str = ""
    why: str = ""
    acceptance_criteria: list[str] = field(default_factory=list)
    attachments: list[str] = field(default_factory=list)
    raw_text: str = ""
    language: str = "de"

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "title": self.title,
            "persona": self.persona,
            "what": self.what,
            "why": self.why,
            "acceptance_criteria": list(self.acceptance_criteria),
            "attachments": list(self.attachments),
            "raw_text": self.raw_text,
            "language": self.language,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "UserStory":
        return cls(
            id=str(data["id"]),
            title=data.get("title", ""),
            persona=data.get("persona", ""),
            what=data.get("what", ""),
            why=data.get("why", ""),
            acceptance_criteria=list(data.get("acceptance_criteria", [])),
            attachments=list(data.get("attachments", [])),
            raw_text=data.get("raw_text", ""),
            language=data.get("language", "de"),
        )


@dataclass
class Backlog:
    project_id: str
    stories: list[UserStory] = field(default_factory=list)
    skipped_count: int = 0

    def __post_init__(self):
        ids = [s.id for s in self.stories]
        if len(ids) != len(set(ids)):
            raise ValueError("duplicate story ids in backlog")

    def to_dict(self) -> dict:
        return {
            "project_id": self.project_id,
            "skipped_count": self.skipped_count,
            "stories": [s.to_dict() for s in self.stories],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Backlog":
        return cls(
            project_id=data["project_id"],
            stories=[UserStory.from_dict(s) for s in data.get("stories", [])],
            skipped_count=int(data.get("skipped_count", 0)),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "Backlog":
        return cls.from_dict(json.loads(text))


# --- text cleanup -----------------------------------------------------------

_HTML_TAG_RE = re.compile(r"</?[A-Za-z][^<>]*>")
# Single-brace tracker markup such as {code}, {color:#ff0000}, {quote}.
_MARKUP_TAG_RE = re.compile(r"\{[A-Za-z][A-Za-z0-9:#=._ -]*\}")


def _clean_once(text: str) -> str:
    text = "".join(
        " " if unicodedata.category(ch) in ("Cc", "Cf") else ch for ch in text
    )
    text = _HTML_TAG_RE.sub(" ", text)
    text = text.replace("{{", " ").replace("}}", " ")
    text = _MARKUP_TAG_RE.sub(" ", text)
    text = text.replace("{", " ").replace("}", " ")
    return re.sub(r"\s+", " ", text).strip()


def clean_text(raw: str) -> str:
    """Normalize raw story text: strip control characters, HTML tags, and
    wiki-style brace markup, then collapse whitespace.

    Total and idempotent; letters (umlauts and ß included), digits, and
    sentence punctuation survive untouched.
    """
    current = raw
    for _ in range(8):
        cleaned = _clean_once(current)
        if cleaned == current:
            break
        current = cleaned
    return current


# --- template parsing -------------------------------------------------------

@dataclass
class PatternFields:
    title: str = ""
    persona: str = ""
    what: str = ""
    why: str = ""
    acceptance_criteria: list[str] = field(default_factory=list)
    attachments: list[str] = field(default_factory=list)


_EN_CLAUSE_RE = re.compile(
    r"\bAs\s+(?P<persona>[^.!?]+?),?\s+I\s+"
    r"(?:would\s+like|want|will|need|wish|must|can)\b[,:]?\s*"
    r"(?P<rest>[^.!?]*)",
    re.IGNORECASE,
)

_DE_CLAUSE_RE = re.compile(
    r"\bAls\s+(?P<persona>[^.!?]+?),?\s+"
    r"(?:möchte|will|kann|muss|brauche|benötige|soll|wünsche)\s+ich\b[,:]?\s*"
    r"(?P<rest>[^.!?]*)",
    re.IGNORECASE,
)

# Separators that start the rationale part inside a story clause. Plain
# " to " is ambiguous with infinitives, so only the comma variant counts.
_WHY_SEPARATORS = (
    ", so that ",
    " so that ",
    ", so dass ",
    ", sodass ",
    ", damit ",
    " damit ",
    ", um ",
    " in order to ",
    ", to ",
)

_AC_SPLIT_RE = re.compile(r"\s*(?:;|•|\*|(?<=\s)-(?=\s))\s*")


def _find_marker(text: str, markers: tuple[str, ...]) -> tuple[int, int] | None:
    """Earliest occurrence of any marker (with optional trailing colon)."""
    best: tuple[int, int] | None = None
    low = text.lower()
    for marker in markers:
        pattern = re.compile(
            r"(?<!\w)" + re.escape(marker.lower()) + r"(?!\w)\s*:?\s*"
        )
        match = pattern.search(low)
        if match and (best is None or match.start() < best[0]):
            best = (match.start(), match.end())
    return best


def _split_why(rest: str) -> tuple[str, str]:
    low = rest.lower()
    for sep in _WHY_SEPARATORS:
        idx = low.find(sep)
        if idx >= 0:
            return rest[:idx], rest[idx + len(sep):]
    return rest, ""


def _strip_edges(text: str) -> str:
    return text.strip().strip(",;:-—–").strip()


def parse_patterns(
    body: str,
    mapping: ImportMapping | None = None,
    classifier=None,
) -> PatternFields:
    """Decompose a cleaned story body into the story-card slots.

    Deterministic template parse first: the "As/Als {persona}" clause, the
    want/will verb introducing {what}, the "so that/damit" rationale, and the
    configured acceptance criteria and attachment markers. When a classifier
    is supplied, sentences the template could not place are assigned to the
    slot it predicts. Every extracted field is a verbatim substring of
    ``body``; an unparseable body keeps everything in ``title``.
    """
    mapping = mapping or ImportMapping()
    fields = PatternFields()
    if not body.strip():
        return fields

    work = body
    section_start = len(work)

    att_span = _find_marker(work, mapping.attachment_markers)
    if att_span:
        att_text = _strip_edges(work[att_span[1]:])
        if att_text:
            fields.attachments = [att_text]
        work = work[: att_span[0]]
        section_start = att_span[0]

    ac_span = _find_marker(work, mapping.ac_markers)
    if ac_span:
        ac_text = work[ac_span[1]:]
        entries = [_strip_edges(e) for e in _AC_SPLIT_RE.split(ac_text)]
        fields.acceptance_criteria = [e for e in entries if e]
        work = work[: ac_span[0]]
        section_start = min(section_start, ac_span[0])

    clause = _EN_CLAUSE_RE.search(work) or _DE_CLAUSE_RE.search(work)
    if clause:
        fields.persona = _strip_edges(clause.group("persona"))
        what_part, why_part = _split_why(clause.group("rest"))
        fields.what = _strip_edges(what_part)
        fields.why = _strip_edges(why_part)
        fields.title = _strip_edges(work[: clause.start()])
        leftover = work[clause.end():]
    else:
        fields.title = _strip_edges(work)
        leftover = ""

    if classifier is not None and leftover.strip():
        from .textproc import split_sentences

        for sentence in split_sentences(leftover):
            label, _ = classifier.predict(sentence)
            segment = _strip_edges(sentence)
            if not segment:
                continue
            if label == "persona" and not fields.persona:
                fields.persona = segment
            elif label == "what" and not fields.what:
                fields.what = segment
            elif label == "why" and not fields.why:
                fields.why = segment
            elif label == "acs":
                fields.acceptance_criteria.append(segment)
            elif label == "attachments":
                fields.attachments.append(segment)
    return fields


# --- CSV import / export ----------------------------------------------------

def import_csv(data: bytes, mapping: ImportMapping | None = None,
               project_id: str = "default", classifier=None) -> Backlog:
    """Read a CSV export into a :class:`Backlog`.

    The header must contain the mapped id and body columns (the title column
    is used when present). Rows with an empty body are skipped and counted,
    as are rows with a missing or duplicate id; a structurally broken file
    raises :class:`MalformedCsv` with the offending line.
    """
    mapping = mapping or ImportMapping()
    text = data.decode("utf-8-sig")
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        raise MalformedCsv(1, "no header row")
    for column in (mapping.id_column, mapping.body_column):
        if column not in reader.fieldnames:
            raise MissingColumn(column)
    has_title = mapping.title_column in reader.fieldnames

    stories: list[UserStory] = []
    seen: set[str] = set()
    skipped = 0
    while True:
        try:
            row = next(reader)
        except StopIteration:
            break
        except csv.Error as exc:
            raise MalformedCsv(reader.line_num, str(exc)) from exc
        story_id = (row.get(mapping.id_column) or "").strip()
        body = clean_text(row.get(mapping.body_column) or "")
        if not body:
            skipped += 1
            continue
        if not story_id or story_id in seen:
            skipped += 1
            continue
        seen.add(story_id)
        parsed = parse_patterns(body, mapping, classifier)
        title = clean_text(row.get(mapping.title_column) or "") if has_title else ""
        stories.append(
            UserStory(
                id=story_id,
                title=title or parsed.title,
                persona=parsed.persona,
                what=parsed.what,
                why=parsed.why,
                acceptance_criteria=parsed.acceptance_criteria,
                attachments=parsed.attachments,
                raw_text=body,
            )
        )
    if not stories:
        raise EmptyBacklog("no stories survived the import")
    return Backlog(project_id=project_id, stories=stories, skipped_count=skipped)


def export_csv(backlog: Backlog, mapping: ImportMapping | None = None) -> bytes:
    """Serialize a backlog back to CSV with the mapped column names."""
    mapping = mapping or ImportMapping()
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow([mapping.id_column, mapping.title_column, mapping.body_column])
    for story in backlog.stories:
        writer.writerow([story.id, story.title, story.raw_text])
    return buffer.getvalue().encode("utf-8")


def story_from_text(text: str, story_id: str = "adhoc",
                    mapping: ImportMapping | None = None,
                    classifier=None) -> UserStory:
    """Clean and parse free text (e.g. an editor buffer) into a story."""
    body = clean_text(text)
    parsed = parse_patterns(body, mapping, classifier)
    return UserStory(
        id=story_id,
        title=parsed.title,
        persona=parsed.persona,
        what=parsed.what,
        why=parsed.why,
        acceptance_criteria=parsed.acceptance_criteria,
        attachments=parsed.attachments,
        raw_text=body,
    )
