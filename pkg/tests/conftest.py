from __future__ import annotations

import pytest

from storygauge.corpus import Backlog, story_from_text
from storygauge.pipeline import ProjectConfig, train

DEMO_TEXTS = [
    "Suche. Als Arzt möchte ich ein Medikament suchen, damit ich schneller "
    "verordne. Akzeptanzkriterien: Liste wird angezeigt.",
    "Filter. Als Arzt möchte ich die Liste filtern, damit ich das passende "
    "Medikament finde.",
    "Export. Als Apotheker möchte ich Rezepte exportieren, damit die "
    "Abrechnung einfacher wird. Anhang: export.pdf",
    "Login. Als Benutzer möchte ich mich anmelden, damit meine Daten "
    "geschützt sind.",
    "Druck. Als Arzt möchte ich das Rezept drucken, damit der Patient es "
    "mitnehmen kann. Akzeptanzkriterien: Druckvorschau vorhanden.",
    "Company-Bundle Doctrine Upgrade to 2.5.",
    "Die Liste der Patienten wird langsam geladen und muss dringend "
    "optimiert werden.",
    "Als Apotheker möchte ich Bestände prüfen.",
    "Statistik. Als Manager möchte ich Berichte sehen, damit ich "
    "Entscheidungen treffen kann. Anhang: report.pdf",
    "Suche verbessern. Als Arzt möchte ich nach Handelsnamen suchen, damit "
    "ich Medikamente schneller finde. Akzeptanzkriterien: Treffer in unter "
    "einer Sekunde; Sortierung nach Relevanz.",
]


def make_backlog(texts=None, project_id="demo") -> Backlog:
    texts = texts if texts is not None else DEMO_TEXTS
    stories = [story_from_text(t, story_id=f"S{i}") for i, t in enumerate(texts)]
    return Backlog(project_id, stories)


@pytest.fixture(scope="session")
def demo_backlog() -> Backlog:
    return make_backlog()


@pytest.fixture(scope="session")
def demo_bundle(demo_backlog):
    return train(demo_backlog, ProjectConfig(seed=7, k=3))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion at the end of the run."""
    lines = []
    for outcome in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(outcome, []):
            if "test_acceptance" not in getattr(report, "nodeid", ""):
                continue
            if getattr(report, "when", "call") != "call" and outcome == "passed":
                continue
            name = report.nodeid.split("::")[-1]
            lines.append((name, outcome.upper()))
    if lines:
        terminalreporter.section("acceptance criteria")
        for name, outcome in sorted(set(lines)):
            terminalreporter.write_line(f"{outcome:<6} {name}")
