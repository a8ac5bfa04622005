from __future__ import annotations

from pathlib import Path

import pytest

from crispcheck.driver import Options, Session
from crispcheck.formalization import run_manifest

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "formalization"
MANIFEST = CORPUS / "manifest.tsv"

# One line per acceptance criterion, filled in by test_acceptance.py.
ACCEPTANCE: list[str] = []


@pytest.fixture(scope="session")
def manifest_report():
    return run_manifest(MANIFEST)


@pytest.fixture(scope="session")
def corpus_session():
    """Every accepted corpus file, loaded once."""
    session = Session(Options())
    for name in ("functorial", "nogo", "cchm-axioms", "crisp-app"):
        session.load(CORPUS / f"{name}.ctt")
    return session


@pytest.fixture(scope="session")
def crisp_pairs():
    """Corpus-derived instances of crisp substitution, with their signature."""
    from .admissibility import collect_premises, pairs
    files = [CORPUS / f"{n}.ctt" for n in ("functorial", "nogo", "cchm-axioms", "crisp-app", "tiny")]
    sig, premises = collect_premises(files)
    return sig, pairs(sig, premises, per_function=12)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
