"""Shared fixtures plus a summary block for the acceptance checklist.

Tests named ``test_c<NN>_*`` inside ``test_acceptance.py`` each stand for one
numbered item of the release checklist; the terminal summary prints exactly
one PASS/FAIL/SKIP line per item so the checklist can be read off a single
pytest run.
"""

from __future__ import annotations

import re

import numpy as np
import pytest

from docvec.corpus import Corpus, Document

_CRITERION_RE = re.compile(r"test_acceptance\.py::test_c(\d+)_(\w+)")
_criterion_results: dict[int, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    m = _CRITERION_RE.search(report.nodeid)
    if not m:
        return
    num, name = int(m.group(1)), m.group(2)
    if report.when == "call":
        outcome = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
        _criterion_results[num] = (outcome, name)
    elif report.when == "setup" and (report.skipped or report.failed):
        _criterion_results[num] = ("SKIP" if report.skipped else "FAIL", name)


def pytest_terminal_summary(terminalreporter):
    if not _criterion_results:
        return
    terminalreporter.write_sep("=", "acceptance checklist")
    for num in sorted(_criterion_results):
        outcome, name = _criterion_results[num]
        terminalreporter.write_line(f"criterion {num:2d} [{outcome}] {name}")


def make_corpus(texts_labels):
    """[(label_or_None, [tokens...]), ...] -> Corpus with dense ids."""
    return Corpus([
        Document(id=i, label=lab, tokens=tuple(toks))
        for i, (lab, toks) in enumerate(texts_labels)
    ])


@pytest.fixture
def tiny_corpus():
    return make_corpus([
        ("pos", ["a", "a", "b"]),
        ("neg", ["b", "c"]),
    ])


@pytest.fixture
def rng():
    return np.random.default_rng(0)
