"""Shared fixtures and the acceptance summary printed at the end of the run."""

from __future__ import annotations

import pytest

from hkbesov.config import GridConfig, RunConfig
from hkbesov.verify import build_context

ACCEPTANCE: dict = {}


def record(number: int, title: str, passed: bool, detail: str = "") -> None:
    """Store one acceptance outcome; the terminal summary prints one line per criterion."""
    ACCEPTANCE[number] = (title, bool(passed), detail)


@pytest.fixture
def acceptance():
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[k]
        line = f"[{'PASS' if ok else 'FAIL'}] {k:2d}. {title}"
        if detail:
            line += f" :: {detail}"
        terminalreporter.write_line(line)


def context(space: str, mode: str = "span", points: int = 30, **kw):
    cfg = RunConfig(space=space, grid=GridConfig(mode=mode, points=points), **kw)
    return build_context(cfg)


@pytest.fixture(scope="session")
def cycle64():
    return context("cycle:64")


@pytest.fixture(scope="session")
def gasket3():
    return context("gasket:3")


@pytest.fixture(scope="session")
def gasket4():
    return context("gasket:4")
