from __future__ import annotations

import pytest

from sentmap.evaluation import data_path, reference_environment
from sentmap.skills import default_skill_api


@pytest.fixture
def ref_map():
    return reference_environment()


@pytest.fixture
def api():
    return default_skill_api()


@pytest.fixture
def data_dir():
    return data_path("")


def pytest_terminal_summary(terminalreporter):
    from support import ACCEPTANCE

    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, line = ACCEPTANCE[number]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} [{number}] {line}")
