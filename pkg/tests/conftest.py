import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from edgesched.model import gems_profiles, table1_profiles  # noqa: E402


@pytest.fixture
def table1():
    return table1_profiles()


@pytest.fixture
def wl1():
    return gems_profiles("WL1", 0.9, 20_000)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
