import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from cmchierarchy import killing as K  # noqa: E402

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def tower():
    return {n: K.build(n) for n in range(7)}


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
