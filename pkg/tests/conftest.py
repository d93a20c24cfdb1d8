import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from acceptance_registry import LINES  # noqa: E402


def pytest_terminal_summary(terminalreporter):
    if not LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(LINES):
        terminalreporter.write_line(LINES[k])
