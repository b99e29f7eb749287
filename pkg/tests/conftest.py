"""Suite-wide pytest configuration.

Placing this file next to the tests puts the directory on sys.path, so
test modules can import the shared ``helpers`` fixtures directly.
"""

import pytest

# Verdict lines recorded by the acceptance suite; echoed after the run so
# they stay visible even with captured stdout.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def static_file(tmp_path):
    """A five-item static benchmark file on disk."""
    from dynbench import write_static

    from helpers import make_items

    path = tmp_path / "static.jsonl"
    write_static(path, make_items(5))
    return path
