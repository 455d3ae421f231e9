"""Shared test configuration.

The acceptance tests register one verdict per criterion in
``CRITERION_RESULTS``; the terminal-summary hook prints them as a compact
pass/fail table at the end of the run so the verdicts are visible even when
pytest captures stdout.
"""

from hypothesis import settings

settings.register_profile("suite", max_examples=60, deadline=None,
                          derandomize=True)
settings.load_profile("suite")

# criterion number -> (label, passed)
CRITERION_RESULTS: dict[int, tuple[str, bool]] = {}


def record_criterion(num: int, label: str, passed: bool) -> None:
    CRITERION_RESULTS[num] = (label, passed)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not CRITERION_RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for num in sorted(CRITERION_RESULTS):
        label, passed = CRITERION_RESULTS[num]
        word = "PASS" if passed else "FAIL"
        tr.write_line(f"criterion {num}: {label:<58s} {word}")
