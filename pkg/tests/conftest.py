import os

from hypothesis import HealthCheck, settings, strategies as st

from abelia import fixtures as fx

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

dists = st.integers(0, 10**6).map(fx.random_distribution)

# one line per acceptance criterion, collected by test_acceptance and echoed
# in the terminal summary so the gate is readable under plain `pytest -v`
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
