from dataclasses import replace

import pytest

from imputelab import config


@pytest.fixture
def small_cfg():
    """A cheap end-to-end configuration for pipeline tests."""
    base = config.ExperimentConfig()
    return replace(
        base,
        rows=210,
        restarts=1,
        mlp=replace(base.mlp, epochs=60),
        ga=replace(base.ga, population_size=10, generations=8),
    )


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
