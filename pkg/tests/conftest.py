import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def figure_runs():
    """Figure presets run once per session and cached by name."""
    from phasespace.experiments import figure_config, run_experiment

    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = run_experiment(figure_config(name))
        return cache[name]

    return get


ACCEPTANCE_RESULTS = []


@pytest.fixture
def criterion():
    """Record one acceptance criterion outcome; returns the pass flag for asserting."""

    def record(number, title, passed, detail):
        line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
        ACCEPTANCE_RESULTS.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_RESULTS, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
