import numpy as np
import pytest

from mcsp.synth import SynthSpec, generate


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_synth():
    ts, gt = generate(SynthSpec(n_channels=8, n_classes=4, trials_per_class=20, samples_per_trial=300, seed=7))
    return ts, gt


def random_spd(rng, n, cond_floor=0.05):
    a = rng.standard_normal((n, n))
    c = a @ a.T / n + cond_floor * np.eye(n)
    return c / np.trace(c)


ACCEPTANCE_LINES = []


def acceptance(number, ok, detail):
    """Record and print one acceptance verdict line."""
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
