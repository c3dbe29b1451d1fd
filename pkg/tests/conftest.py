import numpy as np
import pytest

from utdc.synth import synth_generate

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def shifted_pair():
    """Shifted synthetic pair: overconfidence 2.5, target accuracy drop 0.7."""
    return synth_generate(seed=0, n_s=5000, n_t=5000, k=10,
                          overconfidence_scale=2.5, target_accuracy_drop=0.7)


@pytest.fixture
def record_criterion():
    def record(label: str, ok: bool, detail: str = ""):
        ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {label}  {detail}".rstrip())
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
