import numpy as np
import pytest

from qclearn import states, superop


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def exact_dataset(n, d, m, n_r, rng, channel=None):
    """Dataset mapped through ``channel`` (a random partial unitary by default)."""
    if channel is None:
        channel = states.random_partial_unitary(d, n, rng)
    rho = np.array([states.random_density(n, n_r, rng) for _ in range(m)])
    return states.MappingDataset.from_channel(channel, rho), states.as_stack(channel)


def random_superop(d, n, rng, m=20, n_r=2):
    ds, _ = exact_dataset(n, d, m, n_r, rng, states.random_kraus_channel(d, n, max(2, n - d + 1), rng))
    return superop.build(ds, "plain")


# acceptance criterion lines, repeated in the terminal summary
ACCEPTANCE = []


def record(number, ok, detail=""):
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
