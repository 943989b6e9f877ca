import numpy as np
import pytest

from featcast.denoiser import cached_model
from featcast.sampler import SamplerConfig, plain_sample


@pytest.fixture(scope="session")
def model():
    return cached_model(42)


@pytest.fixture(scope="session")
def config():
    return SamplerConfig()


@pytest.fixture(scope="session")
def reference(model, config):
    return plain_sample(config, model)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# -- acceptance summary: one line per criterion at the end of the run ---------

_CRITERIA: dict[int, list] = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.rsplit("::", 1)[-1]
    if "test_acceptance.py" not in report.nodeid or not name.startswith("test_criterion_"):
        return
    if report.when in ("setup", "call"):
        num = int(name.split("_")[2])
        _CRITERIA.setdefault(num, []).append((report.outcome, report.duration))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        results = _CRITERIA[num]
        ok = all(outcome == "passed" for outcome, _ in results)
        secs = sum(d for _, d in results)
        terminalreporter.write_line(f"criterion {num}: {'PASS' if ok else 'FAIL'} ({secs:.2f} s)")
