import numpy as np
import pytest

from wordmover.embeddings import EmbeddingTable

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by this test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[report.outcome]
        prev = _CRITERIA.get(number, (title, "PASS"))[1]
        # any failure in a criterion's tests fails the criterion
        if prev == "FAIL" or status == "FAIL":
            status = "FAIL"
        elif prev == "SKIP" and status == "PASS":
            status = "SKIP"
        _CRITERIA[number] = (title, status)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, status = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number}: {status}  {title}")


def random_table(rng, n_words=30, dim=6, scale=1.0, prefix="w"):
    tokens = [f"{prefix}{i}" for i in range(n_words)]
    return EmbeddingTable.from_arrays(tokens, scale * rng.standard_normal((n_words, dim)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_table(rng):
    return random_table(rng)
