import numpy as np
import pytest

from warm.model import (
    WarmModel,
    build_bernoulli,
    build_complete,
    build_cycle,
    build_fixed_m,
    build_path,
    build_star,
    build_whisker,
    graph_to_warm,
)


def corpus(alpha=2.5):
    """Small models covering every builder."""
    return [
        graph_to_warm(build_cycle(3), alpha),
        graph_to_warm(build_star(3), alpha),
        graph_to_warm(build_cycle(5), alpha),
        graph_to_warm(build_path(3), alpha),
        graph_to_warm(build_whisker(2, 1), alpha),
        graph_to_warm(build_complete(4), alpha),
        WarmModel(build_fixed_m(4, 2), alpha, "fixed_m(4,2)"),
        WarmModel(build_bernoulli(3, 0.4), alpha, "bernoulli(3,0.4)"),
    ]


def interior_points(rng, n, count):
    return rng.dirichlet(np.ones(n), size=count) * (1 - 1e-3 * n) + 1e-3


@pytest.fixture
def rng():
    return np.random.default_rng(20241014)


# one PASS/FAIL line per acceptance criterion in the terminal summary
_criteria: dict = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.rsplit("::", 1)[-1].split("[")[0]
    if not name.startswith("test_criterion_"):
        return
    if report.when == "call" or report.failed:
        num = int(name.split("_")[2])
        label = " ".join(name.split("_")[3:])
        prev = _criteria.get(num, (label, "PASS"))[1]
        _criteria[num] = (label, "FAIL" if report.failed or prev == "FAIL" else "PASS")


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_criteria):
        label, status = _criteria[num]
        terminalreporter.write_line(f"criterion {num:2d} {status}  {label}")
