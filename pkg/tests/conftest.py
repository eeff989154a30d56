import re
import time
import zlib

import numpy as np
import pytest

from rtlab import floatlab

_acceptance = []


@pytest.fixture(scope="session")
def universe():
    return floatlab.enumerate_f16()


@pytest.fixture(scope="session")
def fig2():
    """Full-scale heat map, computed once per session; returns (axis, D, seconds)."""
    t0 = time.perf_counter()
    axis, D = floatlab.figure2_grid(100, floatlab.default_r_max())
    return axis, D, time.perf_counter() - t0


@pytest.fixture
def rng(request):
    return np.random.default_rng(zlib.crc32(request.node.name.encode()))


def pytest_runtest_logreport(report):
    if "test_acceptance.py" in report.nodeid and report.when == "call":
        _acceptance.append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    # tests are named test_criterion_NN[x]_...; sub-checks of one criterion are grouped
    groups = {}
    for name, outcome in _acceptance:
        num = int(re.match(r"test_criterion_(\d+)", name).group(1))
        groups.setdefault(num, []).append((name, outcome))
    terminalreporter.section("acceptance criteria")
    for num in sorted(groups):
        failed = [n for n, o in groups[num] if o != "passed"]
        label = "PASS" if not failed else "FAIL"
        detail = f" ({', '.join(failed)})" if failed else ""
        terminalreporter.write_line(f"{label}  criterion {num:2d}{detail}")
