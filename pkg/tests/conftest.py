import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", deadline=None, max_examples=500)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")
    config._criteria = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call" and not rep.failed:
        return
    key = mark.args[0]
    prev = item.config._criteria.get(key)
    ok = rep.passed and (prev is None or prev[1])
    item.config._criteria[key] = (mark.args[1], ok)


def pytest_terminal_summary(terminalreporter, config):
    crit = config._criteria
    if not crit:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(crit, key=lambda k: (isinstance(k, str), k)):
        title, ok = crit[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {key:>5}  {title}")
