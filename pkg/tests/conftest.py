import os

import pytest
from hypothesis import HealthCheck, settings

from negcheck import fixtures
from negcheck.generators import RandomParams, gen_random

settings.register_profile(
    "default", max_examples=60, deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.register_profile("ci", max_examples=300, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

FIXTURES = tuple(fixtures.FILES)


@pytest.fixture
def fx():
    return fixtures.load


def random_neg(seed: int, **kw):
    return gen_random(RandomParams(**kw), seed)


def pytest_terminal_summary(terminalreporter):
    import sys
    acceptance = sys.modules.get("test_acceptance")
    if acceptance is None or not acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in acceptance.summary_lines():
        terminalreporter.write_line(line)
