import pytest
from hypothesis import HealthCheck, settings

from aggtree import new_tree

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

VARIANTS = ("fastupdate", "fastquery")


@pytest.fixture(params=VARIANTS)
def variant(request):
    return request.param


@pytest.fixture
def make(variant):
    def build(spec="count", threads=1, **kw):
        return new_tree(spec, threads, variant, **kw)
    return build


# criterion number -> one-line verdict, filled in by test_acceptance
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
