import sys
import functools

import pytest

from hypercon import groundstate as G
from hypercon import instances as I
from hypercon.verify import verify_instance


@functools.lru_cache(maxsize=None)
def cached_instance(name: str, n: int = I.DEFAULT_N):
    return I.build(name, n=n)


@functools.lru_cache(maxsize=None)
def cached_gsm(name: str, n: int = I.DEFAULT_N):
    inst = cached_instance(name, n)
    return G.transform(inst.measure, inst.V)


@functools.lru_cache(maxsize=None)
def cached_verify(name: str):
    return verify_instance(name)


@pytest.fixture(params=I.BATTERY)
def battery_name(request):
    return request.param


@pytest.fixture(scope="session")
def gaussian_gsm():
    return cached_gsm("gaussian_quadratic")


@pytest.fixture(scope="session")
def gaussian_instance():
    return cached_instance("gaussian_quadratic")


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "LINES", None)
    if lines:
        terminalreporter.section("acceptance")
        for line in lines:
            terminalreporter.write_line(line)
