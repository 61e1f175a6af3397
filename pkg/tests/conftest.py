import pytest

from radar.language import load_source
from radar.simulation import backend as _backend

BACKENDS = ["python"] + (["cython"] if _backend.BACKEND == "cython" else [])


def model_of(source):
    return load_source(source)


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
