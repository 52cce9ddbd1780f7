import pytest

from hdgmm import _pykernels

from helpers import ACCEPTANCE_LINES

try:
    from hdgmm import _ckernels
except ImportError:  # extension not built
    _ckernels = None

KERNEL_BACKENDS = [pytest.param(_pykernels, id="python")]
if _ckernels is not None:
    KERNEL_BACKENDS.append(pytest.param(_ckernels, id="cython"))

@pytest.fixture(params=KERNEL_BACKENDS)
def backend(request):
    return request.param


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
