import pytest

_ACCEPTANCE = {}


class Recorder:
    def __init__(self, number, name):
        self.number, self.name = number, name

    def __call__(self, passed, detail=""):
        _ACCEPTANCE[self.number] = (self.name, bool(passed), detail)
        line = f"criterion {self.number:2d} [{'PASS' if passed else 'FAIL'}] {self.name}: {detail}"
        print(line)
        return passed


@pytest.fixture
def criterion(request):
    marker = request.node.get_closest_marker("criterion")
    return Recorder(*marker.args)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, name): acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_ACCEPTANCE):
        name, passed, detail = _ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num:2d} [{'PASS' if passed else 'FAIL'}] {name}: {detail}")
