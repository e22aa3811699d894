import pytest

from smallholes.quadrature import QuadratureConfig

ACCEPTANCE_LINES = []


@pytest.fixture
def fast_cfg():
    """Coarse cubature that keeps three-dimensional MFS norms under a few seconds."""
    return QuadratureConfig(n_polar=12, n_azimuth=24, nodes_per_panel=10)


@pytest.fixture
def record():
    def _record(number, passed, detail):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed
    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
