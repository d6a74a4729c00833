import pytest

from hybridbec.grid import build_grid, initial_gaussian
from hybridbec.ground import RelaxationSettings, relax
from hybridbec.units import DimensionlessParams


@pytest.fixture(scope="session")
def small_grid():
    return build_grid(256, 8.0)


@pytest.fixture(scope="session")
def coupled():
    """A subcritical coupled system: repulsive contacts, a few percent molecules."""
    return DimensionlessParams(g_a=20.0, g_m=20.0, g_am=20.0, chi_t=50.0, eps_t=50.0)


@pytest.fixture(scope="session")
def coupled_ground(coupled, small_grid):
    return relax(coupled, small_grid, initial_gaussian(small_grid, 1.0, 1.0, 0.1),
                 RelaxationSettings(dtau_imag=1e-3, mu_tol=1e-8))


ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line for an acceptance criterion; printed in the terminal summary."""
    lines = request.config.stash.setdefault(ACCEPTANCE, {})

    def report(number: int, ok: bool, detail: str) -> bool:
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines[number] = line
        print(line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for k in sorted(lines):
            terminalreporter.write_line(lines[k])
