"""Shared ground-state fixtures.

Two tiers: ``module grids`` are cheap and accurate to ~1e-5 in the
Pohozaev ratios; ``reference grids`` (bozk.ground_state.REFERENCE_GRIDS)
are what the acceptance criteria run on.
"""
import functools
import math

import pytest

from bozk.ground_state import petviashvili_solve, reference_grid
from bozk.spectral import make_grid, parse_p

MODULE_GRIDS = {
    "1/1": (512, 128, 20 * math.pi, 5 * math.pi),
    "4/3": (2048, 128, 10 * math.pi, 5 * math.pi),
    "2/1": (2048, 256, 10 * math.pi, 5 * math.pi),
    "4/5": (1024, 128, 20 * math.pi, 5 * math.pi),
}


@functools.lru_cache(maxsize=None)
def module_gs(p: str, dealias: bool = False):
    return petviashvili_solve(parse_p(p), make_grid(*MODULE_GRIDS[p]), tol=1e-10,
                              dealias=dealias)


@functools.lru_cache(maxsize=None)
def reference_gs(p: str):
    p = parse_p(p)
    return petviashvili_solve(p, reference_grid(p), tol=1e-10, max_iter=3000)


@pytest.fixture(scope="session")
def gs1():
    return module_gs("1/1")


@pytest.fixture(scope="session")
def gs43():
    return module_gs("4/3")


@pytest.fixture(scope="session")
def gs2():
    return module_gs("2/1")


@pytest.fixture(scope="session")
def gs45():
    return module_gs("4/5")


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(RESULTS):
            terminalreporter.write_line(line)
