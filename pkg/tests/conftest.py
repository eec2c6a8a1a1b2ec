"""Shared fixtures and the acceptance summary printed at the end of a run."""

import os

import numpy as np
import pytest

from openwg import matched as mt
from openwg import transmission as tr

# filled by tests/test_acceptance.py: criterion number -> (passed, detail)
ACCEPTANCE = {}


def record(number: int, passed: bool, detail: str) -> None:
    """Store and print one acceptance line."""
    ACCEPTANCE[number] = (bool(passed), detail)
    print(f"criterion {number}: {'PASS' if passed else 'FAIL'} ({detail})")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} ({detail})")


@pytest.fixture(scope="session")
def cache_dir(tmp_path_factory):
    """Compression cache shared by the whole session (``OPENWG_CACHE_DIR`` wins)."""
    return os.environ.get("OPENWG_CACHE_DIR") or str(tmp_path_factory.mktemp("owgc"))


@pytest.fixture(scope="session")
def guide():
    """Single guide k=1, k1=2, d=2 on 72 panels, L=10, matrix kept."""
    prob = tr.waveguide_problem(1.0, 2.0, 2.0, L=10.0, n_panels=72)
    return prob, tr.assemble_transmission(prob, keep_matrix=True)


@pytest.fixture(scope="session")
def guide_fine():
    """The same guide on 144 panels."""
    prob = tr.waveguide_problem(1.0, 2.0, 2.0, L=10.0, n_panels=144)
    return prob, tr.assemble_transmission(prob)


@pytest.fixture(scope="session")
def junction(cache_dir):
    """Matched configuration: k=1, left (k1=2, d=2), right (k1=3, d=4), 96 panels."""
    prob = mt.matched_problem(1.0, (2.0, 2.0), (3.0, 4.0), L=10.0, n_panels=96, cache_dir=cache_dir)
    return prob, mt.assemble_matched(prob)


@pytest.fixture(scope="session")
def identical():
    """Two copies of the (2, 2) guide joined at x1 = 0 (no junction at all), direct evaluators."""
    prob = mt.matched_problem(1.0, (2.0, 2.0), (2.0, 2.0), n_panels=48, compressed=False)
    return prob, mt.assemble_matched(prob)


@pytest.fixture(scope="session")
def mode_solution(junction):
    """Fundamental left mode incident on the matched configuration."""
    from openwg import analysis as an

    prob, system = junction
    ml = prob.left.modes()
    return ml, an.solve_mode_incidence(prob, system, "left", 0, ml)


def grid(lo, hi, n):
    """Points of an ``n x n`` tensor grid on ``[lo, hi]^2`` as a (2, n*n) array."""
    t = np.linspace(lo, hi, n)
    a, b = np.meshgrid(t, t)
    return np.stack([a.ravel(), b.ravel()])
