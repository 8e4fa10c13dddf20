from __future__ import annotations

import sys
from fractions import Fraction
from pathlib import Path

import pytest

from systolekit.homotopy import circle_homomorphism
from systolekit.metric import build_geodesic_graph
from systolekit.mesh import regular_circle

DATA = Path(__file__).parent / "data"


@pytest.fixture
def data_dir() -> Path:
    return DATA


def circle_model(perimeter, m: int = 3, level: int = 4):
    """Circle of the given perimeter with identity phi onto Z and its graph."""
    V, g = regular_circle(Fraction(perimeter), m)
    G = build_geodesic_graph(V, g, level)
    return V, g, G, circle_homomorphism(V)


@pytest.fixture(scope="session")
def circle2():
    # 3 arcs of 2/3 at level 4: 12 nodes spaced 1/6 apart
    return circle_model(2, 3, 4)


@pytest.fixture(scope="session")
def circle1():
    # 4 arcs of 1/4 at level 3: 12 nodes spaced 1/12 apart
    return circle_model(1, 4, 3)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, 13):
        terminalreporter.write_line(results.get(n, f"criterion {n:2d}: not run"))
