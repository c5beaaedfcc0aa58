import itertools

import numpy as np
import pytest
from hypothesis import strategies as st

from zeroerr.graphs import Graph

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@st.composite
def graphs(draw, min_n=1, max_n=6):
    n = draw(st.integers(min_n, max_n))
    pairs = list(itertools.combinations(range(n), 2))
    mask = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    return Graph.from_edges(n, [e for e, m in zip(pairs, mask) if m])


@st.composite
def distributions(draw, k, min_mass=0.0):
    w = draw(st.lists(st.floats(min_mass, 1.0), min_size=k, max_size=k))
    w = np.asarray(w) + 1e-3
    return w / w.sum()


def random_graph(rng, n, p=0.5):
    pairs = [e for e in itertools.combinations(range(n), 2) if rng.random() < p]
    return Graph.from_edges(n, pairs)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
