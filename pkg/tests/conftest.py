import numpy as np
import pytest

from netsampling.graph import Graph


def make(n, edges, a_nodes=()):
    is_a = np.zeros(n, dtype=bool)
    is_a[list(a_nodes)] = True
    return Graph.from_edges(n, edges, is_a)


def complete(n, a_nodes=()):
    return make(n, [(i, j) for i in range(n) for j in range(i + 1, n)], a_nodes)


def star(leaves, a_nodes=()):
    return make(leaves + 1, [(0, i) for i in range(1, leaves + 1)], a_nodes)


def path(n, a_nodes=()):
    return make(n, [(i, i + 1) for i in range(n - 1)], a_nodes)


@pytest.fixture
def k3():
    return complete(3)


@pytest.fixture
def s5():
    return star(5)


@pytest.fixture
def p3():
    return path(3)


@pytest.fixture
def p5():
    return path(5)
