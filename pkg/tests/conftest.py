"""Shared fixtures and brute-force oracles.

The oracles deliberately avoid the package's BFS code: distances come from
scipy's dense all-pairs shortest paths on the adjacency matrix.
"""

from __future__ import annotations

import numpy as np
import pytest
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

ACCEPTANCE_LINES: list[str] = []


def report(criterion: int, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append(f"criterion {criterion:>2}: {'PASS' if ok else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: numbered acceptance criterion")


# oracles ------------------------------------------------------------------


def dist_matrix(g) -> np.ndarray:
    """Directed all-pairs distances (inf when unreachable)."""
    n = g.n_vertices
    rows, cols = [], []
    for x in range(n):
        for y in g.out_adj[x]:
            rows.append(x)
            cols.append(y)
    A = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    return shortest_path(A, directed=True, unweighted=True)


def oracle_ball(D: np.ndarray, x: int, r: int) -> set[int]:
    return set(np.nonzero(D[x] < r)[0].tolist())


def oracle_boundary(g, B: set[int], mode: str = "plus") -> set[int]:
    out = set()
    for v in B:
        if mode in ("plus", "both"):
            out.update(w for w in g.out_adj[v] if w not in B)
        if mode in ("minus", "both"):
            out.update(w for w in g.in_adj[v] if w not in B)
    return out


def oracle_profile(g, r_max: int, vertices=None):
    """(c, c_top, s, s_top) by exhaustive enumeration over ``vertices``."""
    D = dist_matrix(g)
    xs = range(g.n_vertices) if vertices is None else vertices
    c = [max(int((D[x] < r).sum()) for x in xs) for r in range(1, r_max + 1)]
    ct = [max(int((D[:, x] < r).sum()) for x in xs) for r in range(1, r_max + 1)]
    s = [max(int((D[x] == r).sum()) for x in xs) for r in range(0, r_max + 1)]
    st = [max(int((D[:, x] == r).sum()) for x in xs) for r in range(0, r_max + 1)]
    return c, ct, s, st


def oracle_phi(c, ct, st, delta, n) -> int:
    return sum(c[r - 1] * max(delta * st[r - 1], ct[r - 1]) for r in range(1, n + 1))


def oracle_components(g, mask: np.ndarray) -> list[set[int]]:
    """Weak components of the wet set via union-find."""
    parent = list(range(g.n_vertices))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for x in np.nonzero(mask)[0].tolist():
        for y in g.out_adj[x]:
            if mask[y]:
                parent[find(x)] = find(y)
    comps: dict[int, set[int]] = {}
    for x in np.nonzero(mask)[0].tolist():
        comps.setdefault(find(x), set()).add(x)
    return list(comps.values())


# fixtures -----------------------------------------------------------------


@pytest.fixture(scope="session")
def z1():
    from boolperc.graph import z_window

    return z_window(1, 20, 4)


@pytest.fixture(scope="session")
def z2():
    from boolperc.graph import z_window

    return z_window(2, 4, 3)


@pytest.fixture(scope="session")
def tree():
    from boolperc.graph import oriented_tree_ball

    return oriented_tree_ball(2, 3, 3)


@pytest.fixture(scope="session")
def digraph():
    from boolperc.graph import random_digraph

    return random_digraph(60, 1.5, seed=11)
