"""Bounded-degree directed graphs, balls, boundaries and growth statistics.

Undirected graphs are stored as symmetric directed graphs.  Distances are
directed: ``d(x, y)`` counts oriented edges on a shortest path from ``x`` to
``y``, so :func:`ball` explores out-edges and :func:`transpose_ball` in-edges.
Connectivity questions (components of the wet set) use the underlying
undirected graph.
"""

from __future__ import annotations

import itertools
import os
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .exceptions import GraphError, GraphParseError

DEFAULT_MAX_DEGREE = 64


@dataclass(frozen=True, eq=False)
class GraphView:
    """Finite directed graph, possibly a window onto an infinite one.

    ``interior`` is ``None`` for a plain finite graph.  For a window, it holds
    the vertices whose statistics are trusted; the remaining vertices form the
    halo.  ``boundary_markers`` are interior vertices sitting on the window
    frontier; a wet component touching one is treated as escaping the window.
    ``labels`` (one integer row per vertex) name vertices independently of the
    window size, so random inputs keyed by label agree across nested windows.
    """

    out_adj: tuple[tuple[int, ...], ...]
    in_adj: tuple[tuple[int, ...], ...]
    directed: bool
    interior: frozenset[int] | None = None
    boundary_markers: frozenset[int] = frozenset()
    halo: int = 0
    center: int = 0
    name: str = "graph"
    labels: np.ndarray | None = field(default=None, repr=False, compare=False)
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        n = len(self.out_adj)
        if len(self.in_adj) != n:
            raise GraphError("out_adj and in_adj have different lengths")
        for x, outs in enumerate(self.out_adj):
            if x in outs:
                raise GraphError(f"self-loop at vertex {x}")
            if len(set(outs)) != len(outs):
                raise GraphError(f"duplicate out-edge at vertex {x}")
            for y in outs:
                if not 0 <= y < n:
                    raise GraphError(f"edge ({x}, {y}) leaves the vertex range")
        ins = [[] for _ in range(n)]
        for x, outs in enumerate(self.out_adj):
            for y in outs:
                ins[y].append(x)
        if any(sorted(a) != sorted(b) for a, b in zip(ins, self.in_adj)):
            raise GraphError("in_adj is not the transpose of out_adj")
        if not self.directed:
            if any(set(a) != set(b) for a, b in zip(self.out_adj, self.in_adj)):
                raise GraphError("undirected graph with asymmetric adjacency")
        if self.interior is not None and not self.interior:
            raise GraphError("empty window interior")
        if n and not 0 <= self.center < n:
            raise GraphError("center outside the graph")
        if self.labels is not None and (self.labels.ndim != 2 or self.labels.shape[0] != n):
            raise GraphError("labels need one row per vertex")

    def vertex_labels(self) -> np.ndarray:
        """Window-independent names, ``(n, k)``; the vertex index by default."""
        if self.labels is not None:
            return self.labels
        return np.arange(self.n_vertices, dtype=np.int64)[:, None]

    @property
    def n_vertices(self) -> int:
        return len(self.out_adj)

    @property
    def is_window(self) -> bool:
        return self.interior is not None

    def neighbors(self, x: int) -> tuple[int, ...]:
        """Neighbors of ``x`` ignoring orientation, in index order."""
        key = ("nbrs",)
        nb = self._cache.get(key)
        if nb is None:
            nb = tuple(tuple(sorted(set(o) | set(i))) for o, i in zip(self.out_adj, self.in_adj))
            self._cache[key] = nb
        return nb[x]

    def out_degree(self, x: int) -> int:
        return len(self.out_adj[x])

    def in_degree(self, x: int) -> int:
        return len(self.in_adj[x])

    def degree(self, x: int) -> int:
        return len(self.neighbors(x))

    def _measured(self) -> Iterable[int]:
        return sorted(self.interior) if self.interior is not None else range(self.n_vertices)

    @property
    def max_degree(self) -> int:
        return max((self.degree(x) for x in range(self.n_vertices)), default=0)

    @property
    def delta(self) -> int:
        return max((self.degree(x) for x in self._measured()), default=0)

    @property
    def delta_plus(self) -> int:
        return max((self.out_degree(x) for x in self._measured()), default=0)

    @property
    def delta_minus(self) -> int:
        return max((self.in_degree(x) for x in self._measured()), default=0)

    def edges(self) -> list[tuple[int, int]]:
        return [(x, y) for x, outs in enumerate(self.out_adj) for y in outs]

    def undirected_csr(self):
        """Symmetrized adjacency as a ``scipy.sparse`` CSR matrix (cached)."""
        key = ("csr",)
        if key not in self._cache:
            from scipy import sparse

            rows, cols = [], []
            for x in range(self.n_vertices):
                for y in self.neighbors(x):
                    rows.append(x)
                    cols.append(y)
            data = np.ones(len(rows), dtype=np.int8)
            self._cache[key] = sparse.csr_matrix(
                (data, (rows, cols)), shape=(self.n_vertices, self.n_vertices)
            )
        return self._cache[key]


def from_edges(
    n_vertices: int,
    edges: Iterable[tuple[int, int]],
    directed: bool,
    *,
    max_degree: int = DEFAULT_MAX_DEGREE,
    **attrs,
) -> GraphView:
    """Build a graph from an edge iterable; undirected edges are symmetrized."""
    outs = [set() for _ in range(n_vertices)]
    for x, y in edges:
        if x == y:
            raise GraphError(f"self-loop at vertex {x}")
        if not (0 <= x < n_vertices and 0 <= y < n_vertices):
            raise GraphError(f"edge ({x}, {y}) leaves the vertex range 0..{n_vertices - 1}")
        outs[x].add(y)
        if not directed:
            outs[y].add(x)
    ins = [set() for _ in range(n_vertices)]
    for x, ys in enumerate(outs):
        for y in ys:
            ins[y].add(x)
    for x in range(n_vertices):
        deg = len(outs[x] | ins[x])
        if deg > max_degree:
            raise GraphError(f"vertex {x} has degree {deg} above the cap {max_degree}")
    return GraphView(
        out_adj=tuple(tuple(sorted(s)) for s in outs),
        in_adj=tuple(tuple(sorted(s)) for s in ins),
        directed=directed,
        **attrs,
    )


# -- generators -------------------------------------------------------------


def z_window(d: int, half_width: int, halo: int = 0) -> GraphView:
    """Box ``[-L, L]^d`` of the lattice with ``L = half_width + halo``.

    The interior is the sub-box of half-width ``half_width``; its outer layer
    carries the boundary markers.  Vertex 0 of the lattice is ``center``.
    """
    if d < 1 or half_width < 1 or halo < 0:
        raise GraphError("z_window needs d >= 1, half_width >= 1, halo >= 0")
    L = half_width + halo
    side = 2 * L + 1
    shape = (side,) * d
    coords = np.array(list(itertools.product(range(-L, L + 1), repeat=d)), dtype=np.int64)
    n = len(coords)
    edges = []
    for axis in range(d):
        step = np.zeros(d, dtype=np.int64)
        step[axis] = 1
        nxt = coords + step
        ok = nxt[:, axis] <= L
        src = np.nonzero(ok)[0]
        dst = np.ravel_multi_index(tuple((nxt[ok] + L).T), shape)
        edges.extend(zip(src.tolist(), dst.tolist()))
    sup = np.abs(coords).max(axis=1)
    interior = frozenset(np.nonzero(sup <= half_width)[0].tolist())
    markers = frozenset(np.nonzero(sup == half_width)[0].tolist())
    center = int(np.ravel_multi_index((L,) * d, shape))
    return from_edges(
        n,
        edges,
        directed=False,
        interior=interior,
        boundary_markers=markers,
        halo=halo,
        center=center,
        name=f"z{d}_window(half_width={half_width}, halo={halo})",
        labels=coords,
    )


def oriented_tree_ball(d: int, depth: int, halo: int = 0) -> GraphView:
    """Ball of the (d+1)-regular tree with every edge oriented toward one end.

    Each vertex points to its parent toward the chosen end, so out-degrees are
    at most 1 and in-degrees at most ``d``.  The ball is taken in the
    undirected metric around the center (vertex 0) with radius
    ``depth + halo``; vertices within ``depth`` form the interior.  Indices
    are assigned in breadth-first order, so nested balls share their labels.
    """
    if d < 2 or depth < 1 or halo < 0:
        raise GraphError("oriented_tree_ball needs d >= 2, depth >= 1, halo >= 0")
    D = depth + halo
    dist = [0]
    edges = []
    # queue entries: (vertex, came_from_child) -- ancestors are reached from a child
    queue = deque([(0, True, None)])
    while queue:
        v, from_child, skip = queue.popleft()
        if dist[v] == D:
            continue
        if from_child:
            parent = len(dist)
            dist.append(dist[v] + 1)
            edges.append((v, parent))
            queue.append((parent, True, v))
        n_children = d if skip is None or not from_child else d - 1
        for _ in range(n_children):
            c = len(dist)
            dist.append(dist[v] + 1)
            edges.append((c, v))
            queue.append((c, False, None))
    dist = np.asarray(dist)
    interior = frozenset(np.nonzero(dist <= depth)[0].tolist())
    markers = frozenset(np.nonzero(dist == depth)[0].tolist())
    return from_edges(
        len(dist),
        edges,
        directed=True,
        interior=interior,
        boundary_markers=markers,
        halo=halo,
        center=0,
        name=f"oriented_tree_ball(d={d}, depth={depth}, halo={halo})",
    )


def random_digraph(
    n: int, mean_out_degree: float, seed: int, *, max_degree: int = DEFAULT_MAX_DEGREE
) -> GraphView:
    """Erdos-Renyi style digraph: each ordered pair is an edge independently."""
    if n < 2 or mean_out_degree < 0:
        raise GraphError("random_digraph needs n >= 2 and a nonnegative mean degree")
    rng = np.random.default_rng(seed)
    mask = rng.random((n, n)) < mean_out_degree / (n - 1)
    np.fill_diagonal(mask, False)
    src, dst = np.nonzero(mask)
    return from_edges(
        n,
        zip(src.tolist(), dst.tolist()),
        directed=True,
        max_degree=max_degree,
        name=f"random_digraph(n={n}, mean_out_degree={mean_out_degree}, seed={seed})",
    )


def read_edge_list(path, directed: bool | None = None, *, max_degree: int = DEFAULT_MAX_DEGREE) -> GraphView:
    """Parse an edge-list file.

    The first non-blank line is ``directed`` or ``undirected``; every further
    line is ``u v`` with 0-based vertex ids.  Lines starting with ``#`` are
    comments.  ``directed``, when given, must agree with the header.
    """
    header = None
    edges = []
    n = 0
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if header is None:
                if line not in ("directed", "undirected"):
                    raise GraphParseError(lineno, f"expected 'directed' or 'undirected', got {line!r}")
                header = line == "directed"
                continue
            parts = line.split()
            if len(parts) != 2:
                raise GraphParseError(lineno, f"expected two vertex ids, got {line!r}")
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError:
                raise GraphParseError(lineno, f"non-integer vertex id in {line!r}") from None
            if u < 0 or v < 0:
                raise GraphParseError(lineno, "negative vertex id")
            if u == v:
                raise GraphParseError(lineno, f"self-loop at vertex {u}")
            edges.append((u, v))
            n = max(n, u + 1, v + 1)
    if header is None:
        raise GraphParseError(1, "missing 'directed'/'undirected' header")
    if directed is not None and directed != header:
        raise GraphError(f"edge list header says directed={header}, caller asked directed={directed}")
    return from_edges(
        n, edges, directed=header, max_degree=max_degree, name=f"edge_list({os.path.basename(str(path))})"
    )


def write_edge_list(g: GraphView, path) -> None:
    with open(path, "w") as fh:
        fh.write("directed\n" if g.directed else "undirected\n")
        for x, y in g.edges():
            if g.directed or x < y:
                fh.write(f"{x} {y}\n")


_BUILDERS = {
    "z_window": lambda p: z_window(int(p["d"]), int(p["half_width"]), int(p.get("halo", 0))),
    "oriented_tree_ball": lambda p: oriented_tree_ball(int(p["d"]), int(p["depth"]), int(p.get("halo", 0))),
    "edge_list": lambda p: read_edge_list(
        p["path"], p.get("directed"), max_degree=int(p.get("max_degree", DEFAULT_MAX_DEGREE))
    ),
    "random_digraph": lambda p: random_digraph(
        int(p["n"]),
        float(p["mean_out_degree"]),
        int(p["seed"]),
        max_degree=int(p.get("max_degree", DEFAULT_MAX_DEGREE)),
    ),
}


def build_graph(spec: Mapping) -> GraphView:
    """Build a graph from ``{"kind": ..., **params}``."""
    kind = spec.get("kind")
    if kind not in _BUILDERS:
        raise GraphError(f"unknown graph kind {kind!r}; expected one of {sorted(_BUILDERS)}")
    return _BUILDERS[kind](spec)


# -- balls and boundaries -----------------------------------------------------


def _bfs_layers(adj, x: int, depth: int) -> list[list[int]]:
    """Layers 0..depth of the BFS from ``x`` (trailing empty layers dropped)."""
    if depth < 0:
        return []
    layers = [[x]]
    seen = {x}
    while len(layers) <= depth:
        nxt = []
        for v in layers[-1]:
            for w in adj[v]:
                if w not in seen:
                    seen.add(w)
                    nxt.append(w)
        if not nxt:
            break
        layers.append(nxt)
    return layers


def ball(g: GraphView, x: int, r: int) -> frozenset[int]:
    """``{y : d(x, y) < r}``; empty for ``r = 0``."""
    if r < 0:
        raise ValueError("radius must be nonnegative")
    return frozenset(itertools.chain.from_iterable(_bfs_layers(g.out_adj, x, r - 1)))


def transpose_ball(g: GraphView, x: int, r: int) -> frozenset[int]:
    """``{y : d(y, x) < r}``, the ball of ``x`` in the reversed graph."""
    if r < 0:
        raise ValueError("radius must be nonnegative")
    return frozenset(itertools.chain.from_iterable(_bfs_layers(g.in_adj, x, r - 1)))


def sphere(g: GraphView, x: int, r: int, transpose: bool = False) -> frozenset[int]:
    """Vertices at distance exactly ``r`` from ``x`` (to ``x`` if ``transpose``)."""
    layers = _bfs_layers(g.in_adj if transpose else g.out_adj, x, r)
    return frozenset(layers[r]) if len(layers) > r else frozenset()


def boundary(g: GraphView, B: Iterable[int], mode: str = "both") -> frozenset[int]:
    """Outer boundary of ``B``: ``plus`` follows out-edges, ``minus`` in-edges."""
    if mode not in ("plus", "minus", "both"):
        raise ValueError(f"unknown boundary mode {mode!r}")
    B = set(B)
    out = set()
    if mode in ("plus", "both"):
        for x in B:
            out.update(g.out_adj[x])
    if mode in ("minus", "both"):
        for x in B:
            out.update(g.in_adj[x])
    return frozenset(out - B)


def distances_from(g: GraphView, x: int, depth: int | None = None, transpose: bool = False) -> dict[int, int]:
    """Directed BFS distances from ``x`` (to ``x`` when ``transpose``)."""
    adj = g.in_adj if transpose else g.out_adj
    layers = _bfs_layers(adj, x, g.n_vertices if depth is None else depth)
    return {v: k for k, layer in enumerate(layers) for v in layer}


# -- growth profile -----------------------------------------------------------


@dataclass(frozen=True)
class GrowthProfile:
    """Ball and sphere growth sequences of a graph up to ``r_max``.

    ``c[r-1]`` and ``c_top[r-1]`` hold the largest forward and reversed ball of
    radius ``r`` (``r = 1..r_max``); ``s[r]`` and ``s_top[r]`` the largest
    forward and reversed sphere at distance ``r`` (``r = 0..r_max``).
    """

    r_max: int
    c: tuple[int, ...]
    c_top: tuple[int, ...]
    s: tuple[int, ...]
    s_top: tuple[int, ...]
    delta: int
    delta_plus: int
    delta_minus: int

    def __post_init__(self):
        if self.r_max < 1:
            raise ValueError("r_max must be at least 1")
        if len(self.c) != self.r_max or len(self.c_top) != self.r_max:
            raise ValueError("c and c_top need r_max entries")
        if len(self.s) != self.r_max + 1 or len(self.s_top) != self.r_max + 1:
            raise ValueError("s and s_top need r_max + 1 entries")

    def ball_size(self, r: int) -> int:
        return self.c[r - 1]

    def transpose_ball_size(self, r: int) -> int:
        return self.c_top[r - 1]

    def slot_count(self, r: int) -> int:
        """``max(delta * s_top[r-1], c_top[r])``: marks of radius ``r`` per vertex."""
        return max(self.delta * self.s_top[r - 1], self.c_top[r - 1])

    def to_dict(self) -> dict:
        return {
            "r_max": self.r_max,
            "c": list(self.c),
            "c_top": list(self.c_top),
            "s": list(self.s),
            "s_top": list(self.s_top),
            "delta": self.delta,
            "delta_plus": self.delta_plus,
            "delta_minus": self.delta_minus,
        }


def growth_profile(g: GraphView, r_max: int) -> GrowthProfile:
    """Suprema of ball and sphere sizes over the (interior) vertices of ``g``.

    Spheres are used for ``s``, giving ``s[0] = 1``.  Windows must carry a
    halo of at least ``r_max`` so interior values match the infinite graph.
    """
    if r_max < 1:
        raise ValueError("r_max must be at least 1")
    if g.is_window and g.halo < r_max:
        raise GraphError(f"window halo {g.halo} is thinner than r_max={r_max}")
    c = [0] * r_max
    c_top = [0] * r_max
    s = [0] * (r_max + 1)
    s_top = [0] * (r_max + 1)
    for x in g._measured():
        for adj, balls, spheres in ((g.out_adj, c, s), (g.in_adj, c_top, s_top)):
            layers = _bfs_layers(adj, x, r_max)
            total = 0
            for r in range(r_max + 1):
                size = len(layers[r]) if r < len(layers) else 0
                spheres[r] = max(spheres[r], size)
                total += size
                if r < r_max:
                    balls[r] = max(balls[r], total)
    return GrowthProfile(
        r_max=r_max,
        c=tuple(c),
        c_top=tuple(c_top),
        s=tuple(s),
        s_top=tuple(s_top),
        delta=g.delta,
        delta_plus=g.delta_plus,
        delta_minus=g.delta_minus,
    )


def regular_tree_profile(degree: int, r_max: int) -> GrowthProfile:
    """Closed-form profile of the infinite undirected ``degree``-regular tree."""
    k = degree
    s = [1] + [k * (k - 1) ** (r - 1) for r in range(1, r_max + 1)]
    c = list(itertools.accumulate(s))[:r_max]
    return GrowthProfile(r_max, tuple(c), tuple(c), tuple(s), tuple(s), k, k, k)


# -- cached ball index ----------------------------------------------------------


class BallIndex:
    """Precomputed balls of every vertex up to radius ``cap``.

    ``members(x, r)`` is ``ball(g, x, r)`` as an index array (ordered by
    distance).  Balls are identified by ``(center, rad)`` where ``rad`` is the
    canonical radius: a saturated ball (empty forward boundary) is stored once
    at ``rad = ecc(x) + 1``.
    """

    def __init__(self, g: GraphView, cap: int):
        if cap < 1:
            raise ValueError("cap must be at least 1")
        self.g = g
        self.cap = cap
        n = g.n_vertices
        self._order = []
        self._sizes = np.zeros((n, cap + 1), dtype=np.int64)
        self._dist = []
        self._top_rad = np.zeros(n, dtype=np.int64)
        self._dead_rad = np.zeros(n, dtype=np.int64)  # 0 when no dead-end ball within cap
        for x in range(n):
            layers = _bfs_layers(g.out_adj, x, cap)
            order = np.fromiter(itertools.chain.from_iterable(layers), dtype=np.int64)
            self._order.append(order)
            self._dist.append({v: k for k, layer in enumerate(layers) for v in layer})
            sizes = np.cumsum([0] + [len(L) for L in layers])
            row = np.full(cap + 1, sizes[-1] if len(layers) <= cap else 0)
            upto = min(len(sizes), cap + 1)
            row[:upto] = sizes[:upto]
            self._sizes[x] = row
            ecc = len(layers) - 1
            if len(layers) <= cap:
                # sphere at distance len(layers) is empty: saturated at rad ecc+1 <= cap
                self._top_rad[x] = ecc + 1
                self._dead_rad[x] = ecc + 1
            else:
                self._top_rad[x] = cap
        self._boundary: dict[tuple[int, int], tuple[int, ...]] = {}
        self._marks_at: dict[int, tuple[tuple[int, int], ...]] = {}
        self._containing: dict[int, tuple[tuple[int, int], ...]] = {}
        self._tdist: dict[int, dict[int, int]] = {}

    # basic queries
    def canonical_rad(self, x: int, r: int) -> int:
        """Canonical radius of the marked ball ``(ball(x, r), x)``."""
        return int(min(r, self._top_rad[x])) if self._dead_rad[x] else r

    def top_rad(self, x: int) -> int:
        """Largest canonical radius at most ``cap`` for center ``x``."""
        return int(self._top_rad[x])

    def is_dead_end(self, x: int, rad: int) -> bool:
        return bool(self._dead_rad[x]) and rad == int(self._dead_rad[x])

    def size(self, x: int, r: int) -> int:
        return int(self._sizes[x, min(r, self.cap)])

    def members(self, x: int, r: int) -> np.ndarray:
        return self._order[x][: self._sizes[x, min(r, self.cap)]]

    def dist(self, x: int, y: int) -> float:
        """``d(x, y)`` if at most ``cap``, else ``inf``."""
        return self._dist[x].get(y, float("inf"))

    def boundary(self, x: int, rad: int) -> tuple[int, ...]:
        """Full outer boundary of the canonical ball, sorted by vertex index."""
        key = (x, rad)
        b = self._boundary.get(key)
        if b is None:
            b = tuple(sorted(boundary(self.g, self.members(x, rad).tolist(), "both")))
            self._boundary[key] = b
        return b

    def transpose_dist(self, y: int) -> dict[int, int]:
        """``{x: d(x, y)}`` for ``d(x, y) <= cap``."""
        td = self._tdist.get(y)
        if td is None:
            td = distances_from(self.g, y, self.cap, transpose=True)
            self._tdist[y] = td
        return td

    def balls_containing(self, v: int) -> tuple[tuple[int, int], ...]:
        """All canonical balls ``(x, rad)``, ``rad <= cap``, with ``v`` inside."""
        out = self._containing.get(v)
        if out is None:
            res = []
            for x, dxv in sorted(self.transpose_dist(v).items()):
                for rad in range(dxv + 1, self.top_rad(x) + 1):
                    res.append((x, rad))
            out = tuple(res)
            self._containing[v] = out
        return out

    def marks_at(self, y: int) -> tuple[tuple[int, int], ...]:
        """All canonical balls ``(x, rad)``, ``rad <= cap``, with ``y`` on their boundary."""
        out = self._marks_at.get(y)
        if out is None:
            g = self.g
            nearest: dict[int, int] = {}
            for z in g.neighbors(y):
                for x, dxz in self.transpose_dist(z).items():
                    if dxz < nearest.get(x, self.cap):
                        nearest[x] = dxz
            res = []
            for x in sorted(nearest):
                dxy = self._dist[x].get(y, float("inf"))
                hi = min(dxy, self.top_rad(x))
                for rad in range(nearest[x] + 1, int(hi) + 1):
                    res.append((x, rad))
            out = tuple(res)
            self._marks_at[y] = out
        return out
