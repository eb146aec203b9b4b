"""Direct i.i.d. realization of the wet set."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import connected_components

from .exceptions import LawError
from .graph import BallIndex, GraphView
from .model import ModelConfig
from .rng import KeyedStream

SAMPLER_TAG = 1


def ball_index(g: GraphView, cap: int) -> BallIndex:
    """Shared :class:`BallIndex` for ``(g, cap)``, built once per graph."""
    key = ("ball_index", cap)
    bi = g._cache.get(key)
    if bi is None:
        bi = BallIndex(g, cap)
        g._cache[key] = bi
    return bi


def _masks(g: GraphView) -> tuple[np.ndarray, np.ndarray]:
    key = ("masks",)
    m = g._cache.get(key)
    if m is None:
        inside = np.ones(g.n_vertices, dtype=bool)
        if g.interior is not None:
            inside[:] = False
            inside[list(g.interior)] = True
        markers = np.zeros(g.n_vertices, dtype=bool)
        markers[list(g.boundary_markers)] = True
        m = (inside, markers)
        g._cache[key] = m
    return m


def effective_cap(config: ModelConfig) -> int:
    """Radius cap used for simulation: law support, explicit cap, or window halo."""
    g = config.graph
    cap = config.cap
    if cap is None and g.is_window and g.halo > 0:
        cap = g.halo + 1
    if cap is None:
        raise LawError("uncapped radius law without a radius cap or window halo to cap it")
    return cap


@dataclass
class WetSample:
    """One realization: activation bits, radii, the wet set and its components."""

    graph: GraphView
    sigma: np.ndarray
    radius: np.ndarray
    wet: np.ndarray
    rho: int
    cap: int
    _components: tuple[int, np.ndarray] | None = field(default=None, repr=False)
    _root: np.ndarray | None = field(default=None, repr=False)

    @property
    def wet_set(self) -> frozenset[int]:
        return frozenset(np.nonzero(self.wet)[0].tolist())

    @property
    def size_w(self) -> int:
        return int(self.wet.sum())

    def _label(self):
        if self._components is None:
            idx = np.nonzero(self.wet)[0]
            labels = np.full(self.graph.n_vertices, -1, dtype=np.int64)
            if idx.size:
                sub = self.graph.undirected_csr()[idx][:, idx]
                k, lab = connected_components(sub, directed=False)
                labels[idx] = lab
            else:
                k = 0
            self._components = (int(k), labels)
        return self._components

    @property
    def n_components(self) -> int:
        return self._label()[0]

    @property
    def components(self) -> list[frozenset[int]]:
        k, labels = self._label()
        return [frozenset(np.nonzero(labels == c)[0].tolist()) for c in range(k)]

    @property
    def root_component(self) -> np.ndarray:
        if self._root is None:
            self._root = wet_component_array(self.graph, self.wet, self.rho)
        return self._root

    @property
    def size_wrho(self) -> int:
        return int(self.root_component.size)

    @property
    def escaped(self) -> bool:
        """Whether the root component reaches the halo or a boundary marker."""
        comp = self.root_component
        if not comp.size or not self.graph.is_window:
            return False
        inside, markers = _masks(self.graph)
        return bool((~inside[comp]).any() or markers[comp].any())


def wet_component_array(g: GraphView, wet: np.ndarray, x: int) -> np.ndarray:
    """Weak component of ``x`` inside the wet mask (empty if ``x`` is dry)."""
    if not wet[x]:
        return np.zeros(0, dtype=np.int64)
    seen = {x}
    queue = deque([x])
    while queue:
        v = queue.popleft()
        for w in g.neighbors(v):
            if wet[w] and w not in seen:
                seen.add(w)
                queue.append(w)
    return np.fromiter(sorted(seen), dtype=np.int64, count=len(seen))


def wet_component(sample: WetSample, x: int) -> frozenset[int]:
    """Component of ``x`` in the wet set, or the empty set when ``x`` is dry."""
    if x == sample.rho:
        return frozenset(sample.root_component.tolist())
    return frozenset(wet_component_array(sample.graph, sample.wet, x).tolist())


def wet_mask(bi: BallIndex, sigma: np.ndarray, radius: np.ndarray) -> np.ndarray:
    """Union of ``ball(x, radius[x])`` over active ``x`` as a boolean mask."""
    mask = np.zeros(bi.g.n_vertices, dtype=bool)
    active = np.nonzero(sigma)[0]
    if active.size:
        mask[np.concatenate([bi.members(x, r) for x, r in zip(active.tolist(), radius[active].tolist())])] = True
    return mask


def draw_uniforms(config: ModelConfig, replicate: int, stream: np.random.Generator | None = None) -> np.ndarray:
    """Per-vertex ``(activation, radius)`` uniforms.

    By default they are keyed by vertex label, so nested windows share the
    inputs of their common vertices.  A supplied generator is consumed in
    vertex-index order instead.
    """
    if stream is not None:
        return stream.random((config.graph.n_vertices, 2))
    labels = config.graph.vertex_labels()
    keyed = KeyedStream(config.seed, replicate)
    cols = [labels[:, j, None] for j in range(labels.shape[1])]
    return keyed.uniform(SAMPLER_TAG, *cols, np.arange(2)[None, :])


def assemble(config: ModelConfig, u: np.ndarray, p: float | None = None) -> WetSample:
    """Wet sample from shared uniforms; thresholding makes ``W`` monotone in ``p``."""
    g = config.graph
    cap = effective_cap(config)
    p = config.p if p is None else p
    sigma = u[:, 0] < p
    radius = config.law.sample(u[:, 1], truncate=cap)
    return WetSample(g, sigma, radius, wet_mask(ball_index(g, cap), sigma, radius), config.rho, cap)


def sample_direct(config: ModelConfig, stream: np.random.Generator | None = None, replicate: int = 0) -> WetSample:
    """Draw ``sigma_x ~ Bernoulli(p)`` and ``R_x ~ law`` independently for every vertex."""
    return assemble(config, draw_uniforms(config, replicate, stream))


def count_covering_balls(sample: WetSample, x: int) -> int:
    """Number of active ``y`` whose ball ``ball(y, R_y)`` contains ``x``."""
    bi = ball_index(sample.graph, sample.cap)
    td = bi.transpose_dist(x)
    ys = np.fromiter(td.keys(), dtype=np.int64, count=len(td))
    ds = np.fromiter(td.values(), dtype=np.int64, count=len(td))
    return int((sample.sigma[ys] & (ds < sample.radius[ys])).sum())


def expected_covering_count(config: ModelConfig, x: int | None = None) -> float:
    """Exact ``p * sum_y P(R_y > d(y, x))`` on the finite graph (with the sampler's cap)."""
    cap = effective_cap(config)
    x = config.rho if x is None else x
    td = ball_index(config.graph, cap).transpose_dist(x)
    law = config.law
    # effective radius is min(R, cap): P(min(R, cap) > d) = P(R > d) for d < cap
    return config.p * sum(law.tail(d) for d in td.values() if d < cap)
