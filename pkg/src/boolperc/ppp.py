"""Poisson point process realizations and the layered exploration coupling.

The model is realized three ways on the same probability space:

* ``omega1`` - independent Poisson counts on (vertex, level) with level
  intensities ``lambda_n``; ``Y_x`` is the highest firing level and the wet
  set is ``union_x ball(x, Y_x)``.
* ``omega2`` - its pushforward onto marked balls ``(center, rad)``, where a
  saturated ball collects every level at or above its canonical radius.
* ``omega3`` - counts on boundary-marked balls ``(center, rad, y)``, drawn
  lazily while exploring the root component layer by layer.  When a ball is
  first reached its count at the smallest reaching vertex is set to the
  ``omega2`` count, so ``omega2`` and ``omega3`` stay coupled.

Every ``omega1``/``omega3`` value comes from a :class:`~boolperc.rng.KeyedStream`
keyed by the mark itself, so values never depend on exploration order.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DirectSamplerRequired, HorizonError, LawError
from .graph import BallIndex, GraphView, GrowthProfile
from .laws import RadiusLaw, check_probability
from .model import ModelConfig
from .rng import KeyedStream, poisson_from_uniform, replicate_generator
from .sampler import _masks, ball_index, wet_component_array

OMEGA1_TAG = 11
OMEGA3_TAG = 13
GW_TAG = 17
# generation sizes are held here once reached; exact draws beyond would overflow int64
Z_SATURATION = 10**12

EXHAUSTED = "exhausted"
BUDGET_EXCEEDED = "budget_exceeded"
WINDOW_ESCAPED = "window_escaped"


def _require_ppp(law: RadiusLaw, p: float) -> int:
    p = check_probability(p)
    if p >= 1.0:
        raise DirectSamplerRequired("the point-process pipeline needs p < 1; use the direct sampler")
    if law.support_max is None:
        raise LawError("the point-process pipeline needs a capped radius law")
    return law.support_max


class PppRealization:
    """Lazily populated ``omega1`` counts for levels ``1..cap``.

    ``counts(x)`` draws (once) and returns the level counts of vertex ``x``.
    """

    def __init__(self, law: RadiusLaw, p: float, seed: int, replicate: int = 0, n_vertices: int | None = None):
        self.cap = _require_ppp(law, p)
        self.law = law
        self.p = check_probability(p)
        self.n_vertices = n_vertices
        self.lam = np.array([law.lambda_n(self.p, n) for n in range(1, self.cap + 1)])
        self.stream = KeyedStream(seed, replicate)
        self._levels = np.arange(1, self.cap + 1)
        self._counts: dict[int, np.ndarray] = {}
        self.draws = 0

    def _draw(self, xs: np.ndarray) -> np.ndarray:
        u = self.stream.uniform(OMEGA1_TAG, xs[:, None], self._levels[None, :])
        return poisson_from_uniform(u, self.lam[None, :])

    def counts(self, x: int) -> np.ndarray:
        c = self._counts.get(x)
        if c is None:
            c = self._draw(np.array([x]))[0]
            self._counts[x] = c
            self.draws += 1
        return c

    def count(self, x: int, n: int) -> int:
        if n < 1:
            raise ValueError("levels start at 1")
        return int(self.counts(x)[n - 1]) if n <= self.cap else 0

    def materialize(self, n_vertices: int | None = None) -> np.ndarray:
        """Counts for every vertex ``0..n-1`` as an ``(n, cap)`` array."""
        n = self.n_vertices if n_vertices is None else n_vertices
        if n is None:
            raise ValueError("number of vertices unknown")
        missing = np.array([x for x in range(n) if x not in self._counts], dtype=np.int64)
        if missing.size:
            drawn = self._draw(missing)
            for x, row in zip(missing.tolist(), drawn):
                self._counts[x] = row
            self.draws += missing.size
        return np.stack([self._counts[x] for x in range(n)]) if n else np.zeros((0, self.cap), dtype=np.int64)

    def Y(self, x: int) -> int:
        """Highest level with a positive count, 0 if none fires."""
        c = self.counts(x)
        fired = np.nonzero(c)[0]
        return int(fired[-1] + 1) if fired.size else 0

    def Y_all(self, n_vertices: int | None = None) -> np.ndarray:
        c = self.materialize(n_vertices)
        fired = c > 0
        top = self.cap - np.argmax(fired[:, ::-1], axis=1)
        return np.where(fired.any(axis=1), top, 0)

    def omega2(self, bi: BallIndex, x: int, rad: int) -> int:
        """Pushforward count of the marked ball ``(ball(x, rad), x)``."""
        c = self.counts(x)
        if bi.is_dead_end(x, rad):
            return int(c[rad - 1 :].sum())
        return int(c[rad - 1]) if rad <= self.cap else 0


def sample_ppp(config: ModelConfig, replicate: int = 0) -> PppRealization:
    return PppRealization(config.law, config.p, config.seed, replicate, config.graph.n_vertices)


def wet_from_Y(realization: PppRealization, g: GraphView) -> np.ndarray:
    """Wet mask ``union_x ball(x, Y_x)``."""
    Y = realization.Y_all(g.n_vertices)
    bi = ball_index(g, realization.cap)
    mask = np.zeros(g.n_vertices, dtype=bool)
    fired = np.nonzero(Y)[0]
    if fired.size:
        mask[np.concatenate([bi.members(x, y) for x, y in zip(fired.tolist(), Y[fired].tolist())])] = True
    return mask


def omega2_assignment(realization: PppRealization, g: GraphView) -> dict[tuple[int, int], int]:
    """Positive entries of the pushforward of ``omega1`` onto marked balls."""
    counts = realization.materialize(g.n_vertices)
    bi = ball_index(g, realization.cap)
    out: dict[tuple[int, int], int] = defaultdict(int)
    xs, ns = np.nonzero(counts)
    for x, n in zip(xs.tolist(), ns.tolist()):
        out[(x, bi.canonical_rad(x, n + 1))] += int(counts[x, n])
    return dict(out)


def wet_from_omega2(omega2: dict[tuple[int, int], int], g: GraphView, cap: int) -> np.ndarray:
    """Union of the balls with a positive ``omega2`` count."""
    bi = ball_index(g, cap)
    mask = np.zeros(g.n_vertices, dtype=bool)
    pos = [bi.members(x, rad) for (x, rad), v in omega2.items() if v > 0]
    if pos:
        mask[np.concatenate(pos)] = True
    return mask


@dataclass
class ExplorationTrace:
    """Layers ``C_1, C_2, ...`` of the exploration plus every drawn mark."""

    rho: int
    layers: list[np.ndarray]
    fired_balls: list[list[tuple[int, int]]]
    omega3: dict[tuple[int, int, int], int]
    omega2: dict[tuple[int, int], tuple[int, int | None]]
    intensity: dict[tuple[int, int], float]
    draw_counts: Counter
    status: str
    processed_layers: int
    root_balls: tuple[tuple[int, int], ...]
    ball_index: BallIndex = field(repr=False)
    law: RadiusLaw = field(repr=False)
    p: float = 0.0
    coupled_Z: list[int] | None = None

    @property
    def explored(self) -> np.ndarray:
        if not self.layers:
            return np.zeros(0, dtype=np.int64)
        return np.concatenate(self.layers)

    @property
    def layer_sizes(self) -> list[int]:
        return [int(L.size) for L in self.layers]

    def mark_uniqueness(self) -> bool:
        return all(v == 1 for v in self.draw_counts.values())

    def omega2_consistent(self) -> bool:
        """Every assigned ``omega2`` equals the ``omega3`` count at its ``y_min``."""
        return all(y is None or self.omega3[(x, rad, y)] == v for (x, rad), (v, y) in self.omega2.items())

    def overshoot_balls(self) -> int:
        """Fired balls that entered a layer while their ``omega2`` count is zero."""
        return sum(1 for layer in self.fired_balls for b in layer if self.omega2[b][0] == 0)

    def to_dict(self) -> dict:
        return {
            "rho": self.rho,
            "status": self.status,
            "layer_sizes": self.layer_sizes,
            "fired_balls_per_layer": [len(b) for b in self.fired_balls],
            "marks_drawn": len(self.omega3),
            "overshoot_balls": self.overshoot_balls(),
            "coupled_Z": self.coupled_Z,
        }


def _ball_intensity(bi: BallIndex, law: RadiusLaw, p: float, x: int, rad: int) -> float:
    if bi.is_dead_end(x, rad):
        return law.tail_intensity(p, rad)
    return law.lambda_n(p, rad)


def explore(
    config: ModelConfig,
    realization: PppRealization | None = None,
    replicate: int = 0,
    *,
    stop_at_window: bool = True,
) -> ExplorationTrace:
    """Reveal the root component layer by layer.

    Step 0 draws every mark of every ball containing the root and forms
    ``C_1`` from the balls with positive ``omega2``.  Step ``n`` draws the
    marks of every not-yet-seen ball whose boundary meets ``C_n``, then sets
    ``C_{n+1}`` to the union of the balls with a positive mark in ``C_n``
    minus the earlier layers.  Budgets and (optionally) window escapes stop
    the run with the corresponding status.
    """
    g = config.graph
    cap = _require_ppp(config.law, config.p)
    if realization is None:
        realization = sample_ppp(config, replicate)
    law, p = config.law, config.p
    bi = ball_index(g, cap)
    keyed = realization.stream
    rho = config.rho
    inside, _ = _masks(g)
    check_window = stop_at_window and g.is_window

    omega3: dict[tuple[int, int, int], int] = {}
    omega2: dict[tuple[int, int], tuple[int, int | None]] = {}
    intensity: dict[tuple[int, int], float] = {}
    draws: Counter = Counter()

    def touch(x: int, rad: int, y_min: int | None):
        mu = _ball_intensity(bi, law, p, x, rad)
        intensity[(x, rad)] = mu
        w2 = realization.omega2(bi, x, rad)
        others = np.array([y for y in bi.boundary(x, rad) if y != y_min], dtype=np.int64)
        if others.size:
            vals = poisson_from_uniform(keyed.uniform(OMEGA3_TAG, x, rad, others), mu)
            for y, v in zip(others.tolist(), vals.tolist()):
                omega3[(x, rad, y)] = v
                draws[(x, rad, y)] += 1
        if y_min is not None:
            omega3[(x, rad, y_min)] = w2
            draws[(x, rad, y_min)] += 1
        omega2[(x, rad)] = (w2, y_min)

    root_balls = bi.balls_containing(rho)
    for x, rad in root_balls:
        bnd = bi.boundary(x, rad)
        touch(x, rad, bnd[0] if bnd else None)
    fired0 = [b for b in root_balls if omega2[b][0] > 0]
    visited = np.zeros(g.n_vertices, dtype=bool)
    for x, rad in fired0:
        visited[bi.members(x, rad)] = True
    first = np.nonzero(visited)[0]

    layers: list[np.ndarray] = []
    fired_balls: list[list[tuple[int, int]]] = []
    status = EXHAUSTED
    processed = 0
    if first.size:
        layers.append(first)
        fired_balls.append(fired0)
        if check_window and not inside[first].all():
            status = WINDOW_ESCAPED
    total = int(first.size)
    if status == EXHAUSTED and total > config.max_vertices:
        status = BUDGET_EXCEEDED

    while status == EXHAUSTED and layers and processed < len(layers):
        if len(layers) >= config.max_layers:
            status = BUDGET_EXCEEDED
            break
        current = layers[-1]
        reach: dict[tuple[int, int], list[int]] = {}
        for y in current.tolist():
            for b in bi.marks_at(y):
                reach.setdefault(b, []).append(y)
        for (x, rad), ys in reach.items():
            if (x, rad) not in omega2:
                touch(x, rad, min(ys))
        fired = [b for b, ys in reach.items() if any(omega3[(b[0], b[1], y)] > 0 for y in ys)]
        processed += 1
        new = np.zeros(g.n_vertices, dtype=bool)
        for x, rad in fired:
            new[bi.members(x, rad)] = True
        new &= ~visited
        nxt = np.nonzero(new)[0]
        if not nxt.size:
            break
        visited |= new
        layers.append(nxt)
        fired_balls.append(sorted(fired))
        total += int(nxt.size)
        if check_window and not all(inside[bi.members(x, rad)].all() for x, rad in fired):
            status = WINDOW_ESCAPED
        elif total > config.max_vertices:
            status = BUDGET_EXCEEDED

    return ExplorationTrace(
        rho=rho,
        layers=layers,
        fired_balls=fired_balls,
        omega3=omega3,
        omega2=omega2,
        intensity=intensity,
        draw_counts=draws,
        status=status,
        processed_layers=processed,
        root_balls=root_balls,
        ball_index=bi,
        law=law,
        p=p,
    )


@dataclass
class CouplingResult:
    Z: list[int]
    slot_overflow: int
    saturated: bool = False

    def dominates(self, layer_sizes: list[int]) -> bool:
        return all(c <= z for c, z in zip(layer_sizes, self.Z))


def coupled_gw(
    trace: ExplorationTrace,
    profile: GrowthProfile,
    stream: np.random.Generator | None = None,
    *,
    seed: int = 0,
    replicate: int = 0,
) -> CouplingResult:
    """Galton-Watson generations ``Z_1, Z_2, ...`` dominating the layer sizes.

    Each mark of radius ``r`` is raised to intensity ``-log q_{r-1}`` by an
    independent Poisson top-up; a layer vertex's offspring collects its own
    marks grouped by radius, padded with fresh indicators up to the slot count
    ``max(delta s_top[r-1], c_top[r])``.  Individuals beyond the layer size get
    fresh offspring draws.
    """
    law, p, bi = trace.law, trace.p, trace.ball_index
    cap = law.support_max
    if cap > profile.r_max:
        raise HorizonError(f"profile horizon {profile.r_max} is shorter than the law cap {cap}")
    rng = stream if stream is not None else replicate_generator(seed, replicate, GW_TAG)
    radii = range(1, cap + 1)
    c = {r: profile.ball_size(r) for r in radii}
    m = {r: profile.slot_count(r) for r in radii}
    fire = {r: law.one_minus_q(p, r - 1) for r in radii}
    top = {r: law.tail_intensity(p, r) for r in radii}
    overflow = 0

    def raised(count: int, mu: float, r: int) -> bool:
        if count > 0:
            return True
        extra = max(top[r] - mu, 0.0)
        return extra > 0 and rng.random() < -math.expm1(-extra)

    def offspring(groups: dict[int, list[bool]]) -> int:
        nonlocal overflow
        total = 0
        for r in radii:
            inds = groups.get(r, ())
            if len(inds) > m[r]:
                overflow += 1
            pad = max(m[r] - len(inds), 0)
            total += c[r] * (sum(inds) + int(rng.binomial(pad, fire[r])))
        return total

    def fresh(count: int) -> int:
        if count <= 0:
            return 0
        return sum(c[r] * int(rng.binomial(count * m[r], fire[r])) for r in radii)

    saturated = False

    groups: dict[int, list[bool]] = defaultdict(list)
    for x, rad in trace.root_balls:
        groups[rad].append(raised(trace.omega2[(x, rad)][0], trace.intensity[(x, rad)], rad))
    Z = [offspring(groups)]
    for n in range(trace.processed_layers):
        layer = trace.layers[n]
        z_n = Z[-1]
        if saturated or z_n >= Z_SATURATION:
            saturated = True
            Z.append(Z_SATURATION)
            continue
        own = 0
        for k, y in enumerate(layer.tolist()):
            if k >= z_n:
                break
            groups = defaultdict(list)
            for x, rad in bi.marks_at(y):
                groups[rad].append(raised(trace.omega3[(x, rad, y)], trace.intensity[(x, rad)], rad))
            own += offspring(groups)
        Z.append(own + fresh(z_n - min(z_n, layer.size)))
    trace.coupled_Z = Z
    return CouplingResult(Z, overflow, saturated)


@dataclass
class ReplicateAudit:
    set_identity: bool
    inclusion: bool | None
    domination: bool | None
    marks_unique: bool
    omega2_consistent: bool
    slot_overflow: int
    status: str
    trace: ExplorationTrace = field(repr=False)
    root_component: np.ndarray = field(repr=False)


def audit_replicate(config: ModelConfig, profile: GrowthProfile, replicate: int) -> ReplicateAudit:
    """Exact per-realization checks of the three coupling statements."""
    g = config.graph
    real = sample_ppp(config, replicate)
    real.materialize(g.n_vertices)
    w_y = wet_from_Y(real, g)
    w2 = omega2_assignment(real, g)
    set_identity = bool(np.array_equal(wet_from_omega2(w2, g, real.cap), w_y))
    trace = explore(config, real, replicate, stop_at_window=False)
    consistent = trace.omega2_consistent() and all(
        w2.get(key, 0) == v for key, (v, _) in trace.omega2.items()
    )
    root = wet_component_array(g, w_y, config.rho)
    inclusion = domination = None
    overflow = 0
    if trace.status == EXHAUSTED:
        explored = np.zeros(g.n_vertices, dtype=bool)
        if trace.layers:
            explored[trace.explored] = True
        inclusion = bool(explored[root].all())
        coupling = coupled_gw(trace, profile, seed=config.seed, replicate=replicate)
        domination = coupling.dominates(trace.layer_sizes) and len(coupling.Z) > len(trace.layers)
        overflow = coupling.slot_overflow
    return ReplicateAudit(set_identity, inclusion, domination, trace.mark_uniqueness(), consistent, overflow, trace.status, trace, root)
