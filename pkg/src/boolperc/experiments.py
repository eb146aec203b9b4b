"""Monte Carlo batches: tail curves, p-sweeps, decay fits and coupling audits.

Every batch is a deterministic fold over replicate indices, so results do not
depend on the number of worker processes.
"""

from __future__ import annotations

import csv
import json
import os
import platform
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .bounds import InconclusiveSeries, pc_lower_bound
from .graph import GrowthProfile, build_graph, growth_profile
from .model import ModelConfig
from .ppp import EXHAUSTED, audit_replicate, coupled_gw, explore, sample_ppp, wet_from_Y
from .sampler import assemble, draw_uniforms, effective_cap, sample_direct, wet_component_array
from .stats import DecayFit, TailCurve, fit_decay, wilson

UNRELIABLE_CENSORING = 0.20
CHECKS = ("set_identity", "inclusion", "domination", "mark_uniqueness", "omega2_consistency")
# tallied and reported, but they do not fail a batch
DIAGNOSTICS = ("slot_overflow", "not_exhausted")


# parallel map -------------------------------------------------------------


def _chunks(n: int, parts: int) -> list[range]:
    parts = max(1, min(parts, n))
    bounds = np.linspace(0, n, parts + 1).astype(int)
    return [range(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def map_replicates(fn: Callable[[object, range], list], payload, n: int, threads: int = 1) -> list:
    """``fn(payload, chunk)`` over replicate chunks, concatenated in index order."""
    if n <= 0:
        return []
    if threads <= 1:
        return fn(payload, range(n))
    chunks = _chunks(n, threads * 4)
    with ProcessPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(fn, [payload] * len(chunks), chunks))
    return [row for part in parts for row in part]


def default_threads() -> int:
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)


# growth profiles ------------------------------------------------------------

TRANSITIVE_KINDS = ("z_window", "oriented_tree_ball")


def profile_for(config: ModelConfig, r_max: int) -> GrowthProfile:
    """Growth profile of the underlying graph up to ``r_max``.

    Lattice windows and oriented tree balls stand for vertex-transitive
    infinite graphs, so the profile is read off a small window whose halo
    covers the horizon.  Other graphs are profiled as finite graphs.
    """
    spec = config.graph_spec
    if spec.get("kind") in TRANSITIVE_KINDS:
        g = config.graph
        if g.halo >= r_max:
            return growth_profile(g, r_max)
        small = dict(spec, halo=r_max)
        small["half_width" if spec["kind"] == "z_window" else "depth"] = 1
        return growth_profile(build_graph(small), r_max)
    return growth_profile(config.graph, r_max)


def default_horizon(config: ModelConfig, requested: int | None = None) -> int:
    if requested is not None:
        return requested
    if config.law.support_max is not None:
        return config.law.support_max
    return config.radius_cap or 60


# manifest -----------------------------------------------------------------


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: int
    replicates: int
    truncated_mass: float
    censored: int = 0
    tallies: dict = field(default_factory=dict)
    results: dict = field(default_factory=dict)
    data_files: list[str] = field(default_factory=list)
    wall_clock_seconds: float = 0.0
    version: str = __version__
    python: str = field(default_factory=platform.python_version)

    def write(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True, default=_json_default) + "\n")
        return path


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serializable: {type(o).__name__}")


def write_csv(path: str | Path, header: Sequence[str], rows) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return path


# direct samples -----------------------------------------------------------


@dataclass
class SampleStats:
    size_w: np.ndarray
    size_wrho: np.ndarray
    escaped: np.ndarray
    n_components: np.ndarray | None = None

    def rows(self, seed: int):
        for i in range(self.size_w.size):
            nc = "" if self.n_components is None else int(self.n_components[i])
            yield (seed, i, int(self.size_w[i]), int(self.size_wrho[i]), int(bool(self.escaped[i])), nc)


def _sample_chunk(config: ModelConfig, reps: range, components: bool = False) -> list[tuple]:
    out = []
    for r in reps:
        s = sample_direct(config, replicate=r)
        out.append((s.size_w, s.size_wrho, s.escaped, s.n_components if components else -1))
    return out


def _sample_chunk_components(config, reps):
    return _sample_chunk(config, reps, True)


def sample_batch(config: ModelConfig, n_trials: int, threads: int = 1, components: bool = False) -> SampleStats:
    rows = map_replicates(_sample_chunk_components if components else _sample_chunk, config, n_trials, threads)
    a = np.array(rows, dtype=np.int64).reshape(-1, 4)
    return SampleStats(a[:, 0], a[:, 1], a[:, 2].astype(bool), a[:, 3] if components else None)


# tail experiment ----------------------------------------------------------


@dataclass
class TailResult:
    curve: TailCurve
    sizes: np.ndarray
    escaped: np.ndarray

    @property
    def censoring_fraction(self) -> float:
        return float(self.escaped.mean()) if self.escaped.size else 0.0

    @property
    def unreliable(self) -> bool:
        return self.censoring_fraction > UNRELIABLE_CENSORING

    def fit(self, fit_range=None, **kw) -> DecayFit:
        return fit_decay(self.curve, fit_range, bootstrap_sizes=self.sizes, bootstrap_censored=self.escaped, **kw)


def tail_experiment(config: ModelConfig, n_grid, n_trials: int, threads: int = 1) -> TailResult:
    """``P(|W_rho| > n)`` from direct samples; escaped samples exceed every ``n``."""
    grid = np.asarray(list(n_grid), dtype=np.int64)
    if grid.size and grid.max() >= config.graph.n_vertices:
        raise ValueError(f"grid point {grid.max()} exceeds the window size {config.graph.n_vertices}")
    stats = sample_batch(config, n_trials, threads)
    return TailResult(TailCurve.from_samples(stats.size_wrho, grid, stats.escaped), stats.size_wrho, stats.escaped)


# p sweep --------------------------------------------------------------------


@dataclass
class SweepResult:
    p: np.ndarray
    reach: np.ndarray
    trials: int
    pc_lower: float | None

    @property
    def frequency(self) -> np.ndarray:
        return self.reach / self.trials

    def rows(self):
        for p, k in zip(self.p.tolist(), self.reach.tolist()):
            lo, hi = wilson(k, self.trials)
            yield (p, k / self.trials, lo, hi)


def _sweep_chunk(args, reps: range) -> list[list[bool]]:
    config, grid = args
    out = []
    for r in reps:
        u = draw_uniforms(config, r)
        out.append([assemble(config, u, p).escaped for p in grid])
    return out


def sweep_p(config: ModelConfig, p_grid, n_trials: int, threads: int = 1, profile: GrowthProfile | None = None) -> SweepResult:
    """Frequency of ``W_rho`` reaching the window boundary along a p grid.

    The same uniforms serve every grid point, so the counts are nondecreasing
    in ``p`` realization by realization.
    """
    grid = sorted(float(p) for p in p_grid)
    rows = map_replicates(_sweep_chunk, (config, grid), n_trials, threads) if n_trials else []
    reach = np.array(rows, dtype=bool).reshape(-1, len(grid)).sum(axis=0).astype(np.int64)
    pc = None
    if profile is not None:
        try:
            pc = pc_lower_bound(profile, config.law)
        except InconclusiveSeries:
            pc = None
    return SweepResult(np.array(grid), reach, n_trials, pc)


# coupling verification ------------------------------------------------------


@dataclass
class VerifyReport:
    trials: int
    failures: dict[str, int]
    skipped: int
    overshoot_balls: int = 0
    dead_end_keys: int = 0

    @property
    def passed(self) -> bool:
        return all(self.failures[k] == 0 for k in CHECKS)

    def rows(self):
        for name in CHECKS + DIAGNOSTICS:
            yield (name, self.trials, self.failures.get(name, 0))


def _verify_chunk(args, reps: range) -> list[tuple]:
    config, profile = args
    out = []
    for r in reps:
        a = audit_replicate(config, profile, r)
        bi = a.trace.ball_index
        dead = sum(1 for (x, rad) in a.trace.omega2 if bi.is_dead_end(x, rad))
        out.append((
            a.set_identity, a.inclusion, a.domination, a.marks_unique, a.omega2_consistent,
            a.slot_overflow, a.status, a.trace.overshoot_balls(), dead,
        ))
    return out


def verify_couplings(
    config: ModelConfig, n_trials: int, threads: int = 1, profile: GrowthProfile | None = None
) -> VerifyReport:
    """Exact per-replicate checks of the set identity, the inclusion and the domination.

    Runs on the graph as a finite graph (the exploration is not stopped at
    the window), so every replicate is checkable.
    """
    if profile is None:
        profile = growth_profile(config.graph, effective_cap(config))
    rows = map_replicates(_verify_chunk, (config, profile), n_trials, threads)
    fails = dict.fromkeys(CHECKS + DIAGNOSTICS, 0)
    skipped = overshoot = dead = 0
    for l1, l2, dom, uniq, cons, ovf, status, osb, de in rows:
        fails["set_identity"] += not l1
        fails["mark_uniqueness"] += not uniq
        fails["omega2_consistency"] += not cons
        fails["slot_overflow"] += ovf > 0
        overshoot += osb
        dead += de
        if l2 is None:
            skipped += 1
            fails["not_exhausted"] += 1
            continue
        fails["inclusion"] += not l2
        fails["domination"] += not dom
    return VerifyReport(n_trials, fails, skipped, overshoot, dead)


# single exploration ---------------------------------------------------------


def explore_report(config: ModelConfig, profile: GrowthProfile, replicate: int = 0) -> dict:
    """One exploration stopped at the window, with its coupled GW and audits."""
    real = sample_ppp(config, replicate)
    trace = explore(config, real, replicate)
    out = trace.to_dict()
    audits: dict = {"mark_uniqueness": trace.mark_uniqueness(), "omega2_consistency": trace.omega2_consistent()}
    coupling = coupled_gw(trace, profile, seed=config.seed, replicate=replicate)
    out["coupled_Z"] = coupling.Z
    audits["domination"] = coupling.dominates(trace.layer_sizes)
    audits["slot_overflow"] = coupling.slot_overflow
    if trace.status == EXHAUSTED:
        root = wet_component_array(config.graph, wet_from_Y(real, config.graph), config.rho)
        explored = np.zeros(config.graph.n_vertices, dtype=bool)
        if trace.layers:
            explored[trace.explored] = True
        audits["inclusion"] = bool(explored[root].all())
        out["size_wrho"] = int(root.size)
    else:
        audits["inclusion"] = None
    out["audits"] = audits
    return out
