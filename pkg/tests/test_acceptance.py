"""Numbered acceptance criteria; each test prints one PASS/FAIL line in the summary."""

import json
import math
import subprocess
import sys

import numpy as np
import pytest

from boolperc.bounds import (
    check_expo,
    check_subcritical,
    pc_lower_bound,
    phi,
    phi_closed_form_bound,
    psi,
    xi_log_mgf_bound,
    xi_mean,
)
from boolperc.experiments import default_threads, profile_for, tail_experiment, verify_couplings
from boolperc.graph import (
    growth_profile,
    oriented_tree_ball,
    random_digraph,
    regular_tree_profile,
    z_window,
)
from boolperc.gw import XiLaw
from boolperc.laws import RadiusLaw
from boolperc.model import ModelConfig
from boolperc.ppp import PppRealization
from boolperc.sampler import count_covering_balls, sample_direct
from boolperc.stats import dkw_epsilon

from conftest import dist_matrix, oracle_phi, oracle_profile, report

pytestmark = pytest.mark.acceptance

BATCH = 10_000
COUPLING_BATCHES = {
    "Z window (801 vertices)": ModelConfig(
        0.1, RadiusLaw.deterministic(2), {"kind": "z_window", "d": 1, "half_width": 398, "halo": 2}, 101
    ),
    "oriented tree d=2 depth 8": ModelConfig(
        0.1, RadiusLaw.geometric(0.5, cap=3), {"kind": "oriented_tree_ball", "d": 2, "depth": 8, "halo": 3}, 102
    ),
    "random digraph n=200": ModelConfig(
        0.2,
        RadiusLaw.geometric(0.5, cap=3),
        {"kind": "random_digraph", "n": 200, "mean_out_degree": 1.5, "seed": 3},
        103,
    ),
}
CAPPED_LAWS = {
    "deterministic(3)": RadiusLaw.deterministic(3),
    "geometric(1/2) cap 12": RadiusLaw.geometric(0.5, cap=12),
    "zeta(2.5) cap 10": RadiusLaw.zeta(2.5, cap=10),
    "table": RadiusLaw.table([0.1, 0.2, 0.3, 0.4]),
}


@pytest.fixture(scope="module")
def coupling_reports():
    threads = default_threads()
    return {name: verify_couplings(c, BATCH, threads=threads) for name, c in COUPLING_BATCHES.items()}


def _batch_detail(reports, key):
    return "; ".join(f"{name}: {r.failures[key]}/{r.trials} failures, {r.skipped} skipped" for name, r in reports.items())


@pytest.mark.slow
def test_criterion_01_set_identity(coupling_reports):
    ok = all(r.failures["set_identity"] == 0 and r.trials == BATCH for r in coupling_reports.values())
    report(1, ok, "wet set from marks equals wet set from Y; " + _batch_detail(coupling_reports, "set_identity"))
    assert ok


@pytest.mark.slow
def test_criterion_02_inclusion(coupling_reports):
    ok = all(r.failures["inclusion"] == 0 and r.skipped == 0 for r in coupling_reports.values())
    report(2, ok, "W_rho inside the explored layers; " + _batch_detail(coupling_reports, "inclusion"))
    assert ok


@pytest.mark.slow
def test_criterion_03_domination(coupling_reports):
    ok = all(r.failures["domination"] == 0 and r.skipped == 0 for r in coupling_reports.values())
    report(3, ok, "|C_n| <= Z_n on every layer; " + _batch_detail(coupling_reports, "domination"))
    assert ok


def test_criterion_04_y_distribution():
    law = RadiusLaw.geometric(0.5, cap=12)
    n = 100_000
    eps = dkw_epsilon(n, 0.01)
    worst = {}
    for p in (0.1, 0.5):
        Y = PppRealization(law, p, seed=404, n_vertices=n).Y_all()
        counts = np.bincount(Y, minlength=13)
        emp = np.cumsum(counts) / n
        q = np.array([law.q(p, k) for k in range(13)])
        worst[p] = float(np.abs(emp[:13] - q).max())
    ok = all(v < eps for v in worst.values())
    report(4, ok, f"sup |F_emp - q| = {worst[0.1]:.2e} (p=0.1), {worst[0.5]:.2e} (p=0.5); DKW 99% eps = {eps:.2e}")
    assert ok


def test_criterion_05_moment_identities():
    prof = growth_profile(z_window(1, 2, 12), 12)
    fs = {
        "n": lambda k: float(k),
        "n^2": lambda k: float(k * k),
        "phi": lambda k: float(phi(prof, k)),
        "psi_0.1": lambda k: psi(prof, 0.1, k),
    }
    worst = 0.0
    for law in CAPPED_LAWS.values():
        for f in fs.values():
            direct = law.expect_f(f).value
            for p in (0.05, 0.3, 0.9):
                tele = law.expect_f_telescoping(p, f).value
                worst = max(worst, abs(tele - direct) / abs(direct))
        e_phi = law.expect_f(fs["phi"]).value
        for p in (0.01, 0.1):
            s = check_subcritical(prof, law, p).value
            worst = max(worst, abs(s - p * e_phi) / (p * e_phi))
    ok = worst <= 1e-10
    report(5, ok, f"max relative gap over {len(CAPPED_LAWS)} laws, 4 functions and the subcritical sum = {worst:.1e} (tol 1e-10)")
    assert ok


def test_criterion_06_xi_calibration():
    prof = growth_profile(z_window(1, 2, 2), 2)
    law, p, t = RadiusLaw.deterministic(2), 0.05, 0.1
    xi = XiLaw.build(prof, law, p)
    draws = xi.sample(np.random.default_rng(606), 100_000).astype(float)
    mean_target = xi_mean(prof, law, p)
    se = draws.std(ddof=1) / math.sqrt(draws.size)
    e = np.exp(t * draws)
    log_mgf = math.log(e.mean())
    se_log = e.std(ddof=1) / math.sqrt(e.size) / e.mean()
    bound = xi_log_mgf_bound(prof, law, p, t)
    ok = abs(draws.mean() - mean_target) <= 3 * se and log_mgf <= bound + 3 * se_log and mean_target == pytest.approx(0.7)
    report(
        6,
        ok,
        f"mean {draws.mean():.4f} vs {mean_target:.4f} (3 SE = {3 * se:.4f}); "
        f"log E[e^0.1 xi] = {log_mgf:.4f} <= bound {bound:.4f} + 3 SE {3 * se_log:.4f}",
    )
    assert ok


def test_criterion_07_bernoulli_reduction():
    one = RadiusLaw.deterministic(1)
    specs = [
        {"kind": "z_window", "d": 1, "half_width": 50, "halo": 1},
        {"kind": "oriented_tree_ball", "d": 2, "depth": 5, "halo": 1},
        {"kind": "random_digraph", "n": 100, "mean_out_degree": 1.5, "seed": 7},
    ]
    mismatches = 0
    for spec in specs:
        c = ModelConfig(0.4, one, spec, 707)
        mismatches += sum(not np.array_equal(s.wet, s.sigma) for s in (sample_direct(c, replicate=r) for r in range(2000)))
    pz = pc_lower_bound(growth_profile(z_window(1, 2, 1), 1), one)
    pt = pc_lower_bound(growth_profile(oriented_tree_ball(2, 1, 1), 1), one)
    ok = mismatches == 0 and pz == 0.5 and pt == 1 / 3
    report(7, ok, f"W != activation mask on {mismatches}/6000 replicates; pc lower bound Z = {pz}, tree = {pt!r}")
    assert ok


def _interior(g):
    return list(g._measured())


def test_criterion_08_enumeration():
    notes = []
    zg = z_window(1, 6, 3)
    zp = growth_profile(zg, 3)
    c, ct, s, st = oracle_profile(zg, 3, _interior(zg))
    z_ok = (
        zp.c == (1, 3, 5)
        and zp.s[:3] == (1, 2, 2)
        and list(zp.c) == c
        and list(zp.s) == s
        and phi(zp, 3) == 39 == oracle_phi(c, ct, st, zg.delta, 3)
    )
    notes.append(f"Z: c={zp.c}, s={zp.s[:3]}, phi(3)={phi(zp, 3)}")
    tg = oriented_tree_ball(2, 2, 3)
    tp = growth_profile(tg, 3)
    c, ct, s, st = oracle_profile(tg, 3, _interior(tg))
    t_ok = phi(tp, 2) == 15 == oracle_phi(c, ct, st, tg.delta, 2) and list(tp.c) == c and list(tp.c_top) == ct
    notes.append(f"tree: phi(2)={phi(tp, 2)}")

    families = {
        "Z^1": growth_profile(z_window(1, 1, 10), 10),
        "Z^2": growth_profile(z_window(2, 1, 10), 10),
        "oriented tree d=2": growth_profile(oriented_tree_ball(2, 1, 10), 10),
        "random digraph": growth_profile(random_digraph(200, 1.5, seed=3), 10),
        "3-regular tree": regular_tree_profile(3, 10),
    }
    worst = 0.0
    for prof in families.values():
        for n in range(0, 11):
            bound = phi_closed_form_bound(prof.delta, n)
            worst = max(worst, phi(prof, n) / bound if bound else 0.0)
    b_ok = worst <= 1.0
    notes.append(f"max phi(n)/closed-form bound over {len(families)} families, n<=10: {worst:.3f}")
    ok = z_ok and t_ok and b_ok
    report(8, ok, "; ".join(notes))
    assert ok


@pytest.mark.slow
def test_criterion_09_tree_covering_count():
    law, d, p = RadiusLaw.geometric(0.5, cap=3), 2, 0.3
    c = ModelConfig(p, law, {"kind": "oriented_tree_ball", "d": d, "depth": 10, "halo": 3}, 909)
    counts = np.array([count_covering_balls(sample_direct(c, replicate=r), c.rho) for r in range(BATCH)], dtype=float)
    dist_to_root = dist_matrix(c.graph)[:, c.rho]
    # p * sum_x sum_{r > d(x, rho)} nu(r)
    exact = p * sum(sum(law.pmf(r) for r in range(int(k) + 1, 4)) for k in dist_to_root if np.isfinite(k))
    infinite_tree = p * (sum(law.pmf(r) * d**r for r in range(1, 4)) - 1) / (d - 1)
    se = counts.std(ddof=1) / math.sqrt(counts.size)
    ok = abs(counts.mean() - exact) <= 3 * se
    report(
        9,
        ok,
        f"mean {counts.mean():.4f} vs window double sum {exact:.4f} (3 SE = {3 * se:.4f}); "
        f"infinite-tree value p(E[d^R]-1)/(d-1) = {infinite_tree:.4f}",
    )
    assert ok
    assert exact == pytest.approx(infinite_tree, rel=1e-12)


DECAY_SPEC = {"kind": "z_window", "d": 1, "half_width": 400, "halo": 12}
DECAY_LAW = RadiusLaw.geometric(0.5, cap=12)


def _decay_run(p, fit_range, n_trials=100_000):
    c = ModelConfig(p, DECAY_LAW, DECAY_SPEC, 1010)
    prof = profile_for(c, 12)
    sub = check_subcritical(prof, DECAY_LAW, p)
    expo = check_expo(prof, DECAY_LAW, p, 0.1)
    res = tail_experiment(c, range(0, 61), n_trials, threads=default_threads())
    fit = res.fit(fit_range, confidence=0.99, rng=np.random.default_rng(10))
    return sub, expo, res, fit


@pytest.mark.slow
def test_criterion_10_exponential_decay():
    sub, expo, res, fit = _decay_run(0.1, (1, 40))
    decay_ok = fit.decaying and fit.ci[1] < 0 and fit.r2 > 0.9 and res.censoring_fraction < 0.05
    ok = sub.holds and expo.holds and decay_ok
    report(
        10,
        ok,
        f"check_subcritical sum = {sub.value:.3f} ({sub.verdict}); check_expo {expo.verdict}; "
        f"lambda_hat = {fit.lam:.4f}, 99% slope CI ({fit.ci[0]:.4f}, {fit.ci[1]:.4f}), R^2 = {fit.r2:.3f}, "
        f"censoring {res.censoring_fraction:.2%}",
    )
    assert sub.holds, f"p = 0.1 is not certified subcritical: sum = {sub.value:.4f} >= 1"
    assert expo.holds and decay_ok


@pytest.mark.slow
def test_exponential_decay_in_certified_regime():
    prof = profile_for(ModelConfig(0.01, DECAY_LAW, DECAY_SPEC, 0), 12)
    p = 0.9 * pc_lower_bound(prof, DECAY_LAW)
    sub, expo, res, fit = _decay_run(p, (1, 12))
    assert sub.holds and expo.holds
    assert fit.decaying and fit.ci[1] < 0 and fit.r2 > 0.9 and res.censoring_fraction < 0.05


def test_criterion_11_reproducibility(tmp_path):
    cfg = {
        "graph": {"kind": "z_window", "d": 2, "half_width": 8, "halo": 3},
        "law": {"kind": "geometric", "a": 0.5, "cap": 3},
        "model": {"p": 0.005, "seed": 1111},
        "experiment": {"trials": 300, "n_grid": list(range(0, 20)), "p_grid": [0.0, 0.02, 0.1, 0.3]},
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    commands = ("sample", "tail", "gw", "sweep", "verify")
    outs = []
    for run in ("a", "b"):
        for cmd in commands:
            subprocess.run(
                [sys.executable, "-m", "boolperc", cmd, "--config", str(path), "--out", str(tmp_path / run), "--threads", "2"],
                check=True,
                capture_output=True,
            )
        outs.append({f.name: f.read_bytes() for f in sorted((tmp_path / run).glob("*.csv"))})
    ok = outs[0] == outs[1] and len(outs[0]) == len(commands)
    report(11, ok, f"{len(outs[0])} CSV files byte-identical across two runs: {', '.join(outs[0])}")
    assert ok
