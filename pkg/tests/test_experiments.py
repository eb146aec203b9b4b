import math

import numpy as np
import pytest

from boolperc.bounds import pc_lower_bound
from boolperc.experiments import (
    default_horizon,
    explore_report,
    profile_for,
    sample_batch,
    sweep_p,
    tail_experiment,
    verify_couplings,
    write_csv,
)
from boolperc.graph import growth_profile
from boolperc.laws import RadiusLaw
from boolperc.model import ModelConfig

from conftest import dist_matrix


def zcfg(hw, p, law=None, halo=3, d=1, seed=1):
    law = law or RadiusLaw.geometric(0.5, cap=3)
    return ModelConfig(p, law, {"kind": "z_window", "d": d, "half_width": hw, "halo": halo}, seed)


def test_tail_p_zero():
    res = tail_experiment(zcfg(10, 0.0), range(0, 5), 200)
    assert not res.curve.estimate.any() and res.censoring_fraction == 0.0


def test_tail_at_zero_is_coverage_probability():
    c = zcfg(5, 0.15, d=2)
    D = dist_matrix(c.graph)[:, c.rho]
    exact = 1.0 - math.prod(1.0 - c.p * c.law.tail(int(d)) for d in D if d < 3)
    n = 10_000
    res = tail_experiment(c, [0], n)
    assert abs(res.curve.estimate[0] - exact) < 4 * math.sqrt(exact * (1 - exact) / n)


def test_nested_windows_tail_monotone():
    small, big = zcfg(8, 0.3), zcfg(16, 0.3)
    grid = range(0, 16)
    a = tail_experiment(small, grid, 2000)
    b = tail_experiment(big, grid, 2000)
    assert np.all(b.curve.exceed <= a.curve.exceed)
    assert b.censoring_fraction <= a.censoring_fraction


def test_grid_beyond_window_rejected():
    with pytest.raises(ValueError, match="window size"):
        tail_experiment(zcfg(3, 0.1), [100], 10)


def test_sweep_monotone_and_extremes():
    c = zcfg(6, 0.1, d=2)
    res = sweep_p(c, [0.0, 0.02, 0.1, 0.3, 1.0], 300, profile=profile_for(c, 3))
    assert np.all(np.diff(res.reach) >= 0)
    assert res.reach[0] == 0 and res.reach[-1] == 300
    assert res.pc_lower == pytest.approx(pc_lower_bound(profile_for(c, 3), c.law))
    assert [r[0] for r in res.rows()] == res.p.tolist()


def test_sweep_below_bound_shrinks_with_window():
    law = RadiusLaw.geometric(0.5, cap=3)
    pc = pc_lower_bound(profile_for(zcfg(4, 0.1, law), 3), law)
    grid = [pc / 2, pc]
    small = sweep_p(zcfg(4, 0.1, law), grid, 3000)
    big = sweep_p(zcfg(16, 0.1, law), grid, 3000)
    assert np.all(big.reach <= small.reach)


def test_verify_p_zero_and_finite_graph():
    rep = verify_couplings(zcfg(6, 0.0, d=2), 50)
    assert rep.passed and rep.skipped == 0 and all(v == 0 for v in rep.failures.values())
    c = ModelConfig(0.2, RadiusLaw.geometric(0.5, cap=3), {"kind": "random_digraph", "n": 80, "mean_out_degree": 1.2, "seed": 6}, 2)
    rep = verify_couplings(c, 200)
    assert rep.passed and rep.dead_end_keys > 0


def test_threads_do_not_change_results():
    c = zcfg(10, 0.25)
    a = sample_batch(c, 64, threads=1, components=True)
    b = sample_batch(c, 64, threads=2, components=True)
    assert all(np.array_equal(x, y) for x, y in zip(list(a.rows(1)), list(b.rows(1))))
    va = verify_couplings(c, 40, threads=1)
    vb = verify_couplings(c, 40, threads=2)
    assert va == vb


def test_explore_report_shape():
    c = zcfg(20, 0.2)
    out = explore_report(c, growth_profile(c.graph, 3), replicate=4)
    assert set(out["audits"]) >= {"domination", "mark_uniqueness", "omega2_consistency", "inclusion", "slot_overflow"}
    assert out["audits"]["domination"] and out["audits"]["mark_uniqueness"]


def test_profile_proxy_matches_full_window():
    c = zcfg(3, 0.1, halo=1, d=2)
    full = growth_profile(zcfg(2, 0.1, halo=4, d=2).graph, 4)
    assert profile_for(c, 4) == full


def test_default_horizon():
    assert default_horizon(zcfg(3, 0.1)) == 3
    assert default_horizon(zcfg(3, 0.1, RadiusLaw.geometric(0.5))) == 60
    assert default_horizon(zcfg(3, 0.1), 7) == 7


def test_csv_floats_round_trip(tmp_path):
    path = write_csv(tmp_path / "x.csv", ["a", "b"], [(1, 0.1 + 0.2)])
    assert path.read_text() == "a,b\n1,0.30000000000000004\n"
