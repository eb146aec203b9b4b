import math

import pytest

from boolperc.bounds import (
    FAILS,
    HOLDS,
    InconclusiveSeries,
    active_branches,
    bounds_report,
    check_expo,
    check_subcritical,
    expo_series,
    format_table,
    pc_lower_bound,
    phi,
    phi_closed_form_bound,
    psi,
    subcritical_series,
    xi_log_mgf_bound,
    xi_mean,
)
from boolperc.exceptions import HorizonError
from boolperc.graph import growth_profile, oriented_tree_ball, regular_tree_profile, z_window
from boolperc.laws import RadiusLaw
from boolperc.series import INFINITE


@pytest.fixture(scope="module")
def zprof():
    return growth_profile(z_window(1, 2, 60), 60)


@pytest.fixture(scope="module")
def tprof():
    return growth_profile(oriented_tree_ball(2, 1, 6), 6)


def test_phi_values(zprof, tprof):
    assert [phi(zprof, n) for n in range(4)] == [0, 2, 14, 39]
    assert phi(tprof, 2) == 15


def test_pc_deterministic(zprof):
    assert pc_lower_bound(zprof, RadiusLaw.deterministic(3)) == 1 / 39


def test_subcritical_boundary_is_strict(zprof):
    r = check_subcritical(zprof, RadiusLaw.deterministic(3), 1 / 39)
    assert r.value == pytest.approx(1.0, rel=1e-15)
    assert r.verdict == FAILS
    assert check_subcritical(zprof, RadiusLaw.deterministic(3), 0.02).holds


def test_bernoulli_reduction(zprof, tprof):
    one = RadiusLaw.deterministic(1)
    assert pc_lower_bound(zprof, one) == 0.5
    assert pc_lower_bound(tprof, one) == 1 / 3


def test_xi_mean_z_det2(zprof):
    assert xi_mean(zprof, RadiusLaw.deterministic(2), 0.05) == pytest.approx(0.7, rel=1e-15)


def test_psi_direct(zprof):
    t = 0.1
    direct = sum(zprof.c_top[r - 1] * math.exp(t * zprof.c[r - 1]) for r in range(1, 6))
    assert psi(zprof, t, 5) == pytest.approx(direct, rel=1e-14)


def test_closed_form_bound_dominates(zprof, tprof):
    for prof in (zprof, tprof):
        for n in range(1, 7):
            assert phi(prof, n) <= phi_closed_form_bound(prof.delta, n)
    assert phi_closed_form_bound(3, 10_000) == math.inf


def test_uncapped_geometric_on_z(zprof):
    law = RadiusLaw.geometric(0.5)
    pc = pc_lower_bound(zprof, law)
    assert 0.02 < pc < 0.04
    assert check_subcritical(zprof, law, pc * 0.99).holds
    assert not check_subcritical(zprof, law, pc * 1.01).holds


def test_regular_tree_diverges():
    prof = regular_tree_profile(3, 80)
    assert pc_lower_bound(prof, RadiusLaw.geometric(0.5)) == 0.0
    assert subcritical_series(prof, RadiusLaw.geometric(0.5), 0.1).status == INFINITE
    assert subcritical_series(prof, RadiusLaw.geometric(0.5), 0.0).value == 0.0


def test_short_horizon_is_inconclusive():
    prof = growth_profile(z_window(1, 2, 5), 5)
    with pytest.raises(InconclusiveSeries):
        pc_lower_bound(prof, RadiusLaw.geometric(0.5))
    with pytest.raises(HorizonError):
        pc_lower_bound(prof, RadiusLaw.deterministic(6))


def test_expo_and_mgf(zprof):
    law = RadiusLaw.geometric(0.5, cap=12)
    r = check_expo(zprof, law, 0.1, 0.1)
    assert r.verdict == HOLDS
    assert xi_log_mgf_bound(zprof, law, 0.1, 0.1) == pytest.approx(zprof.delta * r.value)
    tree = regular_tree_profile(3, 60)
    assert check_expo(tree, RadiusLaw.geometric(0.5), 0.1, 0.1).verdict == FAILS
    assert expo_series(zprof, law, 0.0, 0.1).value == 0.0


def test_branches(zprof):
    assert active_branches(zprof)[:3] == ["delta_s", "delta_s", "c_top"]


def test_report(zprof):
    rep = bounds_report(zprof, RadiusLaw.geometric(0.5, cap=12), 0.1, 0.1, pc_site=0.5)
    d = rep.to_dict()
    assert d["subcritical_verdict"] == FAILS
    assert d["expo_verdict"] == HOLDS
    assert "site" in d["notes"]
    assert d["pc_lower"] == pytest.approx(pc_lower_bound(zprof, RadiusLaw.geometric(0.5, cap=12)))
    assert "pc_lower" in format_table(rep)
