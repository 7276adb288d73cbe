import math

import pytest

from comfix.hypotheses import (
    BOUNDED,
    UNBOUNDED,
    check_scenario,
    commutativity_defect,
    estimate_k,
    expansive_check,
    power_envelope,
    orbit_bounded,
    sample_pairs,
    self_map_check,
)
from comfix.maps import Iterate
from comfix.metric import BoxDomain, Metric, dist
from comfix.scenario import load_scenario, loads_scenario

from .conftest import pair_toml
from .oracles import DOTTIE

E = Metric.EUCLIDEAN


def box(lo, hi):
    return BoxDomain((float(lo),), (float(hi),))


def test_estimate_k_powers(make_table):
    env = make_table(f="x^2", g="x^3")
    est = estimate_k(env.fn("f"), env.fn("g"), box(1, 2), E, 91, 0)
    assert est.k_hat == pytest.approx(2 / 3, abs=5e-4)
    assert est.k_hat <= 2 / 3 + 1e-12
    x, y = est.witness
    assert x[0] < 1.01 and y[0] < 1.01
    assert est.verified(0.02)


def test_estimate_k_linear(make_table):
    env = make_table(g="x/2")
    est = estimate_k(env.fn("g"), env.fn("identity"), box(-1, 1), E, 91, 0)
    assert est.k_hat == pytest.approx(0.5, rel=1e-12)


def test_estimate_k_constant_contractor(make_table):
    env = make_table(g="0.5")
    est = estimate_k(env.fn("g"), env.fn("identity"), box(0, 1), E, 91, 0)
    assert est.k_hat < 1e-9
    assert est.verified(0.02)


def test_estimate_k_declared(make_table):
    env = make_table(g="x/2")
    est = estimate_k(env.fn("g"), env.fn("identity"), box(-1, 1), E, 91, 0)
    assert est.verified(0.02, k_declared=0.6)
    assert not est.verified(0.02, k_declared=0.4)


def test_estimate_k_rejects_wrong_orientation(make_table):
    env = make_table(a="x^15", b="x^14")
    est = estimate_k(env.fn("a"), env.fn("b"), box(1, 2), E, 91, 0)
    assert est.k_hat > 2.0  # grid oracle: sup ratio 2.142
    assert not est.verified(0.02)
    rev = estimate_k(env.fn("b"), env.fn("a"), box(1, 2), E, 91, 0)
    assert rev.k_hat == pytest.approx(14 / 15, abs=2e-3)
    assert rev.verified(0.02)


def test_estimate_k_violation_witness(make_table):
    # dominator collapses distinct points; the contractor does not
    env = make_table(g="x/2", f="x^2")
    est = estimate_k(env.fn("g"), env.fn("f"), box(-1, 1), E, 91, 0)
    assert est.n_violations > 0
    x, y = est.violations[0]
    assert dist(E, env.fn("f")(x), env.fn("f")(y)) <= 1e-9
    assert dist(E, env.fn("g")(x), env.fn("g")(y)) > 1e-9
    assert not est.verified(0.02)


def test_witness_reproduces(make_table):
    env = make_table(g="cos(x)")
    g, f = env.fn("g"), env.fn("identity")
    est = estimate_k(g, f, box(0, 1), E, 91, 3)
    x, y = est.witness
    ratio = dist(E, g(x), g(y)) / dist(E, f(x), f(y))
    assert ratio == pytest.approx(est.k_hat, rel=1e-12)
    assert est.k_hat == pytest.approx(math.sin(1.0), abs=1e-3)


def test_estimate_k_monotone_in_samples(make_table):
    env = make_table(g="sin(x)^2 + x/3")
    g, f = env.fn("g"), env.fn("identity")
    ks = [estimate_k(g, f, box(-2, 2), E, n, 5).k_hat for n in (5, 20, 60, 150)]
    assert ks == sorted(ks)


def test_estimate_k_deterministic(make_table):
    env = make_table(g="cos(x)")
    a = estimate_k(env.fn("g"), env.fn("identity"), box(0, 1), E, 40, 9)
    b = estimate_k(env.fn("g"), env.fn("identity"), box(0, 1), E, 40, 9)
    assert a == b


def test_sample_pairs_nested():
    small = sample_pairs(box(0, 1), 10, 4)
    big = sample_pairs(box(0, 1), 30, 4)
    big_set = {(big.points[i], big.points[j]) for i, j in zip(big.first, big.second)}
    for i, j in zip(small.first, small.second):
        assert (small.points[i], small.points[j]) in big_set


def test_commuting_powers(make_table):
    env = make_table(f="x^2", g="x^3")
    res = commutativity_defect(env.fn("f"), env.fn("g"), box(1, 2), E, 91, 0, tol_commute=1e-9)
    assert res.commuting
    assert res.defect <= 1e-12 * 64


def test_noncommuting_defect_one(make_table):
    env = make_table(f="x+1", g="2*x")
    res = commutativity_defect(env.fn("f"), env.fn("g"), box(0, 1), E, 91, 0, tol_commute=1e-9)
    assert res.defect == pytest.approx(1.0, abs=1e-12)
    assert not res.commuting
    (x,) = res.witness
    assert abs((2 * x + 2) - (2 * x + 1)) == pytest.approx(res.defect)


def test_printed_pair_not_commuting(make_table):
    env = make_table(f="-x/2 + 3/4", g="x*exp(2*x+1)")
    res = commutativity_defect(env.fn("f"), env.fn("g"), box(0.5, 0.75), E, 91, 0, tol_commute=1e-9)
    assert res.defect > 1.0
    assert not res.commuting


def test_self_map_cos(make_table):
    env = make_table(g="cos(x)")
    assert self_map_check(env.fn("g"), box(0, 1), 91, 0, 1e-9).ok


def test_self_map_square_escapes(make_table):
    env = make_table(f="x^2")
    res = self_map_check(env.fn("f"), box(1, 10), 91, 0, 1e-9, name="f")
    assert not res.ok
    assert res.escaping_point[0] > 3.17  # anything above sqrt(10) escapes
    assert res.image[0] == pytest.approx(res.escaping_point[0] ** 2)


def test_self_map_identity(make_table):
    env = make_table()
    assert self_map_check(env.fn("identity"), BoxDomain((-5.0, 2.0), (3.0, 2.0)), 91, 0, 0.0).ok


def test_self_map_into_larger_space(make_table):
    env = make_table(f="x^2")
    res = self_map_check(env.fn("f"), box(1, 10), 91, 0, 1e-9, space=box(1, math.inf))
    assert res.ok


def test_orbit_constant(make_table):
    env = make_table(g="x^3")
    res = orbit_bounded(env.fn("g"), (1.0,), E, 10_000, 1e6)
    assert res.verdict == BOUNDED
    assert res.radius == 0.0


def test_orbit_divergent(make_table):
    env = make_table(f="x+1")
    res = orbit_bounded(env.fn("f"), (0.0,), E, 10_000_000, 1e6, growth_floor=1.0)
    assert res.verdict == UNBOUNDED
    assert res.steps < 1000


def test_orbit_divergent_cap_only(make_table):
    env = make_table(f="x+1")
    res = orbit_bounded(env.fn("f"), (0.0,), E, 2_000_000, 1e6, growth_floor=math.inf)
    assert res.verdict == UNBOUNDED
    assert res.steps == pytest.approx(1e6, abs=2)


def test_orbit_cos(make_table):
    env = make_table(g="cos(x)")
    res = orbit_bounded(env.fn("g"), (0.0,), E, 10_000, 1e6, tol_step=1e-13)
    assert res.verdict == BOUNDED
    assert res.last[0] == pytest.approx(DOTTIE, abs=1e-10)


def test_expansive_examples(make_table):
    env = make_table(a="2*x", b="x/2", c="x^2")
    r = expansive_check(env.fn("a"), 1, box(0, 1), E, 91, 0)
    assert r.k_low == pytest.approx(2.0, rel=1e-12) and r.holds
    r = expansive_check(env.fn("b"), 1, box(0, 1), E, 91, 0)
    assert r.k_low == pytest.approx(0.5, rel=1e-12) and not r.holds
    r = expansive_check(env.fn("c"), 1, box(1, 2), E, 91, 0)
    assert r.k_low == pytest.approx(2.0, abs=1e-3) and r.k_low >= 2.0 and r.holds
    r = expansive_check(env.fn("c"), 1, box(0.5, 2), E, 91, 0)
    assert r.k_low == pytest.approx(1.0, abs=1e-3) and not r.holds


def test_expansive_power(make_table):
    env = make_table(a="2*x")
    assert expansive_check(env.fn("a"), 3, box(0, 1), E, 30, 0).k_low == pytest.approx(8.0)


def test_power_envelope_holds_for_powers(make_table):
    env = make_table(f="x^3", g="x^2")
    est = estimate_k(env.fn("g"), env.fn("f"), box(1, 1.2), E, 40, 0)
    pairs = [((1.0 + i / 100,), (1.0 + j / 100,)) for i in range(20) for j in range(i)]
    assert power_envelope(env.fn("g"), env.fn("f"), pairs, est.k_hat, E, n_max=4) == []


def test_power_envelope_detects_too_small_k(make_table):
    env = make_table(g="x/2")
    pairs = [((0.0,), (1.0,))]
    viol = power_envelope(env.fn("g"), env.fn("identity"), pairs, 0.4, E)
    assert viol and viol[0].n == 1


def test_check_example1_passes():
    rep = check_scenario(load_scenario("example1"))
    assert rep.passed
    (est,) = rep.contraction
    assert 0.6660 <= est.k_hat <= 0.6674


def test_check_printed_example_fails():
    rep = check_scenario(load_scenario("example2_as_printed"))
    assert "self_mapping(g)" in rep.failures
    assert "commutativity(f,g)" in rep.failures or "commutativity(g,f)" in rep.failures
    g_res = next(r for r in rep.self_mapping if r.map == "g")
    assert g_res.escaping_point == (0.5,)
    assert g_res.image[0] == pytest.approx(0.5 * math.e**2, abs=1e-12)


def test_check_evaluation_error_recorded():
    sc = loads_scenario(pair_toml("sqrt(x)", "x", -1.0, 1.0, 0.0))
    rep = check_scenario(sc)
    assert not rep.passed
    assert any("contraction" in f for f in rep.failures)


def test_check_powers_orientation():
    from comfix.scenario import PairProblem

    sc = load_scenario("proposition_powers")
    assert check_scenario(sc).passed
    prob = sc.problem
    flipped = sc.with_problem(PairProblem(prob.dominator, prob.contractor))
    rep = check_scenario(flipped)
    assert f"contraction({prob.dominator},{prob.contractor})" in rep.failures


def test_iterate_pair_envelope(make_table):
    env = make_table(a="cos(x)", a3=Iterate("a", 3))
    est = estimate_k(env.fn("a3"), env.fn("a"), box(0, 1), E, 60, 1)
    assert est.k_hat < math.sin(1.0) ** 2 + 1e-9
