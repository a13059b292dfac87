import json
import math

import numpy as np
import pytest

from hypdrift import (diagnostics as dg, geometry as geo, gibbs as gb,
                      groups as gr, walk as wk)


# -------------------------------------------------------------------- drift

def test_drift_uniform_f2(f2_uniform):
    est = dg.drift(f2_uniform, 2000, 500, seed=3)
    assert est.value == pytest.approx(0.5, abs=0.01)
    assert abs(est.value - est.extra["half_horizon_value"]) <= 4 * est.stderr + 0.01


def test_drift_uniform_f3(f3_uniform):
    est = dg.drift(f3_uniform, 2000, 400, seed=3)
    assert est.value == pytest.approx(2.0 / 3.0, abs=0.01)


def test_drift_schottky(schottky_uniform):
    est = dg.drift(schottky_uniform, 2000, 400, seed=11)
    assert est.value == pytest.approx(0.866, abs=0.02)


def test_drift_reflection_symmetry(f2):
    mu = wk.make_measure(f2, [("a", 0.4), ("A", 0.2), ("b", 0.2), ("B", 0.2)])
    a = dg.drift(mu, 2000, 400, seed=5)
    b = dg.drift(wk.reflect(mu), 2000, 400, seed=6)
    assert abs(a.value - b.value) <= 3.0 * math.hypot(a.stderr, b.stderr)


# ------------------------------------------------------------------- entropy

def test_entropy_green_drift_f2(f2_uniform):
    est = dg.entropy(f2_uniform, method="green-drift", n=2000, batch=400, seed=7)
    assert est.value == pytest.approx(0.5 * math.log(3.0), abs=0.01)


def test_entropy_exact_convolution_f2(f2_uniform):
    est = dg.entropy(f2_uniform, method="exact-convolution", conv_n=12)
    truth = 0.5 * math.log(3.0)
    assert abs(est.value - truth) <= 3.0 * est.stderr + 0.005
    assert est.extra["upper_bound"] >= truth - 1e-9


def test_entropy_methods_agree(f2_uniform):
    a = dg.entropy(f2_uniform, method="green-drift", n=2000, batch=400, seed=7)
    b = dg.entropy(f2_uniform, method="exact-convolution", conv_n=12)
    assert abs(a.value - b.value) <= 3.0 * math.hypot(a.stderr, b.stderr)


def test_entropy_auto_dispatch(f2_uniform, modular_uniform):
    a = dg.entropy(f2_uniform, n=500, batch=100, seed=1, conv_n=8)
    assert a.method == "green-drift"
    b = dg.entropy(modular_uniform, conv_n=10)
    assert b.method == "exact-convolution"


def test_entropy_green_drift_plane_rejected(modular_uniform):
    with pytest.raises(ValueError):
        dg.entropy(modular_uniform, method="green-drift", n=200, batch=50, seed=1)


# ----------------------------------------------------------- harmonic measure

def test_harmonic_shadow_mass_f2(f2_uniform):
    sh = geo.Shadow(geo.TREE_BASE, geo.TreePoint("a"), 0.0)
    est = dg.harmonic_shadow_mass(f2_uniform, sh, 60, 4000, seed=3)
    assert abs(est.value - 0.25) <= 4.0 * est.stderr


def test_harmonic_shadow_partition(f2_uniform):
    tot = 0.0
    for i, w in enumerate("a A b B".split()):
        sh = geo.Shadow(geo.TREE_BASE, geo.TreePoint(w), 0.0)
        tot += dg.harmonic_shadow_mass(f2_uniform, sh, 60, 2000, seed=3).value
    assert tot == pytest.approx(1.0, abs=1e-12)


def test_harmonic_shadow_horizon_guard(f2_uniform):
    sh = geo.Shadow(geo.TREE_BASE, geo.TreePoint("abab" * 10), 0.0)
    with pytest.raises(ValueError):
        dg.harmonic_shadow_mass(f2_uniform, sh, 30, 500, seed=3)


# --------------------------------------------------------- inequality report

@pytest.fixture(scope="module")
def f2_report(f2, f2_uniform):
    return dg.inequality_report(
        f2, f2_uniform, gb.Zero(),
        {"n": 2000, "batch": 400, "seed": 7, "radius": 10,
         "window": [4, 10], "conv_n": 11})


def test_inequality_report_equality_case(f2_report):
    rep = f2_report
    assert rep.verdict == "equality-consistent"
    assert rep.ell.value == pytest.approx(0.5, abs=0.01)
    assert rep.v_f.value == pytest.approx(math.log(3.0), abs=0.01)
    assert rep.ell_f.value == pytest.approx(0.0, abs=1e-12)
    assert abs(rep.gap) <= 2.0 * rep.gap_stderr


def test_inequality_report_guivarch_bound(f2_report):
    # h <= ell * v within noise: the gap may not be significantly negative
    assert f2_report.gap >= -3.0 * f2_report.gap_stderr


def test_inequality_report_json(f2_report):
    blob = json.loads(json.dumps(f2_report.to_json()))
    assert blob["verdict"] == "equality-consistent"
    assert set(blob) >= {"h", "ell", "v_f", "ell_f", "gap", "gap_stderr"}


def test_inequality_constant_shift_invariance(f2, f2_uniform, f2_report):
    # adding a constant c to F shifts v_F and ell_F but not the gap
    rep_c = dg.inequality_report(
        f2, f2_uniform, gb.Constant(1.0),
        {"n": 2000, "batch": 400, "seed": 7, "radius": 10,
         "window": [4, 10], "conv_n": 11})
    assert rep_c.verdict == "equality-consistent"
    assert rep_c.v_f.value - f2_report.v_f.value == pytest.approx(1.0, abs=1e-9)
    assert abs(rep_c.gap - f2_report.gap) <= 2.0 * math.hypot(
        rep_c.gap_stderr, f2_report.gap_stderr)


# ---------------------------------------------------------- metric deviation

def test_metric_deviation_f2(f2, f2_uniform):
    ball = gr.orbit_ball(f2, 4)
    rep = dg.metric_deviation_report(f2, f2_uniform, gb.Zero(), ball,
                                     v_hat=math.log(3.0))
    assert rep.max_abs_deviation <= 1e-6
    assert rep.relancona_violations == 0


def test_metric_deviation_biased_bounded(f2):
    mu = wk.make_measure(f2, [("a", 0.4), ("A", 0.2), ("b", 0.2), ("B", 0.2)])
    ball = gr.orbit_ball(f2, 4)
    rep = dg.metric_deviation_report(f2, mu, gb.Zero(), ball,
                                     v_hat=math.log(3.0))
    assert np.isfinite(rep.max_abs_deviation)
    assert rep.relancona_violations == 0


# ------------------------------------------------------------ deviation tails

def test_deviation_tail_f2(f2_uniform):
    out = dg.deviation_tail(f2_uniform, k=50, n=150, a_grid=range(0, 6),
                            batch=4000, seed=13)
    tails = out["tail"]
    assert all(tails[i + 1] <= tails[i] + 1e-12 for i in range(len(tails) - 1))
    assert out["slope"] <= -0.3
    assert not out["degenerate"]


def test_deviation_tail_schottky(schottky_uniform):
    out = dg.deviation_tail(schottky_uniform, k=100, n=250, a_grid=range(1, 6),
                            batch=4000, seed=13)
    assert out["slope"] <= -0.3


# ----------------------------------------------------------------- green decay

def test_green_decay_biased_f2(f2):
    mu = wk.make_measure(f2, [("a", 0.4), ("A", 0.2), ("b", 0.2), ("B", 0.2)])
    ball = gr.orbit_ball(f2, 4)
    out = dg.green_decay_check(mu, ball, method="truncated-convolution",
                               band=(0.3, 3.5))
    assert out["passes"]
    assert 0.3 <= out["min_ratio"] <= out["max_ratio"] <= 3.5


# ------------------------------------------------------------- shadow ratios

def test_shadow_ratio_stats_tree(f2, f2_uniform, f2_ball12):
    atoms = gb.patterson_atoms(f2_ball12, gb.Zero(), math.log(3.0) + 0.1,
                               v_hat=math.log(3.0), tail_tol=2.0)
    rows = dg.shadow_ratio_stats(f2_uniform, gb.Zero(), atoms, [20, 40],
                                 batch=200, seed=17)
    for row in rows:
        assert row["p_ge_0.5"] >= 0.9
        assert abs(row["psi_over_n_mean"]) <= 0.05
    assert rows[-1]["cesaro_mean"] > 0.5
