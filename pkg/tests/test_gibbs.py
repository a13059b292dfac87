import math

import numpy as np
import pytest

from hypdrift import geometry as geo, gibbs as gb, groups as gr, walk as wk


# --------------------------------------------------------------- potentials

def test_constant_potential_algebra():
    F = gb.Constant(0.75)
    assert F.shift == pytest.approx(0.75)
    assert not F.has_bump
    assert F.shifted(0.25).shift == pytest.approx(1.0)
    assert F.reflected().shift == pytest.approx(0.75)
    assert gb.Zero().shift == 0.0


def test_fake_distance_constant_scales_distance():
    x = geo.PlanePoint(0.3, 2.0)
    y = geo.PlanePoint(-1.0, 0.4)
    d = geo.dist(x, y)
    assert gb.fake_distance(gb.Zero(), x, y) == pytest.approx(0.0, abs=1e-12)
    assert gb.fake_distance(gb.Constant(2.0), x, y) == pytest.approx(
        2.0 * d, abs=1e-9)


def test_fake_distance_bump_symmetric(modular):
    F = gb.PlaneBump(modular, amplitude=1.0, rep_radius=6.0)
    x = geo.PlanePoint(0.3, 2.0)
    y = geo.PlanePoint(-1.5, 0.5)
    dxy = gb.fake_distance(F, x, y)
    dyx = gb.fake_distance(F, y, x)
    assert dxy == pytest.approx(dyx, rel=1e-6, abs=1e-8)
    assert 0.0 < dxy < float("inf")


def test_bump_rejected_on_tree(f2_uniform, modular):
    F = gb.PlaneBump(modular, amplitude=1.0, rep_radius=6.0)
    with pytest.raises(geo.ModelMismatch):
        gb.fake_drift(F, f2_uniform, 200, 50, 1)


def test_hc_validate(modular):
    F = gb.PlaneBump(modular, amplitude=1.0, rep_radius=6.0)
    out = gb.hc_validate(F, sample=300, seed=1)
    assert out["pass"]
    assert out["max_ratio"] <= 1.0


def test_gibbs_cocycle_constant_is_scaled_busemann():
    zeta = geo.PlaneBoundary(None)
    x = geo.PlanePoint(0.0, 2.0)
    y = geo.PlanePoint(0.0, 1.0)
    est = gb.gibbs_cocycle(gb.Constant(1.5), zeta, x, y)
    assert est.value == pytest.approx(1.5 * geo.busemann(zeta, x, y), abs=1e-6)
    assert est.extra["converging"]


# ----------------------------------------------------------------- pressure

def test_pressure_tree_zero(f2_ball12):
    est = gb.pressure(f2_ball12, gb.Zero(), (4, 12))
    assert est.value == pytest.approx(math.log(3.0), abs=1e-6)


def test_pressure_shift_covariance_tree(f2_ball12):
    v0 = gb.pressure(f2_ball12, gb.Zero(), (4, 12)).value
    for c in (-1.0, 0.5, 1.0):
        vc = gb.pressure(f2_ball12, gb.Constant(c), (4, 12)).value
        assert vc - v0 == pytest.approx(c, abs=1e-9)


def test_pressure_shift_covariance_modular(modular_ball12):
    v0 = gb.pressure(modular_ball12, gb.Zero(), (4, 12)).value
    v1 = gb.pressure(modular_ball12, gb.Constant(1.0), (4, 12)).value
    # shells are unevenly populated in displacement, so covariance is
    # exact only up to the shell-mean approximation
    assert v1 - v0 == pytest.approx(1.0, abs=0.02)
    assert v0 == pytest.approx(1.0, abs=0.05)


def test_pressure_empty_window_guard(f2_ball12):
    with pytest.raises(ValueError):
        gb.pressure(f2_ball12, gb.Zero(), (4, 20))


def test_shell_index():
    d = np.array([0.0, 0.5, 1.0, 1.2, 3.0])
    assert list(gb.shell_index(d)) == [0, 1, 1, 2, 3]


# ----------------------------------------------------------------- patterson

def test_patterson_atoms_and_shadow(f2_ball12):
    atoms = gb.patterson_atoms(f2_ball12, gb.Zero(), math.log(3.0) + 0.3)
    assert atoms.tail_ratio < 0.05
    sh = geo.Shadow(geo.TREE_BASE, geo.TreePoint("a"), 0.0)
    mass = gb.gibbs_shadow_mass(atoms, sh)
    # converges to 1/4 as s decreases to v; below it at finite s
    assert 0.1 <= mass <= 0.26


def test_patterson_requires_supercritical(f2_ball12):
    with pytest.raises(ValueError):
        gb.patterson_atoms(f2_ball12, gb.Zero(), math.log(3.0))


def test_shadow_mass_limit_exact_tree(f2_ball12):
    v = math.log(3.0)
    for word in ["a", "ab", "aba"]:
        got = gb.shadow_mass_limit(f2_ball12, gb.Zero(), v,
                                   geo.TreePoint(word), 0.0)
        assert got == pytest.approx(0.75 * 3.0 ** (-len(word)), abs=1e-9)


def test_shadow_mass_limit_partition(f2_ball12):
    v = math.log(3.0)
    tot = sum(
        gb.shadow_mass_limit(f2_ball12, gb.Zero(), v, geo.TreePoint(w), 0.0)
        for w in "a A b B".split())
    assert tot == pytest.approx(1.0, abs=1e-9)


# ---------------------------------------------------------------- fake drift

def test_fake_drift_constant_tree(f2_uniform):
    est = gb.fake_drift(gb.Constant(2.0), f2_uniform, 400, 400, 5)
    assert est.value == pytest.approx(1.0, abs=5.0 * est.stderr + 1e-3)


def test_fake_drift_zero(f2_uniform):
    est = gb.fake_drift(gb.Zero(), f2_uniform, 200, 100, 5)
    assert est.value == pytest.approx(0.0, abs=1e-12)


def test_fake_drift_constant_plane(modular_uniform):
    est = gb.fake_drift(gb.Constant(1.0), modular_uniform, 400, 300, 5)
    assert est.value == pytest.approx(0.088, abs=0.01)


def test_fake_drift_needs_horizon(f2_uniform):
    with pytest.raises(ValueError):
        gb.fake_drift(gb.Zero(), f2_uniform, 50, 10, 1)
