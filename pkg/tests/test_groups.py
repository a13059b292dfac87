import math

import numpy as np
import pytest

from hypdrift import geometry as geo, groups as gr


# ------------------------------------------------------------- ball census

def test_free_ball_census(f2):
    # |B(3)| = 1 + 4 + 4*3 + 4*9 = 53 reduced words of length <= 3
    ball = gr.orbit_ball(f2, 3)
    assert len(ball) == 53
    assert ball.complete
    lens = sorted(len(w) for w in ball.words)
    assert lens.count(0) == 1 and lens.count(1) == 4
    assert lens.count(2) == 12 and lens.count(3) == 36


def test_free_ball_words_reduced(f2):
    ball = gr.orbit_ball(f2, 4)
    for w in ball.words:
        assert geo.reduce_word(w) == w


def test_modular_ball_matches_bfs(modular):
    fast = gr.orbit_ball(modular, 4)
    slow = gr.bfs_ball(modular, 4, depth=12)
    assert len(fast) == len(slow) == 162
    assert np.allclose(np.sort(fast.disps), np.sort(slow.disps), atol=1e-9)


def test_ball_negative_radius_rejected(f2):
    with pytest.raises(ValueError):
        gr.orbit_ball(f2, -1.0)


def test_ball_cap_truncates(f2):
    ball = gr.orbit_ball(f2, 10, cap=100)
    assert not ball.complete
    assert ball.certificate["cap"] == 100


def test_ball_points_and_csv(tmp_path, modular):
    ball = gr.orbit_ball(modular, 3)
    re, im = ball.points()
    d = np.arccosh(1.0 + ((re - 0.0) ** 2 + (im - 1.0) ** 2) / (2.0 * im))
    assert np.allclose(np.sort(d), np.sort(ball.disps), atol=1e-9)
    p = tmp_path / "ball.csv"
    ball.to_csv(p)
    lines = p.read_text().strip().splitlines()
    assert lines[0] == "word,displacement"
    assert len(lines) == len(ball) + 1


# ----------------------------------------------------------------- actions

def test_free_group_structure(f2):
    assert f2.model == "tree"
    assert f2.letters == ["a", "b", "A", "B"]
    assert f2.free_rank == 2
    g = f2.element("abA")
    assert geo.apply(g, geo.TREE_BASE).word == "abA"


def test_schottky_ping_pong_certificate(schottky):
    assert schottky.model == "plane"
    assert schottky.convex_cocompact
    assert schottky.free_rank == 2
    for s in schottky.letters:
        m = schottky.gens[s].mat
        assert abs(np.linalg.det(m) - 1.0) < 1e-9


def test_modular_generators(modular):
    s = modular.gens["s"].mat
    t = modular.gens["t"].mat
    assert np.allclose(s @ s, -np.eye(2)) or np.allclose(s @ s, np.eye(2))
    st = s @ t
    cube = st @ st @ st
    assert np.allclose(np.abs(cube), np.eye(2), atol=1e-9)
    assert modular.has_parabolics
    assert modular.parabolic_letter == "t"


def test_modular_word_roundtrip(modular):
    assert gr.modular_word((1, 1, 0, 1)) == "t"
    assert gr.modular_word((0, -1, 1, 0)) == "s"
    ball = gr.orbit_ball(modular, 4)
    for i in range(len(ball)):
        abcd = tuple(int(v) for v in ball.int_mats[i])
        w = gr.modular_word(abcd)
        m = modular.element(w).mat
        got = np.round(m).astype(np.int64).reshape(-1)
        assert tuple(got) == abcd or tuple(-got) == abcd


def test_word_norm(modular, f2):
    assert gr.word_norm(modular, modular.element("ttttt")) == 5
    assert gr.word_norm(modular, modular.element("s")) == 1
    assert gr.word_norm(modular, modular.element("")) == 0
    assert gr.word_norm(f2, f2.element("abAB")) == 4


# ------------------------------------------------------------------ growth

def test_critical_exponent_free(f2_ball12):
    est = gr.critical_exponent(f2_ball12, (4, 12))
    assert est.value == pytest.approx(math.log(3), abs=0.01)


def test_critical_exponent_f3(f3):
    ball = gr.orbit_ball(f3, 8)
    est = gr.critical_exponent(ball, (3, 8))
    assert est.value == pytest.approx(math.log(5), abs=0.01)


def test_critical_exponent_modular(modular_ball12):
    est = gr.critical_exponent(modular_ball12, (4, 12))
    assert est.value == pytest.approx(1.0, abs=0.05)


def test_critical_exponent_window_checks(f2_ball12):
    with pytest.raises(ValueError):
        gr.critical_exponent(f2_ball12, (4, 20))
    with pytest.raises(ValueError):
        gr.critical_exponent(f2_ball12, (10, 12))


# ------------------------------------------------------- parabolic distortion

def test_parabolic_distortion(modular):
    rep = gr.parabolic_distortion_report(modular, N=60, fit_lo=8)
    assert 0.45 <= rep["log_c"] <= 0.55
    certified = [r for r in rep["rows"] if r["certified"]]
    assert all(r["word_norm"] == r["n"] for r in certified)
    r10 = rep["rows"][9]
    assert r10["displacement"] == pytest.approx(math.acosh(51.0), abs=1e-9)


def test_parabolic_distortion_needs_parabolics(f2):
    with pytest.raises(ValueError):
        gr.parabolic_distortion_report(f2)
