import math

import numpy as np
import pytest

from hypdrift import geometry as geo, walk as wk


# ----------------------------------------------------------------- measures

def test_make_measure_normalises(f2, f2_uniform):
    assert np.allclose(f2_uniform.probs, 0.25)
    assert f2_uniform.is_nearest_neighbor_free()
    biased = wk.make_measure(f2, [("a", 0.4), ("A", 0.2), ("b", 0.2), ("B", 0.2)])
    assert biased.probs.sum() == pytest.approx(1.0)
    assert dict(biased.support)["a"] == pytest.approx(0.4)


def test_make_measure_rejects_bad_weights(f2):
    with pytest.raises(ValueError):
        wk.make_measure(f2, [("a", -1.0), ("A", 1.0)])


def test_reflect(f2):
    mu = wk.make_measure(f2, [("a", 0.4), ("A", 0.2), ("b", 0.2), ("B", 0.2)])
    ref = wk.reflect(mu)
    assert dict(ref.support)["A"] == pytest.approx(0.4)
    assert dict(ref.support)["a"] == pytest.approx(0.2)
    back = wk.reflect(ref)
    assert dict(back.support) == pytest.approx(dict(mu.support))


def test_non_nearest_neighbor_support(f2):
    mu = wk.make_measure(
        f2, [("a", 1.0), ("A", 1.0), ("b", 1.0), ("B", 1.0), ("ab", 1.0)])
    assert not mu.is_nearest_neighbor_free()


# ------------------------------------------------------------------ sampling

def test_sample_paths_deterministic(f2_uniform):
    b1 = wk.sample_paths(f2_uniform, 50, 20, seed=9)
    b2 = wk.sample_paths(f2_uniform, 50, 20, seed=9)
    b3 = wk.sample_paths(f2_uniform, 50, 20, seed=10)
    assert b1.batch == 20 and b1.n == 50
    p1 = b1.path(0)
    p2 = b2.path(0)
    assert [x.word for x in p1.positions()] == [x.word for x in p2.positions()]
    assert any(
        [x.word for x in b1.path(i).positions()]
        != [x.word for x in b3.path(i).positions()]
        for i in range(20)
    )


def test_sample_paths_jsonl(tmp_path, f2_uniform):
    b = wk.sample_paths(f2_uniform, 10, 3, seed=1)
    p = tmp_path / "paths.jsonl"
    b.to_jsonl(p)
    assert len(p.read_text().strip().splitlines()) == 3


# ---------------------------------------------------------------- convolution

def test_convolution_power_conserves_mass(f2_uniform):
    c = wk.convolution_power(f2_uniform, 6)
    assert c.total() == pytest.approx(1.0, abs=1e-12)
    # support of mu^{*6} on F2: words of length 6, 4, 2, 0
    assert c.prob("") > 0 and c.prob("ab") > 0


def test_convolution_entropy_start(f2_uniform):
    c1 = wk.convolution_power(f2_uniform, 1)
    assert c1.entropy() == pytest.approx(math.log(4.0), abs=1e-12)


def test_convolution_entropy_increment_band(f2_uniform):
    seq = list(wk.convolution_sequence(f2_uniform, 13))
    H = [c.entropy() for c in seq]
    inc12 = H[11] - H[10]
    inc13 = H[12] - H[11]
    # increments decrease toward h = 0.5 log 3 ~ 0.5493 from above
    assert 0.549 <= inc13 <= inc12 <= 0.62
    assert all(H[i + 1] - H[i] >= H[i + 2] - H[i + 1] - 1e-9
               for i in range(len(H) - 2))


def test_convolution_cap(f2_uniform):
    with pytest.raises(wk.gr.CapExceeded):
        wk.convolution_power(f2_uniform, 12, cap=1000)


def test_plane_convolution_matches_tree(modular_uniform):
    c = wk.convolution_power(modular_uniform, 4)
    assert c.total() == pytest.approx(1.0, abs=1e-12)


# ------------------------------------------------------------ green functions

def test_first_passage_uniform_f2(f2_uniform):
    F = wk.first_passage_probs(f2_uniform)
    for ch in "aAbB":
        assert F[ch] == pytest.approx(1.0 / 3.0, abs=1e-12)


def test_green_exact_uniform_f2(f2_uniform):
    est = wk.green_function(f2_uniform, "", method="exact-recursive")
    assert est.value == pytest.approx(1.5, abs=1e-12)
    for word in ["a", "ab", "aba", "abab", "aBAb"]:
        got = wk.green_function(f2_uniform, word, method="exact-recursive").value
        assert got == pytest.approx(1.5 * 3.0 ** (-len(word)), abs=1e-12)


def test_green_truncated_matches_exact(f2_uniform):
    for word in ["", "a", "ab", "abA", "abAB"]:
        exact = 1.5 * 3.0 ** (-len(word))
        got = wk.green_function(
            f2_uniform, word, method="truncated-convolution", N=160)
        assert abs(got.value - exact) <= 1e-6
        assert got.extra["truncation_bound"] <= 1e-6


def test_green_truncated_bound_is_honest(f2_uniform):
    exact = 1.5 * 3.0 ** (-4)
    est = wk.green_function(f2_uniform, "abab",
                            method="truncated-convolution", N=40)
    assert abs(est.value - exact) <= est.extra["truncation_bound"] + 1e-12


def test_green_monte_carlo_agrees(f2_uniform):
    exact = 1.5 * 3.0 ** (-2)
    est = wk.green_function(f2_uniform, "ab", method="monte-carlo",
                            M=40_000, N=80, seed=4)
    assert abs(est.value - exact) <= 4.0 * est.stderr


def test_green_metric(f2_uniform):
    assert wk.green_metric(f2_uniform, "ab") == pytest.approx(
        2.0 * math.log(3.0), abs=1e-12)
    assert wk.green_metric(f2_uniform, "") == pytest.approx(0.0, abs=1e-12)


def test_green_metric_symmetric_uniform(f2_uniform):
    for w in ["ab", "aab", "abAB"]:
        winv = geo.word_inv(w)
        assert wk.green_metric(f2_uniform, w) == pytest.approx(
            wk.green_metric(f2_uniform, winv), abs=1e-12)


def test_green_busemann_free(f2_uniform):
    approach = ["a" * k for k in range(4, 11)]
    for g, want in [("a", -math.log(3.0)), ("A", math.log(3.0)),
                    ("b", math.log(3.0))]:
        est = wk.green_busemann(f2_uniform, g, None, approach)
        assert est.value == pytest.approx(want, abs=1e-9)
        assert est.extra["cauchy"]


def test_green_busemann_needs_sequence(f2_uniform):
    with pytest.raises(ValueError):
        wk.green_busemann(f2_uniform, "a", None, ["a", "aa"])


def test_green_csv(tmp_path, f2_uniform):
    p = tmp_path / "green.csv"
    wk.green_csv(f2_uniform, ["", "a", "ab"], p)
    lines = p.read_text().strip().splitlines()
    assert len(lines) == 4


def test_plane_green_truncated_guard(modular_uniform):
    # the modular walk mixes slowly: the truncation bound must refuse a
    # short horizon rather than report a biased value
    with pytest.raises(ValueError, match="horizon too small"):
        wk.green_function(modular_uniform, "t", method="truncated-convolution",
                          N=18)
