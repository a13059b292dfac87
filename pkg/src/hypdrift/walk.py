"""Random-walk engine: step measures, seeded path sampling, exact
convolution powers, Green functions and the Green metric, Green
Busemann functions, reflection.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from . import groups as gr
from ._estimate import Estimate
from . import _kernels as K

MOMENT_BASES = (2, 4, 8)


# ----------------------------------------------------------------- measures

@dataclass(frozen=True)
class WalkMeasure:
    action: gr.GroupAction
    support: tuple  # ((word, prob), ...) canonical words, probs normalized
    symmetric: bool
    moments: dict  # base -> sum of base^|g| mu(g)

    @property
    def words(self):
        return [w for w, _ in self.support]

    @property
    def probs(self) -> np.ndarray:
        return np.array([p for _, p in self.support])

    @property
    def cumprob(self) -> np.ndarray:
        c = np.cumsum(self.probs)
        c[-1] = 1.0
        return c

    def is_nearest_neighbor_free(self) -> bool:
        """Single-letter support on a free action (tree or Schottky)."""
        return self.action.free_rank is not None and all(
            len(w) == 1 for w in self.words
        )

    # --- kernel-facing representations -----------------------------------
    def letter_codes(self) -> tuple:
        """(sup_words (S, W) int8, sup_lens (S,)) letter-index encoding for
        tree kernels; letters indexed by action.letters order."""
        letters = self.action.letters
        W = max(len(w) for w in self.words)
        S = len(self.words)
        arr = np.full((S, W), -1, dtype=np.int8)
        lens = np.zeros(S, dtype=np.int64)
        for i, w in enumerate(self.words):
            lens[i] = len(w)
            for j, ch in enumerate(w):
                arr[i, j] = letters.index(ch)
        return arr, lens

    def support_matrices(self) -> np.ndarray:
        return np.stack([self.action.element(w).mat for w in self.words])

    def canonical_key(self, g):
        return canonical_key(self.action, g)


def canonical_key(action: gr.GroupAction, g):
    """Hashable canonical form of a group element (word or Isometry)."""
    if action.model == "tree":
        word = g.word if isinstance(g, geo.TreeIsometry) else geo.reduce_word(g)
        return word
    mat = g.mat if isinstance(g, geo.PlaneIsometry) else action.element(g).mat
    ints = np.round(mat)
    if np.abs(mat - ints).max() < 1e-9:
        v = ints.reshape(-1).astype(np.int64)
        for x in v:
            if x != 0:
                if x < 0:
                    v = -v
                break
        return (int(v[0]), int(v[1]), int(v[2]), int(v[3]))
    return gr._proj_key(mat)


def make_measure(action: gr.GroupAction, spec) -> WalkMeasure:
    """Build a normalized step measure from (word, weight) pairs."""
    merged = {}
    order = []
    for word, wt in spec:
        if wt <= 0:
            raise ValueError("weights must be positive")
        w = geo.reduce_word(word) if action.model == "tree" else word
        if w not in merged:
            merged[w] = 0.0
            order.append(w)
        merged[w] += float(wt)
    if len(order) < 2:
        raise ValueError("degenerate support (needs >= 2 elements)")
    total = sum(merged.values())
    support = tuple((w, merged[w] / total) for w in order)

    # semigroup generation check: products of support words must reach every
    # generator and inverse within depth 6
    targets = {canonical_key(action, action.element(s)) for s in action.letters}
    seen = {canonical_key(action, action.element("")): None}
    frontier = [action.element("")]
    for _ in range(6):
        nxt = []
        for g in frontier:
            for w, _ in support:
                h = g @ action.element(w)
                k = canonical_key(action, h)
                if k not in seen:
                    seen[k] = None
                    nxt.append(h)
        frontier = nxt
        if targets <= set(seen):
            break
    if not targets <= set(seen):
        missing = targets - set(seen)
        raise ValueError("support does not generate the group as a semigroup "
                         "(unreached: %d generator(s))" % len(missing))

    by_key = {canonical_key(action, action.element(w)): p for w, p in support}
    symmetric = True
    for w, p in support:
        kinv = canonical_key(action, action.element(w).inv())
        if abs(by_key.get(kinv, 0.0) - p) > 1e-12:
            symmetric = False
            break

    norms = [_support_norm(action, w) for w, _ in support]
    moments = {
        c: float(sum(p * c ** nrm for (_, p), nrm in zip(support, norms)))
        for c in MOMENT_BASES
    }
    return WalkMeasure(action=action, support=support, symmetric=symmetric, moments=moments)


def _support_norm(action: gr.GroupAction, word: str) -> int:
    if action.model == "tree":
        return len(geo.reduce_word(word))
    try:
        return gr.word_norm(action, word, depth_cap=max(len(word), 4))
    except gr.CapExceeded:
        return len(word)


def reflect(measure: WalkMeasure) -> WalkMeasure:
    """Reflected walk: mu_check(g) = mu(g^-1)."""
    action = measure.action
    spec = []
    for w, p in measure.support:
        spec.append((geo.word_inv(w), p))
    return make_measure(action, spec)


# -------------------------------------------------------------------- paths

@dataclass
class SamplePath:
    seed: int
    index: int
    increments: list  # words
    measure: WalkMeasure

    def positions(self):
        """omega_k = g_1 ... g_k as isometries (cached on first call)."""
        if not hasattr(self, "_pos"):
            act = self.measure.action
            cur = act.element("")
            out = []
            for w in self.increments:
                cur = cur @ act.element(w)
                out.append(cur)
            self._pos = out
        return self._pos


@dataclass
class SamplePathBatch:
    measure: WalkMeasure
    seed: int
    inc: np.ndarray  # (batch, n) support indices

    @property
    def batch(self) -> int:
        return self.inc.shape[0]

    @property
    def n(self) -> int:
        return self.inc.shape[1]

    def path(self, i: int) -> SamplePath:
        words = [self.measure.words[j] for j in self.inc[i]]
        return SamplePath(seed=self.seed, index=i, increments=words, measure=self.measure)

    def to_jsonl(self, path) -> None:
        with open(path, "w") as fh:
            for i in range(self.batch):
                rec = {
                    "seed": self.seed,
                    "path": i,
                    "increments": [self.measure.words[j] for j in self.inc[i]],
                }
                fh.write(json.dumps(rec, sort_keys=True) + "\n")


def sample_paths(measure: WalkMeasure, n: int, batch: int, seed: int) -> SamplePathBatch:
    """Seed-deterministic batch of i.i.d.-increment paths. Path i draws
    from an independent splitmix64 stream keyed by (seed, i), so results
    do not depend on thread count or evaluation order."""
    if n < 1 or batch < 1:
        raise ValueError("n and batch must be >= 1")
    inc = K.sample_increments(seed, batch, n, measure.cumprob)
    return SamplePathBatch(measure=measure, seed=seed, inc=inc)


# ------------------------------------------------------------- convolutions

@dataclass
class Convolution:
    """Exact distribution mu^{*n} as canonical-key -> probability."""

    n: int
    probs: dict

    def total(self) -> float:
        return float(sum(self.probs.values()))

    def entropy(self) -> float:
        return float(-sum(p * math.log(p) for p in self.probs.values() if p > 0))

    def prob(self, key) -> float:
        return self.probs.get(key, 0.0)

    def __len__(self):
        return len(self.probs)


def convolution_sequence(measure: WalkMeasure, n: int, cap: int = 5_000_000):
    """Yield the exact distributions mu^{*1} .. mu^{*n} in one sweep."""
    act = measure.action
    step = [(canonical_key(act, act.element(w)), act.element(w), p)
            for w, p in measure.support]
    if act.model == "tree":
        cur = {"": 1.0}
        for m in range(1, n + 1):
            nxt = {}
            for w, p in cur.items():
                for _, g, q in step:
                    w2 = geo.word_mul(w, g.word)
                    nxt[w2] = nxt.get(w2, 0.0) + p * q
            if len(nxt) > cap:
                raise gr.CapExceeded("convolution support exceeded cap %d" % cap)
            cur = nxt
            yield Convolution(n=m, probs=cur)
        return
    # plane: carry matrices alongside canonical keys
    cur = {canonical_key(act, act.element("")): (np.eye(2), 1.0)}
    for m in range(1, n + 1):
        nxt = {}
        for key, (mat, p) in cur.items():
            for _, g, q in step:
                m2 = mat @ g.mat
                k2 = canonical_key(act, geo.PlaneIsometry(m2))
                if k2 in nxt:
                    nxt[k2] = (nxt[k2][0], nxt[k2][1] + p * q)
                else:
                    nxt[k2] = (m2, p * q)
        if len(nxt) > cap:
            raise gr.CapExceeded("convolution support exceeded cap %d" % cap)
        cur = nxt
        yield Convolution(n=m, probs={k: p for k, (mat, p) in cur.items()})


def convolution_power(measure: WalkMeasure, n: int, cap: int = 5_000_000) -> Convolution:
    out = None
    for out in convolution_sequence(measure, n, cap):
        pass
    return out


# ----------------------------------------------------- first-passage series

def first_passage_probs(measure: WalkMeasure) -> dict:
    """Letter -> probability of ever hitting that letter's vertex, for a
    nearest-neighbor measure on a free action. Fixed-point iteration on
    F_x = mu(x) + sum_{y != x} mu(y) F_{y^-1} F_x."""
    if not measure.is_nearest_neighbor_free():
        raise ValueError("first-passage closed form needs single-letter "
                         "support on a free action")
    letters = measure.words
    mu = dict(measure.support)
    F = {x: mu[x] for x in letters}
    for _ in range(10000):
        mx = 0.0
        for x in letters:
            s = sum(mu[y] * F[_inv(y)] for y in letters if y != x)
            new = mu[x] / (1.0 - s) if s < 1.0 else 1.0
            mx = max(mx, abs(new - F[x]))
            F[x] = new
        if mx < 1e-15:
            break
    return F


def _inv(letter: str) -> str:
    return letter.swapcase()


def first_passage_series(measure: WalkMeasure, N: int) -> dict:
    """Power series (in the time variable) of the first-passage functions
    F_x(z), truncated at order N; plus the Green series G(z) at the key
    "__green__". Coefficient n of F_x is P(first hit of x at time n)."""
    if not measure.is_nearest_neighbor_free():
        raise ValueError("series engine needs single-letter support on a free action")
    letters = measure.words
    mu = dict(measure.support)
    F = {x: np.zeros(N + 1) for x in letters}
    for _ in range(N + 2):
        newF = {}
        for x in letters:
            s = np.zeros(N + 1)
            for y in letters:
                if y == x:
                    continue
                s += mu[y] * _series_mul(F[_inv(y)], F[x], N)
            # F_x(z) = z mu(x) + z * s(z)
            arr = np.zeros(N + 1)
            if N >= 1:
                arr[1] = mu[x]
                arr[1:] += s[:-1]
            newF[x] = arr
        if all(np.allclose(newF[x], F[x], atol=1e-18) for x in letters):
            F = newF
            break
        F = newF
    U = np.zeros(N + 1)
    for y in letters:
        U[1:] += mu[y] * F[_inv(y)][:-1]
    G = np.zeros(N + 1)
    G[0] = 1.0
    for n in range(1, N + 1):
        G[n] = float(np.dot(U[1 : n + 1], G[n - 1 :: -1][: n]))
    out = dict(F)
    out["__green__"] = G
    return out


def _series_mul(a: np.ndarray, b: np.ndarray, N: int) -> np.ndarray:
    return np.convolve(a, b)[: N + 1]


def transition_series(measure: WalkMeasure, word: str, N: int) -> np.ndarray:
    """Exact mu^{*n}(g) for n = 0..N, for nearest-neighbor free measures:
    convolution of the first-passage series along the reduced word with
    the Green (return) series."""
    ser = first_passage_series(measure, N)
    acc = ser["__green__"].copy()
    for ch in geo.reduce_word(word):
        acc = _series_mul(ser[ch], acc, N)
    # G(e,g)(z) = prod_j F_{x_j}(z) * G(z); coefficient n = mu^{*n}(g)
    return acc


# ------------------------------------------------------------ green function

def green_function(measure: WalkMeasure, g, method: str = "auto",
                   N: int | None = None, M: int = 200_000,
                   seed: int = 1) -> Estimate:
    """G(e, g) = sum_n mu^{*n}(g), by one of three engines."""
    word = g.word if isinstance(g, geo.TreeIsometry) else g
    if isinstance(word, geo.PlaneIsometry):
        raise TypeError("pass plane elements as generator words")
    if method == "auto":
        method = "exact-recursive" if measure.is_nearest_neighbor_free() \
            else "truncated-convolution"
    if method == "exact-recursive":
        F = first_passage_probs(measure)
        mu = dict(measure.support)
        U = sum(mu[y] * F[_inv(y)] for y in measure.words)
        Gee = 1.0 / (1.0 - U)
        val = Gee
        for ch in geo.reduce_word(word):
            val *= F[ch]
        return Estimate(value=val, stderr=0.0, n=0, method="exact-recursive",
                        extra={"green_at_e": Gee})
    if method == "truncated-convolution":
        if N is None:
            N = 40 + 10 * len(geo.reduce_word(word)) if measure.action.model == "tree" \
                else 40 + 10 * len(word)
        if measure.is_nearest_neighbor_free():
            coeffs = transition_series(measure, word, N)
            val = float(coeffs.sum())
            tail = _tail_bound(coeffs)
        else:
            act = measure.action
            target = canonical_key(act, act.element(word))
            coeffs = _convolution_coeffs(measure, target, N)
            val = float(coeffs.sum())
            tail = _tail_bound(coeffs)
        if val > 0 and tail > 0.1 * val:
            raise ValueError("horizon too small: truncation bound %.3g "
                             "exceeds 10%% of value %.3g" % (tail, val))
        return Estimate(value=val, stderr=0.0, n=N, method="truncated-convolution",
                        extra={"horizon": N, "truncation_bound": tail})
    if method == "monte-carlo":
        if measure.action.model != "tree":
            raise ValueError("monte-carlo green is implemented for tree models")
        if N is None:
            N = 40 + 10 * len(geo.reduce_word(word))
        sw, sl = measure.letter_codes()
        letters = measure.action.letters
        red = geo.reduce_word(word)
        tg = np.full((1, max(len(red), 1)), -1, dtype=np.int8)
        for j, ch in enumerate(red):
            tg[0, j] = letters.index(ch)
        tl = np.array([len(red)], dtype=np.int64)
        inc = K.sample_increments(seed, M, N, measure.cumprob)
        visits = K.tree_green_visits(inc, sw, sl, len(letters), tg, tl)[:, 0]
        mean = float(visits.mean())
        stderr = float(visits.std(ddof=1) / math.sqrt(M))
        return Estimate(value=mean, stderr=stderr, n=M, seed=seed,
                        method="monte-carlo", extra={"horizon": N})
    raise ValueError("unknown green method %r" % method)


def _tail_bound(coeffs: np.ndarray) -> float:
    """Geometric tail bound from the observed decay of the last terms."""
    nz = np.nonzero(coeffs > 0)[0]
    if len(nz) < 6:
        return 0.0
    last = nz[-3:]
    if len(last) < 2 or coeffs[last[-2]] <= 0:
        return 0.0
    step = last[-1] - last[-2]
    r = (coeffs[last[-1]] / coeffs[last[-2]]) ** (1.0 / step)
    if r >= 1.0:
        return float("inf")
    return float(coeffs[last[-1]] * r / (1.0 - r))


def _convolution_coeffs(measure: WalkMeasure, target_key, N: int) -> np.ndarray:
    """mu^{*n}(target) for n <= N by generic exact convolution (plane)."""
    act = measure.action
    step = [(act.element(w).mat, p) for w, p in measure.support]
    cur = {canonical_key(act, act.element("")): (np.eye(2), 1.0)}
    out = np.zeros(N + 1)
    out[0] = cur.get(target_key, (None, 0.0))[1] if target_key in cur else 0.0
    for n in range(1, N + 1):
        nxt = {}
        for key, (m, p) in cur.items():
            for gm, q in step:
                m2 = m @ gm
                k2 = canonical_key(act, geo.PlaneIsometry(m2))
                if k2 in nxt:
                    nxt[k2] = (nxt[k2][0], nxt[k2][1] + p * q)
                else:
                    nxt[k2] = (m2, p * q)
        cur = nxt
        if target_key in cur:
            out[n] = cur[target_key][1]
    return out


def green_metric(measure: WalkMeasure, g, method: str = "auto", **kw) -> float:
    """d_G(e, g) = -log(G(e,g) / G(e,e))."""
    est = green_function(measure, g, method=method, **kw)
    if method == "auto" and measure.is_nearest_neighbor_free():
        gee = est.extra["green_at_e"]
    else:
        eword = ""
        gee = green_function(measure, eword, method=est.method, **kw).value
    if est.value <= 0:
        return float("inf")
    return -math.log(est.value / gee)


def green_busemann(measure: WalkMeasure, g, zeta, approach, **kw) -> Estimate:
    """Green Busemann function along an approach sequence g_n -> zeta:
    the limit of d_G(g, g_n) - d_G(e, g_n), reduced to based values by
    left invariance. Returns the last difference plus the Cauchy
    increments of the sequence as a convergence diagnostic."""
    if len(approach) < 4:
        raise ValueError("need an approach sequence of length >= 4")
    act = measure.action
    gw = g.word if isinstance(g, geo.TreeIsometry) else g
    vals = []
    for an in approach:
        aw = an.word if isinstance(an, geo.TreeIsometry) else an
        if act.model == "tree":
            rel = geo.word_mul(geo.word_inv(gw), aw)
        else:
            rel_mat = act.element(gw).inv().mat @ act.element(aw).mat
            rel = _plane_word_of(act, rel_mat, gw, aw)
        d1 = green_metric(measure, rel, **kw)
        d2 = green_metric(measure, aw, **kw)
        vals.append(d1 - d2)
    incs = [abs(vals[i + 1] - vals[i]) for i in range(len(vals) - 1)]
    cauchy = all(incs[i + 1] <= incs[i] + 1e-12 for i in range(len(incs) - 1))
    return Estimate(
        value=vals[-1], stderr=float(incs[-1]), n=len(approach),
        method="green-busemann",
        extra={"increments": incs, "cauchy": cauchy, "sequence": vals},
    )


def _plane_word_of(act, mat, gw, aw):
    if act.name == "modular":
        ints = np.round(mat).astype(np.int64).reshape(-1)
        return gr.modular_word(tuple(ints))
    # free plane action: reduce the concatenated word
    return geo.reduce_word(geo.word_inv(gw) + aw)


# --------------------------------------------------------------- CSV export

def green_csv(measure: WalkMeasure, words, path, method: str = "auto", **kw) -> None:
    act = measure.action
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["element", "displacement", "green_value", "stderr", "method"])
        for word in words:
            est = green_function(measure, word, method=method, **kw)
            d = geo.dist(act.base, act.position(word))
            w.writerow([word, "%.12g" % d, "%.12g" % est.value,
                        "%.3g" % est.stderr, est.method])
