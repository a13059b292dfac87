"""Concrete group actions: free groups on trees, Schottky and modular
groups on the hyperbolic plane; orbit balls, word norms, critical
exponents, parabolic distortion.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from ._estimate import Estimate
from ._kernels import modular_ball as _modular_ball_kernel


def _letters(k: int) -> list[str]:
    return [chr(97 + i) for i in range(k)] + [chr(65 + i) for i in range(k)]


@dataclass(frozen=True)
class GroupAction:
    name: str
    model: str  # "plane" | "tree"
    gens: dict  # symbol -> Isometry, closed under inverse (X = x^-1)
    base: geo.Point
    has_parabolics: bool = False
    convex_cocompact: bool = False
    free_rank: int | None = None  # set when word norm == reduced length
    parabolic_letter: str | None = None

    @property
    def letters(self) -> list[str]:
        lo = sorted(s for s in self.gens if s.islower())
        return lo + [s.upper() for s in lo]

    def element(self, word: str):
        """Isometry of a generator word."""
        if self.model == "tree":
            return geo.TreeIsometry(geo.reduce_word(word))
        m = np.eye(2)
        for ch in word:
            m = m @ self.gens[ch].mat
        return geo.PlaneIsometry(m)

    def position(self, word: str) -> geo.Point:
        return geo.apply(self.element(word), self.base)

    def gen_matrices(self) -> np.ndarray:
        """Generator matrices stacked in self.letters order (plane only)."""
        return np.stack([self.gens[s].mat for s in self.letters])


def free_group(k: int) -> GroupAction:
    if k < 2:
        raise ValueError("free rank must be >= 2")
    gens = {}
    for i in range(k):
        gens[chr(97 + i)] = geo.TreeIsometry(chr(97 + i))
        gens[chr(65 + i)] = geo.TreeIsometry(chr(65 + i))
    return GroupAction(
        name="free-%d" % k,
        model="tree",
        gens=gens,
        base=geo.TREE_BASE,
        convex_cocompact=True,
        free_rank=k,
    )


def schottky_group() -> GroupAction:
    """Two hyperbolic Mobius maps in ping-pong position: a = diag(3, 1/3)
    (axis the imaginary half-line) and b its rotation by 90 degrees
    (axis from -1 to 1). The four ping-pong disks are pairwise disjoint,
    so the group is free of rank 2 and convex cocompact."""
    A = np.array([[3.0, 0.0], [0.0, 1.0 / 3.0]])
    c = math.sqrt(0.5)
    K = np.array([[c, c], [-c, c]])
    B = K @ A @ K.T
    gens = {
        "a": geo.PlaneIsometry(A),
        "A": geo.PlaneIsometry(np.linalg.inv(A)),
        "b": geo.PlaneIsometry(B),
        "B": geo.PlaneIsometry(np.linalg.inv(B)),
    }
    act = GroupAction(
        name="schottky",
        model="plane",
        gens=gens,
        base=geo.PLANE_BASE,
        convex_cocompact=True,
        free_rank=2,
    )
    _check_ping_pong(act)
    return act


def _check_ping_pong(act: GroupAction) -> None:
    """Verify the defining disk configuration of the Schottky generators.

    Ping-pong sets: a keeps |z| >= 3, a^-1 keeps |z| <= 1/3, b and b^-1
    keep the euclidean disks of radius 3/4 around +-5/4. Disjointness +
    a sample mapping check certify freeness."""
    disks = [
        ("a", None, 3.0, "outside"),  # |z| >= 3
        ("A", None, 1.0 / 3.0, "inside"),  # |z| <= 1/3
        ("b", -1.25, 0.75, "inside"),
        ("B", 1.25, 0.75, "inside"),
    ]
    regions = []
    for sym, cen, rad, side in disks:
        regions.append((sym, cen, rad, side))
    # pairwise disjoint (all centers real)
    pts = {"a": 4.0, "A": 0.1, "b": -1.25, "B": 1.25}

    def inside(region, x):
        sym, cen, rad, side = region
        if cen is None:
            return (abs(x) >= rad) if side == "outside" else (abs(x) <= rad)
        return abs(x - cen) <= rad

    for i, ri in enumerate(regions):
        for j, rj in enumerate(regions):
            if i != j and inside(rj, pts[ri[0]]):
                raise AssertionError("ping-pong regions overlap: %s, %s" % (ri[0], rj[0]))
    # each generator maps the complement of its inverse's region into its own
    rng = np.random.default_rng(0)
    for sym in "aAbB":
        inv = sym.swapcase()
        reg = dict((r[0], r) for r in regions)
        for _ in range(200):
            z = complex(rng.uniform(-6, 6), rng.uniform(0.05, 6))
            if inside_c(reg[inv], z):
                continue
            m = act.gens[sym].mat
            w = (m[0, 0] * z + m[0, 1]) / (m[1, 0] * z + m[1, 1])
            if not inside_c(reg[sym], w):
                raise AssertionError("ping-pong mapping check failed for %s" % sym)


def inside_c(region, z: complex) -> bool:
    sym, cen, rad, side = region
    if cen is None:
        return (abs(z) >= rad) if side == "outside" else (abs(z) <= rad)
    return abs(z - cen) <= rad


def modular_group() -> GroupAction:
    """PSL(2, Z) generated by s: z -> -1/z and the parabolic t: z -> z+1."""
    S = np.array([[0.0, -1.0], [1.0, 0.0]])
    T = np.array([[1.0, 1.0], [0.0, 1.0]])
    gens = {
        "s": geo.PlaneIsometry(S),
        "S": geo.PlaneIsometry(-S),  # s^-1 = -s ~ s projectively
        "t": geo.PlaneIsometry(T),
        "T": geo.PlaneIsometry(np.array([[1.0, -1.0], [0.0, 1.0]])),
    }
    return GroupAction(
        name="modular",
        model="plane",
        gens=gens,
        base=geo.PLANE_BASE,
        has_parabolics=True,
        parabolic_letter="t",
    )


BUILTIN_ACTIONS = {
    "free-2": lambda: free_group(2),
    "free-3": lambda: free_group(3),
    "schottky": schottky_group,
    "modular": modular_group,
}


# ------------------------------------------------------------- orbit balls

class CapExceeded(RuntimeError):
    pass


@dataclass
class OrbitBall:
    action: GroupAction
    radius: float
    disps: np.ndarray  # d(o, g o), ascending not guaranteed
    complete: bool
    certificate: dict
    words: list | None = None  # tree / small plane balls
    mats: np.ndarray | None = None  # plane balls: canonical matrices (N,2,2)
    int_mats: np.ndarray | None = None  # modular: integer (N,4) rows a,b,c,d

    def __len__(self):
        return len(self.disps)

    def points(self):
        """Orbit positions as coordinate arrays (re, im) or word list."""
        if self.action.model == "tree":
            return self.words
        if self.int_mats is not None:
            a, b, c, d = (self.int_mats[:, i].astype(np.float64) for i in range(4))
        else:
            a = self.mats[:, 0, 0]
            b = self.mats[:, 0, 1]
            c = self.mats[:, 1, 0]
            d = self.mats[:, 1, 1]
        den = c * c + d * d
        return (a * c + b * d) / den, 1.0 / den * np.abs(a * d - b * c)

    def word(self, i: int) -> str:
        if self.words is not None:
            return self.words[i]
        if self.int_mats is not None:
            return modular_word(tuple(int(v) for v in self.int_mats[i]))
        raise ValueError("no word representation stored for this ball")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["word", "displacement"])
            for i in range(len(self)):
                w.writerow([self.word(i), "%.12g" % self.disps[i]])


def orbit_ball(action: GroupAction, R: float, cap: int = 20_000_000) -> OrbitBall:
    if R < 0:
        raise ValueError("R must be >= 0")
    if action.model == "tree":
        return _tree_ball(action, R, cap)
    if action.name == "modular":
        return _modular_ball(action, R, cap)
    if action.free_rank is not None:
        return _free_plane_ball(action, R, cap)
    return bfs_ball(action, R, depth=int(2 * R) + 4, cap=cap)


def _tree_ball(action: GroupAction, R: float, cap: int) -> OrbitBall:
    L = int(math.floor(R + 1e-9))
    words = [""]
    level = [""]
    letters = action.letters
    for _ in range(L):
        nxt = []
        for w in level:
            for s in letters:
                if w and s == w[-1].swapcase():
                    continue
                nxt.append(w + s)
        level = nxt
        words.extend(level)
        if len(words) > cap:
            return OrbitBall(
                action, R, np.array([float(len(w)) for w in words[:cap]]),
                complete=False, certificate={"method": "tree-bfs", "cap": cap},
                words=words[:cap],
            )
    disps = np.array([float(len(w)) for w in words])
    return OrbitBall(
        action, R, disps, complete=True,
        certificate={"method": "tree-bfs", "depth": L}, words=words,
    )


def _free_plane_ball(action: GroupAction, R: float, cap: int) -> OrbitBall:
    """Ball for a free convex-cocompact plane action: reduced words are
    distinct elements, so no dedup; enumeration by word length, stopped
    once two extra levels contribute nothing below R (recorded)."""
    letters = action.letters
    smats = action.gen_matrices()
    k2 = len(letters)
    half = k2 // 2
    mats = [np.eye(2)[None]]
    lvl_mats = np.eye(2)[None]
    lvl_last = np.array([-1])  # letter index of last letter, -1 for identity
    disps_all = [np.zeros(1)]
    quiet = 0
    depth = 0
    total = 1
    while quiet < 2:
        depth += 1
        new_mats = []
        new_last = []
        for s_idx in range(k2):
            keep = lvl_last != (s_idx + half) % k2
            if not keep.any():
                continue
            new_mats.append(np.einsum("bij,jk->bik", lvl_mats[keep], smats[s_idx]))
            new_last.append(np.full(int(keep.sum()), s_idx))
        lvl_mats = np.concatenate(new_mats)
        lvl_last = np.concatenate(new_last)
        nrm = np.sqrt(np.einsum("bij,bij->b", lvl_mats, lvl_mats))
        disp = np.arccosh(np.maximum(nrm * nrm / 2.0, 1.0))
        total += len(lvl_mats)
        if total > cap:
            raise CapExceeded("orbit_ball cap %d exceeded at depth %d" % (cap, depth))
        inside = disp <= R
        mats.append(lvl_mats)
        disps_all.append(disp)
        quiet = quiet + 1 if not inside.any() else 0
    allm = np.concatenate(mats)
    alld = np.concatenate(disps_all)
    keep = alld <= R
    words = _free_words_from_levels(letters, [len(m) for m in mats], keep)
    return OrbitBall(
        action, R, alld[keep], complete=True,
        certificate={"method": "free-levels", "depth": depth, "quiet_levels": 2},
        words=words, mats=allm[keep],
    )


def _free_words_from_levels(letters, level_sizes, keep):
    """Rebuild reduced words in the same enumeration order as
    _free_plane_ball (levels, then letter-major over the previous level)."""
    k2 = len(letters)
    half = k2 // 2
    levels = [[""]]
    for _ in range(len(level_sizes) - 1):
        prev = levels[-1]
        nxt = []
        for s_idx in range(k2):
            s = letters[s_idx]
            for w in prev:
                if w and letters.index(w[-1]) == (s_idx + half) % k2:
                    continue
                nxt.append(w + s)
        levels.append(nxt)
    flat = [w for lvl in levels for w in lvl]
    return [w for w, k in zip(flat, keep) if k]


def _modular_ball(action: GroupAction, R: float, cap: int) -> OrbitBall:
    mats, disps = _modular_ball_kernel(float(R))
    if len(mats) > cap:
        raise CapExceeded("orbit_ball cap %d exceeded (%d elements)" % (cap, len(mats)))
    return OrbitBall(
        action, R, disps, complete=True,
        certificate={"method": "lattice-enumeration", "norm_bound": 2.0 * math.cosh(R)},
        int_mats=mats,
    )


def bfs_ball(action: GroupAction, R: float, depth: int, cap: int = 2_000_000) -> OrbitBall:
    """Independent word-BFS enumeration with projective matrix dedup.

    Used as a cross-check oracle for the closed-form modular enumeration
    and for non-free plane actions. Completeness holds only up to the
    given word depth."""
    seen = {}
    frontier = [(np.eye(2), "")]
    key = _proj_key(np.eye(2))
    seen[key] = ("", 0.0)
    for _ in range(depth):
        nxt = []
        for m, w in frontier:
            for s in action.letters:
                m2 = m @ action.gens[s].mat
                k2 = _proj_key(m2)
                if k2 in seen:
                    continue
                nrm2 = float((m2 * m2).sum()) / abs(np.linalg.det(m2))
                d = math.acosh(max(nrm2 / 2.0, 1.0))
                seen[k2] = (w + s, d)
                nxt.append((m2, w + s))
                if len(seen) > cap:
                    raise CapExceeded("bfs_ball cap exceeded")
        frontier = nxt
    words, disps = [], []
    for w, d in seen.values():
        if d <= R:
            words.append(w)
            disps.append(d)
    return OrbitBall(
        action, R, np.array(disps), complete=False,
        certificate={"method": "word-bfs", "depth": depth}, words=words,
    )


def _proj_key(m) -> tuple:
    v = np.asarray(m, dtype=np.float64).reshape(-1)
    v = v / math.sqrt(abs(v[0] * v[3] - v[1] * v[2]))
    for x in v:
        if abs(x) > 1e-7:
            if x < 0:
                v = -v
            break
    return tuple(np.round(v, 6))


# --------------------------------------------------------------- word norms

def word_norm(action: GroupAction, g, depth_cap: int = 14) -> int:
    """Length of the shortest generator word representing g (BFS certificate)."""
    if action.model == "tree":
        return len(g.word) if isinstance(g, geo.TreeIsometry) else len(geo.reduce_word(g))
    if isinstance(g, str):
        g = action.element(g)
    target = _proj_key(g.mat)
    seen = {_proj_key(np.eye(2))}
    if target in seen:
        return 0
    frontier = [np.eye(2)]
    for n in range(1, depth_cap + 1):
        nxt = []
        for m in frontier:
            for s in action.letters:
                m2 = m @ action.gens[s].mat
                k2 = _proj_key(m2)
                if k2 in seen:
                    continue
                if k2 == target:
                    return n
                seen.add(k2)
                nxt.append(m2)
        frontier = nxt
    raise CapExceeded("word norm not found within depth %d" % depth_cap)


def modular_word(abcd: tuple) -> str:
    """A generator word (letters s, t, T) representing the given integer
    matrix in PSL(2, Z), via the euclidean algorithm on the first column.
    Not necessarily geodesic in the generators."""
    a, b, c, d = (int(v) for v in abcd)
    prefix = []  # inverses of the reduction ops, in application order
    while c != 0:
        q = round(a / c)  # nearest quotient keeps |remainder| <= |c|/2
        a, b = a - q * c, b - q * d  # left-multiplied by t^{-q}
        prefix.append(("t" * q) if q >= 0 else ("T" * (-q)))
        a, b, c, d = -c, -d, a, b  # left-multiplied by s^{-1} = -s
        prefix.append("s")  # s^{-1} ~ s projectively
    m = b if a == 1 else -b  # residual matrix is +- t^m
    tail = ("t" * m) if m >= 0 else ("T" * (-m))
    return "".join(prefix) + tail


# -------------------------------------------------------- critical exponent

def critical_exponent(ball: OrbitBall, fit_window: tuple) -> Estimate:
    """Orbit-growth exponent: slope of log N(R) over the window."""
    lo, hi = fit_window
    if hi > ball.radius + 1e-9:
        raise ValueError("fit window exceeds ball radius")
    grid = np.arange(math.ceil(lo), math.floor(hi) + 1, dtype=np.float64)
    if len(grid) < 4:
        raise ValueError("need at least 4 shells in fit window")
    sorted_d = np.sort(ball.disps)
    counts = np.searchsorted(sorted_d, grid + 1e-12, side="right")
    y = np.log(counts.astype(np.float64))
    A = np.vstack([grid, np.ones_like(grid)]).T
    coef, res, _, _ = np.linalg.lstsq(A, y, rcond=None)
    dof = max(len(grid) - 2, 1)
    s2 = float(res[0]) / dof if len(res) else 0.0
    cov = s2 * np.linalg.inv(A.T @ A)
    return Estimate(
        value=float(coef[0]), stderr=float(math.sqrt(max(cov[0, 0], 0.0))),
        n=len(grid), method="orbit-growth-fit",
        extra={"window": [float(lo), float(hi)], "count_at_hi": int(counts[-1])},
    )


# ------------------------------------------------- parabolic distortion

def parabolic_distortion_report(
    action: GroupAction, parabolic: str | None = None, N: int = 60,
    certify_depth: int = 12, fit_lo: int = 8,
) -> dict:
    """Distortion table for powers of a parabolic generator.

    Word norms are BFS-certified up to `certify_depth`; beyond that the
    reduced power-word length is reported with certified=False (for t^n
    it is an upper bound that the certified range matches exactly).
    """
    if not action.has_parabolics:
        raise ValueError("action has no parabolic elements")
    p = parabolic or action.parabolic_letter
    rows = []
    for n in range(1, N + 1):
        word = p * n
        g = action.element(word)
        d = geo.dist(action.base, geo.apply(g, action.base))
        if n <= certify_depth:
            nrm = word_norm(action, g, depth_cap=certify_depth)
            certified = True
        else:
            nrm = n
            certified = False
        rows.append(
            {
                "n": n,
                "word_norm": nrm,
                "displacement": d,
                "ratio": math.log(nrm) / d if nrm > 1 and d > 0 else float("nan"),
                "certified": certified,
            }
        )
    win = [r for r in rows if fit_lo <= r["n"] <= N]
    x = np.array([r["displacement"] for r in win])
    y = np.log(np.array([r["word_norm"] for r in win], dtype=np.float64))
    A = np.vstack([x, np.ones_like(x)]).T
    coef, res, _, _ = np.linalg.lstsq(A, y, rcond=None)
    dof = max(len(win) - 2, 1)
    s2 = float(res[0]) / dof if len(res) else 0.0
    cov = s2 * np.linalg.inv(A.T @ A)
    return {
        "parabolic": p,
        "rows": rows,
        "log_c": float(coef[0]),
        "log_c_stderr": float(math.sqrt(max(cov[0, 0], 0.0))),
        "fit_window": [fit_lo, N],
        "certified_up_to": certify_depth,
    }
