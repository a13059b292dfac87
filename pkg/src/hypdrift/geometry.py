"""Geometry of the two model spaces: hyperbolic plane and free-group tree.

Plane model: upper half-plane with d(z, w) = arccosh(1 + |z-w|^2 / (2 Im z Im w)),
isometries acting as Mobius maps of PSL(2, R). Tree model: Cayley tree of a
free group, points are freely reduced words ('a'..'z' generators, uppercase the
inverses), isometries act by left concatenation-and-reduction.

Sign convention: busemann(zeta, x, y) is the limit of d(x, z) - d(y, z) as
z -> zeta, pinned by busemann(inf, i, 2i) = +log 2. All objects are immutable
and every operation a pure function.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

# thin-triangle constant of the hyperbolic plane (tree: 0)
DELTA_PLANE = math.log(1.0 + math.sqrt(2.0))

_MIN_IM = 1e-12


class ModelMismatch(ValueError):
    pass


class DepthExhausted(ValueError):
    """A tree boundary point was queried beyond its resolution depth."""


# ------------------------------------------------------------- word helpers

def is_reduced(word: str) -> bool:
    return all(word[i] != word[i + 1].swapcase() for i in range(len(word) - 1))


def reduce_word(word: str) -> str:
    out: list[str] = []
    for ch in word:
        if out and out[-1] == ch.swapcase():
            out.pop()
        else:
            out.append(ch)
    return "".join(out)


def word_inv(word: str) -> str:
    return word[::-1].swapcase()


def word_mul(u: str, v: str) -> str:
    return reduce_word(u + v)


def common_prefix_len(u: str, v: str) -> int:
    m = 0
    for a, b in zip(u, v):
        if a != b:
            break
        m += 1
    return m


# -------------------------------------------------------------------- points

@dataclass(frozen=True)
class PlanePoint:
    re: float
    im: float

    def __post_init__(self):
        if not self.im > _MIN_IM:
            raise ValueError("plane point needs Im z > 1e-12, got %r" % (self.im,))

    @property
    def z(self) -> complex:
        return complex(self.re, self.im)

    model = "plane"


@dataclass(frozen=True)
class TreePoint:
    word: str = ""

    def __post_init__(self):
        if not is_reduced(self.word):
            raise ValueError("tree word not freely reduced: %r" % (self.word,))

    model = "tree"


@dataclass(frozen=True)
class PlaneBoundary:
    """Point of the circle at infinity: a real number, or None for infinity."""

    xi: float | None = None

    model = "plane"

    @property
    def is_inf(self) -> bool:
        return self.xi is None


@dataclass(frozen=True)
class TreeBoundary:
    """Infinite word: finite prefix, then `period` repeated; `depth` is the
    number of letters this object is allowed to resolve. Operations needing
    more letters raise DepthExhausted instead of guessing."""

    prefix: str
    period: str = ""
    depth: int = 64

    model = "tree"

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("resolution depth must be >= 1")
        probe = self.prefix + self.period * 3
        if not is_reduced(probe):
            raise ValueError("boundary word not freely reduced: %r" % (probe,))

    def letters(self, n: int) -> str:
        """First n letters of the infinite word."""
        if n <= len(self.prefix):
            return self.prefix[:n]
        if not self.period:
            raise DepthExhausted(
                "boundary word has only %d letters, %d requested" % (len(self.prefix), n)
            )
        if n > self.depth:
            raise DepthExhausted("resolution depth %d exceeded (need %d)" % (self.depth, n))
        need = n - len(self.prefix)
        reps = -(-need // len(self.period))
        return (self.prefix + self.period * reps)[:n]


Point = PlanePoint | TreePoint
Boundary = PlaneBoundary | TreeBoundary

PLANE_BASE = PlanePoint(0.0, 1.0)
TREE_BASE = TreePoint("")


# ----------------------------------------------------------------- isometries

def _canonical_sl2(mat) -> np.ndarray:
    m = np.asarray(mat, dtype=np.float64)
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    if det <= 0:
        raise ValueError("isometry matrix must have positive determinant")
    m = m / math.sqrt(det)
    tr = m[0, 0] + m[1, 1]
    if tr < -1e-12:
        m = -m
    elif abs(tr) <= 1e-12:
        flat = m.reshape(-1)
        for v in flat:
            if abs(v) > 1e-12:
                if v < 0:
                    m = -m
                break
    m.setflags(write=False)
    return m


@dataclass(frozen=True)
class PlaneIsometry:
    mat: np.ndarray

    model = "plane"

    def __post_init__(self):
        object.__setattr__(self, "mat", _canonical_sl2(self.mat))

    def __matmul__(self, other: "PlaneIsometry") -> "PlaneIsometry":
        return PlaneIsometry(self.mat @ other.mat)

    def inv(self) -> "PlaneIsometry":
        a, b, c, d = self.mat.reshape(-1)
        return PlaneIsometry(np.array([[d, -b], [-c, a]]))

    def __eq__(self, other):
        return isinstance(other, PlaneIsometry) and np.allclose(
            self.mat, other.mat, atol=1e-9
        )

    def __hash__(self):
        return hash(tuple(np.round(self.mat.reshape(-1), 7)))


@dataclass(frozen=True)
class TreeIsometry:
    word: str

    model = "tree"

    def __post_init__(self):
        if not is_reduced(self.word):
            raise ValueError("tree isometry word not reduced: %r" % (self.word,))

    def __matmul__(self, other: "TreeIsometry") -> "TreeIsometry":
        return TreeIsometry(word_mul(self.word, other.word))

    def inv(self) -> "TreeIsometry":
        return TreeIsometry(word_inv(self.word))


Isometry = PlaneIsometry | TreeIsometry


# ----------------------------------------------------------------- distances

def _check_same_model(*objs):
    models = {o.model for o in objs}
    if len(models) > 1:
        raise ModelMismatch("mixed models: %s" % sorted(models))


def dist(x: Point, y: Point) -> float:
    _check_same_model(x, y)
    if isinstance(x, TreePoint):
        return float(len(word_mul(word_inv(x.word), y.word)))
    arg = 1.0 + abs(x.z - y.z) ** 2 / (2.0 * x.im * y.im)
    return math.acosh(max(arg, 1.0))


def lcosh(t: float) -> float:
    t = abs(t)
    if t > 20.0:
        return t - math.log(2.0) + math.log1p(math.exp(-2.0 * t))
    return math.log(math.cosh(t))


def lsinh(t: float) -> float:
    if t > 20.0:
        return t - math.log(2.0) + math.log1p(-math.exp(-2.0 * t))
    return math.log(math.sinh(t))


def seg_dist_from_sides(b: float, a: float, cc: float) -> float:
    """Distance from z to the geodesic segment [x, y], given only
    b = d(z, x), a = d(z, y), cc = d(x, y). Fully log-domain: safe for
    side lengths far beyond the range of cosh in double precision."""
    if cc < 1e-12:
        return min(a, b)
    lK = lcosh(b) - lcosh(a)
    u = lK + cc
    v = lK - cc
    # tanh(t) of the foot: 1 - th and 1 + th in log form
    one_m = math.log1p(-math.exp(v)) - lK - lsinh(cc) if v < 0 else None
    if u > 0:
        lognum = math.log(math.expm1(u)) if u < 30 else u
        one_p = lognum - lK - lsinh(cc)
    else:
        one_p = None
    if one_m is None:
        return a  # foot beyond y
    if one_p is None:
        return b  # foot before x
    t = 0.5 * (one_p - one_m)
    if t < 0.0:
        return b
    if t > cc:
        return a
    return math.acosh(max(math.exp(lcosh(b) - lcosh(t)), 1.0))


def dist_to_segment(z: Point, x: Point, y: Point) -> float:
    _check_same_model(z, x, y)
    if isinstance(z, TreePoint):
        return dist(z, x) - gromov_product(x, y, z)
    return seg_dist_from_sides(dist(z, x), dist(z, y), dist(x, y))


# ----------------------------------------------------------------- geodesics

def geodesic_point(x: Point, y: Point, t: float) -> Point:
    """Point at arclength t along [x, y] from x."""
    _check_same_model(x, y)
    d = dist(x, y)
    if t < -1e-9 or t > d + 1e-9:
        raise ValueError("t=%r outside [0, %r]" % (t, d))
    t = min(max(t, 0.0), d)
    if isinstance(x, TreePoint):
        ti = int(round(t))
        if abs(t - ti) > 1e-9:
            raise ValueError("tree geodesic parameter must be an integer")
        path = word_mul(word_inv(x.word), y.word)
        return TreePoint(word_mul(x.word, path[:ti]))
    # move x to i, walk along the mapped geodesic, map back
    zr = (y.re - x.re) / x.im
    zi = y.im / x.im
    from ._kernels import geodesic_points_from_i

    pr, pi = geodesic_points_from_i(zr, zi, d, np.array([t]))
    return PlanePoint(pr[0] * x.im + x.re, pi[0] * x.im)


def _ray_point(o: PlanePoint, zeta: PlaneBoundary, t: float) -> PlanePoint:
    """Point at arclength t along the ray from o toward zeta."""
    if zeta.is_inf:
        return PlanePoint(o.re, o.im * math.exp(t))
    p = zeta.xi
    if abs(o.re - p) < 1e-14:
        return PlanePoint(o.re, max(o.im * math.exp(-t), 2e-12))
    cen = (o.re * o.re + o.im * o.im - p * p) / (2.0 * (o.re - p))
    rad = abs(complex(o.re - cen, o.im))
    eta = cen - rad if abs((cen + rad) - p) < abs((cen - rad) - p) else cen + rad
    # Mobius w -> (w - eta)/(p - w) sends eta -> 0, p (= zeta) -> infinity;
    # the geodesic becomes the imaginary axis, rays toward zeta go up.
    w = (o.z - eta) / (p - o.z)
    sgn = 1.0 if w.imag >= 0 else -1.0
    h = abs(w) * math.exp(t)
    num = eta + p * complex(0.0, sgn * h)
    den = 1.0 + complex(0.0, sgn * h)
    img = num / den
    return PlanePoint(img.real, max(img.imag, 2e-12))


# ------------------------------------------------------------------ busemann

def busemann(zeta: Boundary, x: Point, y: Point) -> float:
    """beta_zeta(x, y) = lim_{z -> zeta} d(x, z) - d(y, z)."""
    _check_same_model(zeta, x, y)
    if isinstance(zeta, PlaneBoundary):
        if zeta.is_inf:
            return math.log(y.im / x.im)
        # conjugate by z -> -1/(z - xi), which sends xi to infinity and has
        # Im(-1/(z - xi)) = Im z / |z - xi|^2
        p = zeta.xi
        return math.log(y.im / abs(y.z - p) ** 2) - math.log(x.im / abs(x.z - p) ** 2)
    # tree: exact once the ray has passed both confluence points; verify
    # stability between depth n-1 and n so truncation never guesses
    n = min(zeta.depth, len(x.word) + len(y.word) + len(zeta.prefix) + 2 * max(len(zeta.period), 1) + 2)
    if n < 2:
        raise DepthExhausted("need resolution depth >= 2 for busemann")
    wn = TreePoint(zeta.letters(n))
    wm = TreePoint(zeta.letters(n - 1))
    vn = dist(x, wn) - dist(y, wn)
    vm = dist(x, wm) - dist(y, wm)
    if vn != vm:
        raise DepthExhausted("busemann not stabilized at depth %d" % n)
    return float(vn)


# ------------------------------------------------------------- gromov product

def _resolve_tree(obj, depth_used: list):
    if isinstance(obj, TreeBoundary):
        depth_used.append(obj)
        return TreePoint(obj.letters(obj.depth)), TreePoint(obj.letters(obj.depth - 1))
    return obj, obj


def gromov_product(z: Point, x, y) -> float:
    """(x | y)_z; boundary arguments handled by truncation (exact in the
    tree up to the declared resolution depth, error <= DELTA_PLANE in the
    plane with the built-in horizon)."""
    _check_same_model(z, x, y)
    if z.model == "tree":
        used = []
        xa, xb = _resolve_tree(x, used)
        ya, yb = _resolve_tree(y, used)
        va = _gp_points(z, xa, ya)
        vb = _gp_points(z, xb, yb)
        if used and va != vb:
            raise DepthExhausted("gromov product not stabilized at declared depth")
        return float(va)
    T = 25.0
    if isinstance(x, PlaneBoundary):
        x = _ray_point(z, x, T)
    if isinstance(y, PlaneBoundary):
        y = _ray_point(z, y, T)
    return _gp_points(z, x, y)


def _gp_points(z: Point, x: Point, y: Point) -> float:
    return 0.5 * (dist(z, x) + dist(z, y) - dist(x, y))


# -------------------------------------------------------------------- shadows

@dataclass(frozen=True)
class Shadow:
    """Sh_r(source, target): boundary points whose ray from `source`
    meets the ball of radius `radius` around `target`."""

    source: Point
    target: Point
    radius: float

    def __post_init__(self):
        _check_same_model(self.source, self.target)
        if self.radius < 0:
            raise ValueError("shadow radius must be >= 0")
        if dist(self.source, self.target) < 1e-12:
            raise ValueError("shadow source and target must differ")

    @property
    def model(self):
        return self.source.model


def in_shadow(s: Shadow, zeta: Boundary) -> bool:
    _check_same_model(s.source, zeta)
    if isinstance(zeta, TreeBoundary):
        tgt = word_mul(word_inv(s.source.word), s.target.word)
        need = len(tgt) + len(s.source.word)
        ray = word_mul(word_inv(s.source.word), zeta.letters(min(zeta.depth, need)))
        conf = common_prefix_len(tgt, ray)
        return len(tgt) - conf <= s.radius + 1e-12
    # plane: send zeta to infinity and source to i; the ray becomes the
    # vertical {i e^t : t >= 0} and the minimum distance is closed-form
    w = _normalize_to_vertical(s.source, zeta, s.target)
    r = abs(w)
    if r >= 1.0:
        dmin = math.asinh(abs(w.real) / w.imag)
    else:
        dmin = math.acosh(1.0 + (abs(w - 1j) ** 2) / (2.0 * w.imag))
    return dmin <= s.radius + 1e-9


def _normalize_to_vertical(o: PlanePoint, zeta: PlaneBoundary, p: Point) -> complex:
    """Mobius image of p under the map sending zeta -> inf, o -> i."""
    if zeta.is_inf:
        w = p.z
    else:
        w = -1.0 / (p.z - zeta.xi)
        o = PlanePoint(*_cxy(-1.0 / (o.z - zeta.xi)))
    return complex((w.real - o.re) / o.im, w.imag / o.im)


def _cxy(w: complex):
    return w.real, max(w.imag, _MIN_IM)


# ------------------------------------------------------------------ horoballs

def horoball_contains(x: Point, zeta: Boundary, t: float, z: Point) -> bool:
    """Is z inside the horoball {w : beta_zeta(w, x) < -t}?"""
    return busemann(zeta, z, x) < -t


# --------------------------------------------------------------------- apply

def apply(g: Isometry, x):
    _check_same_model(g, x)
    if isinstance(g, TreeIsometry):
        if isinstance(x, TreePoint):
            return TreePoint(word_mul(g.word, x.word))
        if isinstance(x, TreeBoundary):
            ext = x.prefix
            while x.period and len(ext) < len(g.word) + len(x.period):
                ext = ext + x.period
            return TreeBoundary(word_mul(g.word, ext), x.period, x.depth)
        raise TypeError(type(x))
    a, b = g.mat[0]
    c, d = g.mat[1]
    if isinstance(x, PlanePoint):
        w = (a * x.z + b) / (c * x.z + d)
        return PlanePoint(w.real, w.imag)
    if isinstance(x, PlaneBoundary):
        if x.is_inf:
            return PlaneBoundary(None) if abs(c) < 1e-15 else PlaneBoundary(a / c)
        den = c * x.xi + d
        if abs(den) < 1e-15:
            return PlaneBoundary(None)
        return PlaneBoundary((a * x.xi + b) / den)
    if isinstance(x, Shadow):
        return Shadow(apply(g, x.source), apply(g, x.target), x.radius)
    raise TypeError(type(x))


def translate_to_base(g: Isometry) -> Point:
    """Orbit point g(base) for the model's standard basepoint."""
    if isinstance(g, TreeIsometry):
        return TreePoint(g.word)
    return apply(g, PLANE_BASE)


# ------------------------------------------------------------- serialization

def to_json(obj) -> dict:
    if isinstance(obj, PlanePoint):
        return {"model": "plane", "re": obj.re, "im": obj.im}
    if isinstance(obj, TreePoint):
        return {"model": "tree", "word": obj.word}
    if isinstance(obj, PlaneBoundary):
        return {"model": "plane", "xi": "inf" if obj.is_inf else obj.xi}
    if isinstance(obj, TreeBoundary):
        return {
            "model": "tree",
            "prefix": obj.prefix,
            "period": obj.period,
            "depth": obj.depth,
        }
    if isinstance(obj, PlaneIsometry):
        return {"model": "plane", "mat": [list(map(float, row)) for row in obj.mat]}
    if isinstance(obj, TreeIsometry):
        return {"model": "tree", "word": obj.word}
    if isinstance(obj, Shadow):
        return {
            "kind": "shadow",
            "source": to_json(obj.source),
            "target": to_json(obj.target),
            "radius": obj.radius,
        }
    raise TypeError(type(obj))


def point_from_json(d: dict) -> Point:
    if d["model"] == "plane":
        return PlanePoint(d["re"], d["im"])
    return TreePoint(d["word"])


def boundary_from_json(d: dict) -> Boundary:
    if d["model"] == "plane":
        xi = d["xi"]
        return PlaneBoundary(None if xi == "inf" else float(xi))
    return TreeBoundary(d["prefix"], d.get("period", ""), d.get("depth", 64))


def isometry_from_json(d: dict) -> Isometry:
    if d["model"] == "plane":
        return PlaneIsometry(np.array(d["mat"]))
    return TreeIsometry(d["word"])
