"""Potentials with Holder control, fake distance by quadrature, Gibbs
cocycles, topological pressure, Patterson-Gibbs atoms and shadow masses,
fake drift along sample paths.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from . import geometry as geo
from . import groups as gr
from . import walk as wk
from ._estimate import Estimate
from . import _kernels as K


# ----------------------------------------------------------------- potentials

@dataclass(frozen=True)
class Potential:
    """A potential on the model space. Built-ins are direction-independent:
    a constant, plus an optional sum of Gaussian-in-distance bumps over a
    finite orbit of representative points (plane only)."""

    name: str
    shift: float = 0.0
    amplitude: float = 0.0
    rep_re: np.ndarray | None = None
    rep_im: np.ndarray | None = None
    c1: float = 1.0
    c2: float = 0.5
    growth: tuple = (1.0, 0.0)
    hq: float = 0.05
    max_abs: float = 0.0

    def __post_init__(self):
        if self.c1 <= 0 or not (0 < self.c2 < 1):
            raise ValueError("need c1 > 0 and c2 in (0,1)")

    @property
    def has_bump(self) -> bool:
        return self.amplitude != 0.0 and self.rep_re is not None

    def value(self, re, im):
        """Potential value at plane points (arrays ok)."""
        out = np.full_like(np.asarray(re, dtype=np.float64), self.shift)
        if self.has_bump:
            out = out + K.bump_values(
                np.atleast_1d(np.asarray(re, dtype=np.float64)),
                np.atleast_1d(np.asarray(im, dtype=np.float64)),
                self.rep_re, self.rep_im, self.amplitude,
            ).reshape(np.shape(out))
        return out

    def shifted(self, c: float) -> "Potential":
        return replace(self, name="%s+%g" % (self.name, c),
                       shift=self.shift + c, max_abs=self.max_abs + abs(c))

    def reflected(self) -> "Potential":
        # built-ins do not depend on the direction argument, so F o iota = F
        return self

    def hc_const(self) -> float:
        return self.c1 + self.max_abs


def Zero() -> Potential:
    return Potential(name="zero")


def Constant(c: float) -> Potential:
    return Potential(name="const", shift=float(c), c1=max(abs(c), 1.0),
                     max_abs=abs(c))


def PlaneBump(action: gr.GroupAction, amplitude: float = 0.2,
              rep_radius: float = 6.0, c1: float = 4.0, c2: float = 0.5,
              hq: float = 0.05) -> Potential:
    """Bump f(z) = A exp(-d(z, i)^2) summed over the orbit of the base
    point within rep_radius (a finite stand-in for full invariance)."""
    ball = gr.orbit_ball(action, rep_radius)
    re, im = ball.points()
    re = np.asarray(re, dtype=np.float64)
    im = np.asarray(im, dtype=np.float64)
    peak = abs(amplitude) * float(
        np.max(K.bump_values(re, im, re, im, 1.0))
    )
    return Potential(name="bump", amplitude=float(amplitude), rep_re=re,
                     rep_im=im, c1=c1, c2=c2, hq=hq, max_abs=peak)


# --------------------------------------------------------------- fake distance

def fake_distance(F: Potential, x: geo.Point, y: geo.Point) -> float:
    """d_F(x, y): integral of F along the geodesic [x, y] (composite
    midpoint rule with step F.hq for the bump part)."""
    d = geo.dist(x, y)
    if isinstance(x, geo.TreePoint):
        if F.has_bump:
            raise geo.ModelMismatch("nonconstant potentials are plane-only")
        return F.shift * d
    total = F.shift * d
    if F.has_bump and d > 1e-12:
        # isometry z -> (z - x.re)/x.im sends x to i
        zr = (y.re - x.re) / x.im
        zi = y.im / x.im

        def midpoint(h):
            m = max(1, int(math.ceil(d / h)))
            ts = (np.arange(m) + 0.5) * (d / m)
            pr, pi = K.geodesic_points_from_i(zr, zi, d, ts)
            vals = K.bump_values(pr * x.im + x.re, pi * x.im, F.rep_re,
                                 F.rep_im, F.amplitude)
            return float(vals.sum()) * (d / m), d / m

        total += _richardson(midpoint, F.hq)
    return total


def _richardson(midpoint, h):
    """Second-order midpoint values at steps ~h and ~h/2, extrapolated."""
    v1, s1 = midpoint(h)
    v2, s2 = midpoint(h / 2.0)
    if abs(s1 - s2) < 1e-15:
        return v2
    return (s1 * s1 * v2 - s2 * s2 * v1) / (s1 * s1 - s2 * s2)


def fake_distances_from_base(F: Potential, re, im, disp) -> np.ndarray:
    """Vectorized d_F(o, z) for plane points given with their displacement
    d(o, z) (o the standard basepoint i)."""
    disp = np.asarray(disp, dtype=np.float64)
    out = F.shift * disp
    if F.has_bump:
        re = np.asarray(re, dtype=np.float64)
        im = np.asarray(im, dtype=np.float64)
        v1 = K.bump_fake_from_base(re, im, F.rep_re, F.rep_im, F.amplitude, F.hq)
        v2 = K.bump_fake_from_base(re, im, F.rep_re, F.rep_im, F.amplitude,
                                   F.hq / 2.0)
        # per-path Richardson step: the kernel rounds d/h up to a whole
        # number of midpoint panels, so recover the actual step widths
        d = np.maximum(disp, 1e-12)
        s1 = d / np.ceil(d / F.hq)
        s2 = d / np.ceil(d / (F.hq / 2.0))
        with np.errstate(invalid="ignore", divide="ignore"):
            comb = (s1 * s1 * v2 - s2 * s2 * v1) / (s1 * s1 - s2 * s2)
        out = out + np.where(np.abs(s1 - s2) < 1e-15, v2, comb)
    return out


# ---------------------------------------------------------------- HC validate

def hc_validate(F: Potential, sample: int = 2000, seed: int = 0,
                max_disp: float = 6.0) -> dict:
    """Empirical check of the Lipschitz-type control
    |d_F(x, z) - d_F(y, z)| <= (c1 + max|F|) (d(x, y) + 1)
    on random pairs with the third point at the basepoint."""
    rng = np.random.default_rng(seed)
    C = F.hc_const()
    worst = 0.0
    o = geo.PLANE_BASE
    for _ in range(sample):
        x = _random_point(rng, max_disp)
        y = _random_point(rng, max_disp)
        lhs = abs(fake_distance(F, x, o) - fake_distance(F, y, o))
        bound = C * (geo.dist(x, y) + 1.0)
        worst = max(worst, lhs / bound)
    return {
        "max_ratio": worst,
        "bound_const": C,
        "samples": sample,
        "seed": seed,
        "pass": bool(worst <= 1.0),
        "note": "third point fixed at basepoint; pairs sampled within "
                "displacement %g" % max_disp,
    }


def _random_point(rng, max_disp: float) -> geo.PlanePoint:
    # roughly uniform direction, displacement uniform in [0, max_disp]
    t = rng.uniform(0.0, max_disp)
    theta = rng.uniform(0.0, 2 * math.pi)
    # move from i along the direction theta: use the upper half-plane
    # image of a point at hyperbolic distance t from i
    er = math.tanh(t / 2.0)
    w = complex(er * math.cos(theta), er * math.sin(theta))  # disk model
    z = (w + 1j) / (1j * w + 1.0)  # Cayley transform to upper half-plane
    return geo.PlanePoint(z.real, max(z.imag, 1e-9))


# --------------------------------------------------------------- Gibbs cocycle

def gibbs_cocycle(F: Potential, zeta: geo.Boundary, x: geo.Point,
                  y: geo.Point, T: float = 30.0) -> Estimate:
    """beta^F_zeta(x, y): limit of d_F(x, z) - d_F(y, z) as z -> zeta,
    evaluated at ray horizon T with the half-horizon increment as error
    proxy."""
    if T < 5:
        raise ValueError("horizon must be >= 5")
    vals = []
    for h in (T / 4.0, T / 2.0, T):
        if isinstance(zeta, geo.TreeBoundary):
            zt = geo.TreePoint(zeta.letters(int(round(h))))
        else:
            zt = geo._ray_point(x, zeta, h)
        vals.append(fake_distance(F, x, zt) - fake_distance(F, y, zt))
    inc1 = abs(vals[1] - vals[0])
    inc2 = abs(vals[2] - vals[1])
    return Estimate(
        value=vals[-1], stderr=inc2, n=3, method="gibbs-cocycle",
        extra={"horizons": [T / 4.0, T / 2.0, T], "sequence": vals,
               "converging": bool(inc2 <= inc1 + 1e-12)},
    )


# -------------------------------------------------------------------- pressure

def shell_index(disps: np.ndarray) -> np.ndarray:
    """Shell S_n = {g : n-1 < d(o,go) <= n} (identity lands in S_0)."""
    return np.ceil(np.asarray(disps) - 1e-12).astype(np.int64)


def _ball_fake_distances(ball: gr.OrbitBall, F: Potential) -> np.ndarray:
    if ball.action.model == "tree":
        if F.has_bump:
            raise geo.ModelMismatch("nonconstant potentials are plane-only")
        return F.shift * ball.disps
    re, im = ball.points()
    return fake_distances_from_base(F, re, im, ball.disps)


def pressure(ball: gr.OrbitBall, F: Potential, fit_window: tuple) -> Estimate:
    """v_F: growth rate of shell sums sum_{S_n} e^{d_F(o, go)}.

    The fit regresses log shell sums against the shell-mean displacement
    rather than the shell index, so that adding a constant c to F shifts
    the estimate by exactly c even when shells are unevenly populated."""
    lo, hi = fit_window
    if hi > ball.radius + 1e-9:
        raise ValueError("fit window exceeds ball radius")
    dF = _ball_fake_distances(ball, F)
    idx = shell_index(ball.disps)
    xs, ys = [], []
    for n in range(int(math.ceil(lo)), int(math.floor(hi)) + 1):
        sel = idx == n
        if not sel.any():
            raise ValueError("empty shell S_%d in fit window" % n)
        w = dF[sel]
        m = float(w.max())
        ys.append(m + math.log(float(np.exp(w - m).sum())))
        xs.append(float(ball.disps[sel].mean()))
    x = np.array(xs)
    y = np.array(ys)
    A = np.vstack([x, np.ones_like(x)]).T
    coef, res, _, _ = np.linalg.lstsq(A, y, rcond=None)
    dof = max(len(x) - 2, 1)
    s2 = float(res[0]) / dof if len(res) else 0.0
    cov = s2 * np.linalg.inv(A.T @ A)
    shells = {int(n): float(v) for n, v in zip(range(int(math.ceil(lo)),
                                                     int(math.floor(hi)) + 1), y)}
    return Estimate(value=float(coef[0]),
                    stderr=float(math.sqrt(max(cov[0, 0], 0.0))),
                    n=len(x), method="pressure-shell-fit",
                    extra={"window": [float(lo), float(hi)],
                           "log_shell_sums": shells})


# -------------------------------------------------------------- Patterson atoms

@dataclass
class GibbsAtoms:
    ball: gr.OrbitBall
    F: Potential
    s: float
    weights: np.ndarray  # e^{d_F - s d}, unnormalized
    fake_d: np.ndarray
    v_hat: float
    tail_ratio: float

    @property
    def Q(self) -> float:
        return float(self.weights.sum())

    @property
    def masses(self) -> np.ndarray:
        return self.weights / self.Q

    def to_csv(self, path) -> None:
        m = self.masses
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["element", "displacement", "fake_distance", "weight",
                        "normalized_mass"])
            for i in range(len(self.weights)):
                w.writerow([self.ball.word(i), "%.12g" % self.ball.disps[i],
                            "%.12g" % self.fake_d[i], "%.12g" % self.weights[i],
                            "%.12g" % m[i]])


def patterson_atoms(ball: gr.OrbitBall, F: Potential, s: float,
                    v_hat: float | None = None,
                    tail_tol: float = 0.5) -> GibbsAtoms:
    """Atomic approximation of the Patterson-Gibbs density at parameter s:
    weight e^{d_F(o,go) - s d(o,go)} at each orbit point of the ball.

    The geometric tail beyond the ball radius (estimated from v_hat) is
    recorded as a fraction of Q and must stay below tail_tol.
    """
    if v_hat is None:
        hi = ball.radius
        lo = max(2.0, hi - 8.0)
        v_hat = pressure(ball, F, (lo, hi)).value
    if s < v_hat + 0.02 - 1e-12:
        raise ValueError("s must be >= v_hat + 0.02 (s=%g, v_hat=%g)" % (s, v_hat))
    dF = _ball_fake_distances(ball, F)
    logw = dF - s * ball.disps
    weights = np.exp(logw)
    Q = float(weights.sum())
    # tail: sum_{n > R} e^{(v_hat - s) n}, geometric
    R = int(math.floor(ball.radius))
    q = math.exp(v_hat - s)
    tail = q ** (R + 1) / (1.0 - q) if q < 1 else float("inf")
    ratio = tail / Q
    if ratio > tail_tol:
        raise ValueError("tail bound %.3g exceeds tolerance %.3g of Q"
                         % (ratio, tail_tol))
    return GibbsAtoms(ball=ball, F=F, s=s, weights=weights, fake_d=dF,
                      v_hat=v_hat, tail_ratio=ratio)


# ---------------------------------------------------------------- shadow mass

def gibbs_shadow_mass(atoms: GibbsAtoms, s: geo.Shadow) -> float:
    """Normalized atom mass passing the shadow gate: atoms h o whose
    geodesic [o, h o] comes within radius r of the shadow target."""
    ball = atoms.ball
    act = ball.action
    if geo.dist(s.source, act.base) > 1e-9:
        raise ValueError("shadow source must be the atoms' basepoint")
    m = atoms.masses
    if act.model == "tree":
        tgt = s.target.word
        total = 0.0
        for i, w in enumerate(ball.words):
            conf = geo.common_prefix_len(w, tgt)
            if len(tgt) - conf <= s.radius + 1e-12:
                total += m[i]
        return float(total)
    re, im = ball.points()
    b = geo.dist(s.target, act.base) * np.ones(len(m))
    a = _dists_to(s.target, re, im)
    dmin = K.seg_dist_vec(b, a, ball.disps)
    return float(m[dmin <= s.radius + 1e-9].sum())


def _dists_to(p: geo.PlanePoint, re, im) -> np.ndarray:
    arg = 1.0 + ((re - p.re) ** 2 + (im - p.im) ** 2) / (2.0 * im * p.im)
    return np.arccosh(np.maximum(arg, 1.0))


def shadow_mass_limit(ball: gr.OrbitBall, F: Potential, v_hat: float,
                      target: geo.Point, radius: float,
                      shell_lo: int | None = None) -> float:
    """Limit of the shadow mass as s decreases to v_hat, computed as the
    ratio of gated to total shell sums of e^{d_F - v_hat d} over deep
    shells (the s -> v_F limit concentrates all mass at infinity, where
    the per-shell ratio is what survives)."""
    act = ball.action
    dF = _ball_fake_distances(ball, F)
    logw = dF - v_hat * ball.disps
    w = np.exp(logw - logw.max())
    idx = shell_index(ball.disps)
    R = int(math.floor(ball.radius))
    lo = shell_lo if shell_lo is not None else max(R - 4, 1)
    deep = (idx >= lo) & (idx <= R)
    if act.model == "tree":
        gate = np.zeros(len(w), dtype=bool)
        tgt = target.word
        for i, word in enumerate(ball.words):
            conf = geo.common_prefix_len(word, tgt)
            gate[i] = len(tgt) - conf <= radius + 1e-12
    else:
        re, im = ball.points()
        b = geo.dist(target, act.base) * np.ones(len(w))
        a = _dists_to(target, re, im)
        gate = K.seg_dist_vec(b, a, ball.disps) <= radius + 1e-9
    num = float(w[deep & gate].sum())
    den = float(w[deep].sum())
    return num / den if den > 0 else 0.0


# ------------------------------------------------------------------ fake drift

def fake_drift(F: Potential, measure: wk.WalkMeasure, n: int, batch: int,
               seed: int, tail_t: float = 2.0) -> Estimate:
    """ell_F = lim d_F(o, omega_n o) / n, estimated over a batch, with a
    half-horizon monitor and the empirical tail of |beta^F - d_F| (the
    cocycle-vs-distance deviation at the full horizon)."""
    if n < 100:
        raise ValueError("need n >= 100")
    act = measure.action
    if act.model == "tree":
        if F.has_bump:
            raise geo.ModelMismatch("nonconstant potentials are plane-only")
        cps = np.array([n // 2, n], dtype=np.int64)
        sw, sl = measure.letter_codes()
        inc = K.sample_increments(seed, batch, n, measure.cumprob)
        lens, _, _ = K.tree_walk(inc, sw, sl, len(act.letters), cps)
        dhalf = F.shift * lens[:, 0].astype(np.float64)
        dfull = F.shift * lens[:, 1].astype(np.float64)
        dev = np.zeros(batch)
    else:
        cps = np.array([n // 2, n], dtype=np.int64)
        inc = K.sample_increments(seed, batch, n, measure.cumprob)
        cum_disp, cum_mat, _, seg_mat, seg_log = K.plane_walk(
            inc, measure.support_matrices(), cps)
        if not F.has_bump:
            # constant potential: pathwise d_F = shift * displacement, and
            # the cocycle deviation is shift * (two-sided Gromov defect),
            # computable from log-scales without touching positions
            dhalf = F.shift * cum_disp[:, 0]
            dfull = F.shift * cum_disp[:, 1]
            d_rest = K.disp_from_logfrob(2.0 * seg_log[:, 1])
            dev = np.abs(F.shift) * np.abs(cum_disp[:, 1] - d_rest - cum_disp[:, 0])
        else:
            re_h, im_h = _positions(cum_mat[:, 0])
            re_f, im_f = _positions(cum_mat[:, 1])
            dhalf = fake_distances_from_base(F, re_h, im_h, cum_disp[:, 0])
            dfull = fake_distances_from_base(F, re_f, im_f, cum_disp[:, 1])
            # beta^F toward the path's endpoint direction, full horizon:
            # beta^F(o, w_half o) ~ d_F(o, w_n o) - d_F(w_half o, w_n o)
            dev = np.zeros(batch)
            for i in range(batch):
                # clamp the Im floor: deep-cusp endpoints carry no bump mass,
                # so nudging them distorts the quadrature negligibly
                xh = geo.PlanePoint(re_h[i], max(im_h[i], 2e-12))
                xf = geo.PlanePoint(re_f[i], max(im_f[i], 2e-12))
                beta = dfull[i] - fake_distance(F, xh, xf)
                dev[i] = abs(beta - dhalf[i])
    value = float(dfull.mean()) / n
    stderr = float(dfull.std(ddof=1)) / (n * math.sqrt(batch))
    half = float(dhalf.mean()) / (n // 2)
    tail = float((dev > tail_t).mean())
    # telescoped estimator: the same limit, but free of the O(1) offset
    # d_F picks up near the basepoint (where a bump potential is largest),
    # so it is the quantity that is stable under doubling n at small n
    rest = n - n // 2
    inc_vals = (dfull - dhalf) / rest
    return Estimate(
        value=value, stderr=stderr, n=batch, seed=seed, method="fake-drift",
        extra={"half_horizon_value": half,
               "increment_value": float(inc_vals.mean()),
               "increment_stderr": float(inc_vals.std(ddof=1) / math.sqrt(batch)),
               "deviation_tail_t": tail_t,
               "deviation_tail_prob": tail,
               "deviation_tail_bound": 1.0 / tail_t ** 4},
    )


def _positions(mats: np.ndarray):
    a = mats[..., 0, 0]
    b = mats[..., 0, 1]
    c = mats[..., 1, 0]
    d = mats[..., 1, 1]
    den = c * c + d * d
    det = np.abs(a * d - b * c)
    return (a * c + b * d) / den, det / den
