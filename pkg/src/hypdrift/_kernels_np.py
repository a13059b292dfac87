"""Pure-numpy implementations of the hot kernels.

Reference backend: always available, bit-compatible with the numba
backend in `_kernels_nb`. Selected by setting HYPDRIFT_NO_NUMBA=1.
All hyperbolic-plane distances here assume displacements small enough
that cosh fits in float64 (d <~ 350); the walk kernels track matrix
products in log-scale so only *differences* of moderate size reach the
cosh formulas.
"""

import math

import numpy as np

from ._rng import path_states, next_states


# ---------------------------------------------------------------- sampling

def sample_increments(seed, batch, n, cumprob):
    """Increment indices (batch, n) int8 from per-path splitmix streams."""
    states = path_states(seed, batch)
    cum = np.asarray(cumprob, dtype=np.float64)
    out = np.empty((batch, n), dtype=np.int8)
    for j in range(n):
        u = next_states(states)
        out[:, j] = np.searchsorted(cum, u, side="right").astype(np.int8)
    return out


# ---------------------------------------------------------------- tree walks

def tree_walk(inc, sup_words, sup_lens, n_letters, checkpoints):
    """Reduce-as-you-go walk on the free group.

    inc: (B, n) support indices; sup_words: (S, W) letter codes padded
    with -1; inverse of letter x is (x + k) % 2k with 2k = n_letters.
    Returns (lens, words, wordlens): reduced length at each checkpoint,
    and the reduced word snapshot at each checkpoint.
    """
    B, n = inc.shape
    cps = list(checkpoints)
    k2 = n_letters
    half = k2 // 2
    maxw = sup_words.shape[1]
    cap = n * maxw + 1
    stack = np.full((B, cap), -1, dtype=np.int8)
    ptr = np.zeros(B, dtype=np.int64)
    rows = np.arange(B)
    lens = np.zeros((B, len(cps)), dtype=np.int64)
    words = np.full((len(cps), B, max(cps) * maxw if cps else 1), -1, dtype=np.int8)
    wordlens = np.zeros((len(cps), B), dtype=np.int64)
    ci = 0
    for j in range(n):
        idx = inc[:, j].astype(np.int64)
        for pos in range(maxw):
            letter = sup_words[idx, pos]
            valid = pos < sup_lens[idx]
            top = np.where(ptr > 0, stack[rows, np.maximum(ptr - 1, 0)], -2)
            cancel = valid & (top == (letter + half) % k2)
            push = valid & ~cancel
            ptr = ptr - cancel.astype(np.int64)
            target = ptr  # position to write at for pushes
            stack[rows[push], target[push]] = letter[push]
            ptr = ptr + push.astype(np.int64)
        if ci < len(cps) and j + 1 == cps[ci]:
            lens[:, ci] = ptr
            m = int(ptr.max()) if B else 0
            snap = stack[:, :m].copy()
            snap[np.arange(m)[None, :] >= ptr[:, None]] = -1
            words[ci, :, :m] = snap
            wordlens[ci] = ptr
            ci += 1
    return lens, words, wordlens


def tree_green_visits(inc, sup_words, sup_lens, n_letters, targets, tlens):
    """Visit counts to each target reduced word, including time 0."""
    B, n = inc.shape
    T = targets.shape[0]
    k2 = n_letters
    half = k2 // 2
    maxw = sup_words.shape[1]
    stack = np.full((B, n * maxw + 1), -1, dtype=np.int8)
    ptr = np.zeros(B, dtype=np.int64)
    rows = np.arange(B)
    visits = np.zeros((B, T), dtype=np.int64)
    for t in range(T):
        if tlens[t] == 0:
            visits[:, t] += 1
    for j in range(n):
        idx = inc[:, j].astype(np.int64)
        for pos in range(maxw):
            letter = sup_words[idx, pos]
            valid = pos < sup_lens[idx]
            top = np.where(ptr > 0, stack[rows, np.maximum(ptr - 1, 0)], -2)
            cancel = valid & (top == (letter + half) % k2)
            push = valid & ~cancel
            ptr = ptr - cancel.astype(np.int64)
            stack[rows[push], ptr[push]] = letter[push]
            ptr = ptr + push.astype(np.int64)
        for t in range(T):
            L = int(tlens[t])
            sel = ptr == L
            if not sel.any():
                continue
            if L == 0:
                visits[sel, t] += 1
            else:
                match = (stack[sel, :L] == targets[t, :L]).all(axis=1)
                w = np.where(sel)[0][match]
                visits[w, t] += 1
    return visits


# ---------------------------------------------------------------- plane walks

def plane_walk(inc, sup_mats, checkpoints):
    """Matrix-product walk in PSL(2, R) with running renormalization.

    Returns per checkpoint: cumulative displacement d(i, w_m i), the
    frobenius-normalized cumulative matrix plus its log-scale, and the
    same for the segment since the previous checkpoint (needed for
    distances between checkpoint positions without cancellation).
    """
    B, n = inc.shape
    cps = list(checkpoints)
    C = len(cps)
    P = np.broadcast_to(np.eye(2), (B, 2, 2)).copy()
    lam = np.zeros(B)
    Q = np.broadcast_to(np.eye(2), (B, 2, 2)).copy()
    mu = np.zeros(B)
    cum_disp = np.zeros((B, C))
    cum_mat = np.zeros((B, C, 2, 2))
    cum_log = np.zeros((B, C))
    seg_mat = np.zeros((B, C, 2, 2))
    seg_log = np.zeros((B, C))
    ci = 0
    for j in range(n):
        G = sup_mats[inc[:, j].astype(np.int64)]
        P = np.einsum("bij,bjk->bik", P, G)
        s = np.sqrt(np.einsum("bij,bij->b", P, P))
        P /= s[:, None, None]
        lam += np.log(s)
        Q = np.einsum("bij,bjk->bik", Q, G)
        s = np.sqrt(np.einsum("bij,bij->b", Q, Q))
        Q /= s[:, None, None]
        mu += np.log(s)
        if ci < C and j + 1 == cps[ci]:
            cum_disp[:, ci] = disp_from_logfrob(2.0 * lam)
            cum_mat[:, ci] = P
            cum_log[:, ci] = lam
            seg_mat[:, ci] = Q
            seg_log[:, ci] = mu
            Q = np.broadcast_to(np.eye(2), (B, 2, 2)).copy()
            mu = np.zeros(B)
            ci += 1
    return cum_disp, cum_mat, cum_log, seg_mat, seg_log


def disp_from_logfrob(s):
    """d with cosh d = e^s / 2, stable for large s (s = log frob^2)."""
    s = np.asarray(s, dtype=np.float64)
    out = np.empty_like(s)
    big = s > 40.0
    out[big] = s[big] - math.log(2.0)
    sm = ~big
    out[sm] = np.arccosh(np.maximum(np.exp(s[sm]) / 2.0, 1.0))
    return out


# ------------------------------------------------------- plane geometry bits

def _dist_vec(zre, zim, wre, wim):
    arg = 1.0 + ((zre - wre) ** 2 + (zim - wim) ** 2) / (2.0 * zim * wim)
    return np.arccosh(np.maximum(arg, 1.0))


def seg_dist_vec(b, a, cc):
    """Distance to geodesic segment from the three pairwise distances.

    b = d(z, x), a = d(z, y), cc = d(x, y); moderate displacements only.
    """
    b = np.asarray(b, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    cc = np.asarray(cc, dtype=np.float64)
    out = np.minimum(a, b)
    ok = cc > 1e-12
    K = np.cosh(b) / np.cosh(a)
    with np.errstate(divide="ignore", invalid="ignore"):
        th = (K * np.cosh(cc) - 1.0) / (K * np.sinh(cc))
    inside = ok & (th > -1.0) & (th < 1.0)
    t = np.arctanh(np.clip(th, -1.0 + 1e-15, 1.0 - 1e-15))
    inside &= (t > 0.0) & (t < cc)
    h = np.arccosh(np.maximum(np.cosh(b) / np.cosh(np.where(inside, t, 0.0)), 1.0))
    out = np.where(inside, h, out)
    # th >= 1: foot beyond y ; th <= -1: foot before x
    out = np.where(ok & (th >= 1.0), a, out)
    out = np.where(ok & (th <= -1.0), b, out)
    return out


def plane_gate_corridor(a_re, a_im, a_d, a_w, t_re, t_im, t_d, r, nshell):
    """Per target: total gated atom weight and gated weight per unit shell.

    An atom (orbit point p, displacement d(o, p)) passes the gate of
    target y iff the geodesic segment [o, p] comes within r of y.
    Shell index of an atom is floor(d); shells >= nshell are dropped
    from the per-shell output but still counted in the total.
    """
    T = t_re.shape[0]
    mass = np.zeros(T)
    shells = np.zeros((T, nshell))
    for j in range(T):
        b = _dist_vec(t_re[j], t_im[j], 0.0, 1.0) * np.ones_like(a_d)
        a = _dist_vec(t_re[j], t_im[j], a_re, a_im)
        dist = seg_dist_vec(b, a, a_d)
        gate = dist <= r
        mass[j] = a_w[gate].sum()
        si = np.floor(a_d[gate]).astype(np.int64)
        keep = si < nshell
        np.add.at(shells[j], si[keep], a_w[gate][keep])
    return mass, shells


def plane_path_hits(p_re, p_im, p_d, t_re, t_im, r):
    """Count of paths whose segment [o, endpoint] passes within r of each target."""
    T = t_re.shape[0]
    hits = np.zeros(T, dtype=np.int64)
    for j in range(T):
        b = _dist_vec(t_re[j], t_im[j], 0.0, 1.0) * np.ones_like(p_d)
        a = _dist_vec(t_re[j], t_im[j], p_re, p_im)
        dist = seg_dist_vec(b, a, p_d)
        hits[j] = int((dist <= r).sum())
    return hits


# ------------------------------------------------------------- modular ball

def modular_ball(R):
    """All of PSL(2, Z) with d(i, g i) <= R, by integer lattice enumeration.

    Uses cosh d(i, g i) = (a^2+b^2+c^2+d^2)/2 for g in SL(2, Z); one
    representative per projective pair {g, -g}. Complete by construction.
    Returns (mats (N, 4) int64 rows (a, b, c, d), disps (N,) float64).
    """
    S = 2.0 * math.cosh(R)
    amax = int(math.floor(math.sqrt(S)))
    out = []
    for a in range(0, amax + 1):
        for c in range(-amax, amax + 1):
            n1 = a * a + c * c
            if n1 == 0 or n1 > S:
                continue
            if a == 0 and c < 0:
                continue  # projective rep: first column (a, c) with a>0, or a=0, c>0
            if math.gcd(a, abs(c)) != 1:
                continue
            # particular solution of a*d - c*b = 1
            d0, b0 = _ext_gcd_solution(a, c)
            A0 = float(n1)
            B0 = 2.0 * (a * b0 + c * d0)
            C0 = float(b0 * b0 + d0 * d0) - (S - n1)
            disc = B0 * B0 - 4.0 * A0 * C0
            if disc < 0:
                continue
            sq = math.sqrt(disc)
            k0 = int(math.ceil((-B0 - sq) / (2.0 * A0)))
            k1 = int(math.floor((-B0 + sq) / (2.0 * A0)))
            for k in range(k0, k1 + 1):
                b = b0 + k * a
                d = d0 + k * c
                nrm = n1 + b * b + d * d
                if nrm <= S:
                    out.append((a, b, c, d, math.acosh(max(nrm / 2.0, 1.0))))
    arr = np.array([row[:4] for row in out], dtype=np.int64)
    disps = np.array([row[4] for row in out], dtype=np.float64)
    return arr, disps


def _ext_gcd_solution(a, c):
    """(d0, b0) with a*d0 - c*b0 = 1, assuming gcd(a, |c|) = 1."""
    old_r, r = a, c
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r != 0:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    if old_r < 0:
        old_s, old_t = -old_s, -old_t
    return old_s, -old_t


# ------------------------------------------------------------ bump potential

def bump_values(z_re, z_im, rep_re, rep_im, amp):
    """Sum of Gaussian-in-distance bumps centered at the orbit points."""
    z_re = np.atleast_1d(np.asarray(z_re, dtype=np.float64))
    z_im = np.atleast_1d(np.asarray(z_im, dtype=np.float64))
    out = np.zeros_like(z_re)
    chunk = max(1, int(4e6 / max(rep_re.size, 1)))
    for i in range(0, z_re.size, chunk):
        d = _dist_vec(
            z_re[i : i + chunk, None],
            z_im[i : i + chunk, None],
            rep_re[None, :],
            rep_im[None, :],
        )
        out[i : i + chunk] = amp * np.exp(-(d * d)).sum(axis=1)
    return out


def bump_fake_from_base(z_re, z_im, rep_re, rep_im, amp, h):
    """d_F(i, z) for each endpoint z by composite-midpoint quadrature."""
    B = z_re.shape[0]
    out = np.zeros(B)
    for p in range(B):
        zr, zi = float(z_re[p]), float(z_im[p])
        d = float(_dist_vec(np.array([zr]), np.array([zi]), 0.0, 1.0)[0])
        if d < 1e-12:
            continue
        m = max(1, int(math.ceil(d / h)))
        ts = (np.arange(m) + 0.5) * (d / m)
        pr, pi = geodesic_points_from_i(zr, zi, d, ts)
        vals = bump_values(pr, pi, rep_re, rep_im, amp)
        out[p] = vals.sum() * (d / m)
    return out


def geodesic_points_from_i(zr, zi, d, ts):
    """Points at arclengths ts along the geodesic from i to z = zr + i*zi."""
    if abs(zr) < 1e-14:
        sgn = 1.0 if zi >= 1.0 else -1.0
        hh = np.exp(sgn * ts)
        return np.zeros_like(ts), hh
    cen = (zr * zr + zi * zi - 1.0) / (2.0 * zr)
    rad = math.sqrt(1.0 + cen * cen)
    ae, be = cen - rad, cen + rad
    # Mobius w -> (w - ae) / (be - w) sends the geodesic to the imaginary axis
    h1 = _axis_height(0.0, 1.0, ae, be)
    h2 = _axis_height(zr, zi, ae, be)
    sgn = 1.0 if h2 >= h1 else -1.0
    hh = h1 * np.exp(sgn * ts)
    den = 1.0 + hh * hh
    pr = (ae + be * hh * hh) / den
    pi = (be - ae) * hh / den
    return pr, pi


def _axis_height(wr, wi, ae, be):
    nr = (wr - ae) * (be - wr) - wi * wi
    ni = wi * (be - ae)
    dr = (be - wr) ** 2 + wi * wi
    return abs(complex(nr / dr, ni / dr))
