"""Numba implementations of the hot kernels.

Per-path compiled loops, bit-identical to `_kernels_np` (same splitmix64
streams, same operation order where it affects floating point).
"""

import math

import numba as nb
import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)
INV_2_53 = 1.0 / float(1 << 53)


@nb.njit(cache=True, inline="always")
def _mix64(z):
    z = (z ^ (z >> np.uint64(30))) * MIX1
    z = (z ^ (z >> np.uint64(27))) * MIX2
    return z ^ (z >> np.uint64(31))


@nb.njit(cache=True)
def sample_increments(seed, batch, n, cumprob):
    out = np.empty((batch, n), dtype=np.int8)
    S = cumprob.shape[0]
    for i in range(batch):
        state = _mix64(np.uint64(seed) + np.uint64(i + 1) * GOLDEN)
        for j in range(n):
            state += GOLDEN
            u = float(_mix64(state) >> np.uint64(11)) * INV_2_53
            lo = 0
            hi = S
            while lo < hi:  # searchsorted(cum, u, side="right")
                mid = (lo + hi) // 2
                if cumprob[mid] <= u:
                    lo = mid + 1
                else:
                    hi = mid
            out[i, j] = np.int8(lo)
    return out


@nb.njit(cache=True)
def tree_walk(inc, sup_words, sup_lens, n_letters, checkpoints):
    B, n = inc.shape
    C = checkpoints.shape[0]
    half = n_letters // 2
    maxw = sup_words.shape[1]
    cap = n * maxw + 1
    maxcp = 0
    for c in range(C):
        if checkpoints[c] > maxcp:
            maxcp = checkpoints[c]
    lens = np.zeros((B, C), dtype=np.int64)
    words = np.full((C, B, max(maxcp * maxw, 1)), -1, dtype=np.int8)
    wordlens = np.zeros((C, B), dtype=np.int64)
    stack = np.full(cap, -1, dtype=np.int8)
    for i in range(B):
        ptr = 0
        ci = 0
        for j in range(n):
            idx = inc[i, j]
            for pos in range(sup_lens[idx]):
                letter = sup_words[idx, pos]
                if ptr > 0 and stack[ptr - 1] == (letter + half) % n_letters:
                    ptr -= 1
                else:
                    stack[ptr] = letter
                    ptr += 1
            if ci < C and j + 1 == checkpoints[ci]:
                lens[i, ci] = ptr
                for q in range(ptr):
                    words[ci, i, q] = stack[q]
                wordlens[ci, i] = ptr
                ci += 1
    return lens, words, wordlens


@nb.njit(cache=True)
def tree_green_visits(inc, sup_words, sup_lens, n_letters, targets, tlens):
    B, n = inc.shape
    T = targets.shape[0]
    half = n_letters // 2
    maxw = sup_words.shape[1]
    visits = np.zeros((B, T), dtype=np.int64)
    stack = np.full(n * maxw + 1, -1, dtype=np.int8)
    for i in range(B):
        ptr = 0
        for t in range(T):
            if tlens[t] == 0:
                visits[i, t] += 1
        for j in range(n):
            idx = inc[i, j]
            for pos in range(sup_lens[idx]):
                letter = sup_words[idx, pos]
                if ptr > 0 and stack[ptr - 1] == (letter + half) % n_letters:
                    ptr -= 1
                else:
                    stack[ptr] = letter
                    ptr += 1
            for t in range(T):
                if tlens[t] != ptr:
                    continue
                ok = True
                for q in range(ptr):
                    if stack[q] != targets[t, q]:
                        ok = False
                        break
                if ok:
                    visits[i, t] += 1
    return visits


@nb.njit(cache=True)
def plane_walk(inc, sup_mats, checkpoints):
    B, n = inc.shape
    C = checkpoints.shape[0]
    cum_disp = np.zeros((B, C))
    cum_mat = np.zeros((B, C, 2, 2))
    cum_log = np.zeros((B, C))
    seg_mat = np.zeros((B, C, 2, 2))
    seg_log = np.zeros((B, C))
    for i in range(B):
        pa, pb, pc, pd = 1.0, 0.0, 0.0, 1.0
        qa, qb, qc, qd = 1.0, 0.0, 0.0, 1.0
        lam = 0.0
        mu = 0.0
        ci = 0
        for j in range(n):
            g = sup_mats[inc[i, j]]
            na = pa * g[0, 0] + pb * g[1, 0]
            nbb = pa * g[0, 1] + pb * g[1, 1]
            nc = pc * g[0, 0] + pd * g[1, 0]
            nd = pc * g[0, 1] + pd * g[1, 1]
            s = math.sqrt(na * na + nbb * nbb + nc * nc + nd * nd)
            pa, pb, pc, pd = na / s, nbb / s, nc / s, nd / s
            lam += math.log(s)
            na = qa * g[0, 0] + qb * g[1, 0]
            nbb = qa * g[0, 1] + qb * g[1, 1]
            nc = qc * g[0, 0] + qd * g[1, 0]
            nd = qc * g[0, 1] + qd * g[1, 1]
            s = math.sqrt(na * na + nbb * nbb + nc * nc + nd * nd)
            qa, qb, qc, qd = na / s, nbb / s, nc / s, nd / s
            mu += math.log(s)
            if ci < C and j + 1 == checkpoints[ci]:
                s2 = 2.0 * lam
                if s2 > 40.0:
                    cum_disp[i, ci] = s2 - math.log(2.0)
                else:
                    cum_disp[i, ci] = math.acosh(max(math.exp(s2) / 2.0, 1.0))
                cum_mat[i, ci, 0, 0] = pa
                cum_mat[i, ci, 0, 1] = pb
                cum_mat[i, ci, 1, 0] = pc
                cum_mat[i, ci, 1, 1] = pd
                cum_log[i, ci] = lam
                seg_mat[i, ci, 0, 0] = qa
                seg_mat[i, ci, 0, 1] = qb
                seg_mat[i, ci, 1, 0] = qc
                seg_mat[i, ci, 1, 1] = qd
                seg_log[i, ci] = mu
                qa, qb, qc, qd = 1.0, 0.0, 0.0, 1.0
                mu = 0.0
                ci += 1
    return cum_disp, cum_mat, cum_log, seg_mat, seg_log


@nb.njit(cache=True, inline="always")
def _dist(zre, zim, wre, wim):
    arg = 1.0 + ((zre - wre) ** 2 + (zim - wim) ** 2) / (2.0 * zim * wim)
    if arg < 1.0:
        arg = 1.0
    return math.acosh(arg)


@nb.njit(cache=True, inline="always")
def _seg_dist(b, a, cc):
    if cc < 1e-12:
        return min(a, b)
    K = math.cosh(b) / math.cosh(a)
    th = (K * math.cosh(cc) - 1.0) / (K * math.sinh(cc))
    if th >= 1.0:
        return a
    if th <= -1.0:
        return b
    t = math.atanh(th)
    if t <= 0.0:
        return b
    if t >= cc:
        return a
    return math.acosh(max(math.cosh(b) / math.cosh(t), 1.0))


@nb.njit(cache=True, parallel=False)
def plane_gate_corridor(a_re, a_im, a_d, a_w, t_re, t_im, t_d, r, nshell):
    T = t_re.shape[0]
    N = a_re.shape[0]
    mass = np.zeros(T)
    shells = np.zeros((T, nshell))
    for j in range(T):
        b0 = _dist(t_re[j], t_im[j], 0.0, 1.0)
        for q in range(N):
            a = _dist(t_re[j], t_im[j], a_re[q], a_im[q])
            if _seg_dist(b0, a, a_d[q]) <= r:
                mass[j] += a_w[q]
                si = int(math.floor(a_d[q]))
                if si < nshell:
                    shells[j, si] += a_w[q]
    return mass, shells


@nb.njit(cache=True)
def plane_path_hits(p_re, p_im, p_d, t_re, t_im, r):
    T = t_re.shape[0]
    B = p_re.shape[0]
    hits = np.zeros(T, dtype=np.int64)
    for j in range(T):
        b0 = _dist(t_re[j], t_im[j], 0.0, 1.0)
        for q in range(B):
            a = _dist(t_re[j], t_im[j], p_re[q], p_im[q])
            if _seg_dist(b0, a, p_d[q]) <= r:
                hits[j] += 1
    return hits


@nb.njit(cache=True)
def _ext_gcd_solution(a, c):
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


@nb.njit(cache=True)
def _modular_ball_pass(R, fill, mats, disps):
    S = 2.0 * math.cosh(R)
    amax = int(math.floor(math.sqrt(S)))
    count = 0
    for a in range(0, amax + 1):
        for c in range(-amax, amax + 1):
            n1 = a * a + c * c
            if n1 == 0 or n1 > S:
                continue
            if a == 0 and c < 0:
                continue
            if math.gcd(a, abs(c)) != 1:
                continue
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
                    if fill:
                        mats[count, 0] = a
                        mats[count, 1] = b
                        mats[count, 2] = c
                        mats[count, 3] = d
                        disps[count] = math.acosh(max(nrm / 2.0, 1.0))
                    count += 1
    return count


def modular_ball(R):
    empty_m = np.zeros((0, 4), dtype=np.int64)
    empty_d = np.zeros(0)
    n = _modular_ball_pass(R, False, empty_m, empty_d)
    mats = np.zeros((n, 4), dtype=np.int64)
    disps = np.zeros(n)
    _modular_ball_pass(R, True, mats, disps)
    return mats, disps


@nb.njit(cache=True)
def bump_values(z_re, z_im, rep_re, rep_im, amp):
    N = z_re.shape[0]
    Rn = rep_re.shape[0]
    out = np.zeros(N)
    for i in range(N):
        acc = 0.0
        for q in range(Rn):
            d = _dist(z_re[i], z_im[i], rep_re[q], rep_im[q])
            acc += math.exp(-(d * d))
        out[i] = amp * acc
    return out


@nb.njit(cache=True)
def bump_fake_from_base(z_re, z_im, rep_re, rep_im, amp, h):
    B = z_re.shape[0]
    out = np.zeros(B)
    for p in range(B):
        zr = z_re[p]
        zi = z_im[p]
        d = _dist(zr, zi, 0.0, 1.0)
        if d < 1e-12:
            continue
        m = max(1, int(math.ceil(d / h)))
        step = d / m
        if abs(zr) < 1e-14:
            sgn = 1.0 if zi >= 1.0 else -1.0
            acc = 0.0
            for q in range(m):
                t = (q + 0.5) * step
                acc += bump_values(
                    np.zeros(1), np.array([math.exp(sgn * t)]), rep_re, rep_im, amp
                )[0]
            out[p] = acc * step
            continue
        cen = (zr * zr + zi * zi - 1.0) / (2.0 * zr)
        rad = math.sqrt(1.0 + cen * cen)
        ae = cen - rad
        be = cen + rad
        h1 = _axis_height(0.0, 1.0, ae, be)
        h2 = _axis_height(zr, zi, ae, be)
        sgn = 1.0 if h2 >= h1 else -1.0
        acc = 0.0
        for q in range(m):
            t = (q + 0.5) * step
            hh = h1 * math.exp(sgn * t)
            den = 1.0 + hh * hh
            pr = (ae + be * hh * hh) / den
            pi = (be - ae) * hh / den
            acc += bump_values(np.array([pr]), np.array([pi]), rep_re, rep_im, amp)[0]
        out[p] = acc * step
    return out


@nb.njit(cache=True, inline="always")
def _axis_height(wr, wi, ae, be):
    nr = (wr - ae) * (be - wr) - wi * wi
    ni = wi * (be - ae)
    dr = (be - wr) ** 2 + wi * wi
    return math.hypot(nr / dr, ni / dr)
