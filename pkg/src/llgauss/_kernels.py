"""Hot loops of the lead-lag contrast and its wild bootstrap.

Conventions shared by every kernel
----------------------------------
``s`` (length n1+1) and ``u`` (length n2+1) are the sorted observation times
of the two assets; interval ``i`` of asset 1 is ``(s[i], s[i+1]]`` and
interval ``j`` of asset 2 is ``(u[j], u[j+1]]``. For a lag ``th`` the pair
``(i, j)`` contributes iff

    s[i] + eps < u[j+1] - th   and   u[j] - th + eps < s[i+1]

which for ``eps == 0`` is the half-open overlap test. Every implementation
evaluates exactly these float expressions and accumulates in (i, j)
lexicographic order, which is what makes the sweep and the naive double loop
agree bit for bit.

Each kernel exists twice: a numba ``*_nb`` and a numpy ``*_np`` version. The
unsuffixed names dispatch according to :data:`llgauss._accel.USE_NUMBA`.
"""

import numpy as np

from . import _accel
from ._accel import njit

if _accel.HAVE_NUMBA:
    from numba import prange
else:  # pragma: no cover
    prange = range


# ---------------------------------------------------------------- numba ---


@njit
def count_pairs_nb(s, u, shifts, eps):
    n1 = s.shape[0] - 1
    n2 = u.shape[0] - 1
    G = shifts.shape[0]
    counts = np.zeros(G, dtype=np.int64)
    for g in range(G):
        th = shifts[g]
        j0 = 0
        c = 0
        for i in range(n1):
            while j0 < n2 and not (s[i] + eps < u[j0 + 1] - th):
                j0 += 1
            j = j0
            while j < n2 and u[j] - th + eps < s[i + 1]:
                c += 1
                j += 1
        counts[g] = c
    return counts


@njit
def fill_pairs_nb(s, u, shifts, eps, offsets, pi, pj):
    n1 = s.shape[0] - 1
    n2 = u.shape[0] - 1
    for g in range(shifts.shape[0]):
        th = shifts[g]
        j0 = 0
        p = offsets[g]
        for i in range(n1):
            while j0 < n2 and not (s[i] + eps < u[j0 + 1] - th):
                j0 += 1
            j = j0
            while j < n2 and u[j] - th + eps < s[i + 1]:
                pi[p] = i
                pj[p] = j
                p += 1
                j += 1


def build_pairs_nb(s, u, shifts, eps=0.0):
    counts = count_pairs_nb(s, u, shifts, eps)
    offsets = np.zeros(counts.shape[0] + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    pi = np.empty(offsets[-1], dtype=np.int32)
    pj = np.empty(offsets[-1], dtype=np.int32)
    fill_pairs_nb(s, u, shifts, eps, offsets, pi, pj)
    return offsets, pi, pj


@njit
def sweep_contrast_nb(s, u, shifts, a, b, eps):
    n1 = s.shape[0] - 1
    n2 = u.shape[0] - 1
    G = shifts.shape[0]
    out = np.zeros(G)
    for g in range(G):
        th = shifts[g]
        j0 = 0
        acc = 0.0
        for i in range(n1):
            while j0 < n2 and not (s[i] + eps < u[j0 + 1] - th):
                j0 += 1
            j = j0
            while j < n2 and u[j] - th + eps < s[i + 1]:
                acc += a[i] * b[j]
                j += 1
        out[g] = acc
    return out


@njit
def pair_contrast_nb(offsets, pi, pj, a, b):
    G = offsets.shape[0] - 1
    out = np.zeros(G)
    for g in range(G):
        acc = 0.0
        for p in range(offsets[g], offsets[g + 1]):
            acc += a[pi[p]] * b[pj[p]]
        out[g] = acc
    return out


@njit(parallel=True)
def pair_bootstrap_nb(offsets, pi, pj, aw, bw):
    # aw: (n1, R), bw: (n2, R) weighted increments, replication index last
    G = offsets.shape[0] - 1
    R = aw.shape[1]
    absu = np.empty((G, R))
    for g in prange(G):
        acc = np.zeros(R)
        for p in range(offsets[g], offsets[g + 1]):
            ra = aw[pi[p]]
            rb = bw[pj[p]]
            for r in range(R):
                acc[r] += ra[r] * rb[r]
        for r in range(R):
            absu[g, r] = abs(acc[r])
    tstar = np.zeros(R)
    for g in range(G):
        for r in range(R):
            if absu[g, r] > tstar[r]:
                tstar[r] = absu[g, r]
    return tstar


@njit(parallel=True)
def sweep_bootstrap_nb(s, u, shifts, aw, bw, eps):
    n1 = s.shape[0] - 1
    n2 = u.shape[0] - 1
    G = shifts.shape[0]
    R = aw.shape[1]
    absu = np.empty((G, R))
    for g in prange(G):
        th = shifts[g]
        acc = np.zeros(R)
        j0 = 0
        for i in range(n1):
            while j0 < n2 and not (s[i] + eps < u[j0 + 1] - th):
                j0 += 1
            j = j0
            while j < n2 and u[j] - th + eps < s[i + 1]:
                ra = aw[i]
                rb = bw[j]
                for r in range(R):
                    acc[r] += ra[r] * rb[r]
                j += 1
        for r in range(R):
            absu[g, r] = abs(acc[r])
    tstar = np.zeros(R)
    for g in range(G):
        for r in range(R):
            if absu[g, r] > tstar[r]:
                tstar[r] = absu[g, r]
    return tstar


# ---------------------------------------------------------------- numpy ---


def _pair_ranges_np(s, u, th, eps):
    v = u - th
    lo = np.searchsorted(v[1:], s[:-1] + eps, side="right")
    hi = np.searchsorted(v[:-1] + eps, s[1:], side="left")
    return lo, np.maximum(hi, lo)


def build_pairs_np(s, u, shifts, eps=0.0):
    pis, pjs = [], []
    counts = np.zeros(len(shifts), dtype=np.int64)
    for g, th in enumerate(shifts):
        lo, hi = _pair_ranges_np(s, u, th, eps)
        n = hi - lo
        counts[g] = n.sum()
        i = np.repeat(np.arange(len(lo), dtype=np.int32), n)
        start = np.repeat(lo - np.cumsum(n) + n, n)
        j = (np.arange(counts[g]) + start).astype(np.int32)
        pis.append(i)
        pjs.append(j)
    offsets = np.zeros(len(shifts) + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    cat = lambda xs: np.concatenate(xs) if xs else np.empty(0, dtype=np.int32)
    return offsets, cat(pis), cat(pjs)


def count_pairs_np(s, u, shifts, eps=0.0):
    counts = np.zeros(len(shifts), dtype=np.int64)
    for g, th in enumerate(shifts):
        lo, hi = _pair_ranges_np(s, u, th, eps)
        counts[g] = (hi - lo).sum()
    return counts


def pair_contrast_np(offsets, pi, pj, a, b):
    G = len(offsets) - 1
    gidx = np.repeat(np.arange(G), np.diff(offsets))
    # bincount accumulates in input order, matching the sequential sum
    return np.bincount(gidx, weights=a[pi] * b[pj], minlength=G).astype(float)


def sweep_contrast_np(s, u, shifts, a, b, eps=0.0):
    return pair_contrast_np(*build_pairs_np(s, u, shifts, eps), a, b)


def pair_bootstrap_np(offsets, pi, pj, aw, bw):
    R = aw.shape[1]
    tstar = np.zeros(R)
    for g in range(len(offsets) - 1):
        sl = slice(offsets[g], offsets[g + 1])
        if sl.start == sl.stop:
            continue
        u = np.einsum("pr,pr->r", aw[pi[sl]], bw[pj[sl]])
        np.maximum(tstar, np.abs(u), out=tstar)
    return tstar


def sweep_bootstrap_np(s, u, shifts, aw, bw, eps=0.0):
    R = aw.shape[1]
    tstar = np.zeros(R)
    for th in shifts:
        o, pi, pj = build_pairs_np(s, u, np.array([th]), eps)
        np.maximum(tstar, pair_bootstrap_np(o, pi, pj, aw, bw), out=tstar)
    return tstar


# ------------------------------------------------------------- dispatch ---

if _accel.USE_NUMBA:
    count_pairs = count_pairs_nb
    build_pairs = build_pairs_nb
    sweep_contrast = sweep_contrast_nb
    pair_contrast = pair_contrast_nb
    pair_bootstrap = pair_bootstrap_nb
    sweep_bootstrap = sweep_bootstrap_nb
else:
    count_pairs = count_pairs_np
    build_pairs = build_pairs_np
    sweep_contrast = sweep_contrast_np
    pair_contrast = pair_contrast_np
    pair_bootstrap = pair_bootstrap_np
    sweep_bootstrap = sweep_bootstrap_np
