"""Hot numeric kernels with numba and pure-numpy implementations.

The public names at the bottom of the module are bound to the numba versions
when acceleration is on and to the numpy versions otherwise; both are always
importable under ``*_nb`` / ``*_np`` for benchmarking and cross-checks.
"""

import numpy as np

from ._accel import HAVE_NUMBA, njit

RANK_PRIME = 2147483647


# ---------------------------------------------------------------------------
# popcount


@njit
def _popcount64(v):
    v = v - ((v >> np.uint64(1)) & np.uint64(0x5555555555555555))
    v = (v & np.uint64(0x3333333333333333)) + ((v >> np.uint64(2)) & np.uint64(0x3333333333333333))
    v = (v + (v >> np.uint64(4))) & np.uint64(0x0F0F0F0F0F0F0F0F)
    return int((v * np.uint64(0x0101010101010101)) >> np.uint64(56))


# ---------------------------------------------------------------------------
# double description: combinatorial adjacency test


@njit
def _adjacent_pairs_nb(tight, pos, neg, min_common):
    R, W = tight.shape
    pc = np.zeros(R, dtype=np.int64)
    for k in range(R):
        c = 0
        for w in range(W):
            c += _popcount64(tight[k, w])
        pc[k] = c
    z = np.zeros(W, dtype=np.uint64)
    cap = 1024
    out = np.empty((cap, 2), dtype=np.int64)
    m = 0
    for ii in range(pos.shape[0]):
        i = pos[ii]
        for jj in range(neg.shape[0]):
            j = neg[jj]
            cnt = 0
            for w in range(W):
                z[w] = tight[i, w] & tight[j, w]
                cnt += _popcount64(z[w])
            if cnt < min_common:
                continue
            adjacent = True
            for k in range(R):
                if k == i or k == j or pc[k] < cnt:
                    continue
                inside = True
                for w in range(W):
                    if (tight[k, w] & z[w]) != z[w]:
                        inside = False
                        break
                if inside:
                    adjacent = False
                    break
            if adjacent:
                if m == cap:
                    grown = np.empty((2 * cap, 2), dtype=np.int64)
                    grown[:m] = out[:m]
                    out = grown
                    cap *= 2
                out[m, 0] = i
                out[m, 1] = j
                m += 1
    return out[:m].copy()


def _adjacent_pairs_np(tight, pos, neg, min_common, chunk=256):
    pc = np.bitwise_count(tight).sum(axis=1)
    found = []
    for i in pos:
        zs = tight[i] & tight[neg]
        cnt = np.bitwise_count(zs).sum(axis=1)
        cand = np.flatnonzero(cnt >= min_common)
        for start in range(0, len(cand), chunk):
            c = cand[start:start + chunk]
            z = zs[c]
            holders = ((tight[None, :, :] & z[:, None, :]) == z[:, None, :]).all(axis=2)
            holders &= pc[None, :] >= cnt[c][:, None]
            # the pair itself always contains its common set
            adj = holders.sum(axis=1) == 2
            for j in neg[c[adj]]:
                found.append((i, j))
    return np.array(found, dtype=np.int64).reshape(-1, 2)


# ---------------------------------------------------------------------------
# rank modulo a prime


@njit
def _powmod(a, e, p):
    r = 1
    a %= p
    while e > 0:
        if e & 1:
            r = r * a % p
        a = a * a % p
        e >>= 1
    return r


@njit
def _rank_mod_p_nb(mat, p):
    a = mat.copy() % p
    rows, cols = a.shape
    rank = 0
    for c in range(cols):
        piv = -1
        for r in range(rank, rows):
            if a[r, c] != 0:
                piv = r
                break
        if piv < 0:
            continue
        if piv != rank:
            for k in range(cols):
                t = a[rank, k]
                a[rank, k] = a[piv, k]
                a[piv, k] = t
        inv = _powmod(a[rank, c], p - 2, p)
        for k in range(cols):
            a[rank, k] = a[rank, k] * inv % p
        for r in range(rows):
            if r != rank and a[r, c] != 0:
                f = a[r, c]
                for k in range(cols):
                    a[r, k] = (a[r, k] - f * a[rank, k]) % p
        rank += 1
        if rank == rows:
            break
    return rank


def _rank_mod_p_np(mat, p):
    a = np.asarray(mat, dtype=np.int64) % p
    rows, cols = a.shape
    rank = 0
    for c in range(cols):
        nz = np.flatnonzero(a[rank:, c])
        if len(nz) == 0:
            continue
        piv = rank + nz[0]
        a[[rank, piv]] = a[[piv, rank]]
        inv = pow(int(a[rank, c]), p - 2, p)
        a[rank] = a[rank] * inv % p
        f = a[:, c].copy()
        f[rank] = 0
        a = (a - (f[:, None] * a[rank][None, :]) % p) % p
        rank += 1
        if rank == rows:
            break
    return rank


def _rank_mod_p_nb_entry(mat, p=RANK_PRIME):
    return _rank_mod_p_nb(np.ascontiguousarray(mat, dtype=np.int64), p)


def _rank_mod_p_np_entry(mat, p=RANK_PRIME):
    return _rank_mod_p_np(mat, p)


# ---------------------------------------------------------------------------
# facet slacks for many integer rays at once


@njit
def _ray_slacks_nb(rays, row):
    out = np.empty(rays.shape[0], dtype=np.int64)
    for r in range(rays.shape[0]):
        s = 0
        for k in range(rays.shape[1]):
            s += rays[r, k] * row[k]
        out[r] = s
    return out


def _ray_slacks_np(rays, row):
    return rays @ row


if HAVE_NUMBA:
    adjacent_pairs = _adjacent_pairs_nb
    rank_mod_p = _rank_mod_p_nb_entry
    ray_slacks = _ray_slacks_nb
else:
    adjacent_pairs = _adjacent_pairs_np
    rank_mod_p = _rank_mod_p_np_entry
    ray_slacks = _ray_slacks_np
