"""Exact double description method for pointed polyhedral cones {x : A x >= 0}.

Rays are integer vectors reduced by their gcd; incidence with the processed
rows is tracked as packed uint64 bitsets so that adjacency is decided by the
combinatorial test (no other ray is tight on the common tight set).
"""

import logging
import time
from fractions import Fraction
from math import gcd

import numpy as np

from . import kernels
from .errors import ResourceGuardExceeded

log = logging.getLogger(__name__)

_SAFE = 1 << 30


def _independent_rows(A, order):
    """Greedily pick rows of ``A`` (in ``order``) forming a basis of the row space."""
    D = A.shape[1]
    basis = []
    reduced = []  # echelon rows as lists of Fraction with their pivot
    for h in order:
        v = [Fraction(int(x)) for x in A[h]]
        for piv, row in reduced:
            if v[piv] != 0:
                f = v[piv] / row[piv]
                v = [a - f * b for a, b in zip(v, row)]
        piv = next((k for k in range(D) if v[k] != 0), None)
        if piv is None:
            continue
        reduced.append((piv, v))
        basis.append(h)
        if len(basis) == D:
            break
    return basis


def _inverse_columns(B):
    """Integer columns of B^{-1} scaled by positive factors."""
    D = B.shape[0]
    M = [[Fraction(int(B[i, j])) for j in range(D)] + [Fraction(int(i == j)) for j in range(D)]
         for i in range(D)]
    for c in range(D):
        piv = next(r for r in range(c, D) if M[r][c] != 0)
        M[c], M[piv] = M[piv], M[c]
        inv = 1 / M[c][c]
        M[c] = [x * inv for x in M[c]]
        for r in range(D):
            if r != c and M[r][c] != 0:
                f = M[r][c]
                M[r] = [a - f * b for a, b in zip(M[r], M[c])]
    inv = [[M[i][D + j] for j in range(D)] for i in range(D)]
    cols = []
    for j in range(D):
        col = [inv[i][j] for i in range(D)]
        den = 1
        for x in col:
            den = den * x.denominator // gcd(den, x.denominator)
        ints = [int(x * den) for x in col]
        g = 0
        for x in ints:
            g = gcd(g, x)
        cols.append([x // g for x in ints])
    return np.array(cols, dtype=np.int64)


def _normalize(rays):
    g = np.gcd.reduce(np.abs(rays), axis=1)
    g[g == 0] = 1
    return rays // g[:, None]


def _set_bit(tight, rows, h):
    tight[rows, h >> 6] |= np.uint64(1) << np.uint64(h & 63)


def facet_order(A, rule):
    m = A.shape[0]
    if rule == "index":
        return list(range(m))
    if rule == "sparse":
        nnz = np.count_nonzero(A, axis=1)
        return sorted(range(m), key=lambda h: (nnz[h], h))
    if rule == "lex":
        return sorted(range(m), key=lambda h: tuple(-A[h]))
    raise ValueError(f"unknown insertion rule {rule!r}")


def double_description(A, rule="sparse", max_rays=2_000_000, time_limit=None):
    """Extreme rays of {x : A x >= 0}; the cone must be pointed (A of full column rank).

    Returns ``(rays, tight)`` with ``rays`` an int64 array and ``tight`` the
    packed incidence bitsets over the rows of ``A``.
    """
    A = np.ascontiguousarray(A, dtype=np.int64)
    m, D = A.shape
    W = (m + 63) // 64
    order = facet_order(A, rule)
    base = _independent_rows(A, order)
    if len(base) < D:
        raise ValueError("constraint matrix does not have full column rank; cone not pointed")
    rays = _inverse_columns(A[base])
    tight = np.zeros((D, W), dtype=np.uint64)
    for j, h in enumerate(base):
        others = [k for k in range(D) if k != j]
        _set_bit(tight, others, h)
    start = time.monotonic()
    done = set(base)
    for step, h in enumerate(order):
        if h in done:
            continue
        done.add(h)
        s = kernels.ray_slacks(rays, A[h])
        pos = np.flatnonzero(s > 0)
        neg = np.flatnonzero(s < 0)
        zero = np.flatnonzero(s == 0)
        _set_bit(tight, zero, h)
        if len(neg) == 0:
            continue
        pairs = kernels.adjacent_pairs(tight, pos, neg, D - 2)
        keep = np.concatenate([pos, zero])
        if len(pairs):
            i, j = pairs[:, 0], pairs[:, 1]
            if np.abs(rays).max() * np.abs(s).max() >= _SAFE:
                raise ResourceGuardExceeded("ray coordinates outgrew the int64 safety margin")
            new = s[i, None] * rays[j] - s[j, None] * rays[i]
            new = _normalize(new)
            new_tight = tight[i] & tight[j]
            _set_bit(new_tight, np.arange(len(pairs)), h)
            rays = np.concatenate([rays[keep], new])
            tight = np.concatenate([tight[keep], new_tight])
        else:
            rays = rays[keep]
            tight = tight[keep]
        log.debug("row %d (%d/%d): %d rays", h, len(done), m, len(rays))
        if len(rays) > max_rays:
            raise ResourceGuardExceeded(f"intermediate ray count {len(rays)} exceeds {max_rays}")
        if time_limit is not None and time.monotonic() - start > time_limit:
            raise ResourceGuardExceeded(f"vertex enumeration exceeded {time_limit} s")
    return rays, tight
