"""Locally closed sets, local value assignments and local pairs.

A local pair is stored as an int8 sign table of length 4^n: ``0`` outside
Omega, ``+1`` where gamma = 0 and ``-1`` where gamma = 1. That table is also
the expectation table of the locally closed operator A_Omega^gamma.
"""

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import InvalidPair, ResourceGuardExceeded
from .pauli import (
    ExpectationVector,
    PauliPoint,
    beta_array,
    commutation_tables,
    locally_commutes_array,
    point_from_json,
    point_to_json,
    symplectic_array,
)
from .polytope import _local_point

BRANCH_CAP = 1 << 20


def _idx(a):
    return a.index if isinstance(a, PauliPoint) else int(a)


def _lc_table(n):
    if n <= 5:
        return commutation_tables(n)[1]
    return None


def _lc_block(rows, cols, n):
    table = _lc_table(n)
    if table is not None:
        return table[np.ix_(rows, cols)]
    r, c = np.meshgrid(rows, cols, indexing="ij")
    return locally_commutes_array(r, c, n)


# ---------------------------------------------------------------------------
# closure


@dataclass(frozen=True)
class LocallyClosedSet:
    n: int
    elements: tuple  # sorted packed indices, always containing 0

    def __contains__(self, a):
        return _idx(a) in self.elements

    def __len__(self):
        return len(self.elements)

    def points(self):
        return [PauliPoint.from_index(self.n, i) for i in self.elements]

    def mask(self):
        m = np.zeros(4**self.n, dtype=bool)
        m[list(self.elements)] = True
        return m


def _closure_mask(n, mask, commuting="local"):
    """Fixed point of adding sums of (locally) commuting members."""
    mask = mask.copy()
    mask[0] = True
    if commuting == "local":
        rel = _lc_table(n)
    else:
        rel = commutation_tables(n)[0] == 0
    while True:
        mem = np.flatnonzero(mask)
        if rel is not None:
            ok = rel[np.ix_(mem, mem)]
        elif commuting == "local":
            ok = _lc_block(mem, mem, n)
        else:
            r, c = np.meshgrid(mem, mem, indexing="ij")
            ok = symplectic_array(r, c, n) == 0
        sums = (mem[:, None] ^ mem[None, :])[ok]
        new = np.zeros_like(mask)
        new[sums] = True
        if not np.any(new & ~mask):
            return mask
        mask |= new


def local_closure(n, S):
    """Least locally closed superset of S and {0}."""
    mask = np.zeros(4**n, dtype=bool)
    for a in S:
        mask[_idx(a)] = True
    return LocallyClosedSet(n, tuple(np.flatnonzero(_closure_mask(n, mask)).tolist()))


def is_locally_closed(n, elements):
    idx = [_idx(a) for a in elements]
    if 0 not in idx:
        return False
    mask = np.zeros(4**n, dtype=bool)
    mask[idx] = True
    return bool(np.array_equal(_closure_mask(n, mask), mask))


# ---------------------------------------------------------------------------
# GF(2) linear systems: equations are (bitmask over unknowns, rhs bit)


def _gf2_reduce(equations):
    """Reduced echelon form as {pivot bit: (mask, rhs)}, or None if inconsistent."""
    pivots = {}
    for mask, rhs in equations:
        for p, (pm, pr) in pivots.items():
            if mask >> p & 1:
                mask ^= pm
                rhs ^= pr
        if mask == 0:
            if rhs:
                return None
            continue
        p = mask.bit_length() - 1
        for q, (qm, qr) in list(pivots.items()):
            if qm >> p & 1:
                pivots[q] = (qm ^ mask, qr ^ rhs)
        pivots[p] = (mask, rhs)
    return pivots


def _back_substitute(pivots, free, values, nvars):
    sol = [0] * nvars
    for v, bit in zip(free, values):
        sol[v] = bit
    for p, (mask, rhs) in pivots.items():
        val = rhs
        rest = mask & ~(1 << p)
        for v in free:
            if rest >> v & 1:
                val ^= sol[v]
        sol[p] = val
    return sol


def gf2_solve(equations, nvars, rng=None):
    """Solve a GF(2) system; free variables random if ``rng`` else zero. None if inconsistent."""
    pivots = _gf2_reduce(equations)
    if pivots is None:
        return None
    free = [v for v in range(nvars) if v not in pivots]
    values = [int(rng.integers(2)) for _ in free] if rng is not None else [0] * len(free)
    return _back_substitute(pivots, free, values, nvars)


def gf2_solutions(equations, nvars, cap=BRANCH_CAP):
    """Every solution of a GF(2) system, free variables counted up in binary."""
    pivots = _gf2_reduce(equations)
    if pivots is None:
        return
    free = [v for v in range(nvars) if v not in pivots]
    if 1 << len(free) > cap:
        raise ResourceGuardExceeded(f"{2 ** len(free)} solutions exceed the cap of {cap}")
    for code in range(1 << len(free)):
        yield _back_substitute(pivots, free, [code >> k & 1 for k in range(len(free))], nvars)


def _assignment_equations(n, members, known, twisted=False):
    """Linear equations gamma(a)+gamma(b)+gamma(a+b) = [beta(a,b)] over members.

    ``known`` maps index -> bit for fixed values; other members are unknowns.
    Returns (equations, unknown index list) or None when the fixed values
    already contradict each other.
    """
    members = np.asarray(sorted(members), dtype=np.int64)
    unknown = [int(a) for a in members if int(a) not in known]
    pos = {a: k for k, a in enumerate(unknown)}
    if twisted:
        r, c = np.meshgrid(members, members, indexing="ij")
        rel = symplectic_array(r, c, n) == 0
        bet = beta_array(r, c, n)
    else:
        rel = _lc_block(members, members, n)
        bet = None
    ii, jj = np.nonzero(np.triu(rel, 1))
    eqs = []
    for i, j in zip(ii.tolist(), jj.tolist()):
        a, b = int(members[i]), int(members[j])
        s = a ^ b
        mask, rhs = 0, int(bet[i, j]) if twisted else 0
        for v in (a, b, s):
            if v in pos:
                mask ^= 1 << pos[v]
            else:
                rhs ^= known[v]
        if mask == 0:
            if rhs:
                return None
            continue
        eqs.append((mask, rhs))
    return eqs, unknown


# ---------------------------------------------------------------------------
# local pairs


class LocalPair:
    """(Omega, gamma) as a sign table; see module docstring."""

    __slots__ = ("n", "table", "_key")

    def __init__(self, n, table, check=True):
        t = np.asarray(table, dtype=np.int8).copy()
        if t.shape != (4**n,):
            raise InvalidPair(f"sign table must have length {4**n}")
        if t[0] != 1:
            raise InvalidPair("0 must be in Omega with gamma(0) = 0")
        if not np.all(np.isin(t, (-1, 0, 1))):
            raise InvalidPair("sign table entries must be -1, 0 or 1")
        t.setflags(write=False)
        self.n = n
        self.table = t
        self._key = t.tobytes()
        if check:
            w = validate_assignment(self)
            if w is not None:
                raise InvalidPair(f"invalid local pair, witness {w}")

    @classmethod
    def from_assignment(cls, n, omega, gamma, check=True):
        """``gamma`` is a mapping point -> bit or a sequence aligned with ``omega``."""
        t = np.zeros(4**n, dtype=np.int8)
        omega = [_idx(a) for a in omega]
        if isinstance(gamma, dict):
            bits = [gamma.get(a, gamma.get(PauliPoint.from_index(n, a), 0)) for a in omega]
        else:
            bits = list(gamma)
        for a, g in zip(omega, bits):
            t[a] = -1 if g else 1
        t[0] = 1
        return cls(n, t, check=check)

    @classmethod
    def from_operator(cls, A, check=True):
        """Read (Omega, gamma) off an operator with expectations in {0, +1, -1}."""
        vals = np.asarray(A.values, dtype=float)
        if not np.all(np.isin(vals, (-1.0, 0.0, 1.0))):
            raise InvalidPair("expectations are not all in {0, +1, -1}")
        return cls(A.n, vals.astype(np.int8), check=check)

    @property
    def omega(self):
        return LocallyClosedSet(self.n, tuple(np.flatnonzero(self.table).tolist()))

    def gamma(self, a):
        v = self.table[_idx(a)]
        if v == 0:
            raise KeyError(f"{a} not in Omega")
        return int(v < 0)

    def operator(self):
        return ExpectationVector(self.n, self.table.astype(np.int64), "rational")

    def key(self):
        return self._key

    def __eq__(self, other):
        return isinstance(other, LocalPair) and self.n == other.n and self._key == other._key

    def __hash__(self):
        return hash((self.n, self._key))

    def __repr__(self):
        return f"LocalPair(n={self.n}, |Omega|={int(np.count_nonzero(self.table))})"


def validate_assignment(pair):
    """None if valid, else a witness (a, b) of a failed closure or additivity."""
    n, t = pair.n, pair.table
    mem = np.flatnonzero(t)
    ok = _lc_block(mem, mem, n)
    ii, jj = np.nonzero(ok)
    a, b = mem[ii], mem[jj]
    s = a ^ b
    bad = (t[s] == 0) | (t[s] != t[a] * t[b])
    if np.any(bad):
        k = int(np.flatnonzero(bad)[0])
        return PauliPoint.from_index(n, int(a[k])), PauliPoint.from_index(n, int(b[k]))
    return None


def pair_operator(pair):
    if validate_assignment(pair) is not None:
        raise InvalidPair("invalid local pair")
    return pair.operator()


def has_extension(pair, a):
    """Does gamma extend to the local closure of Omega + {a}?"""
    n, t = pair.n, pair.table
    mask = t != 0
    mask[_idx(a)] = True
    closed = np.flatnonzero(_closure_mask(n, mask))
    known = {int(i): int(t[i] < 0) for i in np.flatnonzero(t)}
    res = _assignment_equations(n, closed, known)
    if res is None:
        return False
    eqs, unknown = res
    if len(unknown) > 20 and len(eqs) > BRANCH_CAP:
        raise ResourceGuardExceeded("extension system too large")
    return gf2_solve(eqs, len(unknown)) is not None


def is_maximal(pair):
    """Maximal with respect to (Omega, gamma) <= (Omega', gamma') iff no a outside Omega extends."""
    outside = np.flatnonzero(pair.table == 0)
    return not any(has_extension(pair, int(a)) for a in outside)


def random_local_pair(n, rng, size=None):
    """Random valid pair: closure of a random subset with a uniform valid gamma."""
    if size is None:
        size = int(rng.integers(0, 4**n))
    seeds = rng.choice(np.arange(1, 4**n), size=min(size, 4**n - 1), replace=False)
    omega = local_closure(n, seeds.tolist())
    eqs, unknown = _assignment_equations(n, omega.elements, {0: 0})
    sol = gf2_solve(eqs, len(unknown), rng=rng)
    t = np.zeros(4**n, dtype=np.int8)
    t[0] = 1
    for a, g in zip(unknown, sol):
        t[a] = -1 if g else 1
    return LocalPair(n, t)


# ---------------------------------------------------------------------------
# functions on Z_3^n


def _as_table(f, n=None):
    f = np.asarray(f, dtype=np.int64) & 1
    if n is None:
        n = round(np.log(f.size) / np.log(3))
    if f.size != 3**n:
        raise ValueError(f"table must have 3^n entries, got {f.size}")
    return f.reshape((3,) * n), n


def is_npartite_linear(f):
    """f(s) = sum_i g_i(s_i) over Z_2."""
    t, n = _as_table(f)
    for i in range(n):
        base = np.take(t, 0, axis=i)
        for c in (1, 2):
            d = np.take(t, c, axis=i) ^ base
            if np.any(d != d.flat[0]):
                return False
    return True


def is_bipartite_linear(f):
    """f(s) = g(s_A) + h(s_B) for some nontrivial bipartition (A, B)."""
    t, n = _as_table(f)
    if n == 1:
        return True
    for r in range(1, n):
        for A in itertools.combinations(range(n), r):
            if 0 not in A:
                continue  # each unordered partition once
            B = [i for i in range(n) if i not in A]
            m = t.transpose(list(A) + B).reshape(3 ** len(A), 3 ** len(B))
            # all rectangle parities vanish <=> m[a,b] ^ m[a,0] ^ m[0,b] ^ m[0,0] == 0
            rect = m ^ m[:, :1] ^ m[:1, :] ^ m[0, 0]
            if not rect.any():
                return True
    return False


def maxweight_indices(n):
    """Packed indices of E_n^maxw in Z_3^n order (qubit 1 slowest; x, y, z)."""
    return np.array(
        [_local_point(n, axes) for axes in itertools.product("xyz", repeat=n)], dtype=np.int64
    )


def maxweight_pair(n, f, check=True):
    """({0} + E_n^maxw, gamma = f)."""
    t_f, _ = _as_table(f, n)
    t = np.zeros(4**n, dtype=np.int8)
    t[0] = 1
    t[maxweight_indices(n)] = 1 - 2 * t_f.ravel()
    return LocalPair(n, t, check=check)


def all_functions(n):
    """Every f: Z_3^n -> Z_2 as rows of a (2^(3^n), 3^n) array (n <= 2)."""
    if n > 2:
        raise ResourceGuardExceeded("enumerating all functions is limited to n <= 2")
    m = 3**n
    codes = np.arange(2**m, dtype=np.int64)
    return ((codes[:, None] >> np.arange(m)[None, :]) & 1).astype(np.int8)


# ---------------------------------------------------------------------------
# CNC structure and classification


def is_cnc(pair):
    """Omega closed under all commuting sums and gamma beta-twisted additive."""
    n, t = pair.n, pair.table
    mem = np.flatnonzero(t)
    r, c = np.meshgrid(mem, mem, indexing="ij")
    comm = symplectic_array(r, c, n) == 0
    a, b = r[comm], c[comm]
    s = a ^ b
    if np.any(t[s] == 0):
        return False
    bet = beta_array(a, b, n).astype(np.int64)
    lhs = (t[s] < 0).astype(np.int64)
    rhs = ((t[a] < 0).astype(np.int64) + (t[b] < 0) + bet) & 1
    return bool(np.all(lhs == rhs))


def class_tags(pair):
    n, t = pair.n, pair.table
    tags = []
    if np.all(t != 0):
        tags.append("deterministic")
    supp = np.flatnonzero(t)
    maxw = set(maxweight_indices(n).tolist()) | {0}
    if n > 1 and set(supp.tolist()) == maxw:
        tags.append("maxweight")
    if is_cnc(pair):
        tags.append("cnc")
    return tags or ["generic"]


def classify(pair):
    """Primary class tag: deterministic, maxweight, cnc or generic."""
    return class_tags(pair)[0]


def omega_to_json(pair):
    elems = np.flatnonzero(pair.table)
    return {
        "omega": [point_to_json(PauliPoint.from_index(pair.n, int(a))) for a in elems],
        "gamma": [int(pair.table[a] < 0) for a in elems],
    }


def pair_to_json(pair):
    d = omega_to_json(pair)
    d["n"] = pair.n
    return d


def pair_from_json(d, n=None):
    pts = [point_from_json(p) for p in d["omega"]]
    n = int(d.get("n", n if n is not None else pts[0].n))
    return LocalPair.from_assignment(n, pts, d["gamma"])
