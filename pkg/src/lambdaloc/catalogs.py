"""Phase-space catalogs: finite families of operators used as LP columns and simulator states."""

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DimensionMismatch, UnsupportedCatalog
from .locally_closed import (
    LocalPair,
    _assignment_equations,
    _closure_mask,
    all_functions,
    gf2_solutions,
    gf2_solve,
    is_bipartite_linear,
    maxweight_pair,
    pair_from_json,
)
from .pauli import (
    ExpectationVector,
    commutation_tables,
    expectation_from_json,
    expectation_to_json,
)
from .polytope import (
    _tensor_index,
    clifford_permutation,
    enumerate_vertices,
    local_lambda_facets,
    qubit_permutation_index,
)
from .stabilizer import enumerate_stabilizer_states, isotropic_subspaces, perp

NAMES = ("DET", "CNC", "LC1", "LC2", "MAXW", "STAB", "VERT")


@dataclass(frozen=True, eq=False)
class PhaseSpaceCatalog:
    """Members as rows of ``values`` (expectation tables).

    ``pairs`` is True when every member is a local pair; its sign table is
    then the int8 cast of the row.
    """

    name: str
    n: int
    labels: tuple
    values: np.ndarray
    pairs: bool

    def __len__(self):
        return len(self.labels)

    def operator(self, k):
        if self.pairs:
            return ExpectationVector(self.n, self.values[k].astype(np.int64), "rational")
        return ExpectationVector(self.n, self.values[k], "double")

    def pair(self, k):
        if not self.pairs:
            return None
        return LocalPair(self.n, self.values[k].astype(np.int8), check=False)

    def members(self):
        for k, lab in enumerate(self.labels):
            yield lab, self.operator(k), self.pair(k)

    def columns(self, block=4096):
        """Yield (start, float block of shape (4^n, k)) for LP column streaming."""
        for s in range(0, len(self), block):
            yield s, np.ascontiguousarray(self.values[s:s + block].T, dtype=float)

    def index(self):
        """Map table bytes -> member position."""
        t = self.values.astype(np.int8) if self.pairs else self.values
        return {row.tobytes(): k for k, row in enumerate(t)}

    def union(self, other, name=None):
        if other.n != self.n:
            raise DimensionMismatch("catalogs act on different qubit counts")
        return _canonical(
            name or f"{self.name}+{other.name}",
            self.n,
            list(self.labels) + list(other.labels),
            np.concatenate([self.values, other.values]),
            self.pairs and other.pairs,
        )


def _canonical(name, n, labels, values, pairs):
    """Drop duplicate rows (first label wins) and sort rows lexicographically, descending."""
    values = np.asarray(values, dtype=np.int8 if pairs else float)
    if len(values) == 0:
        return PhaseSpaceCatalog(name, n, (), values.reshape(0, 4**n), pairs)
    _, first = np.unique(values, axis=0, return_index=True)
    first = np.sort(first)
    values = values[first]
    labels = [labels[k] for k in first]
    order = np.lexsort((-values.astype(float)).T[::-1])
    values = values[order]
    values.setflags(write=False)
    return PhaseSpaceCatalog(name, n, tuple(labels[k] for k in order), values, pairs)


def custom_catalog(n, operators, labels=None, name="custom"):
    ops = list(operators)
    if any(A.n != n for A in ops):
        raise DimensionMismatch("catalog members must act on n qubits")
    vals = np.array([A.to_double().values for A in ops], dtype=float).reshape(-1, 4**n)
    pairs = bool(np.all(np.isin(vals, (-1.0, 0.0, 1.0))))
    labels = list(labels) if labels is not None else [f"{name}:{k}" for k in range(len(ops))]
    return _canonical(name, n, labels, vals, pairs)


# ---------------------------------------------------------------------------
# builders


def _product_tables(tables_a, nA, tables_b, nB):
    """All products a (x) b with a on the first nA qubits; rows in (a, b) order."""
    idx = _tensor_index(nA, nB).ravel()
    n = nA + nB
    out = np.empty((len(tables_a) * len(tables_b), 4**n), dtype=np.int8)
    prod = (tables_a[:, None, :, None] * tables_b[None, :, None, :]).reshape(len(out), -1)
    out[:, idx] = prod
    return out


def eight_state_tables():
    """A^{rst} for r, s, t in {0, 1}, as tables over (0, x, z, y)."""
    rows = []
    for r, s, t in itertools.product((0, 1), repeat=3):
        rows.append([1, 1 - 2 * r, 1 - 2 * t, 1 - 2 * s])
    return np.array(rows, dtype=np.int8)


def _det(n):
    one = eight_state_tables()
    codes = ["".join(map(str, c)) for c in itertools.product((0, 1), repeat=3)]
    tables, labels = one, codes
    for m in range(1, n):
        tables = _product_tables(tables, m, one, 1)
        labels = [f"{a}.{b}" for a in labels for b in codes]
    return [f"det:{x}" for x in labels], tables


def _anticommuting_cliques(reps, symp, size):
    """All sets of ``size`` pairwise anticommuting elements among ``reps``, increasing order."""
    reps = list(reps)
    out = []

    def grow(clique, cands):
        if len(clique) == size:
            out.append(tuple(clique))
            return
        for k, a in enumerate(cands):
            if len(clique) + len(cands) - k < size:
                return
            grow(clique + [a], [b for b in cands[k + 1:] if symp[a, b]])

    grow([], reps)
    return out


def maximal_cnc_sets(n):
    """Omega = I + union of cosets a_k + I, a_k pairwise anticommuting in I^perp / I.

    I ranges over isotropic subspaces of dimension m < n and the a_k over
    cliques of 2(n - m) + 1 cosets. Returns sorted tuples of packed indices.
    """
    symp = commutation_tables(n)[0].astype(bool)
    found = set()
    for m in range(n):
        size = 2 * (n - m) + 1
        for I in isotropic_subspaces(n, m):
            elems = I.elements()
            inside = np.zeros(4**n, dtype=bool)
            inside[elems] = True
            reps = sorted({int(np.min(a ^ elems)) for a in perp(I).elements() if not inside[a]})
            for clique in _anticommuting_cliques(reps, symp, size):
                omega = set(elems.tolist())
                for a in clique:
                    omega.update((a ^ elems).tolist())
                found.add(tuple(sorted(omega)))
    return sorted(found)


def cnc_assignments(n, omega):
    """Sign tables of every beta-twisted value assignment on ``omega``."""
    eqs, unknown = _assignment_equations(n, omega, {0: 0}, twisted=True)
    tables = []
    for sol in gf2_solutions(eqs, len(unknown)):
        t = np.zeros(4**n, dtype=np.int8)
        t[0] = 1
        t[unknown] = 1 - 2 * np.array(sol, dtype=np.int8)
        tables.append(t)
    return tables


def is_cnc_set(n, omega):
    """Closed under commuting sums and admitting a beta-twisted assignment."""
    mask = np.zeros(4**n, dtype=bool)
    mask[list(omega)] = True
    if not np.array_equal(_closure_mask(n, mask, commuting="all"), mask):
        return False
    res = _assignment_equations(n, omega, {0: 0}, twisted=True)
    return res is not None and gf2_solve(res[0], len(res[1])) is not None


def _cnc(n):
    labels, tables = [], []
    for k, omega in enumerate(maximal_cnc_sets(n)):
        for j, t in enumerate(cnc_assignments(n, omega)):
            labels.append(f"cnc:{k}.{j}")
            tables.append(t)
    return labels, np.array(tables, dtype=np.int8)


def _vert(n):
    if n > 2:
        raise UnsupportedCatalog("vertex enumeration catalog is limited to n <= 2")
    V = enumerate_vertices(local_lambda_facets(n))
    tables = np.array([[int(v) for v in A.values] for A in V], dtype=np.int8)
    return [f"vert:{k}" for k in range(len(V))], tables


def _lc2(n):
    if n != 3:
        raise UnsupportedCatalog("LC2 is defined for n = 3")
    _, one = _vert(1)
    _, two = _vert(2)
    base = _product_tables(one, 1, two, 2)
    labels, tables = [], []
    # old qubit 1 carries the single-qubit factor; move it to position q
    for q, perm in ((1, (1, 2, 3)), (2, (2, 1, 3)), (3, (3, 1, 2))):
        target = qubit_permutation_index(3, perm)
        t = np.empty_like(base)
        t[:, target] = base
        tables.append(t)
        labels += [f"lc2:q{q}:{i}x{j}" for i in range(len(one)) for j in range(len(two))]
    return labels, np.concatenate(tables)


def h_closed(cat):
    """True iff the member set is invariant under a Hadamard on every qubit."""
    keys = set(cat.index())
    for q in range(1, cat.n + 1):
        target, sign = clifford_permutation(cat.n, q, "H")
        img = np.empty_like(cat.values)
        img[:, target] = cat.values * sign.astype(cat.values.dtype)
        if not all(row.tobytes() in keys for row in img):
            return False
    return True


def _maxw(n):
    if n != 2:
        raise UnsupportedCatalog("max-weight catalog is enumerated for n = 2 only")
    labels, tables = [], []
    for code, f in enumerate(all_functions(n)):
        if not is_bipartite_linear(f):
            labels.append(f"maxw:{code}")
            tables.append(maxweight_pair(n, f, check=False).table)
    return labels, np.array(tables, dtype=np.int8)


def _stab(n):
    states = enumerate_stabilizer_states(n)
    return [P.label() for P in states], np.array([P.normal() for P in states], dtype=np.int8)


@lru_cache(maxsize=None)
def build_phase_space(name, n):
    name = name.upper()
    if name not in NAMES:
        raise UnsupportedCatalog(f"unknown catalog {name!r}; choose from {', '.join(NAMES)}")
    if not 1 <= n <= 3:
        raise UnsupportedCatalog("catalogs are built for 1 <= n <= 3")
    if name == "LC1":
        return build_phase_space("CNC", n).union(build_phase_space("DET", n), name="LC1")
    builder = {"DET": _det, "CNC": _cnc, "LC2": _lc2, "MAXW": _maxw, "STAB": _stab, "VERT": _vert}
    labels, tables = builder[name](n)
    cat = _canonical(name, n, labels, tables, True)
    if name == "LC2" and not h_closed(cat):
        raise AssertionError("LC2 generating set is not closed under Hadamards")
    return cat


# ---------------------------------------------------------------------------
# JSON


_SIGN_CHARS = {1: "+", 0: "0", -1: "-"}


def catalog_to_json(cat):
    """Pair catalogs store each member as a sign string over E_n ("+", "-", "0")."""
    members = []
    for k, lab in enumerate(cat.labels):
        if cat.pairs:
            members.append({"label": lab, "signs": "".join(_SIGN_CHARS[int(v)] for v in cat.values[k])})
        else:
            members.append({"label": lab, "op": expectation_to_json(cat.operator(k))})
    return {"name": cat.name, "n": cat.n, "pairs": cat.pairs, "members": members}


def catalog_from_json(d):
    n = int(d["n"])
    ops, labels = [], []
    for m in d["members"]:
        labels.append(m["label"])
        if "signs" in m:
            t = np.array([{"+": 1, "0": 0, "-": -1}[c] for c in m["signs"]], dtype=np.int8)
            if len(t) != 4**n:
                raise DimensionMismatch(f"sign string of length {len(t)} for n={n}")
            ops.append(LocalPair(n, t).operator())
        elif m.get("pair") is not None:
            ops.append(pair_from_json(m["pair"], n=n).operator())
        else:
            ops.append(expectation_from_json(m["op"]))
    return custom_catalog(n, ops, labels, name=d.get("name", "custom"))
