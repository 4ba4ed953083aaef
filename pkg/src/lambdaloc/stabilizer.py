"""Isotropic subspaces, value assignments and stabilizer projectors."""

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import DimensionMismatch, InvalidOperator
from .pauli import (
    AXES,
    PauliPoint,
    beta_array,
    pauli_matrix,
    phase_exponent_array,
    point_from_json,
    point_to_json,
    symplectic_array,
    locally_commutes_array,
)


def rref(vectors):
    """Reduced row echelon basis over Z_2 of packed integer vectors.

    Pivot of a row is its highest set bit; rows are returned in decreasing
    pivot order, so equal spans give equal tuples.
    """
    rows = []
    for v in vectors:
        v = int(v)
        for r in rows:
            if v ^ r < v:
                v ^= r
        if v:
            # clear the new pivot from existing rows
            p = v.bit_length() - 1
            rows = [r ^ v if r >> p & 1 else r for r in rows]
            rows.append(v)
            rows.sort(reverse=True)
    return tuple(rows)


def _reduce(v, rows):
    for r in rows:
        if v ^ r < v:
            v ^= r
    return v


def span_with_values(n, gens, bits):
    """Elements of span(gens) and the beta-twisted extension of ``bits``.

    Returns two arrays; the extension is s(a + g) = s(a) + s(g) + beta(a, g).
    """
    elems = np.zeros(1, dtype=np.int64)
    vals = np.zeros(1, dtype=np.int8)
    for g, b in zip(gens, bits):
        g = int(g)
        k = phase_exponent_array(elems, np.full_like(elems, g), n)
        if np.any(k & 1):
            raise InvalidOperator("generators do not commute")
        new_vals = (vals + b + (k >> 1)) & 1
        elems = np.concatenate([elems, elems ^ g])
        vals = np.concatenate([vals, new_vals.astype(np.int8)])
    return elems, vals


@dataclass(frozen=True)
class Subspace:
    """Subspace of E_n stored by its canonical echelon basis."""

    n: int
    basis: tuple

    @classmethod
    def from_generators(cls, n, gens):
        gens = [g.index if isinstance(g, PauliPoint) else int(g) for g in gens]
        return cls(n, rref(gens))

    @classmethod
    def full(cls, n):
        return cls.from_generators(n, [1 << j for j in range(2 * n)])

    @property
    def dim(self):
        return len(self.basis)

    def elements(self):
        elems = np.zeros(1, dtype=np.int64)
        for g in self.basis:
            elems = np.concatenate([elems, elems ^ g])
        return elems

    def points(self):
        return [PauliPoint.from_index(self.n, i) for i in sorted(self.elements())]

    def contains(self, a):
        i = a.index if isinstance(a, PauliPoint) else int(a)
        return _reduce(i, self.basis) == 0

    def is_isotropic(self):
        b = np.array(self.basis, dtype=np.int64)
        if len(b) < 2:
            return True
        x, y = np.meshgrid(b, b)
        return not symplectic_array(x, y, self.n).any()

    def is_local_isotropic(self):
        e = self.elements()
        x, y = np.meshgrid(e, e)
        return bool(locally_commutes_array(x, y, self.n).all())

    def __add__(self, other):
        if self.n != other.n:
            raise DimensionMismatch("subspaces live in different E_n")
        return Subspace(self.n, rref(self.basis + other.basis))

    def intersect(self, other):
        e = self.elements()
        keep = [int(a) for a in e if other.contains(int(a))]
        return Subspace.from_generators(self.n, keep)

    def basis_points(self):
        return [PauliPoint.from_index(self.n, g) for g in self.basis]


def _indices(basis):
    return [g.index if isinstance(g, PauliPoint) else int(g) for g in basis]


def is_isotropic(basis):
    basis = list(basis)
    if not basis:
        return True
    n = basis[0].n
    return Subspace.from_generators(n, basis).is_isotropic()


def is_local_isotropic(basis):
    basis = list(basis)
    if not basis:
        return True
    n = basis[0].n
    return Subspace.from_generators(n, basis).is_local_isotropic()


def perp(I):
    """Symplectic complement of ``I`` inside E_n."""
    n = I.n
    allpts = np.arange(4**n, dtype=np.int64)
    ok = np.ones(4**n, dtype=bool)
    for g in I.basis:
        ok &= symplectic_array(allpts, np.full_like(allpts, g), n) == 0
    return Subspace.from_generators(n, allpts[ok])


class StabilizerProjector:
    """Pi_I^s for an isotropic subspace I with value assignment s.

    ``values`` holds s on the canonical basis of ``subspace``.
    """

    __slots__ = ("n", "subspace", "values", "_table")

    def __init__(self, subspace, values):
        if not subspace.is_isotropic():
            raise InvalidOperator("subspace is not isotropic")
        if len(values) != subspace.dim:
            raise DimensionMismatch("one value per basis element required")
        self.n = subspace.n
        self.subspace = subspace
        self.values = tuple(int(v) & 1 for v in values)
        elems, vals = span_with_values(self.n, subspace.basis, self.values)
        order = np.argsort(elems)
        self._table = (elems[order], vals[order])

    @classmethod
    def from_generators(cls, n, gens, bits):
        gens = _indices(gens)
        if len(gens) != len(bits):
            raise DimensionMismatch("one value per generator required")
        if len(rref(gens)) != len(gens):
            raise InvalidOperator("generators are linearly dependent")
        elems, vals = span_with_values(n, gens, bits)
        lookup = dict(zip(elems.tolist(), vals.tolist()))
        sub = Subspace(n, rref(gens))
        return cls(sub, [lookup[g] for g in sub.basis])

    @property
    def rank(self):
        return 2 ** (self.n - self.subspace.dim)

    def span(self):
        """(elements, values) over the whole span, elements sorted."""
        return self._table

    def evaluate(self, a):
        i = a.index if isinstance(a, PauliPoint) else int(a)
        elems, vals = self._table
        pos = np.searchsorted(elems, i)
        if pos == len(elems) or elems[pos] != i:
            raise ValueError(f"{a} is not in the span")
        return int(vals[pos])

    def signs(self):
        elems, vals = self._table
        return elems, 1 - 2 * vals.astype(np.int64)

    def normal(self):
        """Integer vector over E_n with entries (-1)^{s(a)} on the span."""
        v = np.zeros(4**self.n, dtype=np.int64)
        elems, sg = self.signs()
        v[elems] = sg
        return v

    def to_matrix(self):
        m = np.eye(2**self.n, dtype=complex)
        for g, s in zip(self.subspace.basis, self.values):
            t = pauli_matrix(PauliPoint.from_index(self.n, g))
            m = m @ (np.eye(2**self.n) + (-1) ** s * t) / 2
        return m

    def key(self):
        return (self.n, self.subspace.basis, self.values)

    def __eq__(self, other):
        return isinstance(other, StabilizerProjector) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def label(self):
        parts = []
        for g, s in zip(self.subspace.basis, self.values):
            parts.append(("-" if s else "+") + str(PauliPoint.from_index(self.n, g)))
        return "<" + ",".join(parts) + ">"

    def __repr__(self):
        return f"StabilizerProjector({self.label()})"


def evaluate(P, a):
    return P.evaluate(a)


def projector_expectation(P, A):
    """Tr(Pi_I^s A) = 2^{-k} sum_{a in I} (-1)^{s(a)} e_a."""
    if P.n != A.n:
        raise DimensionMismatch("projector and operator sizes differ")
    elems, sg = P.signs()
    e = A.values
    if A.mode == "rational":
        total = sum((int(s) * e[i] for i, s in zip(elems, sg)), Fraction(0))
        return total / 2**P.subspace.dim
    return float(np.dot(sg, e[elems])) / 2**P.subspace.dim


def sandwich(P, Q):
    """Pi_I^s Pi_J^r Pi_I^s = coefficient * Pi_{I + (I^perp cap J)}^{s*r}.

    Returns ``(Fraction(0), None)`` when s and r disagree on I cap J.
    """
    if P.n != Q.n:
        raise DimensionMismatch("projectors act on different registers")
    n = P.n
    ie, iv = P.span()
    je, jv = Q.span()
    sval = dict(zip(ie.tolist(), iv.tolist()))
    rval = dict(zip(je.tolist(), jv.tolist()))
    for a in set(sval) & set(rval):
        if sval[a] != rval[a]:
            return Fraction(0), None
    ok = np.ones(len(je), dtype=bool)
    for g in P.subspace.basis:
        ok &= symplectic_array(je, np.full_like(je, g), n) == 0
    jperp = je[ok]
    coeff = Fraction(len(jperp), len(je))
    # s*r on I + (I^perp cap J)
    merged = {}
    a_grid, c_grid = np.meshgrid(ie, jperp, indexing="ij")
    bet = beta_array(a_grid, c_grid, n)
    for ai, a in enumerate(ie.tolist()):
        for ci, c in enumerate(jperp.tolist()):
            v = (sval[a] + rval[c] + int(bet[ai, ci])) & 1
            k = a ^ c
            if merged.setdefault(k, v) != v:
                raise AssertionError("s*r is not well defined")
    sub = Subspace.from_generators(n, list(merged))
    return coeff, StabilizerProjector(sub, [merged[g] for g in sub.basis])


@lru_cache(maxsize=None)
def _local_states(n):
    states = []
    for axes in itertools.product(AXES, repeat=n):
        gens = [PauliPoint.local(n, q + 1, ax) for q, ax in enumerate(axes)]
        for bits in itertools.product((0, 1), repeat=n):
            states.append(StabilizerProjector.from_generators(n, gens, bits))
    return tuple(states)


def enumerate_local_stabilizer_states(n):
    """All 2^n 3^n local stabilizer states; axes vary slowest, qubit 1 first."""
    if not 1 <= n <= 7:
        raise ValueError("local enumeration supports 1 <= n <= 7")
    return list(_local_states(n))


@lru_cache(maxsize=None)
def isotropic_subspaces(n, dim):
    """All isotropic subspaces of E_n of a given dimension, levelwise, canonical order."""
    if not 0 <= dim <= n:
        raise ValueError(f"isotropic dimension must lie in 0..{n}")
    level = {()}
    allpts = np.arange(1, 4**n, dtype=np.int64)
    for _ in range(dim):
        nxt = set()
        for basis in level:
            ok = np.ones(len(allpts), dtype=bool)
            for g in basis:
                ok &= symplectic_array(allpts, np.full_like(allpts, g), n) == 0
            for a in allpts[ok].tolist():
                if _reduce(a, basis):
                    nxt.add(rref(basis + (a,)))
        level = nxt
    return tuple(Subspace(n, b) for b in sorted(level))


def maximal_isotropic_subspaces(n):
    """All Lagrangian subspaces of E_n."""
    return isotropic_subspaces(n, n)


@lru_cache(maxsize=None)
def _stabilizer_states(n):
    states = []
    for sub in maximal_isotropic_subspaces(n):
        for bits in itertools.product((0, 1), repeat=n):
            states.append(StabilizerProjector(sub, bits))
    return tuple(states)


def enumerate_stabilizer_states(n):
    if not 1 <= n <= 3:
        raise ValueError("full stabilizer enumeration supports 1 <= n <= 3")
    return list(_stabilizer_states(n))


def projector_to_json(P):
    return {
        "n": P.n,
        "basis": [point_to_json(b) for b in P.subspace.basis_points()],
        "s": list(P.values),
    }


def projector_from_json(d):
    gens = [point_from_json(b) for b in d["basis"]]
    return StabilizerProjector.from_generators(int(d["n"]), gens, d["s"])
