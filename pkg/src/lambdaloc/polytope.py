"""The local Lambda polytope: facets, membership, vertices, symmetries, NS tables."""

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import lcm

import numpy as np

from . import kernels
from .dd import double_description
from .errors import DimensionMismatch, OutsidePolytope, SignalingTable
from .pauli import (
    AXES,
    DOUBLE_TOL,
    ExpectationVector,
    PauliPoint,
    _AXIS_BITS,
    format_number,
    local_decomposition,
    split_index,
)
from .stabilizer import (
    enumerate_local_stabilizer_states,
    enumerate_stabilizer_states,
    projector_from_json,
    projector_to_json,
)


@dataclass(frozen=True, eq=False)
class FacetSystem:
    """Inequalities normal . e >= 0 (with e_0 = 1), one per stabilizer projector.

    ``normals[f]`` has entries (-1)^{s(a)} on the span of facet ``f``; dividing
    by ``scales[f] = 2^k`` gives Tr(Pi A).
    """

    n: int
    labels: tuple
    normals: np.ndarray
    scales: np.ndarray
    name: str = "custom"

    def __len__(self):
        return len(self.labels)

    def values(self, A):
        """Facet functionals Tr(Pi_f A) for every facet (exact in rational mode)."""
        if A.n != self.n:
            raise DimensionMismatch("operator and facet system sizes differ")
        if A.mode == "rational":
            num, den = rational_numerators(A)
            raw = self.normals @ num
            return [Fraction(int(v), den * int(s)) for v, s in zip(raw, self.scales)]
        return (self.normals @ A.values) / self.scales


def _build(n, states, name):
    normals = np.array([P.normal() for P in states], dtype=np.int64)
    scales = np.array([2 ** P.subspace.dim for P in states], dtype=np.int64)
    normals.setflags(write=False)
    scales.setflags(write=False)
    return FacetSystem(n, tuple(states), normals, scales, name)


@lru_cache(maxsize=None)
def local_lambda_facets(n):
    return _build(n, enumerate_local_stabilizer_states(n), "local")


@lru_cache(maxsize=None)
def lambda_facets(n):
    """Facets of the full Lambda polytope (every stabilizer state), n <= 3."""
    return _build(n, enumerate_stabilizer_states(n), "full")


def rational_numerators(A):
    """Integer numerators over a common denominator for a rational table."""
    den = 1
    for v in A.values:
        den = lcm(den, v.denominator)
    num = np.array([int(v * den) for v in A.values], dtype=object)
    if max(abs(int(x)) for x in num) < 1 << 62:
        num = num.astype(np.int64)
    return num, den


# ---------------------------------------------------------------------------
# membership


@dataclass
class MembershipReport:
    status: str
    min_slack: object
    violated: list = field(default_factory=list)
    tight: list = field(default_factory=list)

    @property
    def inside(self):
        return self.status != "outside"


def membership(A, F=None, tol=DOUBLE_TOL):
    """Classify ``A`` as interior, boundary or outside of the facet system."""
    F = F if F is not None else local_lambda_facets(A.n)
    vals = F.values(A)
    if A.mode == "rational":
        violated = [i for i, v in enumerate(vals) if v < 0]
        tight = [i for i, v in enumerate(vals) if v == 0]
        min_slack = min(vals)
    else:
        vals = np.asarray(vals)
        violated = np.flatnonzero(vals < -tol).tolist()
        tight = np.flatnonzero(np.abs(vals) <= tol).tolist()
        min_slack = float(vals.min())
    if violated:
        status = "outside"
    elif tight:
        status = "boundary"
    else:
        status = "interior"
    return MembershipReport(
        status,
        min_slack,
        [F.labels[i] for i in violated],
        [F.labels[i] for i in tight],
    )


# ---------------------------------------------------------------------------
# vertices


@dataclass(frozen=True, eq=False)
class VertexSet:
    n: int
    vertices: tuple
    provenance: tuple
    rays: np.ndarray

    def __len__(self):
        return len(self.vertices)

    def __iter__(self):
        return iter(self.vertices)

    def keys(self):
        return {v.key() for v in self.vertices}


def _ray_to_vertex(n, ray):
    d = int(ray[0])
    return ExpectationVector(n, [Fraction(int(x), d) for x in ray], "rational")


def enumerate_vertices(F, rule="sparse", max_rays=2_000_000, time_limit=None, certify=True):
    """Complete vertex list of the polytope cut out by ``F`` (exact)."""
    rays, _ = double_description(F.normals, rule=rule, max_rays=max_rays, time_limit=time_limit)
    if np.any(rays[:, 0] <= 0):
        raise AssertionError("polytope is unbounded in the trace-one slice")
    # canonical order: lexicographic on the rational coordinates, descending
    verts = [_ray_to_vertex(F.n, r) for r in rays]
    order = sorted(range(len(verts)), key=lambda k: tuple(-v for v in verts[k].values))
    verts = [verts[k] for k in order]
    rays = rays[order]
    if certify:
        for v, r in zip(verts, rays):
            if not _is_vertex_ray(r, F):
                raise AssertionError("double description produced a non-vertex")
    rays.setflags(write=False)
    return VertexSet(F.n, tuple(verts), tuple(f"dd:{F.name}" for _ in verts), rays)


def _exact_rank(rows):
    M = [[Fraction(int(x)) for x in r] for r in rows]
    rank = 0
    cols = len(M[0]) if M else 0
    for c in range(cols):
        piv = next((r for r in range(rank, len(M)) if M[r][c] != 0), None)
        if piv is None:
            continue
        M[rank], M[piv] = M[piv], M[rank]
        for r in range(rank + 1, len(M)):
            if M[r][c] != 0:
                f = M[r][c] / M[rank][c]
                M[r] = [a - f * b for a, b in zip(M[r], M[rank])]
        rank += 1
    return rank


def tight_rank(rows, upper=None):
    """Exact rank of an integer matrix.

    The rank modulo a prime never exceeds the rational rank, so it is final
    once it reaches ``upper`` (a known upper bound, default min(shape)).
    Otherwise falls back to exact elimination.
    """
    rows = np.asarray(rows, dtype=np.int64)
    if len(rows) == 0:
        return 0
    bound = min(rows.shape) if upper is None else min(upper, *rows.shape)
    r = kernels.rank_mod_p(rows)
    if r >= bound:
        return r
    return _exact_rank(rows)


def _is_vertex_ray(ray, F):
    slack = F.normals @ ray
    if np.any(slack < 0):
        return False
    D = F.normals.shape[1]
    # the ray itself spans the kernel of the tight rows, so their rank is at most D - 1
    return tight_rank(F.normals[slack == 0], upper=D - 1) == D - 1


def is_vertex(A, F=None):
    """True iff the tight normals of ``A`` have rank 4^n - 1 (exact)."""
    F = F if F is not None else local_lambda_facets(A.n)
    if A.mode == "double":
        A = A.to_rational(max_denominator=1 << 20)
    num, _ = rational_numerators(A)
    slack = F.normals @ num
    if np.any(slack < 0):
        raise OutsidePolytope("operator violates a facet inequality")
    D = F.normals.shape[1]
    return tight_rank(F.normals[slack == 0], upper=D - 1) == D - 1


# ---------------------------------------------------------------------------
# tensor products and symmetries


def _tensor_index(nA, nB):
    iA, iB = np.meshgrid(np.arange(4**nA), np.arange(4**nB), indexing="ij")
    xa, za = split_index(iA, nA)
    xb, zb = split_index(iB, nB)
    n = nA + nB
    return (xa | (xb << nA)) | ((za | (zb << nA)) << n)


def tensor(A, B):
    """A (x) B with A on the first qubits."""
    n = A.n + B.n
    idx = _tensor_index(A.n, B.n)
    mode = "rational" if A.mode == B.mode == "rational" else "double"
    a = A.values if mode == "rational" else A.values.astype(float)
    b = B.values if mode == "rational" else B.values.astype(float)
    e = np.empty(4**n, dtype=object if mode == "rational" else float)
    e[idx.ravel()] = np.multiply.outer(a, b).ravel()
    return ExpectationVector(n, e, mode)


@lru_cache(maxsize=None)
def clifford_permutation(n, qubit, gate):
    """(target index, sign) arrays so that e'[target] = sign * e for gate on qubit."""
    if not 1 <= qubit <= n:
        raise ValueError(f"qubit {qubit} out of range")
    idx = np.arange(4**n)
    x, z = split_index(idx, n)
    j = qubit - 1
    bx, bz = (x >> j) & 1, (z >> j) & 1
    if gate == "H":
        # x <-> z, y -> -y
        nx, nz = bz, bx
        sign = np.where((bx == 1) & (bz == 1), -1, 1)
    elif gate == "S":
        # x -> y, y -> -x, z -> z
        nx, nz = bx, bz ^ bx
        sign = np.where((bx == 1) & (bz == 1), -1, 1)
    else:
        raise ValueError(f"unknown generator {gate!r}")
    nxf = (x & ~(1 << j)) | (nx << j)
    nzf = (z & ~(1 << j)) | (nz << j)
    return nxf | (nzf << n), sign


def local_clifford_action(A, qubit, gate):
    """Conjugate A by H or S on one qubit, as a signed permutation of expectations."""
    target, sign = clifford_permutation(A.n, qubit, gate)
    e = np.empty_like(A.values)
    e[target] = A.values * sign
    return ExpectationVector(A.n, e, A.mode)


def qubit_permutation_index(n, perm):
    """Index map sending old qubit j to new position perm[j-1] (1-based labels)."""
    perm = [int(p) for p in perm]
    if sorted(perm) != list(range(1, n + 1)):
        raise ValueError(f"{perm} is not a permutation of 1..{n}")
    idx = np.arange(4**n)
    x, z = split_index(idx, n)
    nx = np.zeros_like(x)
    nz = np.zeros_like(z)
    for j, p in enumerate(perm):
        nx |= ((x >> j) & 1) << (p - 1)
        nz |= ((z >> j) & 1) << (p - 1)
    return nx | (nz << n)


def permute_qubits(A, perm):
    target = qubit_permutation_index(A.n, perm)
    e = np.empty_like(A.values)
    e[target] = A.values
    return ExpectationVector(A.n, e, A.mode)


def symmetry_generators(n):
    """Generators of the local Clifford plus qubit permutation group as index maps."""
    gens = []
    for q in range(1, n + 1):
        for g in ("H", "S"):
            gens.append(clifford_permutation(n, q, g))
    if n > 1:
        ident = np.ones(4**n, dtype=np.int64)
        swap = [2, 1] + list(range(3, n + 1))
        gens.append((qubit_permutation_index(n, swap), ident))
        cyc = list(range(2, n + 1)) + [1]
        gens.append((qubit_permutation_index(n, cyc), ident))
    return gens


# ---------------------------------------------------------------------------
# non-signaling tables


def _settings(n):
    return ["".join(t) for t in itertools.product(AXES, repeat=n)]


def _outcomes(n):
    return ["".join(t) for t in itertools.product("01", repeat=n)]


class NSTable:
    """Behaviour p(outcomes | settings) of the (n, 3, 2) Bell scenario.

    ``p`` has shape (3^n, 2^n); settings and outcomes are ordered
    lexicographically with qubit 1 first ('x' < 'y' < 'z').
    """

    def __init__(self, n, p):
        p = np.asarray(p, dtype=object)
        if p.shape != (3**n, 2**n):
            raise DimensionMismatch(f"table must have shape {(3**n, 2**n)}")
        self.n = n
        self.p = p
        self.exact = all(isinstance(v, (Fraction, int)) for v in p.ravel())
        if not self.exact:
            self.p = p.astype(float)

    @property
    def settings(self):
        return _settings(self.n)

    @property
    def outcomes(self):
        return _outcomes(self.n)

    def entry(self, settings, outcomes):
        si = self.settings.index(settings)
        oi = int(outcomes, 2) if self.n else 0
        return self.p[si, oi]

    def violations(self, tol=DOUBLE_TOL):
        """List of human-readable invariant violations (empty when valid)."""
        n, p = self.n, self.p
        problems = []
        close = (lambda a, b: a == b) if self.exact else (lambda a, b: abs(a - b) <= tol)
        neg = (lambda v: v < 0) if self.exact else (lambda v: v < -tol)
        for si, s in enumerate(self.settings):
            if any(neg(v) for v in p[si]):
                problems.append(f"negative entry for settings {s}")
            if not close(sum(p[si]), 1):
                problems.append(f"settings {s} not normalised")
        t = p.reshape((3,) * n + (2,) * n)
        for i in range(n):
            marg = t.sum(axis=n + i)  # drop party i's outcome
            first = np.atleast_1d(np.take(marg, 0, axis=i))
            for c in (1, 2):
                other = np.atleast_1d(np.take(marg, c, axis=i))
                if not all(close(a, b) for a, b in zip(first.ravel(), other.ravel())):
                    problems.append(f"party {i + 1} signals")
                    break
        return problems

    def is_valid(self, tol=DOUBLE_TOL):
        return not self.violations(tol)

    def __eq__(self, other):
        return isinstance(other, NSTable) and self.n == other.n and bool(np.all(self.p == other.p))


def _local_point(n, axes):
    x = z = 0
    for j, ax in enumerate(axes):
        bx, bz = _AXIS_BITS[ax]
        x |= bx << j
        z |= bz << j
    return x | (z << n)


def to_ns_table(A, check=True):
    """p(s | a) = Tr(Pi_{a_1}^{s_1} ... Pi_{a_n}^{s_n} A)."""
    n = A.n
    e = A.values
    exact = A.mode == "rational"
    rows = []
    subsets = list(itertools.product((0, 1), repeat=n))
    for setting in _settings(n):
        row = []
        for out in _outcomes(n):
            total = Fraction(0) if exact else 0.0
            for mask in subsets:
                axes = [ax if m else "0" for ax, m in zip(setting, mask)]
                sign = (-1) ** sum(int(o) for o, m in zip(out, mask) if m)
                total += sign * e[_local_point(n, axes)]
            row.append(total / 2**n)
        rows.append(row)
    table = NSTable(n, rows)
    if check:
        neg = [v for v in table.p.ravel() if (v < 0 if exact else v < -DOUBLE_TOL)]
        if neg:
            raise OutsidePolytope("operator is outside the local Lambda polytope")
    return table


def from_ns_table(table, tol=DOUBLE_TOL):
    """Inverse of :func:`to_ns_table` through the moment formula."""
    problems = table.violations(tol)
    if problems:
        raise SignalingTable("; ".join(problems))
    n, p = table.n, table.p
    settings = _settings(n)
    outcomes = _outcomes(n)
    e = [None] * 4**n
    for idx in range(4**n):
        a = PauliPoint.from_index(n, idx)
        comps = [ax for _, ax in local_decomposition(a)]
        support = [j for j, ax in enumerate(comps) if ax != "0"]
        value = None
        # every completion of the unsupported parties must give the same moment
        for fill in itertools.product(AXES, repeat=n - len(support)):
            it = iter(fill)
            s = "".join(ax if ax != "0" else next(it) for ax in comps)
            si = settings.index(s)
            m = Fraction(0) if table.exact else 0.0
            for oi, out in enumerate(outcomes):
                sign = (-1) ** sum(int(out[j]) for j in support)
                m += sign * p[si, oi]
            if value is None:
                value = m
            elif (m != value) if table.exact else abs(m - value) > tol:
                raise SignalingTable(f"moment of {a} depends on unused settings")
        e[idx] = value
    return ExpectationVector(n, e, "rational" if table.exact else "double")


# ---------------------------------------------------------------------------
# JSON


def facets_to_json(F):
    return {
        "n": F.n,
        "facets": [
            {"projector": projector_to_json(P), "normal": [int(v) for v in nrm], "offset": 0}
            for P, nrm in zip(F.labels, F.normals)
        ],
    }


def facets_from_json(d):
    states = [projector_from_json(f["projector"]) for f in d["facets"]]
    return _build(int(d["n"]), states, d.get("name", "custom"))


def ns_table_to_json(table):
    entries = []
    for si, s in enumerate(table.settings):
        for oi, o in enumerate(table.outcomes):
            entries.append({"settings": s, "outcomes": o, "p": format_number(table.p[si, oi])})
    return {"n": table.n, "entries": entries}


def ns_table_from_json(d):
    n = int(d["n"])
    p = np.zeros((3**n, 2**n), dtype=object)
    settings = _settings(n)
    exact = all(isinstance(ent["p"], (str, int)) for ent in d["entries"])
    for ent in d["entries"]:
        v = Fraction(ent["p"]) if exact else float(Fraction(ent["p"]) if isinstance(ent["p"], str) else ent["p"])
        p[settings.index(ent["settings"]), int(ent["outcomes"], 2)] = v
    return NSTable(n, p)
