"""Single-qubit Pauli measurement updates on local pairs and general operators."""

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import DimensionMismatch, InfeasibleLP, InvalidPair
from .locally_closed import LocalPair, validate_assignment
from .pauli import _AXIS_BITS, ExpectationVector, PauliPoint, split_index, weight


@dataclass(frozen=True)
class MeasurementSpec:
    qubit: int  # 1-based
    axis: str  # "x", "y" or "z"
    destructive: bool = True

    def __post_init__(self):
        object.__setattr__(self, "axis", self.axis.lower())
        if self.axis not in ("x", "y", "z"):
            raise ValueError(f"axis must be x, y or z, got {self.axis!r}")

    def point(self, n):
        if not 1 <= self.qubit <= n:
            raise ValueError(f"qubit {self.qubit} out of range 1..{n}")
        return PauliPoint.local(n, self.qubit, self.axis)


@dataclass(frozen=True)
class UpdateOutcome:
    outcome: int
    probability: object
    successors: tuple  # of (weight, LocalPair | ExpectationVector)


@lru_cache(maxsize=None)
def embedding(n, qubit):
    """Packed index in E_n of every point of E_{n-1}, with qubit ``qubit`` left empty.

    Qubits above ``qubit`` shift down by one in the reduced register.
    """
    m = n - 1
    idx = np.arange(4**m, dtype=np.int64)
    x, z = split_index(idx, m)
    j = qubit - 1
    low = (1 << j) - 1

    def spread(v):
        return (v & low) | ((v & ~low) << 1)

    out = spread(x) | (spread(z) << n)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def _component_masks(n, qubit, axis):
    """Boolean masks over E_n: component at qubit is 0, equal to b, or anticommutes with b."""
    idx = np.arange(4**n, dtype=np.int64)
    x, z = split_index(idx, n)
    j = qubit - 1
    cx, cz = (x >> j) & 1, (z >> j) & 1
    bx, bz = _AXIS_BITS[axis]
    zero = (cx == 0) & (cz == 0)
    same = (cx == bx) & (cz == bz)
    return zero, same


def _b_index(n, qubit, axis):
    return PauliPoint.local(n, qubit, axis).index


# ---------------------------------------------------------------------------
# local pairs


def destructive_update(pair, spec):
    """Outcomes of measuring ``spec.axis`` on ``spec.qubit`` then discarding it."""
    n, t = pair.n, pair.table
    spec.point(n)
    b = _b_index(n, spec.qubit, spec.axis)
    emb = embedding(n, spec.qubit)
    if t[b] != 0:
        r = int(t[b] < 0)
        succ = LocalPair(n - 1, t[emb], check=False)
        return _ordered(
            UpdateOutcome(r, Fraction(1), ((Fraction(1), succ),)),
            UpdateOutcome(1 - r, Fraction(0), ()),
        )
    out = []
    base = t[emb]
    shifted = t[emb ^ b]
    for r in (0, 1):
        # Omega(0) and b + Omega(b) are disjoint when b is not in Omega
        new = np.where(base != 0, base, shifted * (1 - 2 * r)).astype(np.int8)
        out.append(UpdateOutcome(r, Fraction(1, 2), ((Fraction(1), LocalPair(n - 1, new, check=False)),)))
    return tuple(out)


def _ordered(*outs):
    return tuple(sorted(outs, key=lambda o: o.outcome))


def nondestructive_update(pair, spec):
    """Outcomes of measuring ``spec.axis`` on ``spec.qubit`` keeping the qubit."""
    n, t = pair.n, pair.table
    spec.point(n)
    b = _b_index(n, spec.qubit, spec.axis)
    zero, same = _component_masks(n, spec.qubit, spec.axis)
    if t[b] != 0:
        r = int(t[b] < 0)
        # gamma + [b, .] flips the sign of elements anticommuting with b
        anti = ~(zero | same)
        flipped = np.where(anti, -t, t).astype(np.int8)
        half = Fraction(1, 2)
        succ = ((half, pair), (half, LocalPair(n, flipped, check=False)))
        return _ordered(UpdateOutcome(r, Fraction(1), succ), UpdateOutcome(1 - r, Fraction(0), ()))
    idx = np.arange(4**n, dtype=np.int64)
    out = []
    for r in (0, 1):
        sign = 1 - 2 * r
        new = np.zeros(4**n, dtype=np.int8)
        z0 = idx[zero]
        # Omega_b inside E_n
        new[z0] = np.where(t[z0] != 0, t[z0], t[z0 ^ b] * sign)
        zb = idx[same]
        new[zb] = new[zb ^ b] * sign
        out.append(UpdateOutcome(r, Fraction(1, 2), ((Fraction(1), LocalPair(n, new, check=False)),)))
    return tuple(out)


def update(pair, spec):
    if validate_assignment(pair) is not None:
        raise InvalidPair("invalid local pair")
    return destructive_update(pair, spec) if spec.destructive else nondestructive_update(pair, spec)


# ---------------------------------------------------------------------------
# general operators


@dataclass(frozen=True)
class Projection:
    """Unnormalised post-measurement operator; ``values[0]`` is its trace."""

    n: int
    values: np.ndarray
    mode: str

    @property
    def trace(self):
        return self.values[0]

    def normalized(self):
        if self.trace == 0:
            return None
        return ExpectationVector(self.n, self.values / self.trace, self.mode)

    def is_zero(self, tol=0.0):
        if self.mode == "rational":
            return all(v == 0 for v in self.values)
        return bool(np.all(np.abs(self.values) <= tol))


def _local_b(A, b):
    if isinstance(b, MeasurementSpec):
        return b.qubit, b.axis
    if isinstance(b, PauliPoint):
        comps = [(q, ax) for q in range(1, b.n + 1)
                 for ax in ("x", "y", "z") if PauliPoint.local(b.n, q, ax) == b]
        if len(comps) != 1:
            raise ValueError(f"{b} is not a local element")
        return comps[0]
    return b


def project_operator(A, b, r):
    """Pi_b^r A Pi_b^r for a local b; expectations (e_c + (-1)^r e_{c+b}) / 2 on [c, b] = 0."""
    qubit, axis = _local_b(A, b)
    n = A.n
    bi = _b_index(n, qubit, axis)
    zero, same = _component_masks(n, qubit, axis)
    comm = zero | same
    e = A.values
    idx = np.arange(4**n)
    sign = 1 - 2 * r
    if A.mode == "rational":
        f = np.array([Fraction(0)] * 4**n, dtype=object)
        for c in idx[comm]:
            f[c] = (e[c] + sign * e[c ^ bi]) / 2
    else:
        f = np.zeros(4**n)
        f[comm] = (e[comm] + sign * e[idx[comm] ^ bi]) / 2
    return Projection(n, f, A.mode)


def destructive_project(A, b, r):
    """Tr_i(Pi_b^r A Pi_b^r) on the remaining n - 1 qubits."""
    qubit, axis = _local_b(A, b)
    n = A.n
    bi = _b_index(n, qubit, axis)
    emb = embedding(n, qubit)
    e = A.values
    sign = 1 - 2 * r
    if A.mode == "rational":
        f = np.array([(e[c] + sign * e[c ^ bi]) / 2 for c in emb], dtype=object)
        f = np.array([Fraction(v) for v in f], dtype=object)
    else:
        f = (e[emb] + sign * e[emb ^ bi]) / 2
    return Projection(n - 1, f, A.mode)


def facet_chain(A, P):
    """Sequential conditional traces whose product is Tr(Pi_I^s A) for local maximal I.

    Measures the basis elements of ``P`` one by one with non-destructive
    projections. Returns ``(factors, product)``: each factor is the outcome
    probability conditioned on the earlier ones (``None`` after a zero-trace
    branch) and ``product`` is the final unnormalised trace, which equals the
    product of the factors whenever all are defined.
    """
    if P.n != A.n:
        raise DimensionMismatch("projector and operator sizes differ")
    if not P.subspace.is_local_isotropic() or P.subspace.dim != P.n:
        raise ValueError("facet chain requires a local stabilizer state")
    cur = Projection(A.n, A.values, A.mode)
    factors = []
    gens = [a for a in P.subspace.elements() if weight(PauliPoint.from_index(P.n, int(a))) == 1]
    for g in gens:
        g = int(g)
        prev = cur.trace
        cur = project_operator(cur, PauliPoint.from_index(P.n, g), P.evaluate(g))
        factors.append(None if prev == 0 else cur.trace / prev)
    return factors, cur.trace


# ---------------------------------------------------------------------------
# LP-backed update distributions


def generic_update_distribution(A, spec, target, minimize_norm=False, **lp_options):
    """Per-outcome weights q(beta, r) over ``target`` with sum_beta q A_beta = Phi^r(A).

    Returns a list indexed by outcome of ``(probability, weights)``; weights
    sum to the outcome probability. Raises :class:`InfeasibleLP` when the
    normalised post-state is outside the catalog hull.
    """
    from .lp import decompose_probability, robustness

    out = []
    for r in (0, 1):
        proj = destructive_project(A, spec.point(A.n), r) if spec.destructive \
            else project_operator(A, spec.point(A.n), r)
        prob = float(proj.trace)
        if prob <= 1e-12:
            out.append((0.0, np.zeros(len(target))))
            continue
        post = proj.normalized().to_double()
        if post.n != target.n:
            raise DimensionMismatch("target catalog has the wrong qubit count")
        if minimize_norm:
            _, q = robustness(post, target, **lp_options)
            out.append((prob, prob * q.coeffs))
        else:
            q = decompose_probability(post, target, **lp_options)
            if q is None:
                raise InfeasibleLP("post-measurement state is outside the catalog hull")
            out.append((prob, prob * q.coeffs))
    return out
