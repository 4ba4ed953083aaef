"""Symplectic phase space E_n = Z_2^n x Z_2^n and the Pauli-expectation representation.

A point ``a`` is packed into one integer ``index = x | (z << n)`` where bit
``j - 1`` of ``x`` (resp. ``z``) is the X (resp. Z) bit of qubit ``j``. Qubits
are labelled ``1..n`` in the public API. The Pauli operator is

    T_a = i^{a_X . a_Z} X^{x_1} Z^{z_1} (x) ... (x) X^{x_n} Z^{z_n}

with qubit 1 as the leftmost tensor factor of dense matrices.

Operators are handled through their expectation table ``e_a = Tr(T_a A)``,
so that ``A = (1 / 2^n) sum_a e_a T_a``.
"""

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import (
    AnticommutingError,
    DenseLimitError,
    DimensionMismatch,
    InvalidOperator,
)

DENSE_LIMIT = 10
TABLE_LIMIT = 7
DOUBLE_TOL = 1e-9

AXES = ("x", "y", "z")
_AXIS_BITS = {"x": (1, 0), "y": (1, 1), "z": (0, 1), "0": (0, 0)}
_BITS_AXIS = {v: k for k, v in _AXIS_BITS.items()}


@dataclass(frozen=True, order=True)
class PauliPoint:
    n: int
    x: int
    z: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        full = (1 << self.n) - 1
        if self.x & ~full or self.z & ~full or self.x < 0 or self.z < 0:
            raise ValueError(f"bit vectors do not fit in {self.n} qubits")

    @classmethod
    def from_index(cls, n, index):
        full = (1 << n) - 1
        return cls(n, int(index) & full, int(index) >> n)

    @classmethod
    def zero(cls, n):
        return cls(n, 0, 0)

    @classmethod
    def local(cls, n, qubit, axis):
        """Single-qubit element ``x_i``, ``y_i`` or ``z_i`` (qubit 1-based)."""
        if not 1 <= qubit <= n:
            raise ValueError(f"qubit {qubit} out of range 1..{n}")
        bx, bz = _AXIS_BITS[axis.lower()]
        return cls(n, bx << (qubit - 1), bz << (qubit - 1))

    @classmethod
    def from_bitstrings(cls, xbits, zbits):
        """Build from '0'/'1' strings, qubit 1 first."""
        if len(xbits) != len(zbits):
            raise DimensionMismatch("x and z bitstrings differ in length")
        n = len(xbits)
        x = sum(1 << j for j, c in enumerate(xbits) if c == "1")
        z = sum(1 << j for j, c in enumerate(zbits) if c == "1")
        return cls(n, x, z)

    @classmethod
    def parse(cls, n, text):
        """Parse ``"x1+z2"`` style labels; ``"0"`` is the origin."""
        a = cls.zero(n)
        text = text.replace(" ", "")
        if text in ("", "0"):
            return a
        for term in text.split("+"):
            a = a + cls.local(n, int(term[1:]), term[0])
        return a

    @property
    def index(self):
        return self.x | (self.z << self.n)

    def bitstrings(self):
        xs = "".join("1" if self.x >> j & 1 else "0" for j in range(self.n))
        zs = "".join("1" if self.z >> j & 1 else "0" for j in range(self.n))
        return xs, zs

    def __add__(self, other):
        _check_n(self, other)
        return PauliPoint(self.n, self.x ^ other.x, self.z ^ other.z)

    def __bool__(self):
        return bool(self.x or self.z)

    def __str__(self):
        terms = [f"{ax}{q}" for q, ax in local_decomposition(self) if ax != "0"]
        return "+".join(terms) if terms else "0"


def _check_n(a, b):
    if a.n != b.n:
        raise DimensionMismatch(f"qubit counts differ: {a.n} vs {b.n}")


def symplectic_form(a, b):
    """[a, b] = a_X . b_Z + a_Z . b_X mod 2."""
    _check_n(a, b)
    return ((a.x & b.z).bit_count() + (a.z & b.x).bit_count()) & 1


def _phase_exponent(ax, az, bx, bz):
    # T_a T_b = i^k T_{a+b}
    return (
        (ax & az).bit_count()
        + (bx & bz).bit_count()
        + 2 * (az & bx).bit_count()
        - ((ax ^ bx) & (az ^ bz)).bit_count()
    ) % 4


def beta(a, b):
    """Sign bit of T_a T_b = (-1)^beta T_{a+b} for commuting a, b."""
    _check_n(a, b)
    k = _phase_exponent(a.x, a.z, b.x, b.z)
    if k & 1:
        raise AnticommutingError(f"{a} and {b} anticommute")
    return k >> 1


def local_decomposition(a):
    """Per-qubit components as ``(qubit, axis)`` with axis in x/y/z/0."""
    return [
        (j + 1, _BITS_AXIS[(a.x >> j & 1, a.z >> j & 1)]) for j in range(a.n)
    ]


def weight(a):
    return (a.x | a.z).bit_count()


def locally_commutes(a, b):
    _check_n(a, b)
    clash = ((a.x ^ b.x) | (a.z ^ b.z)) & (a.x | a.z) & (b.x | b.z)
    return clash == 0


# ---------------------------------------------------------------------------
# vectorised versions over packed index arrays


def split_index(idx, n):
    idx = np.asarray(idx, dtype=np.int64)
    full = (1 << n) - 1
    return idx & full, idx >> n


def symplectic_array(a, b, n):
    ax, az = split_index(a, n)
    bx, bz = split_index(b, n)
    return (np.bitwise_count((ax & bz) ^ (az & bx)) & 1).astype(np.int8)


def phase_exponent_array(a, b, n):
    ax, az = split_index(a, n)
    bx, bz = split_index(b, n)
    k = (
        np.bitwise_count(ax & az).astype(np.int64)
        + np.bitwise_count(bx & bz)
        + 2 * np.bitwise_count(az & bx).astype(np.int64)
        - np.bitwise_count((ax ^ bx) & (az ^ bz))
    )
    return k % 4


def beta_array(a, b, n):
    """Elementwise beta; entries for anticommuting pairs are meaningless."""
    return (phase_exponent_array(a, b, n) >> 1).astype(np.int8)


def locally_commutes_array(a, b, n):
    ax, az = split_index(a, n)
    bx, bz = split_index(b, n)
    clash = ((ax ^ bx) | (az ^ bz)) & (ax | az) & (bx | bz)
    return clash == 0


def weight_array(idx, n):
    x, z = split_index(idx, n)
    return np.bitwise_count(x | z).astype(np.int64)


@lru_cache(maxsize=None)
def commutation_tables(n):
    """(symplectic, locally-commutes, beta) tables over all pairs of E_n, n <= 5."""
    if n > 5:
        raise DenseLimitError("pair tables are limited to n <= 5")
    idx = np.arange(4**n)
    a, b = np.meshgrid(idx, idx, indexing="ij")
    symp = symplectic_array(a, b, n)
    lc = locally_commutes_array(a, b, n)
    bet = beta_array(a, b, n)
    for t in (symp, lc, bet):
        t.setflags(write=False)
    return symp, lc, bet


# ---------------------------------------------------------------------------
# dense oracle

# indexed by per-qubit code 2 * x + z
_SIGMA = np.array(
    [
        [[1, 0], [0, 1]],
        [[1, 0], [0, -1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
    ],
    dtype=complex,
)


def _check_dense(n):
    if n > DENSE_LIMIT:
        raise DenseLimitError(f"dense oracles refuse n > {DENSE_LIMIT}")


def pauli_matrix(a):
    _check_dense(a.n)
    m = np.ones((1, 1), dtype=complex)
    for j in range(a.n):
        code = 2 * (a.x >> j & 1) + (a.z >> j & 1)
        m = np.kron(m, _SIGMA[code])
    return m


def _qubit_code_perm(n):
    # position of index (x | z << n) inside a C-ordered (4,)*n tensor of codes
    idx = np.arange(4**n)
    x, z = split_index(idx, n)
    flat = np.zeros_like(idx)
    for j in range(n):
        code = 2 * (x >> j & 1) + (z >> j & 1)
        flat = flat * 4 + code
    return flat


def table_to_matrix(e, n):
    """Dense (1/2^n) sum_a e_a T_a for a real or complex table ``e``."""
    _check_dense(n)
    coeff = np.zeros(4**n, dtype=complex)
    coeff[_qubit_code_perm(n)] = np.asarray(e, dtype=complex)
    t = coeff.reshape((4,) * n)
    for _ in range(n):
        t = np.tensordot(t, _SIGMA, axes=([0], [0]))
    # axes are now (r1, c1, r2, c2, ...)
    order = list(range(0, 2 * n, 2)) + list(range(1, 2 * n, 2))
    return t.transpose(order).reshape(2**n, 2**n) / 2**n


def matrix_to_table(m, n):
    """Tr(T_a M) for every a, complex valued."""
    _check_dense(n)
    t = np.asarray(m, dtype=complex).reshape((2,) * (2 * n))
    order = [ax for j in range(n) for ax in (j, n + j)]
    t = t.transpose(order)
    for _ in range(n):
        # sum_{r,c} M[r, c] sigma[p, c, r]
        t = np.tensordot(t, _SIGMA, axes=([0, 1], [2, 1]))
    return t.reshape(-1)[_qubit_code_perm(n)]


# ---------------------------------------------------------------------------
# expectation vectors


def _as_fraction(v):
    if isinstance(v, Fraction):
        return v
    if isinstance(v, (int, np.integer)):
        return Fraction(int(v))
    if isinstance(v, str):
        return Fraction(v)
    if isinstance(v, (float, np.floating)):
        return Fraction(float(v))
    raise TypeError(f"cannot use {v!r} as an exact rational")


class ExpectationVector:
    """Trace-one Hermitian operator stored as its 4^n Pauli expectations.

    ``mode`` is ``"rational"`` (object array of ``Fraction``) or ``"double"``.
    Instances are immutable.
    """

    __slots__ = ("n", "mode", "_e")

    def __init__(self, n, e, mode="double"):
        if n > TABLE_LIMIT:
            raise DenseLimitError(f"expectation tables are limited to n <= {TABLE_LIMIT}")
        if mode == "rational":
            arr = np.empty(4**n, dtype=object)
            arr[:] = [_as_fraction(v) for v in np.asarray(e, dtype=object).ravel()]
        elif mode == "double":
            arr = np.array(np.asarray(e, dtype=object), dtype=np.float64)
        else:
            raise ValueError(f"unknown mode {mode!r}")
        if arr.shape != (4**n,):
            raise DimensionMismatch(f"expected {4**n} entries, got {arr.shape}")
        if mode == "double" and abs(arr[0] - 1) <= DOUBLE_TOL:
            arr[0] = 1.0
        if arr[0] != 1:
            raise InvalidOperator("e_0 must equal 1 (trace one)")
        arr.setflags(write=False)
        self.n = n
        self.mode = mode
        self._e = arr

    @classmethod
    def maximally_mixed(cls, n, mode="rational"):
        e = [1] + [0] * (4**n - 1)
        return cls(n, e, mode)

    @classmethod
    def from_entries(cls, n, entries, mode="rational"):
        """Build from ``{PauliPoint or index: value}``; missing entries are 0."""
        e = [0] * 4**n
        e[0] = 1
        for a, v in entries.items():
            i = a.index if isinstance(a, PauliPoint) else int(a)
            e[i] = v
        return cls(n, e, mode)

    @property
    def values(self):
        return self._e

    def __getitem__(self, a):
        i = a.index if isinstance(a, PauliPoint) else int(a)
        return self._e[i]

    def __len__(self):
        return len(self._e)

    def __eq__(self, other):
        if not isinstance(other, ExpectationVector):
            return NotImplemented
        return self.n == other.n and bool(np.all(self._e == other._e))

    def __hash__(self):
        return hash((self.n, self.key()))

    def __repr__(self):
        nz = int(np.count_nonzero(self._e != 0))
        return f"ExpectationVector(n={self.n}, mode={self.mode}, nonzero={nz})"

    def key(self):
        """Canonical hashable form (exact for rational mode)."""
        if self.mode == "rational":
            return tuple((v.numerator, v.denominator) for v in self._e)
        return np.round(self._e, 9).tobytes()

    def to_double(self):
        if self.mode == "double":
            return self
        return ExpectationVector(self.n, self._e.astype(np.float64), "double")

    def to_rational(self, max_denominator=None):
        if self.mode == "rational":
            return self
        if max_denominator is None:
            vals = [Fraction(v) for v in self._e]
        else:
            vals = [Fraction(v).limit_denominator(max_denominator) for v in self._e]
        return ExpectationVector(self.n, vals, "rational")

    def isclose(self, other, atol=1e-12):
        return self.n == other.n and np.allclose(
            self._e.astype(float), other._e.astype(float), atol=atol, rtol=0
        )

    def support(self):
        return np.flatnonzero(self._e != 0)


def to_matrix(A):
    return table_to_matrix(A.values.astype(np.float64), A.n)


def from_matrix(m, mode="double", tol=1e-10):
    m = np.asarray(m, dtype=complex)
    dim = m.shape[0]
    n = dim.bit_length() - 1
    if m.shape != (dim, dim) or 2**n != dim:
        raise DimensionMismatch("matrix must be 2^n x 2^n")
    if not np.allclose(m, m.conj().T, atol=tol):
        raise InvalidOperator("matrix is not Hermitian")
    if abs(np.trace(m) - 1) > tol:
        raise InvalidOperator("matrix does not have trace one")
    e = matrix_to_table(m, n).real
    e[0] = 1.0
    A = ExpectationVector(n, e, "double")
    return A if mode == "double" else A.to_rational()


# ---------------------------------------------------------------------------
# JSON


def format_number(v):
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}" if v.denominator != 1 else str(v.numerator)
    return float(f"{float(v):.12g}")


def parse_number(v, mode):
    if mode == "rational":
        return Fraction(v) if isinstance(v, str) else _as_fraction(v)
    return float(Fraction(v)) if isinstance(v, str) else float(v)


def point_to_json(a):
    xs, zs = a.bitstrings()
    return {"x": xs, "z": zs}


def point_from_json(d):
    return PauliPoint.from_bitstrings(d["x"], d["z"])


def expectation_to_json(A):
    entries = []
    for i in np.flatnonzero(A.values != 0):
        if i == 0:
            continue
        d = point_to_json(PauliPoint.from_index(A.n, i))
        d["v"] = format_number(A.values[i])
        entries.append(d)
    return {"n": A.n, "mode": A.mode, "e": entries}


def expectation_from_json(d):
    n, mode = int(d["n"]), d.get("mode", "double")
    e = [0] * 4**n
    e[0] = 1
    for ent in d["e"]:
        a = point_from_json(ent)
        if a.n != n:
            raise DimensionMismatch("entry length differs from n")
        e[a.index] = parse_number(ent["v"], mode)
    return ExpectationVector(n, e, mode)
