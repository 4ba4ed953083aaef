"""Dense linear programming, robustness and quasi-probability sampling.

The default solver is a two-phase revised simplex on min c.x, A x = b,
x >= 0 with Dantzig pricing, a Bland fallback on degenerate stalls, and a
fresh LU factorisation of the basis each iteration (bases have at most a
few dozen rows here). Optimality is certified by the dual solution.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import DimensionMismatch, InfeasibleLP, IterationLimit, UnboundedLP

log = logging.getLogger(__name__)

FEAS_TOL = 1e-9
GAP_TOL = 1e-7
RESIDUAL_TOL = 1e-7
_PIVOT_TOL = 1e-9
_STALL = 50


@dataclass
class LinearProgram:
    """min c.x subject to A_eq x = b_eq, x >= 0."""

    c: np.ndarray
    A_eq: np.ndarray
    b_eq: np.ndarray

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        self.A_eq = np.atleast_2d(np.asarray(self.A_eq, dtype=float))
        self.b_eq = np.asarray(self.b_eq, dtype=float)
        m, N = self.A_eq.shape
        if self.c.shape != (N,) or self.b_eq.shape != (m,):
            raise DimensionMismatch(f"c {self.c.shape}, A {self.A_eq.shape}, b {self.b_eq.shape}")
        for arr in (self.c, self.A_eq, self.b_eq):
            if not np.all(np.isfinite(arr)):
                raise ValueError("linear program has non-finite entries")


@dataclass
class LPSolution:
    x: np.ndarray
    objective: float
    status: str
    y: np.ndarray = None
    iterations: int = 0
    gap: float = 0.0
    residual: float = 0.0
    backend: str = "simplex"


# ---------------------------------------------------------------------------
# preprocessing


def _independent_rows(A, b):
    """Drop linearly dependent equality rows; raise if they are inconsistent."""
    m = A.shape[0]
    if m == 0:
        return np.arange(0)
    _, R, piv = sla.qr(A.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    tol = max(A.shape) * np.finfo(float).eps * (diag[0] if len(diag) else 0.0) * 1e3
    rank = int(np.sum(diag > tol))
    keep = np.sort(piv[:rank])
    if rank < m:
        sol, *_ = np.linalg.lstsq(A[keep].T, A.T, rcond=None)
        # dependent rows must carry consistent right-hand sides
        if np.abs(sol.T @ b[keep] - b).max() > 1e-8 * max(1.0, np.abs(b).max()):
            raise InfeasibleLP("redundant equality rows are inconsistent")
    return keep


# ---------------------------------------------------------------------------
# revised simplex


class _Simplex:
    """Columns are the structural matrix followed by implicit identity artificials."""

    def __init__(self, A, b, max_iter):
        self.A = A
        self.b = b
        self.m, self.N = A.shape
        self.max_iter = max_iter
        self.iterations = 0

    def column(self, j):
        if j < self.N:
            return self.A[:, j]
        e = np.zeros(self.m)
        e[j - self.N] = 1.0
        return e

    def basis_matrix(self, basis):
        return np.column_stack([self.column(j) for j in basis])

    def run(self, basis, c_struct, c_art=None):
        """Optimise from a feasible basis; artificials may enter only if ``c_art`` is given."""
        N = self.N
        stall = 0
        bland = False
        while True:
            if self.iterations >= self.max_iter:
                raise IterationLimit(f"simplex exceeded {self.max_iter} iterations")
            lu = sla.lu_factor(self.basis_matrix(basis))
            xB = sla.lu_solve(lu, self.b)
            cB = np.array([c_struct[j] if j < N else c_art[j - N] for j in basis])
            y = sla.lu_solve(lu, cB, trans=1)
            d = c_struct - self.A.T @ y
            in_basis = np.array(basis)
            d[in_basis[in_basis < N]] = 0.0
            if c_art is not None:
                d_art = c_art - y
                d_art[in_basis[in_basis >= N] - N] = 0.0
                d = np.concatenate([d, d_art])
            scale = max(1.0, np.abs(c_struct).max())
            cand = np.flatnonzero(d < -FEAS_TOL * scale)
            if len(cand) == 0:
                return basis, xB, y
            j = int(cand[0]) if bland else int(cand[np.argmin(d[cand])])
            u = sla.lu_solve(lu, self.column(j))
            pos = np.flatnonzero(u > _PIVOT_TOL)
            if len(pos) == 0:
                raise UnboundedLP("objective is unbounded below")
            ratios = np.maximum(xB[pos], 0.0) / u[pos]
            theta = ratios.min()
            ties = pos[ratios <= theta + 1e-12]
            if bland:
                r = int(min(ties, key=lambda k: basis[k]))
            else:
                r = int(ties[np.argmax(u[ties])])
            basis[r] = j
            self.iterations += 1
            if theta <= 1e-12:
                stall += 1
                if stall >= _STALL:
                    bland = True
            else:
                stall = 0
                bland = False


def _simplex_solve(lp, max_iter):
    keep = _independent_rows(lp.A_eq, lp.b_eq)
    A, b = lp.A_eq[keep], lp.b_eq[keep]
    flip = b < 0
    A = np.where(flip[:, None], -A, A)
    b = np.where(flip, -b, b)
    m, N = A.shape
    S = _Simplex(A, b, max_iter)
    basis = list(range(N, N + m))
    basis, xB, _ = S.run(basis, np.zeros(N), np.ones(m))
    infeas = float(sum(xB[k] for k, j in enumerate(basis) if j >= N))
    if infeas > FEAS_TOL * max(1.0, np.abs(b).max()) * 10:
        raise InfeasibleLP(f"phase one ended with infeasibility {infeas:.3g}")
    basis = _drive_out_artificials(S, basis)
    basis, xB, y = S.run(basis, lp.c)
    x = np.zeros(N)
    for k, j in enumerate(basis):
        x[j] = max(xB[k], 0.0)
    y_full = np.zeros(len(lp.b_eq))
    y_full[keep] = np.where(flip, -y, y)
    return x, y_full, S.iterations


def _drive_out_artificials(S, basis):
    N = S.N
    for k in range(len(basis)):
        if basis[k] < N:
            continue
        lu = sla.lu_factor(S.basis_matrix(basis))
        row = sla.lu_solve(lu, np.eye(S.m)[k], trans=1) @ S.A
        row[[j for j in basis if j < N]] = 0.0
        j = int(np.argmax(np.abs(row)))
        if abs(row[j]) <= 1e-7:
            raise InfeasibleLP("artificial variable cannot leave the basis")
        basis[k] = j
    return basis


def _certify(lp, x, y, backend, iterations):
    """Primal residual, duality gap and dual infeasibility of (x, y)."""
    A, b, c = lp.A_eq, lp.b_eq, lp.c
    residual = float(np.abs(A @ x - b).max()) if len(b) else 0.0
    reduced = c - A.T @ y
    dual_infeas = float(max(0.0, -reduced.min())) if len(reduced) else 0.0
    obj = float(c @ x)
    gap = abs(obj - float(b @ y))
    scale = max(1.0, abs(obj))
    if residual > 1e3 * FEAS_TOL * max(1.0, np.abs(b).max()):
        raise InfeasibleLP(f"primal residual {residual:.3g} above tolerance")
    if gap > GAP_TOL * scale or dual_infeas > GAP_TOL * scale:
        log.warning("weak optimality certificate: gap %.3g, dual infeasibility %.3g", gap, dual_infeas)
    return LPSolution(x, obj, "optimal", y, iterations, max(gap, dual_infeas), residual, backend)


def solve_lp(lp, backend="simplex", max_iter=200_000):
    """Solve ``lp``; ``backend`` is "simplex" (built in) or "highs" (scipy).

    Raises InfeasibleLP, UnboundedLP or IterationLimit.
    """
    if backend == "simplex":
        x, y, it = _simplex_solve(lp, max_iter)
    elif backend == "highs":
        from scipy.optimize import linprog

        res = linprog(lp.c, A_eq=lp.A_eq, b_eq=lp.b_eq, bounds=(0, None), method="highs")
        if res.status == 2:
            raise InfeasibleLP(res.message)
        if res.status == 3:
            raise UnboundedLP(res.message)
        if res.status != 0:
            raise IterationLimit(res.message)
        x, y, it = np.maximum(res.x, 0.0), np.asarray(res.eqlin.marginals), int(res.nit)
    else:
        raise ValueError(f"unknown LP backend {backend!r}")
    return _certify(lp, x, y, backend, it)


# ---------------------------------------------------------------------------
# quasi-probability decompositions


@dataclass
class QuasiDistribution:
    catalog: object
    coeffs: np.ndarray
    one_norm: float = field(init=False)
    residual: float = 0.0

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        self.one_norm = float(np.abs(self.coeffs).sum())

    def __len__(self):
        return len(self.coeffs)

    def support(self, tol=1e-12):
        return np.flatnonzero(np.abs(self.coeffs) > tol)

    def reconstruct(self):
        return self.coeffs @ self.catalog.values.astype(float)

    def to_json(self, tol=1e-12):
        from .pauli import format_number

        return {
            "catalog": self.catalog.name,
            "coeffs": [
                {"label": self.catalog.labels[k], "p": format_number(float(self.coeffs[k]))}
                for k in self.support(tol)
            ],
            "one_norm": format_number(self.one_norm),
        }


def quasi_from_json(d, catalog):
    pos = {lab: k for k, lab in enumerate(catalog.labels)}
    coeffs = np.zeros(len(catalog))
    for ent in d["coeffs"]:
        coeffs[pos[ent["label"]]] = float(ent["p"])
    return QuasiDistribution(catalog, coeffs)


def _check_sizes(rho, catalog):
    if rho.n != catalog.n:
        raise DimensionMismatch(f"state has {rho.n} qubits, catalog {catalog.n}")


def _residual(rho, q):
    return float(np.abs(q.reconstruct() - rho.to_double().values).max())


def robustness(rho, catalog, backend="simplex", **options):
    """min ||p||_1 over rho = sum_a p(a) A_a; returns (value, QuasiDistribution)."""
    _check_sizes(rho, catalog)
    V = catalog.values.T.astype(float)
    lp = LinearProgram(np.ones(2 * V.shape[1]), np.hstack([V, -V]), rho.to_double().values)
    try:
        sol = solve_lp(lp, backend=backend, **options)
    except InfeasibleLP as exc:
        raise InfeasibleLP(f"catalog {catalog.name} does not span the state: {exc}") from exc
    N = V.shape[1]
    q = QuasiDistribution(catalog, sol.x[:N] - sol.x[N:])
    q.residual = _residual(rho, q)
    if q.residual > RESIDUAL_TOL:
        raise InfeasibleLP(f"reconstruction residual {q.residual:.3g} above tolerance")
    return max(sol.objective, 1.0), q


def decompose_probability(rho, catalog, backend="simplex", **options):
    """Non-negative weights with rho = sum p(a) A_a, or None when rho is outside the hull."""
    _check_sizes(rho, catalog)
    V = catalog.values.T.astype(float)
    lp = LinearProgram(np.zeros(V.shape[1]), V, rho.to_double().values)
    try:
        sol = solve_lp(lp, backend=backend, **options)
    except InfeasibleLP:
        return None
    q = QuasiDistribution(catalog, sol.x / sol.x.sum())
    q.residual = _residual(rho, q)
    if q.residual > RESIDUAL_TOL:
        return None
    return q


# ---------------------------------------------------------------------------
# sampling


def signed_sampler(q, seed):
    """Endless stream of (member index, sign) with index drawn from |p| / ||p||_1."""
    rng = np.random.default_rng(seed)
    probs = np.abs(q.coeffs) / q.one_norm
    signs = np.sign(q.coeffs).astype(int)
    cdf = np.cumsum(probs)
    cdf[-1] = 1.0
    while True:
        for k in np.searchsorted(cdf, rng.random(4096), side="right"):
            yield int(k), int(signs[k])


def sample_members(q, size, rng):
    """Vectorised draw: arrays (indices, signs)."""
    probs = np.abs(q.coeffs) / q.one_norm
    idx = rng.choice(len(probs), size=size, p=probs)
    return idx, np.sign(q.coeffs[idx]).astype(int)
