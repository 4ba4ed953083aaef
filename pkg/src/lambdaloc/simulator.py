"""Measurement-based computation on magic cluster states, simulated over local pairs.

States are sampled from a (quasi-)probability decomposition over a catalog of
local pairs, then pushed through destructive single-qubit X/Y measurements
with the closed-form update rules. A dense density-matrix oracle gives the
Born-rule reference distribution.
"""

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import DenseLimitError, InfeasibleLP, ResourceGuardExceeded, ScheduleError
from .locally_closed import pair_to_json
from .lp import QuasiDistribution, decompose_probability, robustness
from .pauli import DENSE_LIMIT, ExpectationVector, PauliPoint, from_matrix, pauli_matrix, to_matrix
from .updates import MeasurementSpec, destructive_update, nondestructive_update

BRANCH_CAP = 1 << 20


# ---------------------------------------------------------------------------
# graphs and magic cluster states


@dataclass(frozen=True)
class Graph:
    n: int
    edges: tuple

    def __post_init__(self):
        norm = set()
        for e in self.edges:
            i, j = (int(v) for v in e)
            if i == j:
                raise ValueError(f"self-loop at vertex {i}")
            if not (1 <= i <= self.n and 1 <= j <= self.n):
                raise ValueError(f"edge {e} references a vertex outside 1..{self.n}")
            key = (min(i, j), max(i, j))
            if key in norm:
                raise ValueError(f"duplicate edge {key}")
            norm.add(key)
        object.__setattr__(self, "edges", tuple(sorted(norm)))

    @classmethod
    def line(cls, n):
        return cls(n, tuple((i, i + 1) for i in range(1, n)))

    @classmethod
    def complete(cls, n):
        return cls(n, tuple(itertools.combinations(range(1, n + 1), 2)))

    def to_json(self):
        return {"n": self.n, "edges": [list(e) for e in self.edges]}

    @classmethod
    def from_json(cls, d):
        return cls(int(d["n"]), tuple(tuple(e) for e in d["edges"]))


@dataclass(frozen=True)
class MagicClusterSpec:
    graph: Graph
    magic: frozenset = frozenset()

    def __post_init__(self):
        m = frozenset(int(u) for u in self.magic)
        if not all(1 <= u <= self.graph.n for u in m):
            raise ValueError("magic set must be a subset of the vertices")
        object.__setattr__(self, "magic", m)


def cluster_statevector(spec):
    """E(G) T^U |+>^n with qubit 1 as the most significant tensor factor."""
    n = spec.graph.n
    if n > DENSE_LIMIT:
        raise DenseLimitError(f"statevector limited to {DENSE_LIMIT} qubits")
    bits = (np.arange(2**n)[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1
    psi = np.full(2**n, 2 ** (-n / 2), dtype=complex)
    for u in sorted(spec.magic):
        psi = psi * np.exp(1j * np.pi / 4 * bits[:, u - 1])
    for i, j in spec.graph.edges:
        psi = psi * (1 - 2 * (bits[:, i - 1] & bits[:, j - 1]))
    return psi


def magic_cluster(spec):
    psi = cluster_statevector(spec)
    e = from_matrix(np.outer(psi, psi.conj()), mode="double").values.copy()
    # stabilizer parts come out as 0 or +-1 up to rounding; make them exact
    r = np.round(e)
    snap = np.abs(e - r) < 1e-12
    e[snap] = r[snap]
    return ExpectationVector(spec.graph.n, e, "double")


# ---------------------------------------------------------------------------
# schedules


@dataclass(frozen=True)
class Step:
    qubit: int
    basis: tuple  # sorted (prefix, axis) items

    def axis(self, prefix):
        for p, a in self.basis:
            if p == prefix:
                return a
        raise ScheduleError(f"no basis given for outcome prefix {prefix!r} at qubit {self.qubit}")


@dataclass(frozen=True)
class MeasurementSchedule:
    n: int
    steps: tuple

    def __post_init__(self):
        seen = set()
        for k, st in enumerate(self.steps):
            if not 1 <= st.qubit <= self.n:
                raise ScheduleError(f"step {k} targets qubit {st.qubit} outside 1..{self.n}")
            if st.qubit in seen:
                raise ScheduleError(f"qubit {st.qubit} measured twice")
            seen.add(st.qubit)
            for p, a in st.basis:
                if a not in ("x", "y"):
                    raise ScheduleError(f"schedule bases must be X or Y, got {a!r}")
                if len(p) != k or set(p) - {"0", "1"}:
                    raise ScheduleError(f"step {k} has malformed prefix {p!r}")

    @classmethod
    def build(cls, n, steps):
        """``steps``: (qubit, rule) where rule is an axis letter or a prefix -> axis mapping."""
        out = []
        for k, (q, rule) in enumerate(steps):
            if isinstance(rule, str):
                rule = {"".join(p): rule for p in itertools.product("01", repeat=k)}
            out.append(Step(int(q), tuple(sorted((p, a.lower()) for p, a in rule.items()))))
        return cls(n, tuple(out))

    @classmethod
    def fixed(cls, n, qubits, axes):
        return cls.build(n, list(zip(qubits, axes)))

    def to_json(self):
        return {
            "n": self.n,
            "steps": [{"qubit": s.qubit, "basis": {p: a.upper() for p, a in s.basis}} for s in self.steps],
        }

    @classmethod
    def from_json(cls, d, n=None):
        n = int(d.get("n", n if n is not None else 0))
        if n <= 0:
            raise ScheduleError("schedule needs the register size n")
        return cls.build(n, [(s["qubit"], s["basis"]) for s in d["steps"]])


def xy_schedules(n, order=None):
    """Every non-adaptive X/Y schedule measuring the qubits in ``order`` (default 1..n)."""
    order = list(range(1, n + 1)) if order is None else list(order)
    for axes in itertools.product("xy", repeat=len(order)):
        yield MeasurementSchedule.fixed(n, order, axes)


def _position(live, qubit):
    return live.index(qubit) + 1


# ---------------------------------------------------------------------------
# trajectories


@dataclass
class Trajectory:
    seed: int
    index: int
    initial: int  # catalog member index
    sign: int
    outcomes: str = ""
    axes: str = ""
    states: list = field(default_factory=list)

    def trace(self, schedule):
        """JSON-ready records, one per step."""
        return [
            {
                "step": k,
                "qubit": schedule.steps[k].qubit,
                "axis": self.axes[k].upper(),
                "outcome": int(self.outcomes[k]),
                "successor": pair_to_json(self.states[k + 1]),
            }
            for k in range(len(self.outcomes))
        ]


class _Transitions:
    """Memoised destructive (or non-destructive) updates keyed by pair and measurement."""

    def __init__(self, destructive=True):
        self.destructive = destructive
        self.cache = {}

    def __call__(self, pair, position, axis):
        key = (pair.n, pair.key(), position, axis)
        hit = self.cache.get(key)
        if hit is None:
            spec = MeasurementSpec(position, axis, self.destructive)
            outs = destructive_update(pair, spec) if self.destructive else nondestructive_update(pair, spec)
            hit = [(o.outcome, o.probability, o.successors) for o in outs if o.probability != 0]
            self.cache[key] = hit
        return hit


def _members(initial):
    if isinstance(initial, QuasiDistribution):
        cat = initial.catalog
        if not cat.pairs:
            raise ValueError("simulation needs a catalog of local pairs")
        return [(float(initial.coeffs[k]), cat.pair(k)) for k in initial.support()]
    return [(w, p) for w, p in initial]


class Ensemble:
    """Initial members with a cumulative table for |weight| sampling."""

    def __init__(self, initial):
        if isinstance(initial, Ensemble):
            self.__dict__.update(initial.__dict__)
            return
        members = _members(initial)
        if not members:
            raise ValueError("empty initial distribution")
        self.index = (
            initial.support().tolist() if isinstance(initial, QuasiDistribution) else list(range(len(members)))
        )
        self.pairs = [p for _, p in members]
        w = np.array([float(x) for x, _ in members])
        self.signs = np.where(w < 0, -1, 1)
        self.cdf = np.cumsum(np.abs(w)) / np.abs(w).sum()
        self.cdf[-1] = 1.0

    def draw(self, u):
        k = int(np.searchsorted(self.cdf, u, side="right"))
        return k, self.pairs[k], int(self.signs[k])


def _pick(cum_weights, u):
    total = cum_weights[-1]
    for k, c in enumerate(cum_weights):
        if u * total < c:
            return k
    return len(cum_weights) - 1


def run_trajectory(initial, schedule, seed, index=0, transitions=None, destructive=True):
    """One run: sample a member, then outcomes and successors step by step.

    Randomness comes from a generator keyed by (seed, index), so runs are
    reproducible one by one and independent across indices.
    """
    ens = initial if isinstance(initial, Ensemble) else Ensemble(initial)
    rng = np.random.default_rng([int(seed), int(index)])
    u = rng.random(1 + 2 * len(schedule.steps))
    k, pair, sign = ens.draw(u[0])
    trans = transitions or _Transitions(destructive)
    traj = Trajectory(seed, index, ens.index[k], sign, states=[pair])
    live = list(range(1, schedule.n + 1))
    for i, st in enumerate(schedule.steps):
        axis = st.axis(traj.outcomes)
        options = trans(pair, _position(live, st.qubit), axis)
        r, _, succ = options[_pick(list(itertools.accumulate(float(p) for _, p, _ in options)), u[1 + 2 * i])]
        if len(succ) > 1:
            pair = succ[_pick(list(itertools.accumulate(float(x) for x, _ in succ)), u[2 + 2 * i])][1]
        else:
            pair = succ[0][1]
        traj.outcomes += str(r)
        traj.axes += axis
        traj.states.append(pair)
        if destructive:
            live.remove(st.qubit)
    return traj


def propagate_exact(initial, schedule, destructive=True, cap=BRANCH_CAP):
    """Exact outcome distribution: fold the weighted (prefix, pair) nodes through every step.

    Weights may be floats or Fractions; signed weights give the quasi-probability
    mixture of the member distributions.
    """
    nodes = {}
    pairs = {}
    for w, p in _members(initial):
        key = ("", p.key())
        nodes[key] = nodes.get(key, 0) + w
        pairs[p.key()] = p
    trans = _Transitions(destructive)
    live_by_prefix = {"": list(range(1, schedule.n + 1))}
    for st in schedule.steps:
        nxt = {}
        for (prefix, pk), w in nodes.items():
            live = live_by_prefix[prefix]
            axis = st.axis(prefix)
            for r, prob, succ in trans(pairs[pk], _position(live, st.qubit), axis):
                for sw, sp in succ:
                    key = (prefix + str(r), sp.key())
                    pairs[sp.key()] = sp
                    nxt[key] = nxt.get(key, 0) + w * prob * sw
            for r in "01":
                live_by_prefix[prefix + r] = [q for q in live if q != st.qubit] if destructive else live
        nodes = nxt
        if len(nodes) > cap:
            raise ResourceGuardExceeded(f"{len(nodes)} branches exceed the cap of {cap}")
    dist = {}
    for (prefix, _), w in nodes.items():
        dist[prefix] = dist.get(prefix, 0) + w
    return dict(sorted(dist.items()))


def born_oracle(rho, schedule):
    """Born-rule distribution over outcome strings from dense adaptive simulation."""
    n = rho.n
    if n > DENSE_LIMIT:
        raise DenseLimitError(f"dense oracle limited to {DENSE_LIMIT} qubits")
    out = {}

    def recurse(M, live, prefix, prob):
        k = len(prefix)
        if k == len(schedule.steps):
            out[prefix] = out.get(prefix, 0.0) + prob
            return
        st = schedule.steps[k]
        m = len(live)
        pos = _position(live, st.qubit)
        P = pauli_matrix(PauliPoint.local(m, pos, st.axis(prefix)))
        for r in (0, 1):
            proj = (np.eye(2**m) + (1 - 2 * r) * P) / 2
            N = proj @ M @ proj
            p = float(np.trace(N).real)
            if p <= 1e-15:
                out[prefix + str(r)] = out.get(prefix + str(r), 0.0)
                continue
            N = _partial_trace(N / p, m, pos)
            recurse(N, [q for q in live if q != st.qubit], prefix + str(r), prob * p)

    recurse(to_matrix(rho.to_double()), list(range(1, n + 1)), "", 1.0)
    return {s: p for s, p in sorted(out.items()) if len(s) == len(schedule.steps)}


def _partial_trace(M, n, qubit):
    if n == 1:
        return np.array([[np.trace(M)]])
    T = M.reshape([2] * (2 * n))
    T = np.trace(T, axis1=qubit - 1, axis2=n + qubit - 1)
    return T.reshape(2 ** (n - 1), 2 ** (n - 1))


# ---------------------------------------------------------------------------
# orchestration


@dataclass
class SimulationReport:
    mode: str
    shots: int
    seed: object
    distribution: dict
    oracle: dict = None
    tv: float = None
    stderr: dict = None
    one_norm: float = 1.0

    def to_json(self):
        from .pauli import format_number

        def fmt(d):
            return None if d is None else {k: format_number(float(v)) for k, v in sorted(d.items())}

        return {
            "mode": self.mode,
            "shots": self.shots,
            "seed": self.seed,
            "distribution": fmt(self.distribution),
            "oracle": fmt(self.oracle),
            "tv": None if self.tv is None else format_number(float(self.tv)),
            "stderr": fmt(self.stderr),
            "one_norm": format_number(float(self.one_norm)),
        }


def total_variation(p, q):
    keys = set(p) | set(q)
    return 0.5 * sum(abs(float(p.get(k, 0)) - float(q.get(k, 0))) for k in keys)


def _outcome_strings(schedule):
    return ["".join(b) for b in itertools.product("01", repeat=len(schedule.steps))]


def simulate(state, schedule, catalog, mode="sample", shots=10_000, seed=None, oracle=True, backend="simplex"):
    """Decompose ``state`` over ``catalog`` and estimate or compute outcome probabilities."""
    rho = magic_cluster(state) if isinstance(state, MagicClusterSpec) else state
    if rho.n != schedule.n:
        raise ScheduleError(f"schedule is for {schedule.n} qubits, state has {rho.n}")
    if mode in ("sample", "quasi") and seed is None:
        raise ValueError(f"{mode} mode needs an explicit seed")
    if mode == "quasi":
        _, q = robustness(rho, catalog, backend=backend)
    else:
        q = decompose_probability(rho, catalog, backend=backend)
        if q is None:
            raise InfeasibleLP(f"state lies outside the hull of catalog {catalog.name}")
    strings = _outcome_strings(schedule)
    stderr = None
    if mode == "exact":
        dist = propagate_exact(q, schedule)
        dist = {s: float(dist.get(s, 0.0)) for s in strings}
        shots = 0
    elif mode in ("sample", "quasi"):
        trans = _Transitions()
        ens = Ensemble(q)
        tallies = {s: 0.0 for s in strings}
        squares = {s: 0.0 for s in strings}
        for i in range(shots):
            t = run_trajectory(ens, schedule, seed, i, transitions=trans)
            tallies[t.outcomes] += t.sign
            squares[t.outcomes] += 1.0
        scale = q.one_norm if mode == "quasi" else 1.0
        dist = {s: scale * tallies[s] / shots for s in strings}
        # per-shot estimator takes values in {0, +-scale}
        stderr = {
            s: float(np.sqrt(max(scale**2 * squares[s] / shots - dist[s] ** 2, 0.0) / shots))
            for s in strings
        }
    else:
        raise ValueError(f"unknown mode {mode!r}")
    report = SimulationReport(mode, shots, seed, dist, stderr=stderr, one_norm=q.one_norm)
    if oracle and rho.n <= DENSE_LIMIT:
        report.oracle = born_oracle(rho, schedule)
        report.tv = total_variation(report.distribution, report.oracle)
    return report
