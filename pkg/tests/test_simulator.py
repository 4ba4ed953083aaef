import itertools
from fractions import Fraction

import numpy as np
import pytest

import oracles
from lambdaloc.catalogs import build_phase_space
from lambdaloc.errors import ScheduleError
from lambdaloc.locally_closed import LocalPair
from lambdaloc.lp import decompose_probability
from lambdaloc.pauli import from_matrix
from lambdaloc.simulator import (
    Graph,
    MagicClusterSpec,
    MeasurementSchedule,
    born_oracle,
    magic_cluster,
    propagate_exact,
    run_trajectory,
    simulate,
    total_variation,
    xy_schedules,
)


def test_graph_validation():
    with pytest.raises(ValueError):
        Graph(2, ((1, 1),))
    with pytest.raises(ValueError):
        Graph(2, ((1, 3),))
    with pytest.raises(ValueError):
        Graph(3, ((1, 2), (2, 1)))
    assert Graph.from_json(Graph.complete(3).to_json()) == Graph.complete(3)
    with pytest.raises(ValueError):
        MagicClusterSpec(Graph.line(2), frozenset({3}))


def test_magic_cluster_examples():
    A = magic_cluster(MagicClusterSpec(Graph(3, ()), frozenset()))
    xs = {0, 1, 2, 3, 4, 5, 6, 7}  # span of x_1, x_2, x_3 (z block empty)
    assert all(A[i] == (1 if i in xs else 0) for i in range(64))
    T = magic_cluster(MagicClusterSpec(Graph(1, ()), frozenset({1})))
    assert np.allclose(T.values, [1, 2**-0.5, 0, 2**-0.5], atol=1e-12)
    for G in (Graph.line(3), Graph.complete(3)):
        A = magic_cluster(MagicClusterSpec(G, frozenset({1, 2, 3})))
        want = from_matrix(oracles.cluster_state(3, G.edges, [1, 2, 3]))
        assert A.isclose(want)


def test_schedule_validation():
    with pytest.raises(ScheduleError):
        MeasurementSchedule.build(2, [(1, "x"), (1, "y")])
    with pytest.raises(ScheduleError):
        MeasurementSchedule.build(2, [(1, "z")])
    with pytest.raises(ScheduleError):
        MeasurementSchedule.build(2, [(1, "x"), (2, {"0": "x"})]).steps[1].axis("1")
    sch = MeasurementSchedule.build(3, [(2, "y"), (3, {"0": "x", "1": "y"})])
    assert MeasurementSchedule.from_json(sch.to_json()) == sch


def test_deterministic_vertex_trajectory():
    A = LocalPair(2, np.ones(16, dtype=np.int8))
    sch = MeasurementSchedule.fixed(2, [1, 2], "xx")
    dist = propagate_exact([(Fraction(1), A)], sch)
    assert dist == {"00": 1}
    t = run_trajectory([(1.0, A)], sch, seed=5)
    assert t.outcomes == "00" and [s.n for s in t.states] == [2, 1, 0]


def test_maximally_mixed_uniform():
    mm = LocalPair(3, [1] + [0] * 63)
    sch = MeasurementSchedule.build(3, [(2, "x"), (1, {"0": "y", "1": "x"}), (3, "y")])
    dist = propagate_exact([(Fraction(1), mm)], sch)
    assert dist == {s: Fraction(1, 8) for s in map("".join, itertools.product("01", repeat=3))}


def test_single_member_one_step():
    cat = build_phase_space("CNC", 2)
    pr = cat.pair(11)
    sch = MeasurementSchedule.fixed(2, [2], "y")
    from lambdaloc.updates import MeasurementSpec, destructive_update

    outs = destructive_update(pr, MeasurementSpec(2, "y"))
    assert propagate_exact([(Fraction(1), pr)], sch) == {str(o.outcome): o.probability for o in outs if o.probability}


def test_born_oracle_examples():
    plus = from_matrix(oracles.cluster_state(1, [], []))
    assert born_oracle(plus, MeasurementSchedule.fixed(1, [1], "x")) == pytest.approx({"0": 1.0, "1": 0.0})
    T = from_matrix(oracles.cluster_state(1, [], [1]))
    d = born_oracle(T, MeasurementSchedule.fixed(1, [1], "x"))
    assert d["0"] == pytest.approx((1 + 2**-0.5) / 2, abs=1e-12)


def test_born_oracle_against_reference(rng):
    M = oracles.cluster_state(3, [(1, 2), (2, 3), (1, 3)], [1, 3])
    rho = from_matrix(M)
    sch = MeasurementSchedule.build(3, [(3, "x"), (1, {"0": "y", "1": "x"}), (2, {"00": "x", "01": "y", "10": "y", "11": "x"})])
    steps = [(s.qubit, dict(s.basis)) for s in sch.steps]
    ref = oracles.born(M, 3, steps)
    got = born_oracle(rho, sch)
    assert sum(got.values()) == pytest.approx(1)
    for k in got:
        assert got[k] == pytest.approx(ref.get(k, 0.0), abs=1e-12)


@pytest.mark.parametrize("edges", [(), ((1, 2),)])
def test_graph_states_exact_dyadic(edges):
    G = Graph(2, edges)
    rho = magic_cluster(MagicClusterSpec(G, frozenset()))
    q = decompose_probability(rho, build_phase_space("VERT", 2))
    for sch in xy_schedules(2):
        exact = propagate_exact(q, sch)
        assert total_variation(exact, born_oracle(rho, sch)) < 1e-9


def test_rational_weights_stay_exact():
    cat = build_phase_space("DET", 2)
    members = [(Fraction(1, 4), cat.pair(k)) for k in (0, 5, 9, 60)]
    dist = propagate_exact(members, MeasurementSchedule.fixed(2, [1, 2], "xy"))
    assert all(isinstance(v, Fraction) for v in dist.values())
    assert sum(dist.values()) == 1


def test_run_trajectory_deterministic_and_independent():
    rho = magic_cluster(MagicClusterSpec(Graph.line(2), frozenset()))
    q = decompose_probability(rho, build_phase_space("VERT", 2))
    sch = MeasurementSchedule.fixed(2, [1, 2], "xy")
    a = [run_trajectory(q, sch, seed=3, index=i) for i in range(200)]
    b = [run_trajectory(q, sch, seed=3, index=i) for i in range(200)]
    assert [(t.initial, t.outcomes) for t in a] == [(t.initial, t.outcomes) for t in b]
    c = [run_trajectory(q, sch, seed=4, index=i) for i in range(200)]
    assert [(t.initial, t.outcomes) for t in a] != [(t.initial, t.outcomes) for t in c]
    assert all(s.n == 2 - k for t in a for k, s in enumerate(t.states))


def test_sample_mode_within_three_sigma():
    rho = magic_cluster(MagicClusterSpec(Graph.line(2), frozenset()))
    sch = MeasurementSchedule.fixed(2, [1, 2], "xx")
    rep = simulate(rho, sch, build_phase_space("VERT", 2), mode="sample", shots=100_000, seed=11)
    assert sum(rep.distribution.values()) == pytest.approx(1)
    for k, p in rep.distribution.items():
        assert abs(p - rep.oracle[k]) <= 3 * max(rep.stderr[k], 1e-3)


def test_exact_mode_product_state_det():
    rho = magic_cluster(MagicClusterSpec(Graph(2, ()), frozenset()))
    for sch in xy_schedules(2, [2, 1]):
        rep = simulate(rho, sch, build_phase_space("DET", 2), mode="exact")
        assert rep.tv == pytest.approx(0, abs=1e-12)


def test_quasi_mode_unbiased():
    rho = magic_cluster(MagicClusterSpec(Graph.line(2), frozenset({1, 2})))
    sch = MeasurementSchedule.fixed(2, [1, 2], "xy")
    rep = simulate(rho, sch, build_phase_space("DET", 2), mode="quasi", shots=60_000, seed=2)
    assert rep.one_norm > 1
    for k, p in rep.distribution.items():
        assert abs(p - rep.oracle[k]) <= 4 * rep.stderr[k] + 1e-9


def test_seed_required():
    rho = magic_cluster(MagicClusterSpec(Graph.line(2), frozenset()))
    with pytest.raises(ValueError):
        simulate(rho, MeasurementSchedule.fixed(2, [1], "x"), build_phase_space("VERT", 2), mode="sample")


def test_report_json_is_stable():
    rho = magic_cluster(MagicClusterSpec(Graph.line(2), frozenset()))
    sch = MeasurementSchedule.fixed(2, [2, 1], "yx")
    cat = build_phase_space("VERT", 2)
    a = simulate(rho, sch, cat, mode="sample", shots=2000, seed=8).to_json()
    b = simulate(rho, sch, cat, mode="sample", shots=2000, seed=8).to_json()
    assert a == b and a["seed"] == 8 and a["mode"] == "sample"
