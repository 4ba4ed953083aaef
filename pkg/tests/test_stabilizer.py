import itertools
from fractions import Fraction

import numpy as np
import pytest

import oracles
from lambdaloc.pauli import ExpectationVector, PauliPoint, from_matrix
from lambdaloc.stabilizer import (
    StabilizerProjector,
    Subspace,
    enumerate_local_stabilizer_states,
    enumerate_stabilizer_states,
    evaluate,
    is_isotropic,
    is_local_isotropic,
    maximal_isotropic_subspaces,
    perp,
    projector_expectation,
    projector_from_json,
    projector_to_json,
    sandwich,
)


def P(n, text):
    return PauliPoint.parse(n, text)


def proj(n, gens, bits):
    return StabilizerProjector.from_generators(n, [P(n, g) for g in gens], bits)


def test_isotropy_examples():
    assert is_isotropic([P(2, "x1"), P(2, "x2")]) and is_local_isotropic([P(2, "x1"), P(2, "x2")])
    b = [P(2, "x1+x2"), P(2, "z1+z2")]
    assert is_isotropic(b) and not is_local_isotropic(b)
    assert not is_isotropic([P(1, "x1"), P(1, "z1")])


def test_evaluate_examples():
    Q = proj(2, ["x1", "x2"], [0, 1])
    assert evaluate(Q, P(2, "x1+x2")) == 1
    assert evaluate(Q, P(2, "x2")) == 1
    assert evaluate(Q, PauliPoint.zero(2)) == 0


def test_projector_expectation_examples():
    mm = ExpectationVector.maximally_mixed(1)
    assert projector_expectation(proj(1, ["z1"], [0]), mm) == Fraction(1, 2)
    A000 = ExpectationVector.from_entries(1, {1: 1, 2: 1, 3: 1})
    assert projector_expectation(proj(1, ["x1"], [1]), A000) == 0
    psi = np.array([1, np.exp(1j * np.pi / 4)]) / np.sqrt(2)
    T = from_matrix(np.outer(psi, psi.conj()))
    assert projector_expectation(proj(1, ["x1"], [1]), T) == pytest.approx((1 - 2**-0.5) / 2, abs=1e-12)


def test_sandwich_examples():
    Q = proj(1, ["z1"], [0])
    assert sandwich(Q, Q) == (1, Q)
    c, R = sandwich(Q, proj(1, ["x1"], [0]))
    assert c == Fraction(1, 2) and R == Q
    c, R = sandwich(Q, proj(1, ["z1"], [1]))
    assert c == 0 and R is None


@pytest.mark.parametrize("n", [1, 2])
def test_sandwich_dense_exhaustive(n):
    states = enumerate_stabilizer_states(n)
    for Pi, Qj in itertools.product(states, repeat=2):
        c, R = sandwich(Pi, Qj)
        a, b = Pi.to_matrix(), Qj.to_matrix()
        dense = a @ b @ a
        expected = np.zeros_like(dense) if R is None else float(c) * R.to_matrix()
        assert np.allclose(dense, expected, atol=1e-12)


def test_perp_examples():
    assert perp(Subspace.from_generators(1, [P(1, "z1")])) == Subspace.from_generators(1, [P(1, "z1")])
    assert perp(Subspace(1, ())) == Subspace.full(1)
    got = perp(Subspace.from_generators(2, [P(2, "x1")]))
    assert got == Subspace.from_generators(2, [P(2, "x1"), P(2, "x2"), P(2, "z2")])


@pytest.mark.parametrize("n,count", [(1, 6), (2, 36), (3, 216)])
def test_local_state_counts(n, count):
    assert len(enumerate_local_stabilizer_states(n)) == count == 2**n * 3**n


@pytest.mark.parametrize("n,count", [(1, 6), (2, 60), (3, 1080)])
def test_full_state_counts(n, count):
    formula = 2**n * np.prod([2**k + 1 for k in range(1, n + 1)])
    assert len(enumerate_stabilizer_states(n)) == count == formula


def test_lagrangian_count_n3():
    assert len(maximal_isotropic_subspaces(3)) == 135


def test_stabilizer_states_n3_are_distinct_rank_one_projectors():
    mats = [Q.to_matrix() for Q in enumerate_stabilizer_states(3)]
    vecs = set()
    for m in mats:
        assert np.allclose(m @ m, m, atol=1e-12) and np.allclose(m, m.conj().T)
        assert np.isclose(np.trace(m).real, 1)
        vecs.add(tuple(np.round(m.ravel(), 9)))
    assert len(vecs) == 1080


@pytest.mark.parametrize("n", [1, 2])
def test_dense_rendering_idempotent(n):
    for Q in enumerate_stabilizer_states(n):
        m = Q.to_matrix()
        assert np.allclose(m @ m, m, atol=1e-12)
        assert np.isclose(np.trace(m).real, Q.rank)


def test_partial_projector_rank():
    Q = proj(3, ["x1", "z2+z3"], [1, 0])
    m = Q.to_matrix()
    assert np.allclose(m @ m, m) and np.isclose(np.trace(m).real, 2)


def test_expectation_matches_dense(rng):
    G = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    M = G @ G.conj().T
    M /= np.trace(M)
    A = from_matrix(M)
    for Q in enumerate_stabilizer_states(2):
        assert projector_expectation(Q, A) == pytest.approx(np.trace(Q.to_matrix() @ M).real, abs=1e-12)


def test_marginalization_n2(rng):
    # sum over local states through a with s(a) = r gives Tr(Pi_a^r A)
    A = from_matrix(oracles.cluster_state(2, [(1, 2)], [1]))
    for Q0 in enumerate_local_stabilizer_states(2):
        for g in Q0.subspace.basis:
            for r in (0, 1):
                total = sum(
                    projector_expectation(Q, A)
                    for Q in enumerate_local_stabilizer_states(2)
                    if Q.subspace == Q0.subspace and Q.evaluate(g) == r
                )
                assert total == pytest.approx((1 + (-1) ** r * A[g]) / 2, abs=1e-12)


def test_json_round_trip():
    for Q in enumerate_stabilizer_states(2):
        assert projector_from_json(projector_to_json(Q)) == Q
