import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import binary, structures
from infocost import (
    InformationStructure,
    InvariantError,
    Relation,
    SignalExperiment,
    compare,
    dominates,
    from_experiment,
    garble,
    matrix_dominates,
    merge_replicated_rows,
    mutual_garbling_is_permutation,
    mutual_information,
    replicated_pairs,
    to_experiment,
    variance_cost,
)
from infocost.axioms import random_garbling, random_structure_at


def convex_order(fine, coarse, tol=1e-12):
    """Binary-state oracle: ``E[(nu - t)+]`` is larger under ``fine`` for every kink ``t``."""
    a, wa = fine.posteriors[:, 0], fine.weights
    b, wb = coarse.posteriors[:, 0], coarse.weights
    for t in np.concatenate([a, b]):
        if wa @ np.maximum(a - t, 0) < wb @ np.maximum(b - t, 0) - tol:
            return False
    return True


def check_coupling(W, fine, coarse, tol=1e-9):
    assert W.min() >= -tol
    np.testing.assert_allclose(W.sum(axis=1), coarse.weights, atol=tol)
    np.testing.assert_allclose(W.sum(axis=0), fine.weights, atol=tol)
    np.testing.assert_allclose(W @ fine.posteriors, coarse.weights[:, None] * coarse.posteriors, atol=tol)


class TestDominates:
    def test_reflexive(self, sym_binary):
        ok, W = dominates(sym_binary, sym_binary)
        assert ok
        check_coupling(W, sym_binary, sym_binary)

    def test_full_revelation_is_maximal(self, rng):
        full = InformationStructure.full_revelation([0.5, 0.5])
        for _ in range(10):
            pi = random_structure_at(rng, [0.5, 0.5])
            assert dominates(full, pi)[0]

    def test_unreachable_posterior(self):
        fine = binary((0.2, 0.0), (0.8, 0.625))
        coarse = binary((0.5, 0.2), (0.5, 0.8))
        ok, W = dominates(fine, coarse)
        assert not ok and W is None

    def test_prior_mismatch(self):
        with pytest.raises(InvariantError):
            dominates(binary((1.0, 0.3)), binary((1.0, 0.4)))

    @given(structures(n_states=2), st.integers(0, 2**32 - 1))
    def test_garbling_is_dominated(self, pi, seed):
        coarse = random_garbling(np.random.default_rng(seed), pi) if pi.prior.min() > 0 else pi
        ok, W = dominates(pi, coarse)
        assert ok
        check_coupling(W, pi, coarse)

    def test_agrees_with_convex_order(self, rng):
        for _ in range(60):
            mu = np.array([0.5, 0.5]) if rng.random() < 0.5 else rng.dirichlet([2, 2])
            a = random_structure_at(rng, mu)
            b = random_structure_at(rng, mu)
            assert dominates(a, b)[0] == convex_order(a, b)
            assert dominates(b, a)[0] == convex_order(b, a)

    def test_transitive(self, rng):
        hits = 0
        for _ in range(40):
            mu = rng.dirichlet([1, 1, 1])
            a = random_structure_at(rng, mu)
            b = from_experiment(garble(to_experiment(a), rng.dirichlet(np.ones(3), size=a.n_atoms).T))
            c = from_experiment(garble(to_experiment(b), rng.dirichlet(np.ones(2), size=b.n_atoms).T))
            if dominates(a, b)[0] and dominates(b, c)[0]:
                hits += 1
                assert dominates(a, c)[0]
        assert hits == 40

    def test_monotone_costs_respect_order(self, rng):
        for C in (mutual_information(), variance_cost()):
            for _ in range(20):
                pi = random_structure_at(rng, rng.dirichlet([1, 1, 1]))
                g = random_garbling(rng, pi)
                assert dominates(pi, g)[0]
                assert C(g) <= C(pi) + 1e-9


class TestCompare:
    def test_point_mass_is_less_informative(self, sym_binary):
        point = InformationStructure.point_mass([0.5, 0.5])
        assert compare(point, sym_binary).relation is Relation.SECOND
        assert compare(point, point).relation is Relation.EQUIVALENT

    def test_incomparable(self):
        a = binary((0.5, 0.2), (0.5, 0.8))
        b = binary((0.2, 0.0), (0.8, 0.625))
        assert compare(a, b).relation is Relation.INCOMPARABLE

    def test_garbling(self, rng):
        for _ in range(10):
            pi = random_structure_at(rng, rng.dirichlet([1, 1, 1]))
            rel = compare(pi, random_garbling(rng, pi)).relation
            assert rel in (Relation.FIRST, Relation.EQUIVALENT)

    def test_relation_values(self):
        assert Relation.FIRST.value == "first_more_informative"
        assert Relation.SECOND.value == "second_more_informative"

    def test_equivalent_iff_same_atoms(self, rng):
        # dominance in both directions pins down the whole distribution
        for _ in range(20):
            mu = rng.dirichlet([1, 1])
            a, b = random_structure_at(rng, mu), random_structure_at(rng, mu)
            for s in (a, b):
                rel = compare(s, s.sorted()).relation
                assert rel is Relation.EQUIVALENT
            rel = compare(a, b).relation
            assert (rel is Relation.EQUIVALENT) == a.allclose(b, 1e-9)


class TestMatrixDominates:
    def test_self(self):
        P = SignalExperiment([0.4, 0.6], [[0.7, 0.2], [0.3, 0.8]])
        ok, M = matrix_dominates(P, P)
        assert ok
        np.testing.assert_allclose(M @ P.kernel, P.kernel, atol=1e-9)

    def test_pairing_matrix(self, rng):
        A, lam = 3, 0.6
        P1 = rng.dirichlet(np.ones(A), size=2).T
        P2 = rng.dirichlet(np.ones(A), size=2).T
        doubled = np.empty((2 * A, 2))
        doubled[0::2], doubled[1::2] = lam * P1, (1 - lam) * P2
        P = lam * P1 + (1 - lam) * P2
        ok, M = matrix_dominates(P, doubled)
        assert ok
        assert M.min() >= -1e-9
        np.testing.assert_allclose(M.sum(axis=0), 1, atol=1e-9)
        np.testing.assert_allclose(M @ doubled, P, atol=1e-9)

    def test_revealing_vs_uninformative(self):
        full = SignalExperiment([0.5, 0.5], np.eye(2))
        none = SignalExperiment([0.5, 0.5], [[1.0, 1.0]])
        assert not matrix_dominates(full, none)[0]
        assert matrix_dominates(none, full)[0]

    def test_dimension_mismatch(self):
        with pytest.raises(InvariantError):
            matrix_dominates(np.eye(2), np.eye(3))


class TestReplication:
    def test_pairs(self):
        P = np.array([[0.2, 0.1], [0.4, 0.2], [0.4, 0.7]])
        assert replicated_pairs(P) == [(0, 1)]
        np.testing.assert_allclose(merge_replicated_rows(P), [[0.6, 0.3], [0.4, 0.7]])

    def test_permuted_rows(self, rng):
        P = rng.dirichlet(np.ones(4), size=3).T
        assert mutual_garbling_is_permutation(P, P[rng.permutation(4)])

    def test_split_row(self, rng):
        P = rng.dirichlet(np.ones(3), size=2).T
        split = np.vstack([P[:1] * 0.3, P[:1] * 0.7, P[1:]])
        assert mutual_garbling_is_permutation(P, split)

    def test_precondition_replicated(self):
        P = np.array([[0.2, 0.1], [0.4, 0.2], [0.4, 0.7]])
        with pytest.raises(InvariantError):
            mutual_garbling_is_permutation(P, P)

    def test_precondition_no_mutual_garbling(self):
        with pytest.raises(InvariantError):
            mutual_garbling_is_permutation(np.eye(2), np.array([[0.6, 0.4], [0.4, 0.6]]))

    @given(st.integers(2, 5), st.integers(2, 3), st.integers(0, 2**32 - 1))
    def test_random_permutations(self, n, k, seed):
        rng = np.random.default_rng(seed)
        P = rng.dirichlet(np.ones(n), size=k).T
        perm = rng.permutation(n)
        assert mutual_garbling_is_permutation(P, P[perm])
        ok, M = matrix_dominates(P[perm], P)
        assert ok
        np.testing.assert_allclose(M, np.eye(n)[perm], atol=1e-6)
