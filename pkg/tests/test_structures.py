import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import binary, structures
from infocost import (
    InformationStructure,
    InvariantError,
    MarkovKernel,
    SignalExperiment,
    compose,
    dilution,
    from_experiment,
    garble,
    make_structure,
    mix,
    mutual_information,
    to_experiment,
)


def bayes_by_hand(prior, kernel):
    """Posterior atoms from an explicit loop over signals."""
    atoms = []
    for row in kernel:
        p = sum(prior[x] * row[x] for x in range(len(prior)))
        if p > 0:
            atoms.append((p, [prior[x] * row[x] / p for x in range(len(prior))]))
    return atoms


class TestMakeStructure:
    def test_point_mass(self):
        pi = make_structure([(1.0, (0.5, 0.5))])
        assert pi.is_point_mass()
        np.testing.assert_allclose(pi.prior, [0.5, 0.5])

    def test_symmetric_full_revelation(self):
        pi = make_structure([(0.5, (1, 0)), (0.5, (0, 1))])
        np.testing.assert_allclose(pi.prior, [0.5, 0.5])
        assert pi.n_atoms == 2

    def test_duplicates_merge(self):
        pi = make_structure([(0.3, (0.2, 0.8)), (0.3, (0.2, 0.8)), (0.4, (0.8, 0.2))]).sorted()
        assert pi.n_atoms == 2
        np.testing.assert_allclose(pi.weights, [0.6, 0.4], atol=1e-15)
        np.testing.assert_allclose(pi.posteriors, [[0.2, 0.8], [0.8, 0.2]])

    def test_weights_are_normalized(self):
        pi = make_structure([(2.0, (1, 0)), (2.0, (0, 1))])
        np.testing.assert_allclose(pi.weights, [0.5, 0.5])

    @pytest.mark.parametrize("atoms", [
        [(-0.1, (0.5, 0.5)), (1.1, (0.5, 0.5))],
        [(0.0, (0.5, 0.5))],
        [(0.5, (0.5, 0.5)), (0.5, (0.2, 0.3, 0.5))],
        [],
    ])
    def test_rejects_bad_input(self, atoms):
        with pytest.raises(InvariantError):
            make_structure(atoms)

    def test_rejects_non_belief(self):
        with pytest.raises(InvariantError):
            make_structure([(1.0, (0.7, 0.7))])

    def test_tiny_weights_pruned(self):
        pi = InformationStructure(np.array([1.0, 1e-17]), np.array([[0.5, 0.5], [1.0, 0.0]]))
        assert pi.n_atoms == 1

    def test_arrays_are_read_only(self, sym_binary):
        with pytest.raises(ValueError):
            sym_binary.weights[0] = 1.0


class TestFromExperiment:
    def test_identity_kernel(self):
        pi = from_experiment(SignalExperiment([0.5, 0.5], np.eye(2))).sorted()
        np.testing.assert_allclose(pi.weights, [0.5, 0.5])
        np.testing.assert_allclose(pi.posteriors, [[0, 1], [1, 0]])

    def test_symmetric_noise(self):
        pi = from_experiment(SignalExperiment([0.5, 0.5], [[0.9, 0.1], [0.1, 0.9]]))
        assert pi.allclose(binary((0.5, 0.9), (0.5, 0.1)))

    def test_uninformative(self):
        pi = from_experiment(SignalExperiment([0.3, 0.7], [[0.6, 0.6], [0.4, 0.4]]))
        assert pi.is_point_mass()
        np.testing.assert_allclose(pi.prior, [0.3, 0.7])

    def test_zero_probability_signal_dropped(self):
        pi = from_experiment(SignalExperiment([1.0, 0.0], [[1.0, 0.0], [0.0, 1.0]]))
        assert pi.n_atoms == 1

    def test_matches_hand_bayes(self, rng):
        for _ in range(20):
            prior = rng.dirichlet(np.ones(3))
            kernel = rng.dirichlet(np.ones(4), size=3).T
            got = from_experiment(SignalExperiment(prior, kernel))
            want = make_structure(bayes_by_hand(prior, kernel))
            assert got.allclose(want, 1e-12)

    def test_rejects_non_stochastic_kernel(self):
        with pytest.raises(InvariantError):
            SignalExperiment([0.5, 0.5], [[0.5, 0.5], [0.6, 0.5]])


class TestToExperiment:
    def test_point_mass(self):
        e = to_experiment(InformationStructure.point_mass([0.5, 0.5]))
        np.testing.assert_allclose(e.kernel, [[1.0, 1.0]])

    def test_inverts_bayes_map(self):
        e = to_experiment(binary((0.5, 0.9), (0.5, 0.1)))
        np.testing.assert_allclose(e.kernel, [[0.9, 0.1], [0.1, 0.9]], atol=1e-15)

    def test_full_revelation(self):
        e = to_experiment(InformationStructure.full_revelation([0.5, 0.5]))
        np.testing.assert_allclose(e.kernel, np.eye(2))

    def test_refuses_non_generic_prior(self):
        pi = make_structure([(0.5, (0.5, 0.5, 0.0)), (0.5, (0.2, 0.8, 0.0))])
        with pytest.raises(InvariantError):
            to_experiment(pi)

    @given(structures(interior=True))
    def test_round_trip(self, pi):
        assert from_experiment(to_experiment(pi)).allclose(pi, 1e-12)


class TestDilution:
    def test_identity(self, sym_binary):
        assert dilution(sym_binary, 1.0).allclose(sym_binary)

    def test_half(self, sym_binary):
        got = dilution(sym_binary, 0.5)
        assert got.allclose(binary((0.25, 0.1), (0.5, 0.5), (0.25, 0.9)), 1e-15)

    def test_mutual_information_is_linear(self, sym_binary):
        C = mutual_information()
        assert C(dilution(sym_binary, 0.5)) == pytest.approx(0.5 * C(sym_binary), abs=1e-15)

    @pytest.mark.parametrize("lam", [0.0, -0.2, 1.5])
    def test_range(self, sym_binary, lam):
        with pytest.raises(InvariantError):
            dilution(sym_binary, lam)

    @given(structures(), st.floats(0.01, 1.0), st.floats(0.01, 1.0))
    def test_composes_multiplicatively(self, pi, a, b):
        assert dilution(pi, a * b).allclose(dilution(dilution(pi, a), b), 1e-12)

    @given(structures(), st.floats(0.01, 1.0))
    def test_keeps_prior(self, pi, lam):
        np.testing.assert_allclose(dilution(pi, lam).prior, pi.prior, atol=1e-12)


class TestMix:
    def test_single_part(self, sym_binary):
        assert mix([(1.0, sym_binary)]).allclose(sym_binary)

    def test_mix_with_point_mass_is_dilution(self):
        full = InformationStructure.full_revelation([0.5, 0.5])
        point = InformationStructure.point_mass([0.5, 0.5])
        assert mix([(0.5, point), (0.5, full)]).allclose(dilution(full, 0.5), 1e-15)

    def test_four_atoms(self):
        a = binary((0.5, 0.2), (0.5, 0.8))
        b = binary((0.5, 0.3), (0.5, 0.7))
        got = mix([(0.4, a), (0.6, b)]).sorted()
        np.testing.assert_allclose(got.weights, [0.2, 0.3, 0.3, 0.2], atol=1e-15)
        np.testing.assert_allclose(got.posteriors[:, 0], [0.2, 0.3, 0.7, 0.8])

    def test_prior_mismatch(self):
        with pytest.raises(InvariantError):
            mix([(0.5, binary((1.0, 0.3))), (0.5, binary((1.0, 0.5)))])


class TestCompose:
    def test_identity_kernel(self, sym_binary):
        k = MarkovKernel.identity(sym_binary.posteriors)
        assert compose(sym_binary, k).allclose(sym_binary)

    def test_two_step_split_reveals(self):
        first = binary((0.5, 0.25), (0.5, 0.75))
        k = MarkovKernel([(nu, InformationStructure.full_revelation(nu)) for nu in first.posteriors])
        got = compose(first, k)
        assert got.allclose(InformationStructure.full_revelation([0.5, 0.5]), 1e-15)

    def test_from_point_mass(self, sym_binary):
        point = InformationStructure.point_mass([0.5, 0.5])
        k = MarkovKernel([([0.5, 0.5], sym_binary)])
        assert compose(point, k).allclose(sym_binary)

    def test_missing_entry(self, sym_binary):
        k = MarkovKernel.identity([[0.1, 0.9]])
        with pytest.raises(InvariantError):
            compose(sym_binary, k)

    def test_martingale_violation(self):
        with pytest.raises(InvariantError):
            MarkovKernel([([0.5, 0.5], binary((0.5, 0.1), (0.5, 0.3)))])

    def test_duplicate_source(self):
        with pytest.raises(InvariantError):
            MarkovKernel.identity([[0.5, 0.5], [0.5, 0.5]])

    @given(structures(n_states=2))
    def test_prior_preserved(self, pi):
        kernel = MarkovKernel([(nu, InformationStructure.full_revelation(nu)) for nu in pi.posteriors])
        out = compose(pi, kernel)
        np.testing.assert_allclose(out.prior, pi.prior, atol=1e-12)
        assert out.weights.sum() == pytest.approx(1.0, abs=1e-12)


class TestGarble:
    def test_identity(self):
        e = SignalExperiment([0.3, 0.7], [[0.8, 0.1], [0.2, 0.9]])
        np.testing.assert_allclose(garble(e, np.eye(2)).kernel, e.kernel)

    def test_total_garbling(self):
        e = SignalExperiment([0.3, 0.7], [[0.8, 0.1], [0.2, 0.9]])
        assert from_experiment(garble(e, np.ones((1, 2)))).is_point_mass()

    def test_pairing_matrix_recovers_mixture(self, rng):
        # P'(a_i | x) = lam_i P_i(a | x); summing each pair of rows gives P
        A, K, lam = 3, 2, 0.35
        P1 = rng.dirichlet(np.ones(A), size=K).T
        P2 = rng.dirichlet(np.ones(A), size=K).T
        doubled = np.empty((2 * A, K))
        doubled[0::2], doubled[1::2] = lam * P1, (1 - lam) * P2
        pairing = np.kron(np.eye(A), np.ones((1, 2)))
        got = garble(SignalExperiment([0.5, 0.5], doubled), pairing)
        np.testing.assert_allclose(got.kernel, lam * P1 + (1 - lam) * P2, atol=1e-15)

    def test_not_column_stochastic(self):
        e = SignalExperiment([0.5, 0.5], np.eye(2))
        with pytest.raises(InvariantError):
            garble(e, [[0.5, 0.5], [0.6, 0.5]])

    def test_dimension_mismatch(self):
        e = SignalExperiment([0.5, 0.5], np.eye(2))
        with pytest.raises(InvariantError):
            garble(e, np.ones((1, 3)))

    @given(structures(interior=True), st.integers(1, 5), st.integers(0, 2**32 - 1))
    def test_support_and_prior(self, pi, n_new, seed):
        e = to_experiment(pi)
        M = np.random.default_rng(seed).dirichlet(np.ones(n_new), size=e.n_signals).T
        out = from_experiment(garble(e, M))
        assert out.n_atoms <= n_new
        np.testing.assert_allclose(out.prior, pi.prior, atol=1e-12)


@given(structures())
def test_bayes_plausibility(pi):
    np.testing.assert_allclose(pi.weights @ pi.posteriors, pi.prior, atol=1e-12)
    assert pi.weights.sum() == pytest.approx(1.0, abs=1e-12)
