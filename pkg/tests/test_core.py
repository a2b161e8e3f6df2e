"""States, bases, distributions, and the three metrics."""

import numpy as np
import pytest

from pauli_forge.core import (
    Distribution,
    ObservableBasis,
    PhaseSeed,
    PureState,
    bures_distance,
    canonical_gauge,
    computational_basis,
    distributional_distance,
    fourier_basis,
    hellinger_distance,
    state_from_seed,
    tensor_fourier_basis,
)

from conftest import haar_basis, haar_state


class TestPureState:
    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError):
            PureState(np.array([1.0, 1.0]))

    def test_from_vector_normalizes(self):
        s = PureState.from_vector([3.0, 4.0])
        np.testing.assert_allclose(np.linalg.norm(s.amplitudes), 1.0, atol=1e-15)

    def test_from_vector_rejects_zero(self):
        with pytest.raises(ValueError):
            PureState.from_vector([0.0, 0.0])

    def test_canonical_gauge_first_component_real_positive(self, rng):
        for _ in range(50):
            s = haar_state(4, rng)
            pivot = s.amplitudes[np.flatnonzero(np.abs(s.amplitudes) > 1e-12)[0]]
            assert abs(pivot.imag) < 1e-14
            assert pivot.real > 0

    def test_gauge_idempotent(self, rng):
        for _ in range(200):
            v = rng.standard_normal(5) + 1j * rng.standard_normal(5)
            once = canonical_gauge(v)
            twice = canonical_gauge(once)
            np.testing.assert_allclose(twice, once, atol=1e-15)

    def test_gauge_leading_zeros(self):
        s = PureState.from_vector([0.0, 1.0j, 1.0])
        assert abs(s.amplitudes[0]) == 0.0
        assert s.amplitudes[1].real > 0
        assert abs(s.amplitudes[1].imag) < 1e-15

    def test_immutable(self, rng):
        s = haar_state(3, rng)
        with pytest.raises(ValueError):
            s.amplitudes[0] = 1.0

    def test_conjugate_is_state(self, rng):
        s = haar_state(3, rng)
        c = s.conjugate()
        np.testing.assert_allclose(np.abs(c.amplitudes), np.abs(s.amplitudes), atol=1e-14)


class TestDistribution:
    def test_flat_and_sharp(self):
        np.testing.assert_allclose(Distribution.flat(4).probs, 0.25)
        np.testing.assert_allclose(Distribution.sharp(3, 1).probs, [0, 1, 0])

    def test_rejects_bad_sum(self):
        with pytest.raises(ValueError):
            Distribution(np.array([0.6, 0.6]))

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            Distribution(np.array([1.2, -0.2]))


class TestObservableBasis:
    def test_rejects_non_orthonormal(self):
        with pytest.raises(ValueError):
            ObservableBasis("bad", np.array([[1.0, 1.0], [0.0, 1.0]]))

    def test_vectors_are_states(self, rng):
        b = haar_basis(4, rng)
        for v in b.vectors:
            assert isinstance(v, PureState)

    def test_distribution_sums_to_one(self, rng):
        b = haar_basis(5, rng)
        s = haar_state(5, rng)
        assert abs(b.distribution(s).probs.sum() - 1.0) < 1e-12

    def test_project_dimension_mismatch(self, rng):
        b = haar_basis(3, rng)
        with pytest.raises(ValueError):
            b.project(haar_state(4, rng))


class TestBures:
    def test_identical_is_zero(self, rng):
        s = haar_state(4, rng)
        assert bures_distance(s, s) < 1e-15

    def test_orthogonal_computational_vectors(self):
        b = computational_basis(3)
        assert abs(bures_distance(b.vector(0), b.vector(1)) - np.sqrt(2)) < 1e-15

    def test_global_phase_invariance(self, rng):
        for _ in range(1000):
            s = haar_state(3, rng)
            alpha = rng.uniform(0, 2 * np.pi)
            t = PureState.from_vector(s.amplitudes * np.exp(1j * alpha))
            assert bures_distance(s, t) < 1e-12

    def test_metric_axioms(self, rng):
        for _ in range(200):
            a, b, c = (haar_state(4, rng) for _ in range(3))
            assert abs(bures_distance(a, b) - bures_distance(b, a)) < 1e-12
            assert bures_distance(a, b) <= bures_distance(a, c) + bures_distance(c, b) + 1e-10
            assert bures_distance(a, a) < 1e-12

    def test_resolves_tiny_separations(self, rng):
        # separations far below the naive 2 - 2|<a,b>| rounding floor
        a = haar_state(4, rng)
        ortho = haar_state(4, rng).amplitudes.copy()
        ortho -= np.vdot(a.amplitudes, ortho) * a.amplitudes
        ortho /= np.linalg.norm(ortho)
        for eps in (1e-9, 1e-11):
            b = PureState.from_vector(a.amplitudes + eps * ortho)
            d = bures_distance(a, b)
            assert abs(d - eps) < 0.01 * eps

    def test_dimension_mismatch(self, rng):
        with pytest.raises(ValueError):
            bures_distance(haar_state(3, rng), haar_state(4, rng))


class TestHellinger:
    def test_same_distribution_is_zero(self, rng):
        b = computational_basis(3)
        s = haar_state(3, rng)
        # same moduli, different phases
        t = PureState.from_vector(s.amplitudes * np.exp(1j * rng.uniform(0, 2 * np.pi, 3)))
        assert hellinger_distance(b, s, t) < 1e-12

    def test_sharp_vs_sharp_distinct_outcomes(self):
        b = computational_basis(2)
        assert abs(hellinger_distance(b, b.vector(0), b.vector(1)) - np.sqrt(2)) < 1e-15

    def test_matches_direct_formula(self, rng):
        for _ in range(50):
            b = haar_basis(4, rng)
            s, t = haar_state(4, rng), haar_state(4, rng)
            p = np.abs(np.conj(b.matrix.T) @ s.amplitudes) ** 2
            q = np.abs(np.conj(b.matrix.T) @ t.amplitudes) ** 2
            direct = np.sqrt(np.sum((np.sqrt(p) - np.sqrt(q)) ** 2))
            assert abs(hellinger_distance(b, s, t) - direct) < 1e-12


class TestDistributional:
    def test_single_basis_reduces_to_hellinger(self, rng):
        b = haar_basis(3, rng)
        s, t = haar_state(3, rng), haar_state(3, rng)
        assert abs(distributional_distance([b], s, t) - hellinger_distance(b, s, t)) < 1e-14

    def test_zero_for_equal_states(self, rng):
        bases = [haar_basis(3, rng) for _ in range(3)]
        s = haar_state(3, rng)
        assert distributional_distance(bases, s, s) < 1e-14

    def test_bounded_by_ray_distance(self, rng):
        for _ in range(300):
            n = int(rng.integers(2, 9))
            m = int(rng.integers(1, 6))
            bases = [haar_basis(n, rng) for _ in range(m)]
            s, t = haar_state(n, rng), haar_state(n, rng)
            assert distributional_distance(bases, s, t) <= bures_distance(s, t) + 1e-12

    def test_empty_list_rejected(self, rng):
        with pytest.raises(ValueError):
            distributional_distance([], haar_state(2, rng), haar_state(2, rng))


class TestCanonicalBases:
    def test_computational_is_identity(self):
        for n in (2, 3):
            np.testing.assert_array_equal(computational_basis(n).matrix, np.eye(n))

    def test_computational_rejects_small_dim(self):
        with pytest.raises(ValueError):
            computational_basis(1)

    def test_fourier_two_point(self):
        f = fourier_basis(2).matrix
        np.testing.assert_allclose(f, np.array([[1, 1], [1, -1]]) / np.sqrt(2), atol=1e-15)

    def test_fourier_unbiased_to_computational(self):
        for n in (2, 3, 5):
            overlap = np.abs(np.conj(computational_basis(n).matrix.T)
                             @ fourier_basis(n).matrix) ** 2
            np.testing.assert_allclose(overlap, 1.0 / n, atol=1e-12)

    def test_fourier_unitary_dim_six(self):
        f = fourier_basis(6).matrix
        np.testing.assert_allclose(np.conj(f.T) @ f, np.eye(6), atol=1e-12)

    def test_tensor_fourier_single_factor(self):
        for p in (2, 3):
            np.testing.assert_allclose(tensor_fourier_basis(p, 1).matrix,
                                       fourier_basis(p).matrix, atol=1e-15)

    def test_tensor_fourier_two_qubits(self):
        b = tensor_fourier_basis(2, 2)
        assert b.dim == 4
        # direct tensor-product oracle
        f = fourier_basis(2).matrix
        expected = np.kron(f, f)
        np.testing.assert_allclose(b.matrix, expected, atol=1e-15)
        overlap = np.abs(b.matrix) ** 2
        np.testing.assert_allclose(overlap, 0.25, atol=1e-14)

    def test_tensor_fourier_rejects_composite(self):
        with pytest.raises(ValueError):
            tensor_fourier_basis(4, 2)


class TestStateFromSeed:
    def test_flat_zero_seed(self):
        s = state_from_seed(Distribution.flat(3), PhaseSeed(np.zeros(2)),
                            computational_basis(3))
        np.testing.assert_allclose(s.amplitudes, np.ones(3) / np.sqrt(3), atol=1e-15)

    def test_sharp_kills_phases(self, rng):
        b = computational_basis(3)
        for _ in range(10):
            seed = PhaseSeed(rng.uniform(0, 2 * np.pi, 2))
            s = state_from_seed(Distribution.sharp(3, 0), seed, b)
            assert bures_distance(s, b.vector(0)) < 1e-12

    def test_unit_norm(self, rng):
        for _ in range(100):
            b = haar_basis(4, rng)
            probs = rng.dirichlet(np.ones(4))
            seed = PhaseSeed(rng.uniform(0, 2 * np.pi, 3))
            s = state_from_seed(Distribution(probs), seed, b)
            assert abs(np.linalg.norm(s.amplitudes) - 1.0) < 1e-12

    def test_phase_seed_wraps(self):
        seed = PhaseSeed(np.array([2 * np.pi + 0.5, -0.5]))
        np.testing.assert_allclose(seed.phases, [0.5, 2 * np.pi - 0.5], atol=1e-12)
