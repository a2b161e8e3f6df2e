"""MUB reconstruction, grouping, and verification."""

import numpy as np
import pytest

from pauli_forge.core import Distribution, computational_basis, fourier_basis
from pauli_forge.mub_pipeline import (
    MubSearchOptions,
    find_mubs,
    find_mubs_prime_power,
    group_into_bases,
    verify_mub_set,
)
from pauli_forge.partner_search import GridStrategy, ReconstructionProblem, enumerate_partners


class TestVerify:
    def test_computational_fourier_pair_ok(self):
        report = verify_mub_set([computational_basis(5), fourier_basis(5)])
        assert report.ok
        assert report.max_unbias_error < 1e-12
        assert report.max_ortho_error < 1e-12

    def test_repeated_basis_violates(self):
        report = verify_mub_set([computational_basis(3), computational_basis(3)])
        assert not report.ok
        assert any(kind == "unbiasedness" for kind, *_ in report.violations)

    def test_requires_two_bases(self):
        with pytest.raises(ValueError):
            verify_mub_set([computational_basis(3)])


class TestGrouping:
    def test_flat_partners_group_into_two_bases(self):
        flat = Distribution.flat(3)
        problem = ReconstructionProblem((computational_basis(3), fourier_basis(3)),
                                        (flat, flat))
        partners = enumerate_partners(problem, GridStrategy(12)).partners
        vectors = np.stack([p.amplitudes for p in partners])
        cliques = group_into_bases(vectors, 3)
        assert sorted(len(c) for c in cliques) == [3, 3]

    def test_grouping_deterministic(self, rng):
        vectors = np.stack([computational_basis(4).matrix[:, k] for k in range(4)])
        assert group_into_bases(vectors, 4) == group_into_bases(vectors, 4)

    def test_empty_input(self):
        assert group_into_bases(np.empty((0, 3), dtype=complex), 3) == []


class TestFindMubs:
    def test_three_level_full_set(self):
        result = find_mubs(3)
        assert result.count == 4
        assert result.complete
        assert result.max_unbias_error < 1e-6
        assert result.max_ortho_error < 1e-8
        report = verify_mub_set(list(result.bases))
        assert report.ok

    def test_two_level_full_set(self):
        result = find_mubs(2)
        assert result.count == 3
        assert result.complete

    def test_flat_partner_pool_covers_the_complementary_structure(self):
        result = find_mubs(3)
        assert result.partner_count >= 3 * 2 - 1

    def test_rejects_small_dim(self):
        with pytest.raises(ValueError):
            find_mubs(1)

    def test_budget_exhaustion_gives_partial_result(self):
        result = find_mubs(5, MubSearchOptions(budget_s=0.0))
        assert not result.complete
        assert result.count >= 2
        assert "within budget" in result.note

    def test_every_emitted_basis_verifies_against_inputs(self):
        result = find_mubs(5)
        assert result.complete
        for basis in result.bases[2:]:
            report = verify_mub_set([result.bases[0], result.bases[1], basis])
            assert report.ok


class TestPrimePower:
    def test_two_qubits(self):
        result = find_mubs_prime_power(2, 2)
        assert result.count == 5
        assert result.complete
        assert result.max_unbias_error < 1e-6
        assert result.max_ortho_error < 1e-8

    def test_single_factor_reduces_to_prime_case(self):
        assert find_mubs_prime_power(2, 1).count == find_mubs(2).count

    def test_rejects_composite_base(self):
        with pytest.raises(ValueError):
            find_mubs_prime_power(6, 2)

    def test_two_qubit_set_cross_checks_numerically(self):
        result = find_mubs_prime_power(2, 2)
        mats = [b.matrix for b in result.bases]
        n = 4
        for i in range(len(mats)):
            gram = np.conj(mats[i].T) @ mats[i]
            assert np.abs(gram - np.eye(n)).max() < 1e-8
            for j in range(i + 1, len(mats)):
                overlap = np.abs(np.conj(mats[i].T) @ mats[j]) ** 2
                assert np.abs(overlap - 1.0 / n).max() < 1e-6
