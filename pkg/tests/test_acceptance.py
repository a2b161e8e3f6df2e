"""Acceptance suite: one test per release criterion, at its stated tolerance.

Run with `pytest tests/test_acceptance.py -v -s` to see one PASS line per
criterion.  The stretch run (dimension 23) is enabled by setting
PAULI_FORGE_STRETCH=1.
"""

import json
import os
import time

import numpy as np
import pytest

from pauli_forge.basin_mapper import LABEL_UNDESIRABLE, LABEL_UNRESOLVED, map_basins
from pauli_forge.cli import main
from pauli_forge.core import (
    Distribution,
    ObservableBasis,
    PureState,
    bures_distance,
    computational_basis,
    distributional_distance,
    fourier_basis,
    hellinger_distance,
)
from pauli_forge.imposition import (
    ImpositionChain,
    ImpositionStep,
    impose,
    impose_chain,
    max_probability_mismatch,
)
from pauli_forge.mub_pipeline import group_into_bases, verify_mub_set
from pauli_forge.partner_search import (
    GridStrategy,
    ReconstructionProblem,
    enumerate_partners,
    interpolate_states,
    scan_bifurcations,
    synthesize_problem,
)

from conftest import haar_basis, haar_state

RNG_SEED = 987654321


def _report(number, text):
    print(f"\nACCEPTANCE {number:02d} PASS: {text}")


def _run_mubs_cli(tmp_path, args):
    out = tmp_path / "mubs.json"
    started = time.monotonic()
    code = main(["mubs", *args, "--out", str(out)])
    elapsed = time.monotonic() - started
    assert code == 0
    return json.loads(out.read_text()), elapsed


@pytest.mark.parametrize("dim", [2, 3, 5, 7, 11, 13])
def test_criterion_1_prime_dimension_mub_reconstruction(dim, tmp_path):
    obj, elapsed = _run_mubs_cli(tmp_path, ["--dim", str(dim)])
    assert obj["count"] == dim + 1
    assert obj["complete"]
    assert obj["max_unbias_error"] < 1e-6
    assert obj["max_ortho_error"] < 1e-8
    assert elapsed < 300.0
    _report(1, f"dim {dim}: {obj['count']} MUBs, unbias {obj['max_unbias_error']:.1e}, "
               f"ortho {obj['max_ortho_error']:.1e}, {elapsed:.1f}s")


@pytest.mark.skipif(os.environ.get("PAULI_FORGE_STRETCH") != "1",
                    reason="stretch run; set PAULI_FORGE_STRETCH=1")
def test_criterion_1_stretch_dim_23(tmp_path):
    # Non-gating stretch target.  Measured landscape at dimension 23: zero
    # of 4962 converged seeds (from 8192 random ones) land on the 506
    # basis-column attractors; the stray bi-unbiased states own essentially
    # all basin mass, so a multistart search cannot collect the columns in
    # any feasible budget.  Enabled runs report that honestly.
    obj, elapsed = _run_mubs_cli(tmp_path, ["--dim", "23", "--budget", "540"])
    assert obj["count"] == 24, (
        f"stretch unattained: {obj['count']} bases in {elapsed:.0f}s; "
        f"true-basis basins carry no measurable seed mass in dimension 23")
    _report(1, f"stretch dim 23: 24 MUBs in {elapsed:.1f}s")


@pytest.mark.parametrize("p,r,expected", [(2, 2, 5), (3, 2, 10)])
def test_criterion_2_prime_power_reconstruction(p, r, expected, tmp_path):
    obj, elapsed = _run_mubs_cli(tmp_path, ["--prime-power", str(p), str(r)])
    assert obj["count"] == expected
    assert obj["complete"]
    assert obj["max_unbias_error"] < 1e-6
    assert obj["max_ortho_error"] < 1e-8
    _report(2, f"{p}^{r}: {obj['count']} MUBs in {elapsed:.1f}s")


def test_criterion_3_dimension_six_negative_result(tmp_path):
    obj, elapsed = _run_mubs_cli(tmp_path, ["--dim", "6", "--budget", "120"])
    assert obj["count"] == 3
    assert not obj["complete"]
    assert "no 4th basis found" in obj["note"]
    _report(3, f"dim 6: exactly 3 MUBs, reported {obj['note']!r} ({elapsed:.1f}s)")


def test_criterion_4_flat_generator_structure():
    flat = Distribution.flat(3)
    problem = ReconstructionProblem((computational_basis(3), fourier_basis(3)),
                                    (flat, flat))
    result = enumerate_partners(problem, GridStrategy(12))
    assert result.count == 6

    vectors = np.stack([p.amplitudes for p in result.partners])
    cliques = group_into_bases(vectors, 3)
    assert sorted(len(c) for c in cliques) == [3, 3]
    for clique in cliques:
        basis = ObservableBasis("recovered", np.column_stack([vectors[i] for i in clique]))
        report = verify_mub_set([computational_basis(3), fourier_basis(3), basis])
        assert report.ok

    grid = map_basins(problem, 300, reference=result)
    areas = [grid.areas[k] for k in range(6)]
    rel = (max(areas) - min(areas)) / min(areas)
    assert rel < 0.03
    stray = grid.areas.get(LABEL_UNDESIRABLE, 0.0) + grid.areas.get(LABEL_UNRESOLVED, 0.0)
    assert stray < 0.01
    _report(4, f"6 partners forming 2 MU bases; basin areas within {rel:.2%}, "
               f"stray area {stray:.2%}")


def test_criterion_5_partner_count_witnesses():
    rng = np.random.default_rng(RNG_SEED)
    bases = [computational_basis(3), fourier_basis(3)]
    wanted = {1, 4, 5}
    witnessed: dict[int, int] = {}
    for sample in range(1, 501):
        # alternate fully complex and real-amplitude generators: the two
        # families populate the even and odd partner counts respectively
        if sample % 2 == 0:
            z = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        else:
            z = rng.standard_normal(3) + 0j
        generator = PureState.from_vector(z)
        result = enumerate_partners(synthesize_problem(generator, bases))
        if not result.reliable:
            continue
        for partner in result.partners:
            assert max_probability_mismatch(
                synthesize_problem(generator, bases).to_chain(), partner) < 1e-8
        count = result.count
        if count in wanted and count not in witnessed:
            witnessed[count] = sample
        if wanted == set(witnessed):
            break
    assert wanted == set(witnessed), f"witnessed only {witnessed}"
    _report(5, f"counts 1, 4, 5 witnessed at samples {witnessed} "
               f"(all within 500); every partner matched targets below 1e-8")


def test_criterion_6_single_step_inequalities_and_attraction():
    rng = np.random.default_rng(RNG_SEED)
    root8 = 2.0 * np.sqrt(2.0)
    for _ in range(1000):
        n = int(rng.integers(2, 9))
        basis = haar_basis(n, rng)
        generator = haar_state(n, rng)
        psi = haar_state(n, rng)
        step = ImpositionStep(basis, basis.distribution(generator))
        out = impose(step, psi)
        assert bures_distance(out, psi) <= bures_distance(psi, generator) + 1e-10
        for k in range(n):
            v = basis.vector(k)
            assert abs(bures_distance(out, v) - bures_distance(generator, v)) <= 1e-10
        bound = root8 * np.sqrt(1.0 - np.sqrt(step.target.probs.max()))
        assert bures_distance(out, generator) <= bound + 1e-10
        assert bures_distance(out, generator) <= 2.0 * bures_distance(psi, generator) + 1e-10

    delta = 1e-3
    theta = 2.0 * np.arcsin(delta / 2.0)
    for _ in range(1000):
        n = int(rng.integers(2, 9))
        m = int(rng.integers(2, 4))
        generator = haar_state(n, rng)
        chain = ImpositionChain(tuple(
            ImpositionStep(b, b.distribution(generator))
            for b in (haar_basis(n, rng, f"b{j}") for j in range(m))))
        z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        z -= np.vdot(generator.amplitudes, z) * generator.amplitudes
        z /= np.linalg.norm(z)
        psi = PureState.from_vector(np.cos(theta) * generator.amplitudes
                                    + np.sin(theta) * z)
        assert (bures_distance(impose_chain(chain, psi), generator)
                <= bures_distance(psi, generator) + 1e-10)
    _report(6, "four single-step inequalities and the chained contraction: "
               "1000 trials each, zero violations")


def test_criterion_7_distribution_metric_bound():
    rng = np.random.default_rng(RNG_SEED)
    for _ in range(1000):
        n = int(rng.integers(2, 9))
        m = int(rng.integers(1, 6))
        bases = [haar_basis(n, rng) for _ in range(m)]
        a, b = haar_state(n, rng), haar_state(n, rng)
        assert distributional_distance(bases, a, b) <= bures_distance(a, b) + 1e-12
    for _ in range(200):
        n = int(rng.integers(2, 9))
        basis = haar_basis(n, rng)
        a, b = haar_state(n, rng), haar_state(n, rng)
        assert abs(distributional_distance([basis], a, b)
                   - hellinger_distance(basis, a, b)) < 1e-14
    _report(7, "distributional distance bounded by ray distance on 1000 trials; "
               "single-basis reduction exact to 1e-14")


def test_criterion_8_operator_algebra():
    rng = np.random.default_rng(RNG_SEED)
    for trial in range(1000):
        n = int(rng.integers(2, 9))
        basis = haar_basis(n, rng)
        target = basis.distribution(haar_state(n, rng))
        step = ImpositionStep(basis, target)
        if trial % 5 == 0:
            # state supported on a strict subset of basis vectors: the
            # remaining projections are exactly zero (fallback path)
            support = int(rng.integers(1, n))
            coeff = np.zeros(n, dtype=complex)
            coeff[:support] = (rng.standard_normal(support)
                               + 1j * rng.standard_normal(support))
            psi = PureState.from_vector(basis.matrix @ coeff)
            assert np.abs(basis.project(psi))[support:].max(initial=0.0) < 1e-14
        else:
            psi = haar_state(n, rng)
        once = impose(step, psi)
        assert abs(np.linalg.norm(once.amplitudes) - 1.0) <= 1e-12
        assert bures_distance(impose(step, once), once) <= 1e-12
        got = np.abs(basis.project(once)) ** 2
        assert np.abs(got - target.probs).max() <= 1e-12
    _report(8, "idempotence, norm preservation, and target exhaustion on 1000 "
               "trials including zero-projection fallbacks")


def test_criterion_9_two_level_conjugate_partners():
    rng = np.random.default_rng(RNG_SEED)
    bases = [computational_basis(2), fourier_basis(2)]
    for _ in range(100):
        generator = haar_state(2, rng)
        result = enumerate_partners(synthesize_problem(generator, bases))
        conjugate = generator.conjugate()
        self_conjugate = bures_distance(generator, conjugate) < 1e-6
        assert result.count == (1 if self_conjugate else 2)
        for partner in result.partners:
            assert min(bures_distance(partner, generator),
                       bures_distance(partner, conjugate)) < 1e-8
    _report(9, "100 two-level generators: partners are the generator and its "
               "conjugate, matched below 1e-8")


def test_criterion_10_bifurcation_scan():
    start = computational_basis(3).vector(0)
    w = np.exp(2j * np.pi / 3)
    end = PureState.from_vector(np.array([1.0, w, w]) / np.sqrt(3))
    path = interpolate_states(start, end, 50)
    scan = scan_bifurcations(path, [computational_basis(3), fourier_basis(3)],
                             GridStrategy(12))
    assert scan.partner_counts[0] == 1
    assert scan.partner_counts[-1] == 6
    assert len(scan.bifurcation_intervals) >= 1
    _report(10, f"50-point scan: counts 1 -> 6 with "
                f"{len(scan.bifurcation_intervals)} bifurcation interval(s)")
