"""Multistart enumeration of Pauli partners and bifurcation scans.

A reconstruction problem is a set of observable bases with one target
distribution each.  Every state reproducing all targets (a Pauli partner of
whatever generated them) is an attractive fixed point of the chained
imposition map, so running the iteration from seeds spread over the
(N-1)-dimensional phase torus of the first basis and deduplicating the
converged states enumerates the partner set.  Stalled non-partner fixed
points are kept and reported as undesirables rather than dropped: their
basins carry real weight for generic targets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from ._kernels_numpy import _gauge_rows
from .core import (
    TWO_PI,
    Distribution,
    ObservableBasis,
    PureState,
    bures_distance,
)
from .imposition import (
    ImpositionChain,
    ImpositionStep,
    IterationConfig,
    chain_residual,
    default_config,
    is_fixed_point,
    is_partner,
)

# Default RNG seed for random strategies; fixed so runs are reproducible.
DEFAULT_SEED = 0x5EED

# A run with more than this fraction of unresolved seeds is unreliable.
UNRESOLVED_FRACTION_LIMIT = 0.05

# Grid strategies explode as k**(N-1); refuse absurd seed counts up front.
MAX_GRID_SEEDS = 2_000_000

COMPATIBILITY_TOL = 1e-12

# Stalled iterates closer than this to matching all targets are treated as
# candidates sitting next to a marginally attractive partner and polished.
POLISH_RESID = 1e-4


@dataclass(frozen=True, eq=False)
class ReconstructionProblem:
    """m observable bases with matched target distributions, optionally the
    generator state the targets were synthesized from."""

    bases: tuple[ObservableBasis, ...]
    targets: tuple[Distribution, ...]
    origin: PureState | None = None

    def __post_init__(self):
        bases = tuple(self.bases)
        targets = tuple(self.targets)
        if len(bases) < 2:
            raise ValueError(f"need at least two bases, got {len(bases)}")
        if len(bases) != len(targets):
            raise ValueError(f"{len(bases)} bases but {len(targets)} targets")
        dims = {b.dim for b in bases} | {t.dim for t in targets}
        if self.origin is not None:
            dims.add(self.origin.dim)
        if len(dims) != 1:
            raise ValueError(f"inconsistent dimensions: {sorted(dims)}")
        if self.origin is not None:
            for i, (basis, target) in enumerate(zip(bases, targets)):
                got = np.abs(basis.project(self.origin)) ** 2
                dev = float(np.abs(got - target.probs).max())
                if dev > COMPATIBILITY_TOL:
                    raise ValueError(
                        f"target {i} deviates from the origin state's distribution "
                        f"in basis {basis.label!r} by {dev:.3e}")
        object.__setattr__(self, "bases", bases)
        object.__setattr__(self, "targets", targets)

    @property
    def dim(self) -> int:
        return self.bases[0].dim

    def __len__(self) -> int:
        return len(self.bases)

    def to_chain(self) -> ImpositionChain:
        return ImpositionChain(tuple(ImpositionStep(b, t)
                                     for b, t in zip(self.bases, self.targets)))


def synthesize_problem(generator: PureState,
                       bases: list[ObservableBasis]) -> ReconstructionProblem:
    """Package the generator's outcome distributions as reconstruction targets.

    The generator is recorded as `origin` for later recovery checks but the
    search itself only ever sees the distributions.
    """
    bases = tuple(bases)
    if len(bases) < 2:
        raise ValueError(f"need at least two bases, got {len(bases)}")
    targets = tuple(b.distribution(generator) for b in bases)
    return ReconstructionProblem(bases, targets, origin=generator)


# --------------------------------------------------------------------------
# seed strategies

@dataclass(frozen=True)
class GridStrategy:
    """Cell-centered uniform grid, points_per_phase**(N-1) seeds."""

    points_per_phase: int

    def __post_init__(self):
        if self.points_per_phase < 1:
            raise ValueError("points_per_phase must be >= 1")


@dataclass(frozen=True)
class RandomStrategy:
    """Uniform random phases from a fixed-seed generator."""

    count: int
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be >= 1")


Strategy = GridStrategy | RandomStrategy


def default_strategy(dim: int) -> Strategy:
    """Grid for small dimensions, random sampling once the grid explodes."""
    if dim <= 4:
        return GridStrategy(12)
    return RandomStrategy(2000 * dim)


def parse_strategy(text: str, seed: int = DEFAULT_SEED) -> Strategy:
    """Parse 'grid:K' or 'random:COUNT'."""
    kind, _, arg = text.partition(":")
    try:
        value = int(arg)
    except ValueError:
        raise ValueError(f"strategy: expected an integer after ':', got {text!r}") from None
    if kind == "grid":
        return GridStrategy(value)
    if kind == "random":
        return RandomStrategy(value, seed=seed)
    raise ValueError(f"strategy: unknown kind {kind!r} (use grid:K or random:COUNT)")


def grid_phases(points_per_phase: int, n_axes: int) -> np.ndarray:
    """Cell-centered phase grid: 2*pi*(t + 1/2)/k per axis, all combinations.

    Centering keeps seeds off the symmetry axes of the torus, which
    otherwise funnel straight into degenerate fallback paths.
    """
    k = points_per_phase
    if k ** n_axes > MAX_GRID_SEEDS:
        raise ValueError(f"grid of {k}^{n_axes} seeds exceeds the "
                         f"{MAX_GRID_SEEDS} cap; use a random strategy")
    axis = (np.arange(k) + 0.5) * (TWO_PI / k)
    grids = np.meshgrid(*([axis] * n_axes), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def seeds_from_phases(problem: ReconstructionProblem, phases: np.ndarray) -> np.ndarray:
    """Build seed states carrying the first target's moduli and the given phases.

    Only the N-1 phases matter for where the iteration lands, because one
    application of the first step erases everything else about the seed.
    """
    basis0 = problem.bases[0]
    amp = problem.targets[0].sqrt()
    full = np.concatenate([np.zeros((phases.shape[0], 1)), phases], axis=1)
    seeds = (amp * np.exp(1j * full)) @ basis0.matrix.T
    seeds /= np.linalg.norm(seeds, axis=1, keepdims=True)
    _gauge_rows(seeds)
    return seeds


def build_seeds(problem: ReconstructionProblem, strategy: Strategy) -> np.ndarray:
    n_axes = problem.dim - 1
    if isinstance(strategy, GridStrategy):
        phases = grid_phases(strategy.points_per_phase, n_axes)
    elif isinstance(strategy, RandomStrategy):
        rng = np.random.default_rng(strategy.seed)
        phases = rng.uniform(0.0, TWO_PI, size=(strategy.count, n_axes))
    else:
        raise TypeError(f"unknown strategy {strategy!r}")
    return seeds_from_phases(problem, phases)


# --------------------------------------------------------------------------
# enumeration

@dataclass(frozen=True, eq=False)
class PartnerSet:
    """Deduplicated converged states, classified."""

    partners: tuple[PureState, ...]
    undesirables: tuple[PureState, ...]
    seeds_run: int
    unresolved: int

    @property
    def count(self) -> int:
        return len(self.partners)

    @property
    def pauli_unique(self) -> bool:
        return len(self.partners) == 1

    @property
    def reliable(self) -> bool:
        return self.unresolved <= UNRESOLVED_FRACTION_LIMIT * self.seeds_run


def bures_to_many(states: np.ndarray, vec: np.ndarray) -> np.ndarray:
    """Stable Bures distance from one state to each row of `states`."""
    ov = states.conj() @ vec
    rej = vec[None, :] - ov[:, None] * states
    rej2 = np.sum(rej.real ** 2 + rej.imag ** 2, axis=1)
    return np.sqrt(2.0 * rej2 / (1.0 + np.abs(ov)))


class _Clusters:
    """Dedup buckets merged in arrival order; first arrival is the representative."""

    def __init__(self, dim: int, tol: float):
        self.reps = np.empty((0, dim), dtype=np.complex128)
        self.counts: list[int] = []
        self.tol = tol

    def add(self, vec: np.ndarray) -> int:
        if len(self.counts):
            dist = bures_to_many(self.reps, vec)
            best = int(np.argmin(dist))
            if dist[best] < self.tol:
                self.counts[best] += 1
                return best
        self.reps = np.concatenate([self.reps, vec[None, :]])
        self.counts.append(1)
        return len(self.counts) - 1


def _polish_partner(chain: ImpositionChain, state: PureState) -> PureState | None:
    """Gauss-Newton refinement of a near-partner onto the exact solution.

    Partners pinned by a symmetry of the targets can be only marginally
    attractive: the iteration approaches them like 1/n and can never meet
    the convergence tolerance.  Candidates it parks next to such a partner
    are refined directly on the first-basis phase torus (moduli are already
    exact there).  Returns None when the refinement fails to reach machine
    precision or drifts to a different ray.
    """
    n = chain.dim
    basis0 = chain.steps[0].basis
    moduli = chain.steps[0].target.sqrt()
    coeff = basis0.project(state)
    raw = np.angle(np.where(np.abs(coeff) > 1e-9, coeff, 1.0))
    alpha = raw[1:] - raw[0]
    others = chain.steps[1:]

    def assemble(alpha):
        phases = np.concatenate([[0.0], alpha])
        return basis0.matrix @ (moduli * np.exp(1j * phases))

    def residual_vector(alpha):
        psi = assemble(alpha)
        parts = [np.abs(np.conj(s.basis.matrix.T) @ psi) - s.target.sqrt()
                 for s in others]
        return np.concatenate(parts)

    # the acceptance region around a degenerate root has radius about the
    # square root of the residual target; 1e-13 keeps distinct polished
    # copies of one partner well inside the dedup tolerance
    eps = 1e-7
    basis_eye = np.eye(n - 1)
    converged = False
    for _ in range(80):
        r = residual_vector(alpha)
        if np.abs(r).max() < 1e-13:
            converged = True
            break
        jac = np.column_stack([
            (residual_vector(alpha + eps * e) - residual_vector(alpha - eps * e)) / (2 * eps)
            for e in basis_eye])
        delta, *_ = np.linalg.lstsq(jac, r, rcond=None)
        if not np.isfinite(delta).all():
            return None
        if np.abs(delta).max() > 0.5:
            delta *= 0.5 / np.abs(delta).max()
        alpha = alpha - delta
    if not converged:
        return None
    polished = PureState.from_vector(assemble(alpha))
    if bures_distance(polished, state) > 0.1:
        return None
    return polished


def enumerate_partners(problem: ReconstructionProblem,
                       strategy: Strategy | None = None,
                       config: IterationConfig | None = None,
                       dedup_tol: float = 1e-6,
                       classify_tol: float = 1e-6) -> PartnerSet:
    """Run the iteration from every seed, deduplicate, classify.

    Converged states matching every target within classify_tol are partners;
    stalled chain fixed points that fail the per-step match are undesirables;
    stalled or capped iterates already matching all targets to within
    POLISH_RESID sit next to a marginally attractive partner and count once
    polished.  Everything else is unresolved.  Deterministic for a given
    strategy: seeds are generated and merged in a fixed order.
    """
    if strategy is None:
        strategy = default_strategy(problem.dim)
    chain = problem.to_chain()
    if config is None:
        config = default_config(chain)
    if dedup_tol <= 0.0:
        raise ValueError("dedup_tol must be > 0")

    seeds = build_seeds(problem, strategy)
    finals, _iters, status, resid = kernels.iterate_batch(
        chain.basis_matrices(), chain.sqrt_targets(), seeds,
        config.max_iter, config.tol, config.cycle_window, config.stall_tol)

    converged = _Clusters(problem.dim, dedup_tol)
    stalled = _Clusters(problem.dim, dedup_tol)
    unresolved = 0
    for s in range(seeds.shape[0]):
        if status[s] == kernels.STATUS_CONVERGED:
            converged.add(finals[s])
        elif status[s] == kernels.STATUS_CYCLE or resid[s] < POLISH_RESID:
            stalled.add(finals[s])
        else:
            unresolved += 1

    fixed_tol = 10.0 * config.tol
    partners: list[PureState] = []
    undesirables: list[PureState] = []

    def add_partner(state: PureState) -> None:
        if not any(bures_distance(state, p) < dedup_tol for p in partners):
            partners.append(state)

    for rep, count in zip(converged.reps, converged.counts):
        state = PureState.from_vector(rep)
        if is_partner(chain, state, classify_tol):
            add_partner(state)
        elif is_fixed_point(chain, state, fixed_tol):
            undesirables.append(state)
        else:
            unresolved += count
    for rep, count in zip(stalled.reps, stalled.counts):
        state = PureState.from_vector(rep)
        if chain_residual(chain, state) < POLISH_RESID:
            polished = _polish_partner(chain, state)
            if polished is not None and is_partner(chain, polished, classify_tol):
                add_partner(polished)
                continue
        if is_fixed_point(chain, state, fixed_tol) and not is_partner(chain, state, classify_tol):
            undesirables.append(state)
        else:
            # true cycles, and stalls that neither polish nor pin down,
            # are not classifiable either way
            unresolved += count

    return PartnerSet(partners=tuple(partners), undesirables=tuple(undesirables),
                      seeds_run=seeds.shape[0], unresolved=unresolved)


def count_partners(problem: ReconstructionProblem,
                   strategy: Strategy | None = None,
                   config: IterationConfig | None = None,
                   dedup_tol: float = 1e-6) -> int:
    """Number of distinct Pauli partners found (1 means Pauli unique)."""
    return enumerate_partners(problem, strategy, config, dedup_tol).count


# --------------------------------------------------------------------------
# bifurcation scans

@dataclass(frozen=True, eq=False)
class BifurcationScan:
    """Partner counts along a generator path, with the intervals where the
    count changes (each contains at least one bifurcation)."""

    path: tuple[PureState, ...]
    parameters: np.ndarray
    partner_counts: np.ndarray
    bifurcation_intervals: tuple[tuple[float, float], ...]


def interpolate_states(start: PureState, end: PureState, count: int) -> list[PureState]:
    """`count` states along the normalized linear interpolation of two rays.

    The endpoint representative is phase-aligned first, which keeps the
    interpolant's norm bounded below 1/sqrt(2) for any pair of rays.
    """
    if count < 2:
        raise ValueError("count must be >= 2")
    if start.dim != end.dim:
        raise ValueError(f"dimension mismatch: {start.dim} vs {end.dim}")
    ov = np.vdot(start.amplitudes, end.amplitudes)
    aligned = end.amplitudes * (np.conj(ov) / abs(ov)) if abs(ov) > 0 else end.amplitudes
    out = []
    for t in np.linspace(0.0, 1.0, count):
        out.append(PureState.from_vector((1.0 - t) * start.amplitudes + t * aligned))
    return out


def scan_bifurcations(path: list[PureState], bases: list[ObservableBasis],
                      strategy: Strategy | None = None,
                      config: IterationConfig | None = None,
                      dedup_tol: float = 1e-6) -> BifurcationScan:
    """Count partners for each generator on the path and flag count changes."""
    path = tuple(path)
    if len(path) < 2:
        raise ValueError("path needs at least two generators")
    counts = np.array([
        count_partners(synthesize_problem(gen, bases), strategy, config, dedup_tol)
        for gen in path
    ])
    params = np.linspace(0.0, 1.0, len(path))
    intervals = tuple(
        (float(params[i]), float(params[i + 1]))
        for i in range(len(path) - 1) if counts[i] != counts[i + 1]
    )
    return BifurcationScan(path=path, parameters=params, partner_counts=counts,
                           bifurcation_intervals=intervals)


# --------------------------------------------------------------------------
# informational completeness (heuristic)

COMPLETE = "complete"
INCOMPLETE = "incomplete"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True, eq=False)
class CompletenessVerdict:
    status: str
    witness: PureState | None
    generators_tested: int
    note: str


def is_informationally_complete_heuristic(
        bases: list[ObservableBasis], generator_sample_count: int,
        strategy: Strategy | None = None, config: IterationConfig | None = None,
        seed: int = DEFAULT_SEED, dedup_tol: float = 1e-6) -> CompletenessVerdict:
    """Sampled completeness check.

    Any sampled generator with two or more partners is a witness of
    incompleteness.  A clean sweep of Pauli-unique generators only supports
    completeness heuristically: bounded sampling cannot quantify over all
    states, and the verdict says so.
    """
    if generator_sample_count < 1:
        raise ValueError("generator_sample_count must be >= 1")
    bases = list(bases)
    if len(bases) < 2:
        from .core import PhaseSeed, state_from_seed

        n = bases[0].dim
        witness = state_from_seed(Distribution.flat(n), PhaseSeed(np.zeros(n - 1)), bases[0])
        return CompletenessVerdict(
            status=INCOMPLETE, witness=witness, generators_tested=0,
            note="a single observable leaves every relative phase free")

    rng = np.random.default_rng(seed)
    n = bases[0].dim
    for tested in range(1, generator_sample_count + 1):
        z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        generator = PureState.from_vector(z)
        result = enumerate_partners(synthesize_problem(generator, bases),
                                    strategy, config, dedup_tol)
        if not result.reliable:
            return CompletenessVerdict(
                status=INCONCLUSIVE, witness=generator, generators_tested=tested,
                note=f"{result.unresolved}/{result.seeds_run} seeds unresolved")
        if result.count >= 2:
            return CompletenessVerdict(
                status=INCOMPLETE, witness=generator, generators_tested=tested,
                note=f"witness generator has {result.count} partners")
        if result.count == 0:
            return CompletenessVerdict(
                status=INCONCLUSIVE, witness=generator, generators_tested=tested,
                note="search recovered no partner at all, not even the generator")
    return CompletenessVerdict(
        status=COMPLETE, witness=None, generators_tested=generator_sample_count,
        note="heuristic verdict: every sampled generator was Pauli unique; "
             "bounded sampling cannot prove completeness")
