"""Recovery of mutually unbiased basis sets from flat-target partner searches.

With flat targets over two unbiased input bases, every converged state of
the imposition iteration is a vector unbiased to both inputs.  The missing
bases are assembled one at a time: a stage search collects such vectors for
the current set of bases (inputs plus every basis accepted so far, all with
flat targets), grows an orthonormal basis out of them, accepts it, and
repeats with the enlarged chain.

Two complications shape the builder.  In several dimensions the collected
pool mixes the sought basis vectors with unbiased vectors extending no
basis at all (isolated strays from dimension 7 up, whole continua in prime
powers), so growing a basis from pool samples alone either stalls or picks
dead-end combinations.  Growth therefore prefers vectors by their
unbiasedness degree inside the pool, falls back to a projection-restricted
iteration when no sampled vector is orthogonal to the partial basis, and
the stage search backtracks over ranked candidate bases when a choice
leads nowhere.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import (
    TWO_PI,
    ObservableBasis,
    computational_basis,
    fourier_basis,
    tensor_fourier_basis,
)
from .imposition import IterationConfig
from .partner_search import (
    DEFAULT_SEED,
    GridStrategy,
    RandomStrategy,
    Strategy,
    bures_to_many,
    default_strategy,
    grid_phases,
)


@dataclass(frozen=True)
class MubSearchOptions:
    """Knobs for the basis search; defaults match the library-wide ones."""

    strategy: Strategy | None = None
    iteration: IterationConfig | None = None
    budget_s: float | None = None
    ortho_tol: float = 1e-6
    unbias_tol: float = 1e-6
    dedup_tol: float = 1e-6
    seed: int = DEFAULT_SEED
    candidate_cap: int | None = None
    stage_eval_cap: int | None = None
    stage_max_iter: int | None = None


@dataclass(frozen=True, eq=False)
class MubSet:
    """Bases found (inputs included) plus the measured error levels."""

    bases: tuple[ObservableBasis, ...]
    max_unbias_error: float
    max_ortho_error: float
    complete: bool
    partner_count: int
    seeds_run: int
    note: str

    @property
    def count(self) -> int:
        return len(self.bases)

    @property
    def dim(self) -> int:
        return self.bases[0].dim


@dataclass(frozen=True, eq=False)
class MubVerification:
    ok: bool
    max_unbias_error: float
    max_ortho_error: float
    violations: tuple[tuple, ...]


def verify_mub_set(bases: list[ObservableBasis], tol: float = 1e-6) -> MubVerification:
    """Exhaustive pairwise check of a candidate MUB set.

    Within each basis, Gram deviations from the identity above tol are
    violations; across bases, squared overlaps deviating from 1/N above tol
    are violations.  Violations carry (kind, basis_i, vec_i, basis_j, vec_j,
    deviation).
    """
    bases = list(bases)
    if len(bases) < 2:
        raise ValueError(f"need at least two bases, got {len(bases)}")
    dims = {b.dim for b in bases}
    if len(dims) != 1:
        raise ValueError(f"inconsistent dimensions: {sorted(dims)}")
    n = bases[0].dim

    max_ortho = 0.0
    max_unbias = 0.0
    violations: list[tuple] = []
    for i, basis in enumerate(bases):
        gram = np.abs(np.conj(basis.matrix.T) @ basis.matrix - np.eye(n))
        max_ortho = max(max_ortho, float(gram.max()))
        for k, l in np.argwhere(gram > tol):
            violations.append(("orthonormality", i, int(k), i, int(l), float(gram[k, l])))
    for i in range(len(bases)):
        for j in range(i + 1, len(bases)):
            overlap = np.abs(np.conj(bases[i].matrix.T) @ bases[j].matrix) ** 2
            dev = np.abs(overlap - 1.0 / n)
            max_unbias = max(max_unbias, float(dev.max()))
            for k, l in np.argwhere(dev > tol):
                violations.append(("unbiasedness", i, int(k), j, int(l), float(dev[k, l])))
    return MubVerification(ok=not violations, max_unbias_error=max_unbias,
                           max_ortho_error=max_ortho, violations=tuple(violations))


def group_into_bases(vectors: np.ndarray, dim: int, ortho_tol: float = 1e-6) -> list[list[int]]:
    """Partition mutually orthogonal dim-tuples of vectors into candidate bases.

    Greedy clique growth over the orthogonality graph (edge when |<u,v>| is
    below ortho_tol), deterministic in the input order, with backtracking
    capped at dim**3 expansions per starting vector.  Returns index lists
    of the complete cliques found.  Suited to pools where the graph is a
    disjoint union of cliques; the basis search below handles the messier
    pools that arise from dimension 7 up.
    """
    count = len(vectors)
    if count == 0:
        return []
    mat = np.asarray(vectors)
    adjacency = np.abs(mat.conj() @ mat.T) < ortho_tol
    used = np.zeros(count, dtype=bool)
    cliques: list[list[int]] = []
    for start in range(count):
        if used[start]:
            continue
        clique = _grow_clique(adjacency, start, dim, used)
        if clique is not None:
            cliques.append(clique)
            used[clique] = True
    return cliques


def _grow_clique(adjacency: np.ndarray, start: int, dim: int, used: np.ndarray):
    budget = dim ** 3

    def extend(clique: list[int], candidates: list[int]):
        nonlocal budget
        if len(clique) == dim:
            return clique
        if len(clique) + len(candidates) < dim:
            return None
        for pos, v in enumerate(candidates):
            if budget <= 0:
                return None
            budget -= 1
            narrowed = [u for u in candidates[pos + 1:] if adjacency[u, v]]
            found = extend(clique + [v], narrowed)
            if found is not None:
                return found
        return None

    neighbors = [v for v in range(adjacency.shape[0])
                 if v != start and not used[v] and adjacency[v, start]]
    return extend([start], neighbors)


def _closest_unitary(mat: np.ndarray) -> np.ndarray:
    """Polar orthonormalization: the unitary nearest to mat in Frobenius norm."""
    u, _, vh = np.linalg.svd(mat)
    return u @ vh


def _ordinal(k: int) -> str:
    if 10 <= k % 100 <= 20:
        suffix = "th"
    else:
        suffix = {1: "st", 2: "nd", 3: "rd"}.get(k % 10, "th")
    return f"{k}{suffix}"


def _mutually_unbiased(a: np.ndarray, b: np.ndarray, tol: float) -> bool:
    n = a.shape[0]
    overlap = np.abs(np.conj(a.T) @ b) ** 2
    return float(np.abs(overlap - 1.0 / n).max()) <= tol


def _same_basis(a: np.ndarray, b: np.ndarray, tol: float) -> bool:
    """Equal as sets of rays: every column of a matches some column of b."""
    overlap = np.abs(np.conj(a.T) @ b)
    return bool((overlap.max(axis=1) > 1.0 - tol).all())


def _orthonormalize_rows(mat: np.ndarray) -> np.ndarray:
    """Modified Gram-Schmidt on rows (assumed independent)."""
    out = mat.astype(np.complex128, copy=True)
    for i in range(out.shape[0]):
        for j in range(i):
            out[i] -= np.vdot(out[j], out[i]) * out[j]
        out[i] /= np.linalg.norm(out[i])
    return out


SUBGRID_SEED_CAP = 100_000
PROBE_SEEDS = 128
# a projection built from tol-accurate vectors floors the slice residual
# near the vectors' own accuracy, well above the convergence tolerance
SLICE_ACCEPT_RESID = 1e-6


class _BasisSearch:
    """Depth-first assembly of the complementary bases, one stage per basis."""

    def __init__(self, first: ObservableBasis, second: ObservableBasis,
                 options: MubSearchOptions, phase_step: int | None = None):
        self.n = first.dim
        self.inputs = [first.matrix, second.matrix]
        self.options = options
        self.wanted = self.n - 1
        self.deadline = (None if options.budget_s is None
                         else time.monotonic() + options.budget_s)
        self.stage_evals = 0
        self.stage_eval_cap = options.stage_eval_cap or max(12, 6 * self.n)
        self.candidate_cap = options.candidate_cap or max(6, self.n - 1)
        self.seeds_run = 0
        self.stage0_pool_size = 0
        self.stop_reason = "search space exhausted"
        # phase-torus seeds at multiples of 2*pi/phase_step land exactly on
        # the root-of-unity states that carry the prime-power structure
        self.subgrid = None
        if phase_step is not None and phase_step ** (self.n - 1) <= SUBGRID_SEED_CAP:
            axis = np.arange(phase_step) * (TWO_PI / phase_step)
            grids = np.meshgrid(*([axis] * (self.n - 1)), indexing="ij")
            self.subgrid = np.stack([g.ravel() for g in grids], axis=1)

        strategy = options.strategy
        if strategy is None:
            strategy = default_strategy(self.n)
            if isinstance(strategy, RandomStrategy):
                strategy = RandomStrategy(strategy.count, seed=options.seed)
        self.strategy = strategy
        # pool runs stop early: seeds that have not converged by this many
        # iterations are overwhelmingly wanderers, and fresh seeds buy more
        # converged states per unit time than longer runs do
        if options.stage_max_iter is not None:
            self.stage_cap = options.stage_max_iter
        elif options.iteration is not None:
            self.stage_cap = options.iteration.max_iter
        else:
            self.stage_cap = max(4000, 600 * self.n)

    # -- budget ------------------------------------------------------------

    def _out_of_budget(self) -> bool:
        if self.deadline is not None and time.monotonic() > self.deadline:
            self.stop_reason = "budget exhausted"
            return True
        if self.stage_evals >= self.stage_eval_cap:
            self.stop_reason = "stage evaluation cap reached"
            return True
        return False

    # -- kernel plumbing ----------------------------------------------------

    def _config(self, n_bases: int) -> IterationConfig:
        if self.options.iteration is not None:
            return self.options.iteration
        return IterationConfig(max_iter=1000 * self.n * n_bases)

    def _run(self, chain_mats: list[np.ndarray], seeds: np.ndarray,
             projector: np.ndarray | None = None, max_iter: int | None = None):
        mats = np.stack(chain_mats)
        sqrt_targets = np.full((len(chain_mats), self.n), 1.0 / np.sqrt(self.n))
        config = self._config(len(chain_mats))
        self.seeds_run += seeds.shape[0]
        cap = max_iter or min(config.max_iter, self.stage_cap)
        return kernels.iterate_batch(mats, sqrt_targets, seeds, cap,
                                     config.tol, config.cycle_window,
                                     config.stall_tol, projector)

    def _phase_seeds(self, count: int, rng: np.random.Generator) -> np.ndarray:
        phases = rng.uniform(0.0, TWO_PI, size=(count, self.n - 1))
        return self._states_from_phases(phases)

    def _states_from_phases(self, phases: np.ndarray) -> np.ndarray:
        full = np.concatenate([np.zeros((phases.shape[0], 1)), phases], axis=1)
        seeds = (np.exp(1j * full) / np.sqrt(self.n)) @ self.inputs[0].T
        seeds /= np.linalg.norm(seeds, axis=1, keepdims=True)
        return seeds

    # -- stage machinery ----------------------------------------------------

    def _stage_seed_count(self, depth: int) -> int:
        if depth == 0 and isinstance(self.strategy, GridStrategy):
            return -1  # marker: use the full grid
        if depth == 0 and isinstance(self.strategy, RandomStrategy):
            return min(self.strategy.count, max(2048, 64 * self.n))
        return max(1024, 32 * self.n)

    def _stage_pool(self, chain_mats: list[np.ndarray], depth: int) -> np.ndarray:
        """Deduplicated solution states for the current chain.

        Runs the root-of-unity subgrid (when configured) and a small random
        probe first; the full random batch is spent only when either shows
        signs of life, so dead stages (a previous basis choice that admits
        no further unbiased vectors) are detected cheaply.  Chains through
        reconstructed bases carry those bases' error, which floors the
        residual just above the tolerance, so near-stalls count as alive
        and enter the pool after refinement against the exact inputs.
        """
        rng = np.random.default_rng([self.options.seed, depth, self.stage_evals])
        batches = []

        def is_alive(status, resid) -> bool:
            if (status == kernels.STATUS_CONVERGED).any():
                return True
            return bool((resid < SLICE_ACCEPT_RESID).any())

        alive = False
        if self.subgrid is not None:
            finals, _it, status, resid = self._run(
                chain_mats, self._states_from_phases(self.subgrid))
            batches.append((finals, status, resid))
            alive = alive or is_alive(status, resid)
        probe = self._phase_seeds(PROBE_SEEDS, rng)
        finals, _it, status, resid = self._run(chain_mats, probe)
        batches.append((finals, status, resid))
        alive = alive or is_alive(status, resid)

        if alive:
            count = self._stage_seed_count(depth)
            if count < 0:
                seeds = self._states_from_phases(
                    grid_phases(self.strategy.points_per_phase, self.n - 1))
            else:
                seeds = self._phase_seeds(count, rng)
            finals, _it, status, resid = self._run(chain_mats, seeds)
            batches.append((finals, status, resid))

        pool = np.empty((0, self.n), dtype=np.complex128)
        near = np.empty((0, self.n), dtype=np.complex128)
        for finals, status, resid in batches:
            for s in range(finals.shape[0]):
                if status[s] == kernels.STATUS_CONVERGED:
                    vec = finals[s]
                    if pool.shape[0] == 0 or bures_to_many(pool, vec).min() >= self.options.dedup_tol:
                        pool = np.concatenate([pool, vec[None, :]])
                elif resid[s] < SLICE_ACCEPT_RESID:
                    vec = finals[s]
                    if near.shape[0] == 0 or bures_to_many(near, vec).min() >= self.options.dedup_tol:
                        near = np.concatenate([near, vec[None, :]])
        if near.shape[0]:
            for vec in self._refine(near, chain_mats):
                if pool.shape[0] == 0 or bures_to_many(pool, vec).min() >= self.options.dedup_tol:
                    pool = np.concatenate([pool, vec[None, :]])
        return pool

    def _degree_order(self, pool: np.ndarray) -> np.ndarray:
        """Pool indices sorted by descending unbiasedness degree (stable).

        Vectors of a complete complementary structure are unbiased to every
        pool vector outside their own basis; strays sit near zero degree.
        """
        if pool.shape[0] == 0:
            return np.arange(0)
        overlap2 = np.abs(pool.conj() @ pool.T) ** 2
        degree = (np.abs(overlap2 - 1.0 / self.n) < self.options.unbias_tol).sum(axis=1)
        return np.argsort(-degree, kind="stable")

    def _pool_degree(self, pool: np.ndarray, states: np.ndarray) -> np.ndarray:
        """Unbiasedness count of each state against the stage pool."""
        overlap2 = np.abs(states.conj() @ pool.T) ** 2
        return (np.abs(overlap2 - 1.0 / self.n) < self.options.unbias_tol).sum(axis=1)

    def _refine(self, states: np.ndarray, chain_mats: list[np.ndarray]) -> np.ndarray:
        """Polish near-solutions against the two input bases alone.

        Chains through reconstructed bases carry those bases' own error, so
        their residual cannot reach the convergence tolerance; the inputs
        are exact and pull each state onto the true nearby attractor.
        States that fail to converge or drift off unbiasedness with any
        chain basis are dropped.
        """
        finals, _it, status, _r = self._run(self.inputs, states)
        keep = status == kernels.STATUS_CONVERGED
        for mat in chain_mats:
            overlap2 = np.abs(finals @ np.conj(mat)) ** 2
            keep &= (np.abs(overlap2 - 1.0 / self.n) < self.options.unbias_tol).all(axis=1)
        return finals[keep]

    def _complete_by_projection(self, chain_mats: list[np.ndarray],
                                vecs: list[np.ndarray], pool: np.ndarray,
                                depth: int, attempt: int) -> np.ndarray | None:
        """One more basis vector: iterate restricted to the orthocomplement.

        The projector carries the finite accuracy of the collected vectors,
        which floors the reachable residual, so near-misses count as hits
        and are refined by a short unconstrained run afterwards.  Among the
        slice outputs, those most unbiased to the stage pool are preferred:
        they keep the remaining bases in play, while slice strays score
        near zero and would poison later slots.
        """
        ortho = _orthonormalize_rows(np.stack(vecs))
        projector = np.eye(self.n, dtype=np.complex128) - ortho.T @ ortho.conj()
        rng = np.random.default_rng(
            [self.options.seed, depth, self.stage_evals, len(vecs), attempt])
        # slices converge within a couple thousand passes when they are
        # nonempty; short targeted batches keep high-dimensional builds cheap
        seeds = self._phase_seeds(max(64, 4 * self.n), rng)
        finals, _iters, status, resid = self._run(chain_mats, seeds, projector,
                                                  max_iter=min(self.stage_cap, 3000))
        near = (status == kernels.STATUS_CONVERGED) | (resid < SLICE_ACCEPT_RESID)
        candidates = finals[near]
        if candidates.shape[0] == 0:
            return None
        top = np.argsort(-self._pool_degree(pool, candidates), kind="stable")[:4]
        for vec in self._refine(candidates[top], chain_mats):
            if all(abs(np.vdot(w, vec)) < self.options.ortho_tol for w in vecs):
                return vec
        return None

    def _null_completion(self, vecs: list[np.ndarray],
                         chain_mats: list[np.ndarray]) -> np.ndarray | None:
        """The unique final vector, kept only when unbiased to the chain bases."""
        _, _, vh = np.linalg.svd(np.conj(np.stack(vecs)))
        w = np.conj(vh[-1])
        for mat in chain_mats:
            overlap2 = np.abs(np.conj(mat.T) @ w) ** 2
            if np.abs(overlap2 - 1.0 / self.n).max() > self.options.unbias_tol:
                return None
        return w

    def _grow_basis(self, pool: np.ndarray, order: np.ndarray, start: int,
                    chain_mats: list[np.ndarray], depth: int) -> np.ndarray | None:
        """Grow an orthonormal basis from one pool vector.

        Extension prefers sampled pool vectors (highest unbiasedness degree
        first) and falls back to the projection-restricted iteration when
        the samples hold nothing orthogonal, which is the generic situation
        on the solution continua of prime-power dimensions.  The last slot
        is forced by the first n-1 vectors and is checked, not searched.
        """
        vecs = [pool[start]]
        while len(vecs) < self.n:
            if len(vecs) == self.n - 1:
                extension = self._null_completion(vecs, chain_mats)
                if extension is None:
                    return None
                vecs.append(extension)
                break
            extension = None
            for idx in order:
                candidate = pool[idx]
                if all(abs(np.vdot(w, candidate)) < self.options.ortho_tol for w in vecs):
                    extension = candidate
                    break
            if extension is None:
                for attempt in range(2):
                    extension = self._complete_by_projection(chain_mats, vecs,
                                                             pool, depth, attempt)
                    if extension is not None:
                        break
            if extension is None:
                return None
            vecs.append(extension)
        return _closest_unitary(np.column_stack(vecs))

    def _stage_candidates(self, pool: np.ndarray, chain_mats: list[np.ndarray],
                          depth: int) -> list[np.ndarray]:
        """Ranked candidate bases for this stage.

        Ranking is by the number of pool vectors unbiased to the candidate:
        a basis that belongs to the maximal structure keeps every remaining
        basis vector in play, while a dead-end combination suppresses them.
        """
        order = self._degree_order(pool)
        candidates: list[np.ndarray] = []
        survivors: list[int] = []
        attempts = 0
        for start in order:
            if (len(candidates) >= self.candidate_cap
                    or attempts >= 3 * self.candidate_cap
                    or self._out_of_budget()):
                break
            if any(np.abs(np.conj(c.T) @ pool[start]).max() > 1.0 - self.options.ortho_tol
                   for c in candidates):
                continue  # this start already sits inside a candidate
            attempts += 1
            basis = self._grow_basis(pool, order, start, chain_mats, depth)
            if basis is None:
                continue
            if not all(_mutually_unbiased(basis, other, self.options.unbias_tol)
                       for other in chain_mats):
                continue
            if any(_same_basis(basis, c, self.options.ortho_tol) for c in candidates):
                continue
            overlap2 = np.abs(pool.conj() @ basis) ** 2
            unbiased = (np.abs(overlap2 - 1.0 / self.n) < self.options.unbias_tol).all(axis=1)
            candidates.append(basis)
            survivors.append(int(unbiased.sum()))
        ranked = sorted(range(len(candidates)), key=lambda i: (-survivors[i], i))
        return [candidates[i] for i in ranked]

    def _dfs(self, accepted: list[np.ndarray]) -> list[np.ndarray] | None:
        if len(accepted) > len(self.best_prefix):
            self.best_prefix = list(accepted)
        if len(accepted) == self.wanted:
            return accepted
        if self._out_of_budget():
            return None
        self.stage_evals += 1
        chain_mats = self.inputs + accepted
        pool = self._stage_pool(chain_mats, depth=len(accepted))
        if len(accepted) == 0:
            self.stage0_pool_size = max(self.stage0_pool_size, pool.shape[0])
        candidates = self._stage_candidates(pool, chain_mats, len(accepted))
        if not candidates:
            return None
        # first move: take every mutually compatible candidate in one step,
        # which resolves clean structures from a single stage pool
        chunk = [candidates[0]]
        for cand in candidates[1:]:
            if len(chunk) == self.wanted - len(accepted):
                break
            if all(_mutually_unbiased(cand, other, self.options.unbias_tol)
                   for other in chunk):
                chunk.append(cand)
        moves = [chunk] if len(chunk) > 1 else []
        moves += [[cand] for cand in candidates]
        for move in moves:
            result = self._dfs(accepted + move)
            if result is not None:
                return result
            if self._out_of_budget():
                return None
        return None

    def run(self) -> list[np.ndarray]:
        self.best_prefix: list[np.ndarray] = []
        found = self._dfs([])
        if found is not None:
            self.stop_reason = "complete"
            return found
        return self.best_prefix

    def polish(self, basis_mat: np.ndarray) -> np.ndarray:
        """Drive each reconstructed column onto its exact attractor.

        The columns come out of the search with roughly tolerance-level
        error; one unconstrained run against the exact inputs tightens them
        before the final orthonormalization.
        """
        finals, _it, status, _r = self._run(self.inputs, basis_mat.T.copy())
        if (status != kernels.STATUS_CONVERGED).any():
            return basis_mat
        refined = _closest_unitary(finals.T)
        if _same_basis(refined, basis_mat, 1e-3):
            return refined
        return basis_mat


def _search(first: ObservableBasis, second: ObservableBasis,
            options: MubSearchOptions, phase_step: int | None = None) -> MubSet:
    n = first.dim
    search = _BasisSearch(first, second, options, phase_step=phase_step)
    accepted = [search.polish(mat) for mat in search.run()]

    bases = [first, second] + [
        ObservableBasis(f"reconstructed_{i}", mat) for i, mat in enumerate(accepted)
    ]
    report = verify_mub_set(bases, tol=options.unbias_tol)
    complete = len(bases) == n + 1
    if complete:
        note = (f"{n + 1} mutually unbiased bases assembled "
                f"from {search.seeds_run} seeds")
    else:
        note = (f"no {_ordinal(len(bases) + 1)} basis found within budget "
                f"({search.stop_reason}; {search.seeds_run} seeds, "
                f"{search.stage0_pool_size} unbiased partners collected)")
    return MubSet(
        bases=tuple(bases),
        max_unbias_error=report.max_unbias_error,
        max_ortho_error=report.max_ortho_error,
        complete=complete,
        partner_count=search.stage0_pool_size,
        seeds_run=search.seeds_run,
        note=note,
    )


def find_mubs(n: int, options: MubSearchOptions | None = None) -> MubSet:
    """Search for N+1 mutually unbiased bases over computational + Fourier inputs.

    Succeeds for prime N; for composite N the plain Fourier second basis is
    known to cap the reachable set at 3, and a missing basis is reported as
    not found within budget, never as nonexistent.
    """
    if n < 2:
        raise ValueError(f"dimension must be >= 2, got {n}")
    options = options or MubSearchOptions()
    return _search(computational_basis(n), fourier_basis(n), options)


def find_mubs_prime_power(p: int, r: int, options: MubSearchOptions | None = None) -> MubSet:
    """Same search with the tensor-power Fourier second basis (dimension p**r).

    Prime-power structure lives at root-of-unity phases (quarter turns for
    p=2, multiples of 2*pi/p otherwise), so the stage pools include the
    matching phase subgrid alongside random seeds.
    """
    options = options or MubSearchOptions()
    phase_step = 4 if p == 2 else p
    return _search(computational_basis(p ** r), tensor_fourier_basis(p, r),
                   options, phase_step=phase_step)
