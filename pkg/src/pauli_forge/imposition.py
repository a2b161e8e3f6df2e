"""The imposition map, chained application, and the fixed-point iteration engine.

A single imposition step replaces a state's moduli in one observable's
eigenbasis with the square roots of a measured target distribution while
keeping the projection phases; components with negligible projections fall
back to a unit phase factor.  The map is nonlinear, idempotent, and norm
preserving.  Chaining steps for several observables and iterating the chain
drives a seed toward states that reproduce every target distribution.
"""

from __future__ import annotations

import collections
from dataclasses import dataclass

import numpy as np

from .core import (
    ZERO_TOL,
    Distribution,
    ObservableBasis,
    PureState,
    bures_distance,
)

CONVERGED = "converged"
CYCLE_DETECTED = "cycle_detected"
MAX_ITERATIONS = "max_iterations"

STATUS_NAMES = (CONVERGED, CYCLE_DETECTED, MAX_ITERATIONS)


@dataclass(frozen=True, eq=False)
class ImpositionStep:
    """One observable basis paired with the target distribution to impose."""

    basis: ObservableBasis
    target: Distribution

    def __post_init__(self):
        if self.basis.dim != self.target.dim:
            raise ValueError(f"dimension mismatch: basis {self.basis.dim}, "
                             f"target {self.target.dim}")

    @property
    def dim(self) -> int:
        return self.basis.dim


@dataclass(frozen=True, eq=False)
class ImpositionChain:
    """Ordered steps applied first-listed-first; composition is non-commutative."""

    steps: tuple[ImpositionStep, ...]

    def __post_init__(self):
        steps = tuple(self.steps)
        if len(steps) < 1:
            raise ValueError("chain needs at least one step")
        dims = {s.dim for s in steps}
        if len(dims) != 1:
            raise ValueError(f"steps disagree on dimension: {sorted(dims)}")
        object.__setattr__(self, "steps", steps)

    @property
    def dim(self) -> int:
        return self.steps[0].dim

    def __len__(self) -> int:
        return len(self.steps)

    def basis_matrices(self) -> np.ndarray:
        return np.stack([s.basis.matrix for s in self.steps])

    def sqrt_targets(self) -> np.ndarray:
        return np.stack([s.target.sqrt() for s in self.steps])


@dataclass(frozen=True)
class IterationConfig:
    """Stopping rules for the iteration engine.

    `tol` governs convergence (residual and step both below it).  `stall_tol`
    governs recurrence detection and must sit well below `tol`: a slowly
    contracting run passes through step sizes between the two without being
    mistaken for a stalled fixed point, while a genuine non-matching fixed
    point or short cycle pins the iterates to machine scale and is caught.
    """

    max_iter: int
    tol: float = 1e-10
    cycle_window: int = 8
    stall_tol: float = 1e-13

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if not self.tol > 0.0:
            raise ValueError(f"tol must be > 0, got {self.tol}")
        if self.cycle_window < 1:
            raise ValueError(f"cycle_window must be >= 1, got {self.cycle_window}")
        if not 0.0 < self.stall_tol <= self.tol:
            raise ValueError(f"stall_tol must be in (0, tol], got {self.stall_tol}")


def default_config(chain: ImpositionChain, tol: float = 1e-10) -> IterationConfig:
    """Iteration cap scaled with problem size: 1000 * dim * chain length."""
    return IterationConfig(max_iter=1000 * chain.dim * len(chain), tol=tol)


@dataclass(frozen=True, eq=False)
class IterationResult:
    final_state: PureState
    iterations: int
    status: str
    residual: float


def impose(step: ImpositionStep, psi: PureState) -> PureState:
    """Impose the step's target moduli on psi in the step's basis, keeping phases.

    Projections with modulus below ZERO_TOL * norm keep a unit factor instead
    of their (undefined) phase.  The output has unit norm, canonical gauge,
    and exactly the target distribution in the step's basis.
    """
    coeff = step.basis.project(psi)
    mods = np.abs(coeff)
    thresh = ZERO_TOL * np.linalg.norm(coeff)
    unit = np.where(mods >= thresh, coeff / np.where(mods > 0.0, mods, 1.0), 1.0 + 0.0j)
    return PureState.from_vector(step.basis.matrix @ (step.target.sqrt() * unit))


def impose_chain(chain: ImpositionChain, psi: PureState) -> PureState:
    """Apply every step of the chain in listed order."""
    for step in chain.steps:
        psi = impose(step, psi)
    return psi


def chain_residual(chain: ImpositionChain, psi: PureState) -> float:
    """Distributional distance between psi's outcome distributions and the targets."""
    acc = 0.0
    for step in chain.steps:
        diff = np.abs(step.basis.project(psi)) - step.target.sqrt()
        acc += float(np.sum(diff * diff))
    return float(np.sqrt(acc / len(chain.steps)))


def max_probability_mismatch(chain: ImpositionChain, psi: PureState) -> float:
    """Largest absolute deviation between psi's outcome probabilities and the targets."""
    worst = 0.0
    for step in chain.steps:
        probs = np.abs(step.basis.project(psi)) ** 2
        worst = max(worst, float(np.abs(probs - step.target.probs).max()))
    return worst


def iterate(chain: ImpositionChain, seed_state: PureState,
            config: IterationConfig | None = None,
            trace: list | None = None) -> IterationResult:
    """Iterate the chain from a seed until convergence, a cycle, or the cap.

    Convergence needs both a sub-tol distributional residual against the
    targets and a sub-tol Bures step between consecutive iterates.  A
    recurrence within the last `cycle_window` iterates (at stall_tol, see
    IterationConfig) without convergence is reported as a cycle; a stalled
    fixed point that misses the targets shows up as a 1-cycle, which is how
    non-partner attractors surface.  When `trace` is given it receives one
    (iteration, residual, step) row per iteration.
    """
    if seed_state.dim != chain.dim:
        raise ValueError(f"dimension mismatch: chain {chain.dim}, seed {seed_state.dim}")
    if config is None:
        config = default_config(chain)

    psi = seed_state
    window = collections.deque([seed_state], maxlen=config.cycle_window)
    status = MAX_ITERATIONS
    iterations = 0

    for it in range(1, config.max_iter + 1):
        nxt = impose_chain(chain, psi)
        step = bures_distance(nxt, psi)
        resid = chain_residual(chain, nxt)
        if trace is not None:
            trace.append((it, resid, step))
        iterations = it
        psi = nxt
        if step < config.tol and resid < config.tol:
            status = CONVERGED
            break
        if any(bures_distance(nxt, past) < config.stall_tol for past in window):
            status = CYCLE_DETECTED
            break
        window.append(nxt)

    return IterationResult(final_state=psi, iterations=iterations, status=status,
                           residual=chain_residual(chain, psi))


def is_fixed_point(chain: ImpositionChain, psi: PureState, tol: float) -> bool:
    """Whether one full chain application moves psi by less than tol (Bures)."""
    return bures_distance(impose_chain(chain, psi), psi) < tol


def is_partner(chain: ImpositionChain, psi: PureState, tol: float) -> bool:
    """Whether psi is held fixed by every step individually.

    Equivalent to psi's distribution matching every step's target within tol
    (Hellinger, per basis); strictly stronger than is_fixed_point, which
    also accepts states only the full composition leaves in place.
    """
    for step in chain.steps:
        diff = np.abs(step.basis.project(psi)) - step.target.sqrt()
        if float(np.sqrt(np.sum(diff * diff))) >= tol:
            return False
    return True
