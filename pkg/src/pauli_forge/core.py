"""Complex-ray states, observable bases, distributions, and the metrics.

States are rays in C^N: unit-norm amplitude vectors with the global phase
pinned by a canonical gauge (the first non-negligible component is made real
and non-negative), so that equal rays compare equal component-wise.  All
types are immutable and all operations are pure functions; everything here
is safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# A component counts as zero when its modulus falls below this fraction of
# the vector norm.  Both the gauge rule and the imposition fallback use it.
ZERO_TOL = 1e-12

NORM_TOL = 1e-12
ORTHO_TOL = 1e-10
PROB_TOL = 1e-10

TWO_PI = 2.0 * np.pi


def canonical_gauge(vec: np.ndarray) -> np.ndarray:
    """Rotate the global phase so the first non-negligible component is real >= 0.

    The zero vector is returned unchanged; any other vector always has a
    component above the threshold ZERO_TOL * norm.
    """
    vec = np.asarray(vec, dtype=np.complex128)
    nrm = np.linalg.norm(vec)
    if nrm == 0.0:
        return vec.copy()
    thresh = ZERO_TOL * nrm
    mods = np.abs(vec)
    idx = np.flatnonzero(mods > thresh)
    pivot = vec[idx[0]]
    return vec * (np.conj(pivot) / abs(pivot))


@dataclass(frozen=True, eq=False)
class PureState:
    """Unit-norm complex amplitude vector held in canonical gauge."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128)
        if amps.ndim != 1 or amps.size < 2:
            raise ValueError("amplitudes must be a 1-d vector of length >= 2")
        nrm = np.linalg.norm(amps)
        if abs(nrm - 1.0) > NORM_TOL:
            raise ValueError(f"state norm {nrm:.15g} is not 1 within {NORM_TOL:g}")
        amps = canonical_gauge(amps)
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_vector(cls, vec) -> "PureState":
        """Normalize an arbitrary non-zero vector into a state."""
        vec = np.asarray(vec, dtype=np.complex128)
        nrm = np.linalg.norm(vec)
        if nrm == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return cls(vec / nrm)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def overlap(self, other: "PureState") -> complex:
        """Inner product <self, other>."""
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def conjugate(self) -> "PureState":
        """State with complex-conjugated amplitudes (re-gauged)."""
        return PureState(np.conj(self.amplitudes))


@dataclass(frozen=True, eq=False)
class Distribution:
    """Probability vector over the N outcomes of one observable."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=np.float64)
        if p.ndim != 1 or p.size < 2:
            raise ValueError("probs must be a 1-d vector of length >= 2")
        if p.min() < -PROB_TOL or p.max() > 1.0 + PROB_TOL:
            raise ValueError(f"probabilities must lie in [0, 1]; got range "
                             f"[{p.min():.15g}, {p.max():.15g}]")
        total = p.sum()
        if abs(total - 1.0) > PROB_TOL:
            raise ValueError(f"probabilities sum to {total:.15g}, not 1 within {PROB_TOL:g}")
        p = np.clip(p, 0.0, 1.0)
        p.flags.writeable = False
        object.__setattr__(self, "probs", p)

    @classmethod
    def flat(cls, n: int) -> "Distribution":
        """All outcomes equally likely."""
        return cls(np.full(n, 1.0 / n))

    @classmethod
    def sharp(cls, n: int, k: int) -> "Distribution":
        """All weight on outcome k."""
        p = np.zeros(n)
        p[k] = 1.0
        return cls(p)

    @property
    def dim(self) -> int:
        return self.probs.size

    def sqrt(self) -> np.ndarray:
        return np.sqrt(self.probs)


@dataclass(frozen=True, eq=False)
class ObservableBasis:
    """Orthonormal basis of N complex vectors: the eigenvectors of one observable.

    Stored as the columns of a unitary matrix.  Columns are gauge-fixed at
    construction so that loaded and generated bases behave identically in
    the degenerate fallback paths of the imposition map.
    """

    label: str
    matrix: np.ndarray

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=np.complex128)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] < 2:
            raise ValueError("basis matrix must be square with dimension >= 2")
        gram = np.conj(mat.T) @ mat
        err = np.abs(gram - np.eye(mat.shape[0])).max()
        if err > ORTHO_TOL:
            raise ValueError(f"basis {self.label!r} is not orthonormal "
                             f"(max Gram deviation {err:.3e})")
        for k in range(mat.shape[1]):
            mat[:, k] = canonical_gauge(mat[:, k])
        mat.flags.writeable = False
        object.__setattr__(self, "matrix", mat)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def vector(self, k: int) -> PureState:
        return PureState(self.matrix[:, k])

    @property
    def vectors(self) -> list[PureState]:
        return [self.vector(k) for k in range(self.dim)]

    def project(self, state: PureState) -> np.ndarray:
        """Coefficients <basis_k, state> for every k."""
        if state.dim != self.dim:
            raise ValueError(f"dimension mismatch: basis {self.dim}, state {state.dim}")
        return np.conj(self.matrix.T) @ state.amplitudes

    def distribution(self, state: PureState) -> Distribution:
        """Outcome probabilities of `state` for this observable."""
        return Distribution(np.abs(self.project(state)) ** 2)


@dataclass(frozen=True, eq=False)
class PhaseSeed:
    """The free phases of a seed state relative to a reference basis.

    Length N-1: the first component's phase is conventionally zero, so the
    seed torus has N-1 coordinates.  Phases are stored modulo 2*pi.
    """

    phases: np.ndarray

    def __post_init__(self):
        ph = np.mod(np.array(self.phases, dtype=np.float64), TWO_PI)
        if ph.ndim != 1 or ph.size < 1:
            raise ValueError("phases must be a 1-d vector of length >= 1")
        ph.flags.writeable = False
        object.__setattr__(self, "phases", ph)

    @property
    def dim(self) -> int:
        """Dimension of the state the seed describes (one more than the phase count)."""
        return self.phases.size + 1


# --------------------------------------------------------------------------
# metrics

def bures_distance(a: PureState, b: PureState) -> float:
    """Ray distance sqrt(2 - 2|<a,b>|): global-phase invariant, range [0, sqrt(2)].

    Evaluated as 2|b - <a,b>a|^2 / (1 + |<a,b>|) under the root, which is the
    same quantity but keeps full precision for nearby rays, where 1 - |<a,b>|
    itself underflows double rounding (at separations below ~1e-8).
    """
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    av = a.amplitudes
    bv = b.amplitudes
    ov = np.vdot(av, bv)
    rej = bv - ov * av
    rej2 = np.real(np.vdot(rej, rej))
    return float(np.sqrt(2.0 * rej2 / (1.0 + abs(ov))))


def hellinger_distance(basis: ObservableBasis, a: PureState, b: PureState) -> float:
    """Distance between the outcome distributions of two states for one observable.

    sqrt(sum_k (sqrt(p_k) - sqrt(q_k))^2) with p, q the squared projection
    moduli of the two states onto the basis.
    """
    ra = np.abs(basis.project(a))
    rb = np.abs(basis.project(b))
    return float(np.sqrt(np.sum((ra - rb) ** 2)))


def distributional_distance(bases: list[ObservableBasis], a: PureState, b: PureState) -> float:
    """Root mean square of the per-observable Hellinger distances."""
    if len(bases) == 0:
        raise ValueError("need at least one basis")
    sq = [hellinger_distance(basis, a, b) ** 2 for basis in bases]
    return float(np.sqrt(np.mean(sq)))


# --------------------------------------------------------------------------
# canonical bases

def computational_basis(n: int) -> ObservableBasis:
    """Identity-matrix columns."""
    if n < 2:
        raise ValueError(f"dimension must be >= 2, got {n}")
    return ObservableBasis("computational", np.eye(n, dtype=np.complex128))


def fourier_basis(n: int) -> ObservableBasis:
    """Column p holds (1/sqrt(n)) exp(2i pi k p / n), k = 0..n-1.

    Mutually unbiased to the computational basis: every squared overlap
    between the two bases equals 1/n.
    """
    if n < 2:
        raise ValueError(f"dimension must be >= 2, got {n}")
    k = np.arange(n)
    mat = np.exp(2j * np.pi * np.outer(k, k) / n) / np.sqrt(n)
    return ObservableBasis("fourier", mat)


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    for d in range(2, int(n ** 0.5) + 1):
        if n % d == 0:
            return False
    return True


def tensor_fourier_basis(p: int, r: int) -> ObservableBasis:
    """r-fold tensor power of the dimension-p Fourier basis (dimension p**r).

    For prime-power dimensions this is the second basis that admits a full
    set of mutually unbiased partners, unlike the plain Fourier basis.
    """
    if not is_prime(p):
        raise ValueError(f"p={p} is not prime")
    if r < 1:
        raise ValueError(f"r must be >= 1, got {r}")
    factor = fourier_basis(p).matrix
    mat = factor
    for _ in range(r - 1):
        mat = np.kron(mat, factor)
    return ObservableBasis(f"tensor_fourier_p{p}_r{r}", mat)


def state_from_seed(base_distribution: Distribution, seed: PhaseSeed,
                    basis: ObservableBasis) -> PureState:
    """Assemble sum_k sqrt(p_k) exp(i a_k) basis_k with the first phase fixed to 0."""
    n = basis.dim
    if base_distribution.dim != n or seed.dim != n:
        raise ValueError(f"dimension mismatch: basis {n}, distribution "
                         f"{base_distribution.dim}, seed {seed.dim}")
    phases = np.concatenate(([0.0], seed.phases))
    coeff = base_distribution.sqrt() * np.exp(1j * phases)
    return PureState.from_vector(basis.matrix @ coeff)


def random_state(n: int, rng: np.random.Generator) -> PureState:
    """Haar-random ray in dimension n."""
    z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return PureState.from_vector(z)
