"""Basin-of-attraction maps over the two-phase seed torus (dimension 3).

In dimension 3 a seed is fixed, up to quantities the first imposition pass
erases anyway, by two phases: the full basin structure fits in a plane.
Each grid cell runs the iteration and is labeled by the partner its seed
converges to; stalled non-partner fixed points and unresolved cells get
sentinel labels, and per-label area fractions come out alongside.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import TWO_PI, PureState
from .imposition import IterationConfig, default_config, is_fixed_point
from .partner_search import (
    PartnerSet,
    ReconstructionProblem,
    bures_to_many,
    enumerate_partners,
    seeds_from_phases,
)

LABEL_UNDESIRABLE = -1
LABEL_UNRESOLVED = -2

# partner label i renders as PALETTE[i % 12]
PALETTE = (
    (230, 25, 75), (60, 180, 75), (255, 225, 25), (0, 130, 200),
    (245, 130, 48), (70, 240, 240), (240, 50, 230), (250, 190, 212),
    (0, 128, 128), (220, 190, 255), (170, 110, 40), (128, 128, 0),
)
UNDESIRABLE_COLOR = (128, 0, 255)
UNRESOLVED_COLOR = (0, 0, 0)

# runs leaving more than this fraction of cells unresolved get flagged
UNRESOLVED_CELL_LIMIT = 0.005


@dataclass(frozen=True, eq=False)
class BasinGrid:
    """Cell labels over the phase torus plus per-label area fractions.

    labels[i, j] belongs to the cell centered at (phase_axes[0][i],
    phase_axes[1][j]); non-negative labels index into `partners`.
    """

    resolution: int
    labels: np.ndarray
    phase_axes: tuple[np.ndarray, np.ndarray]
    areas: dict[int, float]
    residuals: np.ndarray
    iterations: np.ndarray
    partners: tuple[PureState, ...]

    @property
    def unresolved_fraction(self) -> float:
        return self.areas.get(LABEL_UNRESOLVED, 0.0)

    @property
    def flagged(self) -> bool:
        return self.unresolved_fraction > UNRESOLVED_CELL_LIMIT


def map_basins(problem: ReconstructionProblem, resolution: int,
               config: IterationConfig | None = None,
               dedup_tol: float = 1e-6,
               reference: PartnerSet | None = None) -> BasinGrid:
    """Label every cell of the phase torus by the partner its seed reaches.

    Seeds sit at cell centers (half-cell offset keeps them off the symmetry
    axes, whose orbits run straight along basin borders).  `reference`
    overrides the partner set to label against; by default it is enumerated
    from the same problem, so grid labels index exactly that PartnerSet.
    """
    if problem.dim != 3:
        raise ValueError("basin maps need dimension 3 (a two-phase seed plane); "
                         f"got dimension {problem.dim}")
    if resolution < 8:
        raise ValueError(f"resolution must be >= 8, got {resolution}")
    chain = problem.to_chain()
    if config is None:
        config = default_config(chain)
    if reference is None:
        reference = enumerate_partners(problem, config=config, dedup_tol=dedup_tol)

    axis = (np.arange(resolution) + 0.5) * (TWO_PI / resolution)
    a1, a2 = np.meshgrid(axis, axis, indexing="ij")
    phases = np.column_stack([a1.ravel(), a2.ravel()])
    seeds = seeds_from_phases(problem, phases)

    finals, iters, status, resid = kernels.iterate_batch(
        chain.basis_matrices(), chain.sqrt_targets(), seeds,
        config.max_iter, config.tol, config.cycle_window, config.stall_tol)

    labels = np.full(seeds.shape[0], LABEL_UNRESOLVED, dtype=np.int32)
    if reference.partners:
        partner_mat = np.stack([p.amplitudes for p in reference.partners])
        converged = np.flatnonzero(status == kernels.STATUS_CONVERGED)
        for s in converged:
            dist = bures_to_many(partner_mat, finals[s])
            best = int(np.argmin(dist))
            if dist[best] < dedup_tol:
                labels[s] = best

    fixed_tol = 10.0 * config.tol
    for s in np.flatnonzero(status == kernels.STATUS_CYCLE):
        state = PureState.from_vector(finals[s])
        if is_fixed_point(chain, state, fixed_tol):
            labels[s] = LABEL_UNDESIRABLE

    cells = resolution * resolution
    values, counts = np.unique(labels, return_counts=True)
    areas = {int(v): float(c) / cells for v, c in zip(values, counts)}

    return BasinGrid(
        resolution=resolution,
        labels=labels.reshape(resolution, resolution),
        phase_axes=(axis.copy(), axis.copy()),
        areas=areas,
        residuals=resid.reshape(resolution, resolution),
        iterations=iters.reshape(resolution, resolution),
        partners=reference.partners,
    )


def export_basin_csv(grid: BasinGrid, path) -> None:
    """Rows alpha1,alpha2,label,residual,iterations in row-major cell order."""
    r = grid.resolution
    with open(path, "w") as fh:
        fh.write("alpha1,alpha2,label,residual,iterations\n")
        for i in range(r):
            for j in range(r):
                fh.write(f"{grid.phase_axes[0][i]:.17g},{grid.phase_axes[1][j]:.17g},"
                         f"{grid.labels[i, j]},{grid.residuals[i, j]:.17g},"
                         f"{grid.iterations[i, j]}\n")


def export_basin_image(grid: BasinGrid, path) -> None:
    """Write the label grid as a binary PPM (P6).

    Partner i maps to PALETTE[i % 12], undesirable cells to violet
    (128, 0, 255), unresolved cells to black.  Pixel x = alpha1 index,
    pixel y = alpha2 index with y = 0 (top row) at alpha2 = 0.
    """
    r = grid.resolution
    img = np.zeros((r, r, 3), dtype=np.uint8)
    palette = np.array(PALETTE, dtype=np.uint8)
    for i in range(r):
        for j in range(r):
            label = grid.labels[i, j]
            if label == LABEL_UNRESOLVED:
                color = UNRESOLVED_COLOR
            elif label == LABEL_UNDESIRABLE:
                color = UNDESIRABLE_COLOR
            else:
                color = palette[label % len(PALETTE)]
            img[j, i] = color
    with open(path, "wb") as fh:
        fh.write(b"P6\n%d %d\n255\n" % (r, r))
        fh.write(img.tobytes())
