"""Backend dispatch for the hot iteration kernels.

Callers pass raw arrays: basis matrices stacked (m, N, N) with basis vectors
as columns, square-rooted targets (m, N), and seed states (S, N).
"""

from __future__ import annotations

import numpy as np

from . import backend
from . import _kernels_numpy

STATUS_CONVERGED = _kernels_numpy.STATUS_CONVERGED
STATUS_CYCLE = _kernels_numpy.STATUS_CYCLE
STATUS_MAXITER = _kernels_numpy.STATUS_MAXITER


def iterate_batch(basis_mats: np.ndarray, sqrt_targets: np.ndarray,
                  seeds: np.ndarray, max_iter: int, tol: float,
                  cycle_window: int, stall_tol: float,
                  projector: np.ndarray | None = None):
    """Run the chained-imposition iteration on a batch of seeds.

    `projector`, when given, restricts the search to its range by projecting
    and renormalizing after every chain pass.  Returns (finals, iterations,
    status, residual) arrays indexed by seed; status uses the STATUS_*
    codes above.
    """
    if backend.active_backend() == "numba":
        from . import _kernels_numba

        backend.apply_thread_cap()
        return _kernels_numba.iterate_batch(basis_mats, sqrt_targets, seeds,
                                            max_iter, tol, cycle_window,
                                            stall_tol, projector)
    return _kernels_numpy.iterate_batch(basis_mats, sqrt_targets, seeds,
                                        max_iter, tol, cycle_window,
                                        stall_tol, projector)
