"""Pure-numpy batch iteration kernel (fallback backend).

Vectorizes the chained imposition map over all still-active seeds and
retires seeds as they converge, hit a cycle, or exhaust the iteration cap.
The per-step arithmetic mirrors _kernels_numba exactly: project, re-phase,
re-impose moduli, renormalize, gauge-fix.
"""

from __future__ import annotations

import numpy as np

from .core import ZERO_TOL

STATUS_CONVERGED = 0
STATUS_CYCLE = 1
STATUS_MAXITER = 2


def _gauge_rows(psi: np.ndarray) -> None:
    """In-place canonical gauge per row (rows assumed unit norm)."""
    mods = np.abs(psi)
    above = mods > ZERO_TOL
    # every unit row has a component above threshold, so argmax finds the first
    piv = above.argmax(axis=1)
    rows = np.arange(psi.shape[0])
    pivots = psi[rows, piv]
    psi *= (np.conj(pivots) / np.abs(pivots))[:, None]


def _apply_chain(psi: np.ndarray, mats: np.ndarray, conj_mats: np.ndarray,
                 sqrt_targets: np.ndarray) -> np.ndarray:
    """One full chain application on a batch of row states."""
    for j in range(sqrt_targets.shape[0]):
        c = psi @ conj_mats[j]
        mods = np.abs(c)
        thresh = ZERO_TOL * np.linalg.norm(c, axis=1, keepdims=True)
        unit = np.where(mods >= thresh, c / np.where(mods > 0.0, mods, 1.0), 1.0 + 0.0j)
        psi = (sqrt_targets[j] * unit) @ mats[j].T
        psi /= np.linalg.norm(psi, axis=1, keepdims=True)
        _gauge_rows(psi)
    return psi


def _bures_rows(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # rejection form of sqrt(2 - 2|<a,b>|); stable for nearby rays
    ov = np.sum(np.conj(a) * b, axis=1)
    rej = b - ov[:, None] * a
    rej2 = np.sum(rej.real ** 2 + rej.imag ** 2, axis=1)
    return np.sqrt(2.0 * rej2 / (1.0 + np.abs(ov)))


def _residual_rows(psi: np.ndarray, conj_mats: np.ndarray,
                   sqrt_targets: np.ndarray) -> np.ndarray:
    """Distributional distance of each row state to the chain targets."""
    m = sqrt_targets.shape[0]
    acc = np.zeros(psi.shape[0])
    for j in range(m):
        diff = np.abs(psi @ conj_mats[j]) - sqrt_targets[j]
        acc += np.sum(diff * diff, axis=1)
    return np.sqrt(acc / m)


def _project_rows(psi: np.ndarray, projector: np.ndarray) -> np.ndarray:
    """Project each row, renormalize, gauge; rows annihilated by the
    projector are left alone (they can never satisfy the constraint)."""
    out = psi @ projector.T
    norms = np.linalg.norm(out, axis=1, keepdims=True)
    ok = norms[:, 0] > 1e-6
    out[ok] /= norms[ok]
    out[~ok] = psi[~ok]
    _gauge_rows(out)
    return out


def iterate_batch(basis_mats: np.ndarray, sqrt_targets: np.ndarray,
                  seeds: np.ndarray, max_iter: int, tol: float,
                  cycle_window: int, stall_tol: float,
                  projector: np.ndarray | None = None):
    """Iterate the chain on every seed until convergence, cycle, or the cap.

    An optional projector matrix is applied (with renormalization) after
    every chain pass, which restricts the search to states orthogonal to a
    given subspace.  Returns (finals, iterations, status, residual) arrays
    indexed by seed.
    """
    mats = np.ascontiguousarray(basis_mats, dtype=np.complex128)
    conj_mats = np.conj(mats)
    sqrt_targets = np.ascontiguousarray(sqrt_targets, dtype=np.float64)
    n_seeds, dim = seeds.shape

    psi = np.array(seeds, dtype=np.complex128)
    finals = psi.copy()
    iters = np.full(n_seeds, max_iter, dtype=np.int64)
    status = np.full(n_seeds, STATUS_MAXITER, dtype=np.uint8)

    window = np.zeros((cycle_window, n_seeds, dim), dtype=np.complex128)
    window[0] = psi
    filled = 1

    active = np.arange(n_seeds)
    for it in range(1, max_iter + 1):
        cur = psi[active]
        nxt = _apply_chain(cur, mats, conj_mats, sqrt_targets)
        if projector is not None:
            nxt = _project_rows(nxt, projector)
        step = _bures_rows(nxt, cur)

        converged = np.zeros(active.size, dtype=bool)
        small = step < tol
        if small.any():
            converged[small] = _residual_rows(nxt[small], conj_mats, sqrt_targets) < tol

        cycled = np.zeros(active.size, dtype=bool)
        for w in range(min(filled, cycle_window)):
            cycled |= _bures_rows(nxt, window[w, active]) < stall_tol
        cycled &= ~converged

        done = converged | cycled
        if done.any():
            rows = active[done]
            finals[rows] = nxt[done]
            iters[rows] = it
            status[rows] = np.where(converged[done], STATUS_CONVERGED, STATUS_CYCLE)

        psi[active] = nxt
        window[it % cycle_window, active] = nxt
        filled = min(filled + 1, cycle_window)

        active = active[~done]
        if active.size == 0:
            break

    if active.size:
        finals[active] = psi[active]

    residual = _residual_rows(finals, conj_mats, sqrt_targets)
    return finals, iters, status, residual
