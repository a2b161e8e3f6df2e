"""Numba-jitted batch iteration kernel (default backend).

One jitted loop per seed, parallelized over seeds with prange; every seed
writes only its own output slots, so results do not depend on scheduling.
Matches the arithmetic of _kernels_numpy step for step.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

from .core import ZERO_TOL

STATUS_CONVERGED = 0
STATUS_CYCLE = 1
STATUS_MAXITER = 2


@njit(cache=True)
def _gauge_inplace(v):
    n = v.size
    nrm2 = 0.0
    for i in range(n):
        nrm2 += v[i].real * v[i].real + v[i].imag * v[i].imag
    thresh = ZERO_TOL * np.sqrt(nrm2)
    for i in range(n):
        mod = abs(v[i])
        if mod > thresh:
            phase = v[i].conjugate() / mod
            for k in range(n):
                v[k] = v[k] * phase
            return


@njit(cache=True)
def _apply_chain(mats, sqrt_targets, psi, proj, out):
    """One full chain application; psi is updated in place."""
    m = sqrt_targets.shape[0]
    n = psi.size
    for j in range(m):
        cnorm2 = 0.0
        for k in range(n):
            acc = 0.0 + 0.0j
            for i in range(n):
                acc += mats[j, i, k].conjugate() * psi[i]
            proj[k] = acc
            cnorm2 += acc.real * acc.real + acc.imag * acc.imag
        thresh = ZERO_TOL * np.sqrt(cnorm2)
        for i in range(n):
            out[i] = 0.0 + 0.0j
        for k in range(n):
            mod = abs(proj[k])
            if mod >= thresh and mod > 0.0:
                unit = proj[k] / mod
            else:
                unit = 1.0 + 0.0j
            w = sqrt_targets[j, k] * unit
            for i in range(n):
                out[i] += w * mats[j, i, k]
        nrm2 = 0.0
        for i in range(n):
            nrm2 += out[i].real * out[i].real + out[i].imag * out[i].imag
        inv = 1.0 / np.sqrt(nrm2)
        for i in range(n):
            psi[i] = out[i] * inv
        _gauge_inplace(psi)


@njit(cache=True)
def _bures(a, b):
    # rejection form of sqrt(2 - 2|<a,b>|); stable for nearby rays
    re = 0.0
    im = 0.0
    for i in range(a.size):
        z = a[i].conjugate() * b[i]
        re += z.real
        im += z.imag
    ov = complex(re, im)
    rej2 = 0.0
    for i in range(a.size):
        r = b[i] - ov * a[i]
        rej2 += r.real * r.real + r.imag * r.imag
    return np.sqrt(2.0 * rej2 / (1.0 + abs(ov)))


@njit(cache=True)
def _residual(mats, sqrt_targets, psi):
    m = sqrt_targets.shape[0]
    n = psi.size
    acc = 0.0
    for j in range(m):
        for k in range(n):
            c = 0.0 + 0.0j
            for i in range(n):
                c += mats[j, i, k].conjugate() * psi[i]
            diff = abs(c) - sqrt_targets[j, k]
            acc += diff * diff
    return np.sqrt(acc / m)


@njit(cache=True)
def _project_inplace(projector, psi, out):
    """Project, renormalize, gauge; left unchanged when nearly annihilated."""
    n = psi.size
    nrm2 = 0.0
    for i in range(n):
        acc = 0.0 + 0.0j
        for j in range(n):
            acc += projector[i, j] * psi[j]
        out[i] = acc
        nrm2 += acc.real * acc.real + acc.imag * acc.imag
    nrm = np.sqrt(nrm2)
    if nrm <= 1e-6:
        return
    inv = 1.0 / nrm
    for i in range(n):
        psi[i] = out[i] * inv
    _gauge_inplace(psi)


@njit(cache=True, parallel=True)
def _iterate_batch(mats, sqrt_targets, seeds, max_iter, tol, cycle_window,
                   stall_tol, use_projector, projector):
    n_seeds, dim = seeds.shape
    finals = np.empty((n_seeds, dim), dtype=np.complex128)
    iters = np.full(n_seeds, max_iter, dtype=np.int64)
    status = np.full(n_seeds, STATUS_MAXITER, dtype=np.uint8)
    residual = np.zeros(n_seeds, dtype=np.float64)

    for s in prange(n_seeds):
        psi = seeds[s].copy()
        prev = np.empty(dim, dtype=np.complex128)
        proj = np.empty(dim, dtype=np.complex128)
        out = np.empty(dim, dtype=np.complex128)
        window = np.empty((cycle_window, dim), dtype=np.complex128)
        window[0] = psi
        filled = 1

        for it in range(1, max_iter + 1):
            for i in range(dim):
                prev[i] = psi[i]
            _apply_chain(mats, sqrt_targets, psi, proj, out)
            if use_projector:
                _project_inplace(projector, psi, out)
            step = _bures(psi, prev)

            if step < tol and _residual(mats, sqrt_targets, psi) < tol:
                status[s] = STATUS_CONVERGED
                iters[s] = it
                break

            hit = False
            for w in range(min(filled, cycle_window)):
                if _bures(psi, window[w]) < stall_tol:
                    hit = True
                    break
            if hit:
                status[s] = STATUS_CYCLE
                iters[s] = it
                break

            window[it % cycle_window] = psi
            if filled < cycle_window:
                filled += 1

        finals[s] = psi
        residual[s] = _residual(mats, sqrt_targets, psi)

    return finals, iters, status, residual


def iterate_batch(basis_mats: np.ndarray, sqrt_targets: np.ndarray,
                  seeds: np.ndarray, max_iter: int, tol: float,
                  cycle_window: int, stall_tol: float,
                  projector: np.ndarray | None = None):
    """Iterate the chain on every seed until convergence, cycle, or the cap.

    An optional projector matrix is applied (with renormalization) after
    every chain pass.  Returns (finals, iterations, status, residual)
    arrays indexed by seed.
    """
    mats = np.ascontiguousarray(basis_mats, dtype=np.complex128)
    targets = np.ascontiguousarray(sqrt_targets, dtype=np.float64)
    seeds = np.ascontiguousarray(seeds, dtype=np.complex128)
    use_projector = projector is not None
    if projector is None:
        projector = np.eye(seeds.shape[1], dtype=np.complex128)
    projector = np.ascontiguousarray(projector, dtype=np.complex128)
    return _iterate_batch(mats, targets, seeds, int(max_iter), float(tol),
                          int(cycle_window), float(stall_tol), use_projector,
                          projector)
