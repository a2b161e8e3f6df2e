"""Selection of the iteration-kernel backend and worker-thread cap.

Two interchangeable kernel implementations exist: numba-jitted per-seed
loops and a vectorized pure-numpy fallback.  The environment variable
PAULI_FORGE_BACKEND picks one ("numba", "numpy", or "auto"; default auto =
numba when importable).  PAULI_FORGE_THREADS caps worker threads, same as
the CLI --threads flag; it only affects the numba backend, whose seed loop
is parallel.
"""

from __future__ import annotations

import os

_forced_backend: str | None = None
_thread_count: int | None = None


def numba_available() -> bool:
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def active_backend() -> str:
    """Resolve the backend name: forced setting > env var > auto-detect."""
    name = _forced_backend or os.environ.get("PAULI_FORGE_BACKEND", "auto").lower()
    if name == "auto":
        return "numba" if numba_available() else "numpy"
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}; use 'numba', 'numpy' or 'auto'")
    if name == "numba" and not numba_available():
        raise RuntimeError("backend 'numba' requested but numba is not importable")
    return name


def set_backend(name: str | None) -> None:
    """Force a backend for this process (None restores env/auto selection)."""
    global _forced_backend
    if name is not None and name not in ("numba", "numpy", "auto"):
        raise ValueError(f"unknown backend {name!r}")
    _forced_backend = None if name in (None, "auto") else name


def thread_count() -> int:
    """Resolved worker-thread cap: explicit setting > env var > cpu count."""
    if _thread_count is not None:
        return _thread_count
    env = os.environ.get("PAULI_FORGE_THREADS")
    if env:
        try:
            k = int(env)
        except ValueError as exc:
            raise ValueError(f"PAULI_FORGE_THREADS={env!r} is not an integer") from exc
        if k >= 1:
            return k
    return os.cpu_count() or 1


def set_thread_count(k: int | None) -> None:
    global _thread_count
    if k is not None and k < 1:
        raise ValueError(f"thread count must be >= 1, got {k}")
    _thread_count = k


def apply_thread_cap() -> None:
    """Push the resolved thread cap into numba's scheduler (no-op without numba)."""
    if not numba_available():
        return
    import numba

    limit = numba.config.NUMBA_NUM_THREADS
    numba.set_num_threads(max(1, min(thread_count(), limit)))
