"""Backend selection for the hot kernels.

Three kernels dominate runtime: the beta-binomial log-odds lattice, the
forward DP, and the fixed-statistic Monte Carlo loop. Each exists in a pure
numpy form and a numba-compiled form with identical semantics.

Selection order: ballotaudit.set_backend() if called, else the
BALLOTAUDIT_BACKEND environment variable (numba | numpy | auto), else auto.
Auto prefers numba when it imports cleanly.
"""
from __future__ import annotations

import os
from typing import Optional

_ENV_VAR = "BALLOTAUDIT_BACKEND"
_forced: Optional[str] = None
_numba_mod = None
_numba_failed = False


def _load_numba():
    global _numba_mod, _numba_failed
    if _numba_mod is None and not _numba_failed:
        try:
            from . import _numbaimpl

            _numba_mod = _numbaimpl
        except Exception:
            _numba_failed = True
    return _numba_mod


def set_backend(name: Optional[str]) -> None:
    """Force a backend for this process: 'numba', 'numpy', 'auto', or None.

    None restores environment-variable control.
    """
    global _forced
    if name not in (None, "numba", "numpy", "auto"):
        raise ValueError(f"unknown backend {name!r}")
    _forced = name


def requested_backend() -> str:
    if _forced is not None:
        return _forced
    return os.environ.get(_ENV_VAR, "auto").strip().lower() or "auto"


def active_backend() -> str:
    """The backend that kernel calls will actually use right now."""
    req = requested_backend()
    if req == "numpy":
        return "numpy"
    if req == "numba":
        if _load_numba() is None:
            raise RuntimeError(
                "BALLOTAUDIT_BACKEND=numba but numba is not importable"
            )
        return "numba"
    return "numba" if _load_numba() is not None else "numpy"


def _impl():
    if active_backend() == "numba":
        return _numba_mod
    from . import _numpyimpl

    return _numpyimpl


def bb_log_odds(ns, ys, total, a, b, null_count):
    import numpy as np

    ns = np.ascontiguousarray(ns, dtype=np.int64)
    ys = np.ascontiguousarray(ys, dtype=np.int64)
    return _impl().bb_log_odds(
        ns, ys, int(total), float(a), float(b), int(null_count)
    )


def dp_run(mass, start_n, without, N, T, p, m, n_min, sched, ymin, yesc, yprov):
    import numpy as np

    sched = np.ascontiguousarray(sched, dtype=np.int64)
    ymin = np.ascontiguousarray(ymin, dtype=np.int64)
    yesc = np.ascontiguousarray(yesc, dtype=np.int64)
    return _impl().dp_run(
        mass,
        int(start_n),
        bool(without),
        int(N),
        float(T),
        float(p),
        int(m),
        int(n_min),
        sched,
        ymin,
        yesc,
        int(yprov),
    )


def mc_fixed(u, without, N, T, p, m, n_min, sched, ymin, yesc, yprov):
    import numpy as np

    sched = np.ascontiguousarray(sched, dtype=np.int64)
    ymin = np.ascontiguousarray(ymin, dtype=np.int64)
    yesc = np.ascontiguousarray(yesc, dtype=np.int64)
    return _impl().mc_fixed(
        u,
        bool(without),
        int(N),
        float(T),
        float(p),
        int(m),
        int(n_min),
        sched,
        ymin,
        yesc,
        int(yprov),
    )
