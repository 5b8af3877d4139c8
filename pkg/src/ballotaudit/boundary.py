"""Decision boundaries on the sample-count lattice.

A boundary turns threshold rules into integer winner-count cutoffs per
schedule point. Methods with affine log statistics invert the threshold in
closed form; everything else goes through the windowed lattice walk.

Boundaries describe the statistic alone. The minimum sample size gates
decisions downstream (in the DP, the simulator, and sessions), so a
certify_at entry below min_sample is still reported here.
"""
from __future__ import annotations

from typing import Optional, Tuple

import numpy as np

from . import lattice
from . import statistics as st
from .types import (
    DecisionBoundary,
    MethodSpec,
    SamplingScheme,
    StoppingRule,
)

__all__ = ["compute_boundary", "boundary_arrays"]


def boundary_arrays(
    method: MethodSpec,
    rule: StoppingRule,
    scheme: Optional[SamplingScheme],
    windows: Optional[lattice.Windows] = None,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    """Kernel-ready boundaries: (schedule, ymin, yesc, yprov).

    Sentinels: ymin[i] = schedule[i] + 1 when nothing certifies there,
    yesc[i] = -1 when nothing escalates, yprov = max_sample + 2 when proven
    wins are impossible (sampling with replacement).
    """
    sched = np.asarray(rule.schedule, dtype=np.int64)
    thr = st.scaled_threshold(method, rule.upper_threshold)
    lthr = (
        st.scaled_threshold(method, rule.lower_threshold)
        if rule.lower_threshold is not None
        else None
    )
    ev = lattice.evaluator(method, scheme)
    if ev.y_star is not None and windows is None:
        ymin = np.empty(len(sched), dtype=np.int64)
        yesc = np.full(len(sched), -1, dtype=np.int64)
        for i, n in enumerate(sched):
            n = int(n)
            ys = ev.y_star(n, thr)
            ymin[i] = (n + 1) if ys is None else ys
            if lthr is not None:
                yl = ev.y_escalate(n, lthr)
                yesc[i] = -1 if yl is None else yl
    else:
        if windows is None:
            lo = thr if lthr is None else min(thr, lthr)
            hi = thr if lthr is None else max(thr, lthr)
            windows = lattice.cached_windows(method, scheme, rule.schedule, lo, hi)
        ymin = windows.certify_boundary(thr)
        yesc = windows.escalate_boundary(lthr)
    prov = lattice.proven_threshold(scheme, method.null_mean)
    yprov = (rule.max_sample + 2) if prov is None else prov
    return sched, ymin, yesc, yprov


def compute_boundary(
    method: MethodSpec,
    rule: StoppingRule,
    scheme: Optional[SamplingScheme] = None,
) -> DecisionBoundary:
    """Integer decision boundary for every schedule point.

    certify_at[i] is the smallest Y whose statistic strictly exceeds the
    upper threshold at schedule[i] (None if unreachable), escalate_at[i] the
    largest Y strictly below the lower threshold, and proven_at the winner
    count that settles the race outright when sampling without replacement.
    """
    sched, ymin, yesc, yprov = boundary_arrays(method, rule, scheme)
    certify = tuple(
        None if ymin[i] > sched[i] else int(ymin[i]) for i in range(len(sched))
    )
    escalate = None
    if rule.lower_threshold is not None:
        escalate = tuple(
            None if yesc[i] < 0 else int(yesc[i]) for i in range(len(sched))
        )
    prov = lattice.proven_threshold(scheme, method.null_mean)
    return DecisionBoundary(
        schedule=rule.schedule,
        certify_at=certify,
        escalate_at=escalate,
        proven_at=prov,
    )
