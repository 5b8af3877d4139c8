"""Reference numpy implementations of the hot kernels.

The numba module mirrors these signatures exactly. Keep the arithmetic
expressions identical between the two: the Monte Carlo kernels are required
to produce bit-identical trial outcomes from the same uniforms.
"""
from __future__ import annotations

import math

import numpy as np

# sentinel conventions shared with the numba mirror:
#   certify threshold "none"  -> any value > n (use m + 2)
#   escalate threshold "none" -> -1
#   proven threshold "none"   -> m + 2


def bb_log_odds(ns, ys, total, a, b, null_count):
    """Log posterior odds of H1 for a beta-binomial prior on the tally.

    For each query (n, Y): the unseen winner count U = T - Y follows a
    beta-binomial(total - n, a + Y, b + n - Y) posterior; the upset
    probability is P(U <= null_count - Y). Returns ln((1-u)/u), with +inf
    when H0 is impossible and -inf when H1 is.
    """
    ns = np.asarray(ns, dtype=np.int64)
    ys = np.asarray(ys, dtype=np.int64)
    out = np.empty(ns.shape, dtype=np.float64)
    for i in range(ns.shape[0]):
        out[i] = _bb_log_odds_point(int(ns[i]), int(ys[i]), total, a, b, null_count)
    return out


def _bb_log_odds_point(n, y, total, a, b, null_count):
    R = total - n
    K = null_count - y
    if K < 0:
        return math.inf
    if K >= R:
        return -math.inf
    al = a + y
    be = b + (n - y)
    # Each side of the odds is summed directly in log space, anchored at its
    # own edge term; complementing the other side would wipe out the answer
    # whenever one side is smaller than double epsilon.
    l_den = _bb_log_pmf(K, R, al, be) + _bb_logsum_desc(K, R, al, be)
    l_num = _bb_log_pmf(K + 1, R, al, be) + _bb_logsum_asc(K + 1, R, al, be)
    return l_num - l_den


def _bb_log_pmf(u, R, al, be):
    return (
        math.lgamma(R + 1.0)
        - math.lgamma(u + 1.0)
        - math.lgamma(R - u + 1.0)
        + math.lgamma(u + al)
        + math.lgamma(R - u + be)
        - math.lgamma(R + al + be)
        - (math.lgamma(al) + math.lgamma(be) - math.lgamma(al + be))
    )


_CHUNK = 2048

# The early exits below require the pmf to be log-concave in u (true iff both
# posterior shapes are >= 1): then the term ratios are monotone, a ratio <= 1
# stays <= 1, and the remaining tail is bounded by (last term) * (count).


def _bb_logsum_desc(K, R, al, be):
    # ln sum_{u=0..K} pmf(u)/pmf(K); term ratios are
    # pmf(u-1)/pmf(u) = u (R - u + be) / ((R - u + 1) (u - 1 + al)).
    log_concave = al >= 1.0 and be >= 1.0
    total_log = 0.0  # logsumexp accumulator, seeded with the u=K term (=1)
    lc = 0.0
    u = K
    while u >= 1:
        lo = max(1, u - _CHUNK + 1)
        us = np.arange(u, lo - 1, -1, dtype=np.float64)
        ratios = us * (R - us + be) / ((R - us + 1.0) * (us - 1.0 + al))
        lcs = lc + np.cumsum(np.log(ratios))
        m = max(total_log, float(np.max(lcs)))
        total_log = m + math.log(
            math.exp(total_log - m) + float(np.sum(np.exp(lcs - m)))
        )
        lc = float(lcs[-1])
        u = lo - 1
        if (
            log_concave
            and u >= 1
            and ratios[-1] <= 1.0
            and lc + math.log(u) < total_log - 60.0
        ):
            break
    return total_log


def _bb_logsum_asc(start, R, al, be):
    # ln sum_{u=start..R} pmf(u)/pmf(start); term ratios are
    # pmf(u+1)/pmf(u) = (R - u) (u + al) / ((u + 1) (R - u - 1 + be)).
    log_concave = al >= 1.0 and be >= 1.0
    total_log = 0.0
    lc = 0.0
    u = start
    while u <= R - 1:
        hi = min(R - 1, u + _CHUNK - 1)
        us = np.arange(u, hi + 1, dtype=np.float64)
        ratios = (R - us) * (us + al) / ((us + 1.0) * (R - us - 1.0 + be))
        lcs = lc + np.cumsum(np.log(ratios))
        m = max(total_log, float(np.max(lcs)))
        total_log = m + math.log(
            math.exp(total_log - m) + float(np.sum(np.exp(lcs - m)))
        )
        lc = float(lcs[-1])
        u = hi + 1
        if (
            log_concave
            and u <= R - 1
            and ratios[-1] <= 1.0
            and lc + math.log(R - u + 1.0) < total_log - 60.0
        ):
            break
    return total_log


def dp_run(
    mass,
    start_n,
    without,
    N,
    T,
    p,
    m,
    n_min,
    sched,
    ymin,
    yesc,
    yprov,
):
    """Propagate exact mass over (n, Y), exiting at schedule points.

    mass is modified in place (index = Y, length m + 1). Returns per-schedule
    arrays (certify mass, proven mass, escalate mass). Exits happen only at
    schedule points with n >= n_min; proven states take precedence over
    threshold certification in the labeling.
    """
    mass = np.asarray(mass, dtype=np.float64)
    sched = np.asarray(sched, dtype=np.int64)
    ymin = np.asarray(ymin, dtype=np.int64)
    yesc = np.asarray(yesc, dtype=np.int64)
    s = sched.shape[0]
    stop_cert = np.zeros(s)
    stop_prov = np.zeros(s)
    stop_esc = np.zeros(s)
    yidx = np.arange(m + 1, dtype=np.float64)
    si = int(np.searchsorted(sched, start_n, side="right"))
    for n in range(start_n + 1, m + 1):
        hi = n  # states Y in [0, n-1] can hold mass before this draw
        seg = mass[:hi]
        if without:
            q = (T - yidx[:hi]) / float(N - (n - 1))
            np.clip(q, 0.0, 1.0, out=q)
        else:
            q = p
        win = seg * q
        seg *= 1.0 - q
        mass[1 : hi + 1] += win
        if si < s and sched[si] == n:
            if n >= n_min:
                lo_exit = min(int(ymin[si]), yprov)
                if lo_exit <= n:
                    pstart = max(yprov, lo_exit)
                    prov_mass = float(np.sum(mass[pstart : n + 1])) if pstart <= n else 0.0
                    tot = float(np.sum(mass[lo_exit : n + 1]))
                    stop_prov[si] = prov_mass
                    stop_cert[si] = tot - prov_mass
                    mass[lo_exit : n + 1] = 0.0
                ye = int(yesc[si])
                if ye >= 0:
                    stop_esc[si] = float(np.sum(mass[: ye + 1]))
                    mass[: ye + 1] = 0.0
            si += 1
    return stop_cert, stop_prov, stop_esc


def mc_fixed(
    u,
    without,
    N,
    T,
    p,
    m,
    n_min,
    sched,
    ymin,
    yesc,
    yprov,
):
    """Simulate one batch of audits for an (n, Y)-valued statistic.

    u holds pregenerated uniforms, one row per trial. Outcome codes:
    0 = reached max sample, 1 = certified, 2 = certified (proven),
    3 = escalated on the lower threshold.
    """
    u = np.asarray(u, dtype=np.float64)
    sched = np.asarray(sched, dtype=np.int64)
    ymin = np.asarray(ymin, dtype=np.int64)
    yesc = np.asarray(yesc, dtype=np.int64)
    B = u.shape[0]
    Y = np.zeros(B, dtype=np.int64)
    outcome = np.zeros(B, dtype=np.int8)
    stop_n = np.full(B, m, dtype=np.int32)
    alive = np.ones(B, dtype=bool)
    si = 0
    s = sched.shape[0]
    for i in range(m):
        n = i + 1
        if without:
            thr = (T - Y) / float(N - i)
        else:
            thr = p
        Y += ((u[:, i] < thr) & alive).astype(np.int64)
        if si < s and sched[si] == n:
            if n >= n_min:
                prov = alive & (Y >= yprov)
                cert = alive & ~prov & (Y >= ymin[si])
                if yesc[si] >= 0:
                    esc = alive & ~prov & ~cert & (Y <= yesc[si])
                else:
                    esc = np.zeros(B, dtype=bool)
                outcome[prov] = 2
                outcome[cert] = 1
                outcome[esc] = 3
                newly = prov | cert | esc
                stop_n[newly] = n
                alive &= ~newly
            si += 1
            if not alive.any():
                break
    return outcome, stop_n, Y
