"""Numba mirrors of the numpy kernels.

Same signatures and sentinel conventions as _numpyimpl. The Monte Carlo
kernel reproduces the numpy trial outcomes bit for bit; the DP and
beta-binomial kernels agree to floating-point roundoff (summation order
differs).
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
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


@njit(cache=True, nogil=True)
def _bb_log_odds_point(n, y, total, a, b, null_count):
    # Both sides of the odds are summed directly in log space; the early
    # exits use the geometric tail bound, valid only while the pmf is
    # log-concave in u (both posterior shapes >= 1) and terms are declining.
    # mmax is a lower bound on each side's running logsumexp, so comparing
    # the tail bound against mmax - 60 is conservative.
    R = total - n
    K = null_count - y
    if K < 0:
        return np.inf
    if K >= R:
        return -np.inf
    al = a + y
    be = b + (n - y)
    log_concave = al >= 1.0 and be >= 1.0
    # denominator: descending logsumexp of pmf(u)/pmf(K), u = K..0
    mmax = 0.0
    acc = 1.0  # sum of exp(lc - mmax), seeded with the u = K term
    lc = 0.0
    u = K
    while u >= 1:
        uf = float(u)
        ratio = uf * (R - uf + be) / ((R - uf + 1.0) * (uf - 1.0 + al))
        lc += math.log(ratio)
        if lc > mmax:
            acc = acc * math.exp(mmax - lc) + 1.0
            mmax = lc
        else:
            acc += math.exp(lc - mmax)
        u -= 1
        if (
            log_concave
            and ratio <= 1.0
            and u >= 1
            and lc + math.log(uf) < mmax - 60.0
        ):
            break
    l_den = _bb_log_pmf(float(K), R, al, be) + (mmax + math.log(acc))
    # numerator: ascending logsumexp of pmf(u)/pmf(K+1), u = K+1..R
    mmax = 0.0
    acc = 1.0
    lc = 0.0
    u = K + 1
    while u <= R - 1:
        uf = float(u)
        ratio = (R - uf) * (uf + al) / ((uf + 1.0) * (R - uf - 1.0 + be))
        lc += math.log(ratio)
        if lc > mmax:
            acc = acc * math.exp(mmax - lc) + 1.0
            mmax = lc
        else:
            acc += math.exp(lc - mmax)
        u += 1
        if (
            log_concave
            and ratio <= 1.0
            and u <= R - 1
            and lc + math.log(R - uf) < mmax - 60.0
        ):
            break
    l_num = _bb_log_pmf(float(K + 1), R, al, be) + (mmax + math.log(acc))
    return l_num - l_den


@njit(cache=True, nogil=True)
def bb_log_odds(ns, ys, total, a, b, null_count):
    out = np.empty(ns.shape[0], dtype=np.float64)
    for i in range(ns.shape[0]):
        out[i] = _bb_log_odds_point(ns[i], ys[i], total, a, b, null_count)
    return out


@njit(cache=True, nogil=True)
def dp_run(mass, start_n, without, N, T, p, m, n_min, sched, ymin, yesc, yprov):
    s = sched.shape[0]
    stop_cert = np.zeros(s)
    stop_prov = np.zeros(s)
    stop_esc = np.zeros(s)
    si = np.searchsorted(sched, start_n, side="right")
    for n in range(start_n + 1, m + 1):
        hi = n
        if without:
            denom = float(N - (n - 1))
            prev = mass[hi - 1]
            q = (T - (hi - 1)) / denom
            if q < 0.0:
                q = 0.0
            elif q > 1.0:
                q = 1.0
            carry = prev * q
            mass[hi - 1] = prev * (1.0 - q)
            for yy in range(hi - 2, -1, -1):
                cur = mass[yy]
                q = (T - yy) / denom
                if q < 0.0:
                    q = 0.0
                elif q > 1.0:
                    q = 1.0
                win = cur * q
                mass[yy] = cur * (1.0 - q)
                mass[yy + 1] += win
            mass[hi] += carry
        else:
            prev = mass[hi - 1]
            carry = prev * p
            mass[hi - 1] = prev * (1.0 - p)
            for yy in range(hi - 2, -1, -1):
                cur = mass[yy]
                win = cur * p
                mass[yy] = cur * (1.0 - p)
                mass[yy + 1] += win
            mass[hi] += carry
        if si < s and sched[si] == n:
            if n >= n_min:
                lo_exit = ymin[si] if ymin[si] < yprov else yprov
                if lo_exit <= n:
                    pstart = yprov if yprov > lo_exit else lo_exit
                    pm = 0.0
                    if pstart <= n:
                        for yy in range(pstart, n + 1):
                            pm += mass[yy]
                    tot = 0.0
                    for yy in range(lo_exit, n + 1):
                        tot += mass[yy]
                        mass[yy] = 0.0
                    stop_prov[si] = pm
                    stop_cert[si] = tot - pm
                ye = yesc[si]
                if ye >= 0:
                    em = 0.0
                    top = ye if ye < m else m
                    for yy in range(0, top + 1):
                        em += mass[yy]
                        mass[yy] = 0.0
                    stop_esc[si] = em
            si += 1
    return stop_cert, stop_prov, stop_esc


@njit(cache=True, nogil=True)
def mc_fixed(u, without, N, T, p, m, n_min, sched, ymin, yesc, yprov):
    B = u.shape[0]
    Y = np.zeros(B, dtype=np.int64)
    outcome = np.zeros(B, dtype=np.int8)
    stop_n = np.full(B, m, dtype=np.int32)
    s = sched.shape[0]
    for b in range(B):
        y = 0
        si = 0
        n_stop = m
        code = 0
        for i in range(m):
            n = i + 1
            if without:
                thr = (T - y) / float(N - i)
            else:
                thr = p
            if u[b, i] < thr:
                y += 1
            if si < s and sched[si] == n:
                if n >= n_min:
                    if y >= yprov:
                        code = 2
                        n_stop = n
                        break
                    if y >= ymin[si]:
                        code = 1
                        n_stop = n
                        break
                    if yesc[si] >= 0 and y <= yesc[si]:
                        code = 3
                        n_stop = n
                        break
                si += 1
        Y[b] = y
        outcome[b] = code
        stop_n[b] = n_stop
    return outcome, stop_n, Y
