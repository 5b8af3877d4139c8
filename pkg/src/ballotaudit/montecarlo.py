"""Seeded Monte Carlo audit simulation.

Each trial owns a counter-based RNG stream keyed by (seed, trial index), so
results are reproducible bit for bit regardless of batching, thread count,
or how many trials ran before. Count-based methods go through the same
decision boundaries as the exact DP; order-dependent statistics replay
their per-draw products in vectorized batches.
"""
from __future__ import annotations

import math
from typing import Tuple

import numpy as np

from . import _kernels, boundary
from . import statistics as st
from .special import gauss_legendre_01
from .types import (
    DomainError,
    EvalResult,
    MethodSpec,
    SamplingScheme,
    StoppingRule,
    TrueTally,
)

__all__ = ["simulate"]

_BATCH = 2048

OUTCOME_MAX_SAMPLE = 0
OUTCOME_CERTIFY = 1
OUTCOME_PROVEN = 2
OUTCOME_ESCALATE = 3


def _trial_uniforms(seed: int, first: int, count: int, m: int) -> np.ndarray:
    """Rows of uniforms, one stream per trial: key = seed * 2^64 + index."""
    u = np.empty((count, m))
    base = int(seed) << 64
    for j in range(count):
        gen = np.random.Generator(np.random.Philox(key=base + first + j))
        u[j] = gen.random(m)
    return u


def simulate(
    method: MethodSpec,
    rule: StoppingRule,
    scheme: SamplingScheme,
    tally: TrueTally,
    trials: int,
    seed: int,
    batch_size: int = _BATCH,
) -> EvalResult:
    """Empirical stopping distribution with binomial standard errors.

    Mirrors forward_dp's conventions: decisions at schedule points with
    n >= min_sample, proven wins labeled separately, non-certifying trials
    charged max_sample draws in the mean.
    """
    if trials < 1:
        raise DomainError("trials must be positive")
    if not 0 <= int(seed) < 2**64:
        raise DomainError("seed must fit in 64 bits")
    if batch_size < 1:
        raise DomainError("batch_size must be positive")
    m = rule.max_sample
    without, N, T, p = _dynamics(scheme, tally, m)
    if method.order_dependent(scheme):
        counter = _OrderedRunner(method, rule, scheme, N, T)
    else:
        counter = _FixedRunner(method, rule, scheme, without, N, T, p)
    sched = np.asarray(rule.schedule, dtype=np.int64)
    k = len(sched)
    cert = np.zeros(k, dtype=np.int64)
    prov = np.zeros(k, dtype=np.int64)
    esc = np.zeros(k, dtype=np.int64)
    n_max_sample = 0
    sum_d = 0
    sum_d2 = 0
    done = 0
    while done < trials:
        b = min(batch_size, trials - done)
        u = _trial_uniforms(seed, done, b, m)
        outcome, stop_n, _ = counter.run(u)
        idx = np.searchsorted(sched, stop_n)
        certified = (outcome == OUTCOME_CERTIFY) | (outcome == OUTCOME_PROVEN)
        cert += np.bincount(
            idx[outcome == OUTCOME_CERTIFY], minlength=k
        ).astype(np.int64)
        prov += np.bincount(
            idx[outcome == OUTCOME_PROVEN], minlength=k
        ).astype(np.int64)
        esc += np.bincount(
            idx[outcome == OUTCOME_ESCALATE], minlength=k
        ).astype(np.int64)
        n_max_sample += int(np.sum(outcome == OUTCOME_MAX_SAMPLE))
        d = np.where(certified, stop_n.astype(np.int64), m)
        sum_d += int(np.sum(d))
        sum_d2 += int(np.sum(d * d))
        done += b
    return _empirical_result(
        rule.schedule, cert, prov, esc, trials, m, sum_d, sum_d2, tally
    )


def _dynamics(
    scheme: SamplingScheme, tally: TrueTally, m: int
) -> Tuple[bool, int, int, float]:
    if scheme.replaces:
        if tally.winner_share is None:
            raise DomainError(
                "with-replacement simulation needs the true share, not a count"
            )
        return False, 0, 0, float(tally.winner_share)
    N = scheme.total_ballots
    if m > N:
        raise DomainError("max_sample exceeds the ballot population")
    T = tally.resolve_count(N)
    return True, N, T, 0.0


class _FixedRunner:
    """Count-based methods: delegate whole batches to the kernel."""

    def __init__(self, method, rule, scheme, without, N, T, p):
        sched, ymin, yesc, yprov = boundary.boundary_arrays(method, rule, scheme)
        self._args = (
            without, N, T, p, rule.max_sample, rule.min_sample,
            sched, ymin, yesc, yprov,
        )

    def run(self, u: np.ndarray):
        return _kernels.mc_fixed(u, *self._args)


class _OrderedRunner:
    """Order-dependent statistics: vectorized per-draw product replay."""

    def __init__(self, method, rule, scheme, N, T):
        if scheme.replaces:
            raise DomainError("order-dependent simulation samples without replacement")
        self.method = method
        self.rule = rule
        self.N = N
        self.T = T
        self.t = method.null_mean
        self.null_count = int(math.floor(N * self.t))
        self.upper = st.scaled_threshold(method, rule.upper_threshold)
        self.lower = (
            st.scaled_threshold(method, rule.lower_threshold)
            if rule.lower_threshold is not None
            else None
        )
        self.kind = method.kind
        if self.kind == "kmart":
            nodes, weights = gauss_legendre_01(256)
            self.nodes = nodes
            self.log_w = np.log(weights)
        self.sched = np.asarray(rule.schedule, dtype=np.int64)

    def run(self, u: np.ndarray):
        B, m = u.shape
        N, T, t = self.N, self.T, self.t
        gamma = self.method.gamma
        Y = np.zeros(B, dtype=np.int64)
        alive = np.ones(B, dtype=bool)
        proven = np.zeros(B, dtype=bool)
        outcome = np.zeros(B, dtype=np.int8)
        stop_n = np.full(B, m, dtype=np.int32)
        if self.kind == "kmart":
            log_nodes = np.zeros((B, len(self.nodes)))
        else:
            log_prod = np.zeros(B)
        si = 0
        s = len(self.sched)
        for i in range(m):
            n = i + 1
            thr = (T - Y) / float(N - i)
            x = (u[:, i] < thr) & alive
            upd = alive & ~proven
            w = (N - i) / N  # draw n uses N - n + 1 = N - i remaining weight
            if np.any(upd):
                # Y is still the pre-draw count here. A zero denominator is
                # possible exactly when the next winner draw proves the
                # outcome; the resulting inf never reaches a decision because
                # the proven label wins below.
                with np.errstate(divide="ignore", invalid="ignore"):
                    denom = t - Y / N
                    if self.kind == "kmart":
                        rows = upd & x
                        if np.any(rows):
                            c = w / denom[rows]
                            log_nodes[rows] += np.log1p(
                                np.outer(c - 1.0, self.nodes)
                            )
                        rows0 = upd & ~x
                        if np.any(rows0):
                            log_nodes[rows0] += np.log1p(-self.nodes)[None, :]
                    elif self.kind == "kaplan-wald":
                        ratio = w / denom
                        step = np.where(
                            x,
                            np.log1p(gamma * (ratio - 1.0)),
                            math.log1p(-gamma) if gamma < 1 else -math.inf,
                        )
                        log_prod[upd] += step[upd]
                    else:  # kaplan-kolmogorov
                        dn = denom + w * gamma
                        step = np.log((x + gamma) * w) - np.log(dn)
                        log_prod[upd] += step[upd]
            Y += x.astype(np.int64)
            proven |= alive & (Y > self.null_count)
            if si < s and self.sched[si] == n:
                if n >= self.rule.min_sample:
                    pr = alive & proven
                    if self.kind == "kmart":
                        vals = _batch_logsumexp(log_nodes + self.log_w[None, :])
                    else:
                        vals = log_prod
                    ce = alive & ~pr & (vals > self.upper)
                    if self.lower is not None:
                        es = alive & ~pr & ~ce & (vals < self.lower)
                    else:
                        es = np.zeros(B, dtype=bool)
                    outcome[pr] = OUTCOME_PROVEN
                    outcome[ce] = OUTCOME_CERTIFY
                    outcome[es] = OUTCOME_ESCALATE
                    newly = pr | ce | es
                    stop_n[newly] = n
                    alive &= ~newly
                si += 1
                if not alive.any():
                    break
        return outcome, stop_n, Y


def _batch_logsumexp(a: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        mx = np.max(a, axis=1)
        safe = np.where(np.isfinite(mx), mx, 0.0)
        out = safe + np.log(np.sum(np.exp(a - safe[:, None]), axis=1))
        return np.where(np.isfinite(mx), out, mx)


def _empirical_result(
    schedule: Tuple[int, ...],
    cert: np.ndarray,
    prov: np.ndarray,
    esc: np.ndarray,
    trials: int,
    m: int,
    sum_d: int,
    sum_d2: int,
    tally: TrueTally,
) -> EvalResult:
    stop = (cert + prov) / trials
    power = float((int(np.sum(cert)) + int(np.sum(prov))) / trials)
    proven_mass = float(int(np.sum(prov)) / trials)
    mean = sum_d / trials
    var_d = max(0.0, sum_d2 / trials - mean * mean)
    se_mean = math.sqrt(var_d / trials)
    se_power = math.sqrt(max(0.0, power * (1.0 - power)) / trials)
    se_prov = math.sqrt(max(0.0, proven_mass * (1.0 - proven_mass)) / trials)
    return EvalResult(
        schedule=schedule,
        stop_pmf={int(n): float(v) for n, v in zip(schedule, stop)},
        certify_proven_mass=proven_mass,
        power=power,
        mean_sample_size=float(mean),
        risk_context=tally,
        escalate_pmf={int(n): float(v / trials) for n, v in zip(schedule, esc)},
        stderr={
            "power": float(se_power),
            "mean_sample_size": float(se_mean),
            "certify_proven_mass": float(se_prov),
        },
    )
