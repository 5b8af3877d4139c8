"""Exact audit evaluation by dynamic programming over (n, Y).

One forward pass propagates the full probability mass of the winner count,
removing mass as it exits through the certify, proven, or escalate regions
at each schedule point. Everything downstream (power, risk, mean sample
size, stopping pmf) reads off the exit masses; no sampling error anywhere.
"""
from __future__ import annotations

import math
from typing import Dict, Sequence, Tuple

import numpy as np

from . import _kernels, boundary
from .types import (
    DomainError,
    EvalResult,
    MethodSpec,
    SamplingScheme,
    StoppingRule,
    TrueTally,
)

__all__ = ["forward_dp", "max_risk", "conditional_eval"]


def _dynamics(
    scheme: SamplingScheme, tally: TrueTally, m: int
) -> Tuple[bool, int, int, float]:
    """Resolve (without, N, T, p) for the mass transition."""
    if scheme.replaces:
        if tally.winner_share is None:
            raise DomainError(
                "with-replacement evaluation needs the true share, not a count"
            )
        return False, 0, 0, float(tally.winner_share)
    N = scheme.total_ballots
    if m > N:
        raise DomainError("max_sample exceeds the ballot population")
    T = tally.resolve_count(N)
    if not 0 <= T <= N:
        raise DomainError("true tally must lie in [0, N]")
    return True, N, T, 0.0


def forward_dp(
    method: MethodSpec,
    rule: StoppingRule,
    scheme: SamplingScheme,
    tally: TrueTally,
) -> EvalResult:
    """Exact stopping distribution of the audit under a hypothesized truth.

    stop_pmf carries the certification mass (threshold crossings plus proven
    wins) at each schedule point. Runs that never certify, whether they
    escalate early or exhaust the schedule, count max_sample draws toward
    the mean: an escalated audit becomes a full hand count.
    """
    m = rule.max_sample
    without, N, T, p = _dynamics(scheme, tally, m)
    sched, ymin, yesc, yprov = boundary.boundary_arrays(method, rule, scheme)
    mass = np.zeros(m + 1)
    mass[0] = 1.0
    cert, prov, esc = _kernels.dp_run(
        mass, 0, without, N, T, p, m, rule.min_sample, sched, ymin, yesc, yprov
    )
    return _assemble(rule.schedule, cert, prov, esc, m, tally)


def _assemble(
    schedule: Tuple[int, ...],
    cert: np.ndarray,
    prov: np.ndarray,
    esc: np.ndarray,
    m: int,
    tally: TrueTally,
) -> EvalResult:
    stop = [float(c) + float(v) for c, v in zip(cert, prov)]
    power = math.fsum(stop)
    proven_mass = math.fsum(float(v) for v in prov)
    mean = math.fsum(n * s for n, s in zip(schedule, stop))
    mean += m * max(0.0, 1.0 - power)
    return EvalResult(
        schedule=schedule,
        stop_pmf={int(n): s for n, s in zip(schedule, stop)},
        certify_proven_mass=proven_mass,
        power=power,
        mean_sample_size=mean,
        risk_context=tally,
        escalate_pmf={int(n): float(e) for n, e in zip(schedule, esc)},
    )


def max_risk(
    method: MethodSpec, rule: StoppingRule, scheme: SamplingScheme
) -> float:
    """Worst-case certification probability over the composite null.

    The binding null is the largest tally (or share) still consistent with
    losing: T = floor(N t) without replacement, p = t with replacement.
    The statistics here are stochastically monotone in the true tally, so
    checking the edge point suffices.
    """
    t = method.null_mean
    if scheme.replaces:
        tally = TrueTally.share(t)
    else:
        tally = TrueTally.count(int(math.floor(scheme.total_ballots * t)))
    return forward_dp(method, rule, scheme, tally).power


def conditional_eval(
    method: MethodSpec,
    rule: StoppingRule,
    scheme: SamplingScheme,
    tally: TrueTally,
    state: Tuple[int, int],
    horizons: Sequence[int],
) -> Dict[int, float]:
    """P(certify within the next delta draws | current state), per horizon.

    The state (n0, y0) is taken as still running. Each horizon gets its own
    forward pass whose decision points are the configured schedule points
    inside the horizon plus the horizon end itself; horizons past
    max_sample clamp to it. Certification includes proven wins.
    """
    n0, y0 = int(state[0]), int(state[1])
    m = rule.max_sample
    without, N, T, p = _dynamics(scheme, tally, m)
    if not 0 <= y0 <= n0:
        raise DomainError("winner count must lie in [0, n0]")
    if n0 >= m:
        raise DomainError("state is already at max_sample")
    if without and (y0 > T or (n0 - y0) > (N - T)):
        raise DomainError("state unreachable under the hypothesized tally")
    out: Dict[int, float] = {}
    for delta in horizons:
        delta = int(delta)
        if delta < 1:
            raise DomainError("horizons must be positive")
        end = min(n0 + delta, m)
        pts = tuple(n for n in rule.schedule if n0 < n <= end)
        if not pts or pts[-1] != end:
            pts = pts + (end,)
        # min_sample gating stays with the original rule; the probe rule only
        # carries thresholds and the horizon's decision points
        probe = StoppingRule(
            upper_threshold=rule.upper_threshold,
            max_sample=end,
            lower_threshold=rule.lower_threshold,
            min_sample=0,
            schedule=pts,
        )
        sched, ymin, yesc, yprov = boundary.boundary_arrays(method, probe, scheme)
        mass = np.zeros(end + 1)
        mass[y0] = 1.0
        cert, prov, esc = _kernels.dp_run(
            mass, n0, without, N, T, p, end, rule.min_sample,
            sched, ymin, yesc, yprov,
        )
        out[delta] = math.fsum(float(c) for c in cert) + math.fsum(
            float(v) for v in prov
        )
    return out
