"""Risk-limit calibration.

Finds the smallest threshold whose worst-case certification probability
under the null stays at or below the risk limit. The exact DP evaluates
risk, so the calibrated threshold is exact up to the discreteness of the
lattice: risk is a step function of the threshold, and bisection converges
onto a step edge. The reported threshold is the safe side of that edge.

Thresholds bisect on the statistic's natural scale: log of the ratio
threshold for likelihood and odds methods, the raw constant for the clipped
statistic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from . import _kernels, boundary, exact, lattice
from . import statistics as st
from .types import (
    DomainError,
    MethodSpec,
    SamplingScheme,
    StoppingRule,
    TrueTally,
)

__all__ = [
    "calibrate",
    "verify_risk_limit",
    "CalibrationReport",
    "CalibrationError",
    "nominal_scale",
]

_BISECT_ITERS = 60
_RATIO_LOG_HI = math.log(1e6)


class CalibrationError(RuntimeError):
    """The requested risk limit cannot be met inside the search bracket."""


def nominal_scale(method: MethodSpec, raw_threshold: float) -> Tuple[str, float]:
    """Human-facing tuning constant implied by a raw threshold."""
    if method.kind == "clip-audit":
        return "clip_constant", float(raw_threshold)
    if method.kind in ("bayesian", "bayesian-risk-max"):
        return "nominal_upset", 1.0 / (raw_threshold + 1.0)
    return "nominal_alpha", 1.0 / raw_threshold


@dataclass(frozen=True)
class CalibrationReport:
    method: MethodSpec
    scheme: SamplingScheme
    alpha: float
    rule: StoppingRule
    raw_threshold: float
    nominal_name: str
    nominal_value: float
    achieved_risk: float
    gap: float
    iterations: int
    floor_hit: bool
    tolerance: Optional[float] = None

    def as_dict(self) -> Dict[str, object]:
        return {
            "method": self.method.kind,
            "alpha": self.alpha,
            "raw_threshold": self.raw_threshold,
            self.nominal_name: self.nominal_value,
            "achieved_risk": self.achieved_risk,
            "gap": self.gap,
            "iterations": self.iterations,
            "floor_hit": self.floor_hit,
        }


def _worst_tally(method: MethodSpec, scheme: SamplingScheme) -> TrueTally:
    t = method.null_mean
    if scheme.replaces:
        return TrueTally.share(t)
    return TrueTally.count(int(math.floor(scheme.total_ballots * t)))


def calibrate(
    method: MethodSpec,
    rule_template: StoppingRule,
    scheme: SamplingScheme,
    alpha: float,
    tolerance: Optional[float] = None,
) -> CalibrationReport:
    """Smallest threshold with worst-case risk at most alpha.

    The template's threshold value is ignored; its schedule, sample bounds,
    and lower threshold are kept. Bisection runs a fixed number of
    iterations and returns the safe endpoint; `tolerance`, when given, is a
    post-hoc quality bound on how far below alpha the achieved risk may sit
    (a wide gap signals a coarse lattice, not a calibration failure, and is
    reported rather than raised).
    """
    if not 0 < alpha < 1:
        raise DomainError("alpha must lie in (0, 1)")
    m = rule_template.max_sample
    without = not scheme.replaces
    tally = _worst_tally(method, scheme)
    if without:
        N = scheme.total_ballots
        T = tally.resolve_count(N)
        p = 0.0
        if m > N:
            raise DomainError("max_sample exceeds the ballot population")
    else:
        N, T, p = 0, 0, float(tally.winner_share)

    ev = lattice.evaluator(method, scheme)
    raw_scale = ev.scale == "raw"
    if raw_scale:
        slo, shi = 0.0, math.sqrt(m) + 1.0
    else:
        slo, shi = 0.0, _RATIO_LOG_HI

    closed_form = ev.y_star is not None
    windows = None
    yesc_cache: Optional[np.ndarray] = None
    if not closed_form:
        lo_cov, hi_cov = slo, shi
        if rule_template.lower_threshold is not None:
            lsc = st.scaled_threshold(method, rule_template.lower_threshold)
            lo_cov, hi_cov = min(lo_cov, lsc), max(hi_cov, lsc)
        windows = lattice.cached_windows(
            method, scheme, rule_template.schedule, lo_cov, hi_cov
        )

    sched = np.asarray(rule_template.schedule, dtype=np.int64)
    yprov = lattice.proven_threshold(scheme, method.null_mean)
    yprov = (m + 2) if yprov is None else yprov

    def risk_at(scaled: float) -> float:
        raw = scaled if raw_scale else math.exp(scaled)
        rule = rule_template.with_threshold(raw)
        nonlocal yesc_cache
        if closed_form:
            s, ymin, yesc, _ = boundary.boundary_arrays(method, rule, scheme)
        else:
            ymin = windows.certify_boundary(scaled)
            if yesc_cache is None:
                lthr = (
                    st.scaled_threshold(method, rule.lower_threshold)
                    if rule.lower_threshold is not None
                    else None
                )
                yesc_cache = windows.escalate_boundary(lthr)
            yesc = yesc_cache
        mass = np.zeros(m + 1)
        mass[0] = 1.0
        cert, prov, _ = _kernels.dp_run(
            mass, 0, without, N, T, p, m, rule_template.min_sample,
            sched, ymin, yesc, yprov,
        )
        return math.fsum(float(c) for c in cert) + math.fsum(float(v) for v in prov)

    floor_risk = risk_at(slo)
    if floor_risk <= alpha:
        raw = slo if raw_scale else 1.0
        return _report(
            method, scheme, alpha, rule_template, raw, floor_risk, 0, True, tolerance
        )
    hi_risk = risk_at(shi)
    if hi_risk > alpha:
        raise CalibrationError(
            f"risk {hi_risk:.3g} at the bracket ceiling still exceeds "
            f"alpha={alpha}; the schedule cannot meet this limit"
        )
    lo, hi = slo, shi
    hi_ach = hi_risk
    steps = 0
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        steps += 1
        r = risk_at(mid)
        if r <= alpha:
            hi, hi_ach = mid, r
        else:
            lo = mid
    raw = hi if raw_scale else math.exp(hi)
    return _report(
        method, scheme, alpha, rule_template, raw, hi_ach, steps, False, tolerance
    )


def _report(
    method: MethodSpec,
    scheme: SamplingScheme,
    alpha: float,
    template: StoppingRule,
    raw: float,
    achieved: float,
    iters: int,
    floor_hit: bool,
    tolerance: Optional[float],
) -> CalibrationReport:
    name, value = nominal_scale(method, raw) if raw > 0 else ("clip_constant", raw)
    rule = template.with_threshold(raw)
    return CalibrationReport(
        method=method,
        scheme=scheme,
        alpha=alpha,
        rule=rule,
        raw_threshold=raw,
        nominal_name=name,
        nominal_value=value,
        achieved_risk=achieved,
        gap=alpha - achieved,
        iterations=iters,
        floor_hit=floor_hit,
        tolerance=tolerance,
    )


def verify_risk_limit(
    report: CalibrationReport, alpha: Optional[float] = None
) -> Dict[str, float]:
    """Independent check of a calibrated rule through the public evaluator.

    Recomputes worst-case risk with exact.max_risk (a separate code path
    from the calibration loop) and compares it to the limit.
    """
    limit = report.alpha if alpha is None else alpha
    achieved = exact.max_risk(report.method, report.rule, report.scheme)
    return {
        "alpha": float(limit),
        "max_risk": float(achieved),
        "margin": float(limit - achieved),
        "ok": float(achieved <= limit),
    }
