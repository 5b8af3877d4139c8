"""Decision rule and live audit sessions.

A session consumes rounds of ballot interpretations, recomputes its
statistic incrementally, and applies the decision rule after every round.
The planning tools (DP, calibration, simulation) check only at schedule
points; a live audit checks whenever new ballots arrive, which is the same
rule evaluated at whatever n the rounds produce.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from . import statistics as st
from .types import (
    Decision,
    DomainError,
    MethodSpec,
    REASON_LOWER_THRESHOLD,
    REASON_MAX_SAMPLES,
    SamplingScheme,
    StoppingRule,
)

__all__ = [
    "decide",
    "bayes_thresholds",
    "sprt_to_bayes",
    "bayes_to_sprt",
    "AuditSession",
    "RoundRecord",
    "append_round",
]

FLAG_BELOW_LOWER = "below-lower-threshold"
FLAG_NAN = "statistic-not-finite"


def decide(
    method: MethodSpec,
    rule: StoppingRule,
    scheme: Optional[SamplingScheme],
    n: int,
    y: int,
    statistic: float,
) -> Decision:
    """Apply the stopping rule to a decision-scale statistic value.

    Order: the minimum sample size gates every exit (a below-threshold
    statistic before min_sample only flags the continuation); then proven
    wins, then the strict upper-threshold crossing, then the lower-threshold
    exit, then sample exhaustion.
    """
    if math.isnan(statistic):
        raise ArithmeticError("statistic is NaN; session state is unusable")
    upper = st.scaled_threshold(method, rule.upper_threshold)
    lower = (
        st.scaled_threshold(method, rule.lower_threshold)
        if rule.lower_threshold is not None
        else None
    )
    proven = False
    if scheme is not None and not scheme.replaces:
        proven = y > math.floor(scheme.total_ballots * method.null_mean)
    if n < rule.min_sample:
        if lower is not None and statistic < lower:
            return Decision.cont(flags=(FLAG_BELOW_LOWER,))
        return Decision.cont()
    if proven:
        return Decision.certify_proven()
    if statistic > upper:
        return Decision.certify()
    if lower is not None and statistic < lower:
        return Decision.full_hand_count(REASON_LOWER_THRESHOLD)
    if n >= rule.max_sample:
        return Decision.full_hand_count(REASON_MAX_SAMPLES)
    return Decision.cont()


# ---------------------------------------------------------------------------
# threshold correspondences


def sprt_to_bayes(alpha: float, beta: float) -> Tuple[float, float]:
    """Map SPRT error rates onto posterior-probability thresholds.

    Returns (upsilon, phi): certify when the posterior probability of the
    null drops below upsilon, concede when it rises above phi.
    """
    _check_rates(alpha, beta)
    upsilon = alpha / (1.0 - beta + alpha)
    phi = (1.0 - alpha) / (1.0 - alpha + beta)
    return upsilon, phi


def bayes_to_sprt(upsilon: float, phi: float) -> Tuple[float, float]:
    """Inverse of sprt_to_bayes. phi = 1 is the zero-beta limit."""
    if not 0.0 < upsilon < 0.5:
        raise DomainError("upsilon must lie in (0, 1/2)")
    if not 0.5 < phi <= 1.0:
        raise DomainError("phi must lie in (1/2, 1]")
    alpha = upsilon * (2.0 * phi - 1.0) / (phi - upsilon)
    beta = (1.0 - phi) * (1.0 - 2.0 * upsilon) / (phi - upsilon)
    return alpha, beta


def bayes_thresholds(
    upsilon: float, phi: float, prior_odds: float = 1.0
) -> Tuple[float, float]:
    """Odds-scale (upper, lower) thresholds for the posterior rules.

    prior_odds is the prior odds in favor of the null; 1 when the statistic
    already carries the prior, as the Bayes factors here do.
    """
    if not 0.0 < upsilon < phi < 1.0:
        raise DomainError("need 0 < upsilon < phi < 1")
    if prior_odds <= 0:
        raise DomainError("prior_odds must be positive")
    h = (1.0 - upsilon) / upsilon * prior_odds
    lo = (1.0 - phi) / phi * prior_odds
    return h, lo


def _check_rates(alpha: float, beta: float) -> None:
    if not 0.0 < alpha < 1.0 or not 0.0 < beta < 1.0:
        raise DomainError("error rates must lie in (0, 1)")
    if alpha + beta >= 1.0:
        raise DomainError("alpha + beta must stay below 1")


# ---------------------------------------------------------------------------
# sessions


@dataclass(frozen=True)
class RoundRecord:
    round_index: int
    interpretations: Tuple[int, ...]
    n: int
    winner_count: int
    log_statistic: float
    decision: Decision

    def to_json(self) -> Dict[str, object]:
        return {
            "round_index": self.round_index,
            "interpretations": list(self.interpretations),
            "n": self.n,
            "Y": self.winner_count,
            "log_statistic": _json_float(self.log_statistic),
            "decision": {
                "kind": self.decision.kind,
                "reason": self.decision.reason,
                "flags": list(self.decision.flags),
            },
        }


def _json_float(x: float) -> object:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return x


def parse_json_float(x) -> float:
    if x == "inf":
        return math.inf
    if x == "-inf":
        return -math.inf
    if x == "nan":
        return math.nan
    return float(x)


STATUS_OPEN = "open"
STATUS_CERTIFIED = "certified"
STATUS_FULL_COUNT = "full-hand-count"


class AuditSession:
    """A live audit: rounds in, decisions out.

    The session recomputes its statistic incrementally, decides after every
    appended round, and refuses further rounds once terminal. A statistic
    that degenerates to NaN freezes the session (flagged continue) rather
    than emitting decisions from garbage.
    """

    def __init__(
        self,
        method: MethodSpec,
        rule: StoppingRule,
        scheme: SamplingScheme,
        session_id: Optional[str] = None,
    ):
        if not scheme.replaces and rule.max_sample > scheme.total_ballots:
            raise DomainError("max_sample exceeds the ballot population")
        self.method = method
        self.rule = rule
        self.scheme = scheme
        self.session_id = session_id
        self.rounds: List[RoundRecord] = []
        self.status = STATUS_OPEN
        self.frozen = False
        self._state = st.statistic_state(method, scheme)

    @property
    def n(self) -> int:
        return self.rounds[-1].n if self.rounds else 0

    @property
    def winner_count(self) -> int:
        return self.rounds[-1].winner_count if self.rounds else 0

    @property
    def terminal(self) -> bool:
        return self.status != STATUS_OPEN

    def append_round(self, interpretations: Sequence[int]) -> RoundRecord:
        if self.terminal:
            raise DomainError(f"session is closed with status {self.status!r}")
        if self.frozen:
            raise DomainError("session is frozen after a non-finite statistic")
        ballots = tuple(int(x) for x in interpretations)
        if not ballots:
            raise DomainError("a round must contain at least one ballot")
        if any(x not in (0, 1) for x in ballots):
            raise DomainError("interpretations must be 0 or 1")
        if self.n + len(ballots) > self.rule.max_sample:
            raise DomainError("round would exceed max_sample")
        for x in ballots:
            self._state.update(x)
        n = self.n + len(ballots)
        y = self.winner_count + sum(ballots)
        stat = self._state.log_value()
        if math.isnan(stat):
            self.frozen = True
            decision = Decision.cont(flags=(FLAG_NAN,))
        else:
            decision = decide(self.method, self.rule, self.scheme, n, y, stat)
        record = RoundRecord(
            round_index=len(self.rounds),
            interpretations=ballots,
            n=n,
            winner_count=y,
            log_statistic=stat,
            decision=decision,
        )
        self.rounds.append(record)
        if decision.kind in ("certify", "certify-proven"):
            self.status = STATUS_CERTIFIED
        elif decision.kind == "full-hand-count":
            self.status = STATUS_FULL_COUNT
        return record

    @classmethod
    def replay(
        cls,
        method: MethodSpec,
        rule: StoppingRule,
        scheme: SamplingScheme,
        rounds: Sequence[Sequence[int]],
        session_id: Optional[str] = None,
    ) -> "AuditSession":
        """Rebuild a session from its round inputs, re-deciding every round."""
        session = cls(method, rule, scheme, session_id=session_id)
        for ballots in rounds:
            session.append_round(ballots)
        return session


def append_round(session: AuditSession, interpretations: Sequence[int]) -> RoundRecord:
    """Functional alias for AuditSession.append_round."""
    return session.append_round(interpretations)
