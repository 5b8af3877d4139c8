"""Domain types shared across the package.

Everything here is an immutable value object. Validation happens at
construction so downstream code can assume invariants hold.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Optional, Sequence, Tuple

WITH_REPLACEMENT = "with-replacement"
WITHOUT_REPLACEMENT = "without-replacement"

METHOD_KINDS = (
    "bayesian",
    "bayesian-risk-max",
    "bravo",
    "max-bravo",
    "clip-audit",
    "kmart",
    "kaplan-wald",
    "kaplan-markov",
    "kaplan-kolmogorov",
)

# Kinds whose without-replacement form depends on the draw order, not just
# (n, Y). Order-dependent forms are session- and Monte-Carlo-only; the exact
# DP covers everything else.
ORDER_DEPENDENT_CAPABLE = ("kmart", "kaplan-wald", "kaplan-kolmogorov")


class DomainError(ValueError):
    """Raised when an argument violates a documented precondition."""


@dataclass(frozen=True)
class BallotSample:
    """A sample of ballot interpretations: 1 = reported winner, 0 = loser.

    The full sequence is optional; statistics that depend only on (n, Y)
    accept count-only samples. Order-dependent statistics require it.
    """

    n: int
    winner_count: int
    sequence: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        if self.n < 0:
            raise DomainError("sample size must be nonnegative")
        if not 0 <= self.winner_count <= self.n:
            raise DomainError("winner count must lie in [0, n]")
        if self.sequence is not None:
            seq = tuple(int(x) for x in self.sequence)
            if any(x not in (0, 1) for x in seq):
                raise DomainError("interpretations must be 0 or 1")
            if len(seq) != self.n or sum(seq) != self.winner_count:
                raise DomainError("sequence disagrees with (n, winner_count)")
            object.__setattr__(self, "sequence", seq)

    @classmethod
    def from_sequence(cls, sequence: Sequence[int]) -> "BallotSample":
        seq = tuple(int(x) for x in sequence)
        return cls(n=len(seq), winner_count=sum(seq), sequence=seq)

    @classmethod
    def from_counts(cls, n: int, winner_count: int) -> "BallotSample":
        return cls(n=n, winner_count=winner_count)

    def require_sequence(self) -> Tuple[int, ...]:
        if self.sequence is None:
            raise DomainError(
                "this statistic depends on draw order; provide the full sequence"
            )
        return self.sequence


@dataclass(frozen=True)
class SamplingScheme:
    mode: str
    total_ballots: Optional[int] = None

    def __post_init__(self):
        if self.mode not in (WITH_REPLACEMENT, WITHOUT_REPLACEMENT):
            raise DomainError(f"unknown sampling mode {self.mode!r}")
        if self.mode == WITHOUT_REPLACEMENT:
            if self.total_ballots is None or self.total_ballots < 1:
                raise DomainError(
                    "without-replacement sampling requires total_ballots >= 1"
                )

    @classmethod
    def with_replacement(cls) -> "SamplingScheme":
        return cls(mode=WITH_REPLACEMENT)

    @classmethod
    def without_replacement(cls, total_ballots: int) -> "SamplingScheme":
        return cls(mode=WITHOUT_REPLACEMENT, total_ballots=int(total_ballots))

    @property
    def replaces(self) -> bool:
        return self.mode == WITH_REPLACEMENT


@dataclass(frozen=True)
class PriorSpec:
    """Prior over the winner's true share (or tally, for beta-binomial).

    Variants:
      point-pair      two atoms at p0 < p1 with weights summing to 1
      beta            Beta(a, b) density over the share
      beta-binomial   beta-binomial over the tally T out of total N
      risk-maximizing mass 1/2 at p = 1/2 plus Beta(a, b) truncated to (1/2, 1]
      weighted-kmart  weighting g on [0, 1], used by the integral statistic
    """

    variant: str
    a: Optional[float] = None
    b: Optional[float] = None
    total: Optional[int] = None
    p0: Optional[float] = None
    p1: Optional[float] = None
    weight0: Optional[float] = None
    weight1: Optional[float] = None
    g: Optional[Callable[[float], float]] = None

    def __post_init__(self):
        v = self.variant
        if v == "point-pair":
            if self.p0 is None or self.p1 is None or not (0 <= self.p0 < self.p1 <= 1):
                raise DomainError("point-pair prior requires 0 <= p0 < p1 <= 1")
            w0 = 0.5 if self.weight0 is None else self.weight0
            w1 = 0.5 if self.weight1 is None else self.weight1
            if w0 < 0 or w1 < 0 or abs(w0 + w1 - 1.0) > 1e-12:
                raise DomainError("point-pair weights must be nonnegative and sum to 1")
            object.__setattr__(self, "weight0", float(w0))
            object.__setattr__(self, "weight1", float(w1))
        elif v in ("beta", "risk-maximizing"):
            if self.a is None or self.b is None or self.a <= 0 or self.b <= 0:
                raise DomainError(f"{v} prior requires shape parameters a, b > 0")
        elif v == "beta-binomial":
            if self.a is None or self.b is None or self.a <= 0 or self.b <= 0:
                raise DomainError("beta-binomial prior requires a, b > 0")
            if self.total is None or self.total < 1:
                raise DomainError("beta-binomial prior requires a positive total")
        elif v == "weighted-kmart":
            if self.g is None:
                raise DomainError("weighted-kmart prior requires a weight function")
        else:
            raise DomainError(f"unknown prior variant {v!r}")

    @classmethod
    def point_pair(cls, p0, p1, weight0=0.5, weight1=0.5) -> "PriorSpec":
        return cls("point-pair", p0=p0, p1=p1, weight0=weight0, weight1=weight1)

    @classmethod
    def beta(cls, a, b) -> "PriorSpec":
        return cls("beta", a=float(a), b=float(b))

    @classmethod
    def beta_binomial(cls, total, a, b) -> "PriorSpec":
        return cls("beta-binomial", a=float(a), b=float(b), total=int(total))

    @classmethod
    def risk_maximizing(cls, a, b) -> "PriorSpec":
        return cls("risk-maximizing", a=float(a), b=float(b))

    @classmethod
    def weighted_kmart(cls, g) -> "PriorSpec":
        return cls("weighted-kmart", g=g)


@dataclass(frozen=True)
class MethodSpec:
    """Which statistic to run and its tuning parameters.

    scheme_variant picks the likelihood form (with- or without-replacement)
    independently of how ballots are physically drawn; None follows the
    sampling scheme. This matters when benchmarking a with-replacement
    statistic under without-replacement sampling.
    """

    kind: str
    prior: Optional[PriorSpec] = None
    p1: Optional[float] = None
    reported_share: Optional[float] = None
    epsilon: Optional[float] = None
    gamma: Optional[float] = None
    null_mean: float = 0.5
    scheme_variant: Optional[str] = None

    def __post_init__(self):
        if self.kind not in METHOD_KINDS:
            raise DomainError(f"unknown method kind {self.kind!r}")
        if not 0 < self.null_mean < 1:
            raise DomainError("null_mean must lie in (0, 1)")
        if self.scheme_variant not in (None, WITH_REPLACEMENT, WITHOUT_REPLACEMENT):
            raise DomainError(f"unknown scheme variant {self.scheme_variant!r}")
        if self.kind == "bravo":
            p1 = self.p1
            if p1 is None and self.reported_share is not None:
                eps = self.epsilon or 0.0
                p1 = self.reported_share - eps
                object.__setattr__(self, "p1", p1)
            if p1 is None or not (self.null_mean < p1 <= 1):
                raise DomainError("bravo requires p1 in (null_mean, 1]")
        if self.kind in ("kaplan-wald", "kaplan-markov", "kaplan-kolmogorov"):
            if self.gamma is None or self.gamma <= 0:
                raise DomainError(f"{self.kind} requires gamma > 0")
            if self.kind == "kaplan-wald" and self.gamma > 1:
                raise DomainError("kaplan-wald requires gamma in (0, 1]")
        if self.kind in ("bayesian", "bayesian-risk-max") and self.prior is None:
            raise DomainError(f"{self.kind} requires a prior")
        if self.kind == "bayesian-risk-max":
            if self.prior.variant != "risk-maximizing":
                raise DomainError("bayesian-risk-max requires a risk-maximizing prior")

    def resolve_variant(self, scheme: Optional[SamplingScheme]) -> str:
        if self.kind == "kaplan-kolmogorov":
            return WITHOUT_REPLACEMENT
        if self.scheme_variant is not None:
            return self.scheme_variant
        if scheme is not None:
            return scheme.mode
        return WITH_REPLACEMENT

    def order_dependent(self, scheme: Optional[SamplingScheme] = None) -> bool:
        """Whether the statistic depends on draw order (not just on n, Y)."""
        if self.kind == "kaplan-kolmogorov":
            return True
        if self.kind in ("kmart", "kaplan-wald"):
            return self.resolve_variant(scheme) == WITHOUT_REPLACEMENT
        return False


@dataclass(frozen=True)
class StoppingRule:
    """Thresholds and check points.

    upper_threshold is on the statistic's decision scale: the ratio value h
    for likelihood-ratio and Bayes-odds methods, the raw constant c for the
    clipped statistic. Certification requires a strict crossing.
    """

    upper_threshold: float
    max_sample: int
    lower_threshold: Optional[float] = None
    min_sample: int = 0
    schedule: Tuple[int, ...] = ()

    def __post_init__(self):
        if self.max_sample < 1:
            raise DomainError("max_sample must be positive")
        if not 0 <= self.min_sample <= self.max_sample:
            raise DomainError("min_sample must lie in [0, max_sample]")
        sched = tuple(int(n) for n in self.schedule) or (self.max_sample,)
        if any(b <= a for a, b in zip(sched, sched[1:])):
            raise DomainError("schedule must be strictly increasing")
        if sched[-1] != self.max_sample:
            if sched[-1] > self.max_sample:
                raise DomainError("schedule exceeds max_sample")
            sched = sched + (self.max_sample,)
        if any(n < 1 for n in sched):
            raise DomainError("schedule points must be >= 1")
        object.__setattr__(self, "schedule", sched)
        if self.lower_threshold is not None:
            if self.lower_threshold >= self.upper_threshold:
                raise DomainError("lower_threshold must be below upper_threshold")

    @classmethod
    def with_increment(
        cls,
        upper_threshold: float,
        max_sample: int,
        increment: int = 1,
        min_sample: int = 0,
        lower_threshold: Optional[float] = None,
    ) -> "StoppingRule":
        if increment < 1:
            raise DomainError("increment must be >= 1")
        sched = tuple(range(increment, max_sample + 1, increment))
        if not sched or sched[-1] != max_sample:
            sched = sched + (max_sample,)
        return cls(
            upper_threshold=upper_threshold,
            max_sample=max_sample,
            lower_threshold=lower_threshold,
            min_sample=min_sample,
            schedule=sched,
        )

    def with_threshold(self, upper_threshold: float) -> "StoppingRule":
        return replace(self, upper_threshold=upper_threshold)


CONTINUE = "continue"
CERTIFY = "certify"
CERTIFY_PROVEN = "certify-proven"
FULL_HAND_COUNT = "full-hand-count"

REASON_MAX_SAMPLES = "max-samples"
REASON_LOWER_THRESHOLD = "lower-threshold"


@dataclass(frozen=True)
class Decision:
    kind: str
    reason: Optional[str] = None
    flags: Tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in (CONTINUE, CERTIFY, CERTIFY_PROVEN, FULL_HAND_COUNT):
            raise DomainError(f"unknown decision kind {self.kind!r}")
        if self.kind == FULL_HAND_COUNT and self.reason not in (
            REASON_MAX_SAMPLES,
            REASON_LOWER_THRESHOLD,
        ):
            raise DomainError("full-hand-count decision needs a reason")

    @property
    def terminal(self) -> bool:
        return self.kind != CONTINUE

    @classmethod
    def cont(cls, flags: Tuple[str, ...] = ()) -> "Decision":
        return cls(CONTINUE, flags=flags)

    @classmethod
    def certify(cls) -> "Decision":
        return cls(CERTIFY)

    @classmethod
    def certify_proven(cls) -> "Decision":
        return cls(CERTIFY_PROVEN)

    @classmethod
    def full_hand_count(cls, reason: str) -> "Decision":
        return cls(FULL_HAND_COUNT, reason=reason)


@dataclass(frozen=True)
class TrueTally:
    """Hypothesized truth: a tally T (without replacement) or a share p_T."""

    winner_count: Optional[int] = None
    winner_share: Optional[float] = None

    def __post_init__(self):
        if (self.winner_count is None) == (self.winner_share is None):
            raise DomainError("specify exactly one of winner_count, winner_share")
        if self.winner_share is not None and not 0 <= self.winner_share <= 1:
            raise DomainError("winner_share must lie in [0, 1]")
        if self.winner_count is not None and self.winner_count < 0:
            raise DomainError("winner_count must be nonnegative")

    @classmethod
    def count(cls, winner_count: int) -> "TrueTally":
        return cls(winner_count=int(winner_count))

    @classmethod
    def share(cls, winner_share: float) -> "TrueTally":
        return cls(winner_share=float(winner_share))

    def resolve_count(self, total_ballots: int) -> int:
        if self.winner_count is not None:
            if self.winner_count > total_ballots:
                raise DomainError("winner_count exceeds total_ballots")
            return self.winner_count
        return int(round(self.winner_share * total_ballots))


@dataclass(frozen=True)
class DecisionBoundary:
    """Per schedule point: smallest certifying Y and largest escalating Y.

    certify_at[i] is the minimal Y with statistic strictly above the upper
    threshold at schedule[i], or None when no Y <= schedule[i] certifies.
    proven_at is the minimal Y that makes the null impossible outright
    (sampling without replacement), or None. escalate_at[i] is the maximal
    Y strictly below the lower threshold, or None.
    """

    schedule: Tuple[int, ...]
    certify_at: Tuple[Optional[int], ...]
    escalate_at: Optional[Tuple[Optional[int], ...]] = None
    proven_at: Optional[int] = None

    def __post_init__(self):
        if len(self.certify_at) != len(self.schedule):
            raise DomainError("boundary length mismatch")
        if self.escalate_at is not None and len(self.escalate_at) != len(self.schedule):
            raise DomainError("boundary length mismatch")


@dataclass(frozen=True)
class EvalResult:
    """Exact (or empirical) audit performance at one hypothesized tally.

    stop_pmf maps each schedule point to the probability that the audit
    certifies exactly there (threshold crossings and proven wins together).
    Audits that never certify contribute max_sample draws to the mean.
    """

    schedule: Tuple[int, ...]
    stop_pmf: Mapping[int, float]
    certify_proven_mass: float
    power: float
    mean_sample_size: float
    risk_context: TrueTally
    escalate_pmf: Mapping[int, float] = field(default_factory=dict)
    stderr: Optional[Mapping[str, float]] = None

    def cumulative_stop(self) -> Tuple[Tuple[int, float], ...]:
        acc = 0.0
        out = []
        for n in self.schedule:
            acc += self.stop_pmf.get(n, 0.0)
            out.append((n, acc))
        return tuple(out)
