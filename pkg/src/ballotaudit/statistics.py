"""Sequential audit statistics.

Every statistic is available in log space (the decision scale for all the
likelihood-ratio and Bayes-odds methods) and as a saturating linear value.
The clipped statistic is the one exception: its decision scale is the raw
value, which can be negative.

Vectorized evaluators over Y at fixed n are the single source of truth; the
public per-sample functions and the session state objects delegate to them,
so boundaries, sessions, the DP, and the simulator all see identical values.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable, Optional, Tuple

import numpy as np
from scipy import integrate as _integrate
from scipy import special as _sc

from . import _kernels
from .special import gauss_legendre_01, log_beta_fn, log_reg_inc_beta
from .types import (
    WITH_REPLACEMENT,
    WITHOUT_REPLACEMENT,
    BallotSample,
    DomainError,
    MethodSpec,
    PriorSpec,
    SamplingScheme,
    TrueTally,
)

__all__ = [
    "log_sequence_probability",
    "bayes_factor",
    "log_bayes_factor",
    "upset_probability",
    "riskmax_upset_closed_form",
    "bravo_statistic",
    "log_bravo_statistic",
    "maxbravo_statistic",
    "log_maxbravo_statistic",
    "clip_statistic",
    "kmart_with_replacement",
    "log_kmart_with_replacement",
    "kmart_without_replacement",
    "kaplan_wald",
    "log_kaplan_wald",
    "kaplan_markov",
    "log_kaplan_markov",
    "kaplan_kolmogorov",
    "statistic_state",
    "decision_scale",
    "scaled_threshold",
]

_QUAD_TOL = 1e-10


def _ln(x: float) -> float:
    return math.log(x) if x > 0 else -math.inf


def _ln1p(x: float) -> float:
    return math.log1p(x) if x > -1 else -math.inf


def _sat_exp(log_value: float) -> float:
    # linear view of a log statistic; saturates instead of raising
    if log_value == math.inf:
        return math.inf
    if log_value == -math.inf:
        return 0.0
    try:
        return math.exp(log_value)
    except OverflowError:
        return math.inf


def _tally_count(tally, total: int) -> int:
    if isinstance(tally, TrueTally):
        return tally.resolve_count(total)
    if isinstance(tally, float) and 0 <= tally <= 1 and not tally.is_integer():
        return int(round(tally * total))
    return int(tally)


# ---------------------------------------------------------------------------
# sequence probabilities


def log_sequence_probability(
    sample: BallotSample, scheme: SamplingScheme, tally
) -> float:
    """Log probability of observing this ordered sample under a true tally.

    With replacement the draws are Bernoulli; without replacement this is the
    ordered hypergeometric probability. Impossible samples return -inf.
    """
    n, y = sample.n, sample.winner_count
    if scheme.replaces:
        if isinstance(tally, TrueTally):
            if tally.winner_share is None:
                raise DomainError("with-replacement sampling needs a share")
            p = tally.winner_share
        else:
            p = float(tally)
        if not 0.0 <= p <= 1.0:
            raise DomainError("share must lie in [0, 1]")
        return _log_bernoulli(n, y, p)
    N = scheme.total_ballots
    if n > N:
        raise DomainError("sample larger than the ballot population")
    T = _tally_count(tally, N)
    if not 0 <= T <= N:
        raise DomainError("tally must lie in [0, N]")
    return _log_ordered_hypergeom(n, y, N, T)


def _log_bernoulli(n: int, y: int, p: float) -> float:
    if y > 0 and p == 0.0:
        return -math.inf
    if y < n and p == 1.0:
        return -math.inf
    out = 0.0
    if y > 0:
        out += y * math.log(p)
    if y < n:
        out += (n - y) * math.log1p(-p)
    return out


def _log_ordered_hypergeom(n: int, y: int, N: int, T: int) -> float:
    if y > T or (n - y) > (N - T):
        return -math.inf
    # falling factorials T^(y) (N-T)^(n-y) / N^(n) via lgamma
    return (
        math.lgamma(T + 1.0)
        - math.lgamma(T - y + 1.0)
        + math.lgamma(N - T + 1.0)
        - math.lgamma(N - T - (n - y) + 1.0)
        - (math.lgamma(N + 1.0) - math.lgamma(N - n + 1.0))
    )


# ---------------------------------------------------------------------------
# vectorized lattice evaluators (Y array at fixed n), decision scale


def lattice_bravo_wr(n: int, ys: np.ndarray, p1: float, t: float) -> np.ndarray:
    ys = np.asarray(ys, dtype=np.float64)
    up = math.log(p1) - math.log(t)
    if p1 >= 1.0:
        return np.where(ys >= n, ys * up, -np.inf)
    down = math.log1p(-p1) - math.log1p(-t)
    return ys * up + (n - ys) * down


def lattice_bravo_wor(
    n: int, ys: np.ndarray, N: int, T1: int, T0: int
) -> np.ndarray:
    # ratio of ordered hypergeometric probabilities; the N^(n) part cancels.
    # Samples impossible under both tallies resolve by side so the result
    # stays nondecreasing in Y: winner-heavy ones to +inf, loser-heavy to
    # -inf. The +inf region sits above the proven-win boundary, which always
    # preempts it in decisions.
    ys = np.asarray(ys, dtype=np.float64)
    num = _log_hyper_part(n, ys, N, T1)
    den = _log_hyper_part(n, ys, N, T0)
    with np.errstate(invalid="ignore"):
        out = num - den
    bad = np.isnan(out)
    if np.any(bad):
        out = np.where(bad, np.where(ys > T0, np.inf, -np.inf), out)
    return out


def _log_hyper_part(n: int, ys: np.ndarray, N: int, T: int) -> np.ndarray:
    ks = n - ys
    with np.errstate(invalid="ignore"):
        vals = (
            _sc.gammaln(T + 1.0)
            - _sc.gammaln(T - ys + 1.0)
            + _sc.gammaln(N - T + 1.0)
            - _sc.gammaln(N - T - ks + 1.0)
        )
    vals = np.where((ys > T) | (ks > N - T), -np.inf, vals)
    return vals


def lattice_maxbravo(n: int, ys: np.ndarray, t: float) -> np.ndarray:
    ys = np.asarray(ys, dtype=np.float64)
    frac = ys / n
    with np.errstate(divide="ignore", invalid="ignore"):
        lw = np.where(ys > 0, ys * np.log(frac / t), 0.0)
        ll = np.where(ys < n, (n - ys) * np.log((1.0 - frac) / (1.0 - t)), 0.0)
    out = lw + ll
    return np.where(frac <= t, 0.0, out)


def lattice_clip(n: int, ys: np.ndarray) -> np.ndarray:
    ys = np.asarray(ys, dtype=np.float64)
    return (2.0 * ys - n) / math.sqrt(n)


def lattice_kaplan_markov(
    n: int, ys: np.ndarray, gamma: float, t: float
) -> np.ndarray:
    ys = np.asarray(ys, dtype=np.float64)
    up = math.log1p(gamma) - math.log(t + gamma)
    down = math.log(gamma) - math.log(t + gamma)
    return ys * up + (n - ys) * down


def _log_inc_beta_vec(x: float, aa: np.ndarray, bb: np.ndarray) -> np.ndarray:
    # vector ln I_x(a, b); scalar continued-fraction fallback where the
    # linear value underflows
    vals = _sc.betainc(aa, bb, x)
    out = np.empty_like(vals)
    small = vals < 1e-250
    with np.errstate(divide="ignore"):
        out[~small] = np.log(vals[~small])
    if np.any(small):
        idx = np.nonzero(small)[0]
        for i in idx:
            out[i] = log_reg_inc_beta(x, float(aa.flat[i]), float(bb.flat[i]))
    return out


def lattice_kmart_wr(n: int, ys: np.ndarray) -> np.ndarray:
    # closed form for weight 1 and t = 1/2:
    # ln S = (n+1) ln 2 + ln B(Y+1, n-Y+1) + ln I_{1/2}(n-Y+1, Y+1)
    ys = np.asarray(ys, dtype=np.float64)
    aa = ys + 1.0
    bb = n - ys + 1.0
    lb = _sc.betaln(aa, bb)
    li = _log_inc_beta_vec(0.5, bb, aa)
    return (n + 1.0) * math.log(2.0) + lb + li


def lattice_riskmax(n: int, ys: np.ndarray, a: float, b: float) -> np.ndarray:
    # posterior odds from the spiked-prior normalizer: the ratio of the
    # beta-slab term to the point-mass term
    ys = np.asarray(ys, dtype=np.float64)
    aa = ys + a
    bb = n - ys + b
    lb = _sc.betaln(aa, bb) - log_beta_fn(a, b)
    li = _log_inc_beta_vec(0.5, bb, aa)
    li0 = log_reg_inc_beta(0.5, b, a)
    return n * math.log(2.0) + lb + li - li0


def lattice_beta_prior(
    n: int, ys: np.ndarray, a: float, b: float, t: float
) -> np.ndarray:
    # conjugate beta posterior; odds = (1 - F(t)) / F(t)
    ys = np.asarray(ys, dtype=np.float64)
    aa = a + ys
    bb = b + (n - ys)
    upper = _log_inc_beta_vec(1.0 - t, bb, aa)
    lower = _log_inc_beta_vec(t, aa, bb)
    return upper - lower


def lattice_bb(
    n: int, ys: np.ndarray, total: int, a: float, b: float, null_count: int
) -> np.ndarray:
    ns = np.full(len(ys), n, dtype=np.int64)
    return _kernels.bb_log_odds(ns, np.asarray(ys, dtype=np.int64), total, a, b, null_count)


def lattice_point_pair(
    n: int,
    ys: np.ndarray,
    prior: PriorSpec,
    variant: str,
    N: Optional[int],
) -> np.ndarray:
    lw = math.log(prior.weight1) - math.log(prior.weight0)
    if variant == WITH_REPLACEMENT:
        ys = np.asarray(ys, dtype=np.float64)
        with np.errstate(invalid="ignore"):
            num = np.where(ys > 0, ys * _ln(prior.p1), 0.0) + np.where(
                ys < n, (n - ys) * _ln1p(-prior.p1), 0.0
            )
            den = np.where(ys > 0, ys * _ln(prior.p0), 0.0) + np.where(
                ys < n, (n - ys) * _ln1p(-prior.p0), 0.0
            )
            out = lw + num - den
        bad = np.isnan(out)
        if np.any(bad):
            mid = n * prior.p1
            out = np.where(bad, np.where(ys > mid, np.inf, -np.inf), out)
        return out
    if N is None:
        raise DomainError("point-pair without replacement needs total_ballots")
    T1 = int(round(prior.p1 * N))
    T0 = int(round(prior.p0 * N))
    return lw + lattice_bravo_wor(n, ys, N, T1, T0)


# ---------------------------------------------------------------------------
# public single-sample statistics


def log_bravo_statistic(
    sample: BallotSample, p1: float, scheme: SamplingScheme, null_mean: float = 0.5
) -> float:
    """Log likelihood ratio of the SPRT against the fixed alternative p1."""
    if not null_mean < p1 <= 1:
        raise DomainError("bravo requires p1 in (null_mean, 1]")
    n, y = sample.n, sample.winner_count
    if scheme.replaces:
        return float(lattice_bravo_wr(n, np.array([y]), p1, null_mean)[0])
    N = scheme.total_ballots
    T1 = int(round(p1 * N))
    T0 = _worst_null_count(N, null_mean)
    return float(lattice_bravo_wor(n, np.array([y]), N, T1, T0)[0])


def bravo_statistic(
    sample: BallotSample, p1: float, scheme: SamplingScheme, null_mean: float = 0.5
) -> float:
    return _sat_exp(log_bravo_statistic(sample, p1, scheme, null_mean))


def _worst_null_count(N: int, t: float) -> int:
    # largest tally still consistent with the null p_T <= t
    return int(math.floor(N * t))


def log_maxbravo_statistic(sample: BallotSample, null_mean: float = 0.5) -> float:
    """Log of the maximized likelihood ratio over alternatives above the null.

    The maximization runs over p1 in (null_mean, 1]; samples whose MLE falls
    at or below the null score exactly 1.
    """
    if sample.n < 1:
        raise DomainError("max-bravo requires at least one draw")
    return float(
        lattice_maxbravo(sample.n, np.array([sample.winner_count]), null_mean)[0]
    )


def maxbravo_statistic(sample: BallotSample, null_mean: float = 0.5) -> float:
    return _sat_exp(log_maxbravo_statistic(sample, null_mean))


def clip_statistic(sample: BallotSample) -> float:
    """(winners - losers) / sqrt(n); anti-symmetric under relabeling."""
    if sample.n < 1:
        raise DomainError("the clipped statistic requires at least one draw")
    return float(lattice_clip(sample.n, np.array([sample.winner_count]))[0])


def log_kaplan_markov(
    sample: BallotSample, gamma: float, t: float = 0.5
) -> float:
    if gamma <= 0:
        raise DomainError("kaplan-markov requires gamma > 0")
    return float(
        lattice_kaplan_markov(sample.n, np.array([sample.winner_count]), gamma, t)[0]
    )


def kaplan_markov(sample: BallotSample, gamma: float, t: float = 0.5) -> float:
    return _sat_exp(log_kaplan_markov(sample, gamma, t))


def log_kaplan_wald(
    sample: BallotSample,
    gamma: float,
    scheme: SamplingScheme,
    t: float = 0.5,
) -> float:
    """Fixed-gamma betting statistic; order-dependent without replacement."""
    if not 0 < gamma <= 1:
        raise DomainError("kaplan-wald requires gamma in (0, 1]")
    if scheme.replaces:
        n, y = sample.n, sample.winner_count
        up = math.log1p(gamma * (1.0 / t - 1.0))
        down = math.log1p(-gamma) if gamma < 1 else -math.inf
        if y == n:
            return y * up
        return y * up + (n - y) * down
    state = KaplanWaldWithoutState(scheme.total_ballots, gamma, t)
    for x in sample.require_sequence():
        state.update(x)
    return state.log_value()


def kaplan_wald(
    sample: BallotSample, gamma: float, scheme: SamplingScheme, t: float = 0.5
) -> float:
    return _sat_exp(log_kaplan_wald(sample, gamma, scheme, t))


def kaplan_kolmogorov(
    sample: BallotSample, N: int, gamma: float, t: float = 0.5
) -> float:
    """Per-draw product against the without-replacement null mean.

    Returns math.inf once the sampled winner count alone proves the outcome
    (Y > N t), matching the companion methods' guaranteed-win convention.
    """
    if gamma <= 0:
        raise DomainError("kaplan-kolmogorov requires gamma > 0")
    if sample.n > N:
        raise DomainError("sample larger than the ballot population")
    state = KaplanKolmogorovState(N, gamma, t)
    for x in sample.require_sequence():
        state.update(x)
    return _sat_exp(state.log_value())


def log_kmart_with_replacement(
    sample: BallotSample,
    weight: Optional[Callable[[float], float]] = None,
    t: float = 0.5,
) -> float:
    """Integral betting statistic over gamma, sampling with replacement.

    Weight 1 with t = 1/2 uses the closed form; anything else is adaptive
    quadrature of the defining integral (normalized by the weight's mass).
    """
    n, y = sample.n, sample.winner_count
    if weight is None and t == 0.5:
        if n == 0:
            return 0.0
        return float(lattice_kmart_wr(n, np.array([y]))[0])
    g = weight if weight is not None else (lambda _: 1.0)
    inv = 1.0 / t - 1.0

    def integrand(gam: float) -> float:
        lv = 0.0
        if y:
            lv += y * math.log1p(gam * inv)
        if y < n:
            lv += (n - y) * math.log1p(-gam)
        return math.exp(lv) * g(gam)

    num, nerr = _integrate.quad(integrand, 0.0, 1.0, epsabs=0.0, epsrel=_QUAD_TOL, limit=200)
    den, derr = _integrate.quad(g, 0.0, 1.0, epsabs=0.0, epsrel=_QUAD_TOL, limit=200)
    if den <= 0 or not math.isfinite(num) or not math.isfinite(den):
        raise ArithmeticError(
            f"weight-function quadrature failed (num={num}, den={den})"
        )
    if num <= 0:
        return -math.inf
    return math.log(num) - math.log(den)


def kmart_with_replacement(
    sample: BallotSample,
    weight: Optional[Callable[[float], float]] = None,
    t: float = 0.5,
) -> float:
    return _sat_exp(log_kmart_with_replacement(sample, weight, t))


def kmart_without_replacement(
    sample: BallotSample, N: int, t: float = 0.5
) -> float:
    """Integral betting statistic for without-replacement sampling.

    Order-dependent. Returns math.inf once Y exceeds N t (the outcome is
    proven by the sample itself and the statistic stops being meaningful).
    """
    if sample.n > N:
        raise DomainError("sample larger than the ballot population")
    state = KmartWithoutState(N, t)
    for x in sample.require_sequence():
        state.update(x)
    if state.proven:
        return math.inf
    return state.value()


# ---------------------------------------------------------------------------
# Bayes factors and upset probabilities


def log_bayes_factor(
    sample: BallotSample,
    prior: PriorSpec,
    scheme: SamplingScheme,
    null_mean: float = 0.5,
) -> float:
    """Log ratio of restricted marginal likelihoods: H1 mass over H0 mass.

    For priors placing equal mass on each hypothesis this is the posterior
    odds. Monotone nondecreasing in the winner count at fixed n.
    """
    n, y = sample.n, sample.winner_count
    v = prior.variant
    if v == "point-pair":
        N = scheme.total_ballots if not scheme.replaces else None
        mode = WITH_REPLACEMENT if scheme.replaces else WITHOUT_REPLACEMENT
        return float(lattice_point_pair(n, np.array([y]), prior, mode, N)[0])
    if v == "beta":
        if not scheme.replaces:
            raise DomainError(
                "a beta prior is a prior on the share; use a beta-binomial "
                "prior for without-replacement tallies"
            )
        return float(lattice_beta_prior(n, np.array([y]), prior.a, prior.b, null_mean)[0])
    if v == "beta-binomial":
        if scheme.replaces:
            raise DomainError(
                "a beta-binomial prior is a prior on the tally; use a beta "
                "prior for with-replacement sampling"
            )
        total = prior.total
        if scheme.total_ballots is not None and scheme.total_ballots != total:
            raise DomainError("prior total disagrees with the sampling scheme")
        null_count = _worst_null_count(total, null_mean)
        return float(
            lattice_bb(n, np.array([y]), total, prior.a, prior.b, null_count)[0]
        )
    if v == "risk-maximizing":
        if not scheme.replaces and null_mean != 0.5:
            raise DomainError("risk-maximizing prior supports null_mean = 0.5")
        return float(lattice_riskmax(n, np.array([y]), prior.a, prior.b)[0])
    raise DomainError(f"bayes_factor does not accept prior variant {v!r}")


def bayes_factor(
    sample: BallotSample,
    prior: PriorSpec,
    scheme: SamplingScheme,
    null_mean: float = 0.5,
) -> float:
    return _sat_exp(log_bayes_factor(sample, prior, scheme, null_mean))


def upset_probability(
    sample: BallotSample,
    prior: PriorSpec,
    scheme: SamplingScheme,
    null_mean: float = 0.5,
) -> float:
    """Posterior probability that the reported winner actually lost (or tied)."""
    lo = log_bayes_factor(sample, prior, scheme, null_mean)
    return _sigmoid_neg(lo)


def _sigmoid_neg(log_odds: float) -> float:
    # 1 / (1 + exp(log_odds)), stable at both extremes
    if log_odds == math.inf:
        return 0.0
    if log_odds == -math.inf:
        return 1.0
    if log_odds >= 0:
        z = math.exp(-log_odds)
        return z / (1.0 + z)
    return 1.0 / (1.0 + math.exp(log_odds))


def riskmax_upset_closed_form(n: int, Y: int, a: float, b: float) -> float:
    """Upset probability under the spiked prior, assembled from its
    normalizing constant: u = point-mass term / (point-mass + slab term).

    Binomial likelihood only. Agrees with upset_probability under the
    risk-maximizing prior and, for a = b = 1, with 1/(1 + integral statistic).
    """
    if not (a > 0 and b > 0):
        raise DomainError("shape parameters must be positive")
    if not 0 <= Y <= n:
        raise DomainError("Y must lie in [0, n]")
    l0 = -(n + 1.0) * math.log(2.0)  # point-mass term: (1/2) (1/2)^n
    l1 = (
        -math.log(2.0)
        + log_beta_fn(Y + a, n - Y + b)
        - log_beta_fn(a, b)
        + log_reg_inc_beta(0.5, n - Y + b, Y + a)
        - log_reg_inc_beta(0.5, b, a)
    )
    lk = np.logaddexp(l0, l1)  # log normalizer
    return float(math.exp(l0 - lk))


# ---------------------------------------------------------------------------
# incremental session states

_GL_ORDER = 256
_gl_cache: Optional[Tuple[np.ndarray, np.ndarray]] = None
_EXACT_POLY_LIMIT = 512


def _gl_nodes() -> Tuple[np.ndarray, np.ndarray]:
    global _gl_cache
    if _gl_cache is None:
        nodes, weights = gauss_legendre_01(_GL_ORDER)
        _gl_cache = (nodes, np.log(weights))
    return _gl_cache


class FixedCountState:
    """Session accumulator for statistics that depend only on (n, Y)."""

    order_dependent = False

    def __init__(self, evaluator: Callable[[int, int], float]):
        self._eval = evaluator
        self.n = 0
        self.y = 0

    def update(self, x: int) -> None:
        self.n += 1
        self.y += int(x)

    def log_value(self) -> float:
        if self.n == 0:
            return 0.0
        return self._eval(self.n, self.y)


class KmartWithoutState:
    """Integrand state for the without-replacement integral statistic.

    Maintains the exact polynomial in gamma (rational coefficients) while the
    degree stays small enough, alongside log values at Gauss-Legendre nodes.
    Past the exact-degree limit the node values alone carry the integral,
    which the quadrature order still handles well for audit-scale sequences.
    """

    order_dependent = True

    def __init__(self, N: int, t: float = 0.5):
        self.N = int(N)
        self.t = float(t)
        self.null_count = int(math.floor(N * t))
        self.n = 0
        self.y = 0
        self.proven = False
        self._coeffs: Optional[list] = [Fraction(1)]
        nodes, _ = _gl_nodes()
        self._log_nodes = np.zeros(len(nodes))

    def update(self, x: int) -> None:
        x = int(x)
        if self.n >= self.N:
            raise DomainError("sample larger than the ballot population")
        y_prev = self.y
        self.n += 1
        self.y += x
        if self.proven:
            return
        if self.y > self.null_count:
            self.proven = True
            return
        w = Fraction(self.N - self.n + 1, self.N)
        nodes, _ = _gl_nodes()
        if x == 1:
            denom = Fraction(self.t) - Fraction(y_prev, self.N)
            c = w / denom  # positive: y_prev <= null_count keeps denom > 0
            slope = c - 1
            cf = float(c)
            with np.errstate(divide="ignore"):
                self._log_nodes += np.log1p(nodes * (cf - 1.0))
        else:
            slope = Fraction(-1)
            with np.errstate(divide="ignore"):
                self._log_nodes += np.log1p(-nodes)
        if self._coeffs is not None:
            if len(self._coeffs) > _EXACT_POLY_LIMIT:
                self._coeffs = None
            else:
                prev = self._coeffs
                nxt = [Fraction(0)] * (len(prev) + 1)
                for k, ck in enumerate(prev):
                    nxt[k] += ck
                    nxt[k + 1] += ck * slope
                self._coeffs = nxt

    def value(self) -> float:
        if self.proven:
            return math.inf
        if self._coeffs is not None:
            total = Fraction(0)
            for k, ck in enumerate(self._coeffs):
                total += ck / (k + 1)
            return float(total)
        _, log_w = _gl_nodes()
        return float(np.exp(_logsumexp(self._log_nodes + log_w)))

    def log_value(self) -> float:
        if self.proven:
            return math.inf
        v = self.value()
        return math.log(v) if v > 0 else -math.inf


def _logsumexp(arr: np.ndarray) -> float:
    m = float(np.max(arr))
    if m == -math.inf:
        return -math.inf
    return m + math.log(float(np.sum(np.exp(arr - m))))


class KaplanWaldWithoutState:
    """Running log product of the fixed-gamma integrand, without replacement."""

    order_dependent = True

    def __init__(self, N: int, gamma: float, t: float = 0.5):
        self.N = int(N)
        self.gamma = float(gamma)
        self.t = float(t)
        self.null_count = int(math.floor(N * t))
        self.n = 0
        self.y = 0
        self.proven = False
        self._log = 0.0

    def update(self, x: int) -> None:
        x = int(x)
        if self.n >= self.N:
            raise DomainError("sample larger than the ballot population")
        y_prev = self.y
        self.n += 1
        self.y += x
        if self.proven:
            return
        if self.y > self.null_count:
            self.proven = True
            return
        w = (self.N - self.n + 1) / self.N
        if x == 1:
            ratio = w / (self.t - y_prev / self.N)
            self._log += math.log1p(self.gamma * (ratio - 1.0))
        else:
            self._log += math.log1p(-self.gamma) if self.gamma < 1 else -math.inf

    def log_value(self) -> float:
        return math.inf if self.proven else self._log


class KaplanKolmogorovState:
    """Running log product of the without-replacement mean-ratio factors."""

    order_dependent = True

    def __init__(self, N: int, gamma: float, t: float = 0.5):
        if gamma <= 0:
            raise DomainError("kaplan-kolmogorov requires gamma > 0")
        self.N = int(N)
        self.gamma = float(gamma)
        self.t = float(t)
        self.null_count = int(math.floor(N * t))
        self.n = 0
        self.y = 0
        self.proven = False
        self._log = 0.0

    def update(self, x: int) -> None:
        x = int(x)
        if self.n >= self.N:
            raise DomainError("sample larger than the ballot population")
        y_prev = self.y
        self.n += 1
        self.y += x
        if self.proven:
            return
        if self.y > self.null_count:
            self.proven = True
            return
        w = (self.N - self.n + 1) / self.N
        denom = self.t - y_prev / self.N + w * self.gamma
        if denom <= 0:
            raise ArithmeticError(
                f"nonpositive denominator at draw {self.n} "
                f"(y={y_prev}, t={self.t}, gamma={self.gamma})"
            )
        self._log += math.log((x + self.gamma) * w) - math.log(denom)

    def log_value(self) -> float:
        return math.inf if self.proven else self._log


# ---------------------------------------------------------------------------
# method dispatch


def decision_scale(method: MethodSpec) -> str:
    """'log' for ratio/odds statistics, 'raw' for the clipped statistic."""
    return "raw" if method.kind == "clip-audit" else "log"


def scaled_threshold(method: MethodSpec, threshold: float) -> float:
    """Map a StoppingRule threshold onto the statistic's decision scale."""
    if decision_scale(method) == "raw":
        return float(threshold)
    if threshold <= 0:
        raise DomainError("ratio-statistic thresholds must be positive")
    return math.log(threshold)


def point_evaluator(
    method: MethodSpec, scheme: Optional[SamplingScheme]
) -> Callable[[int, int], float]:
    """Scalar (n, Y) -> decision-scale value for count-based methods."""
    from . import lattice

    ev = lattice.evaluator(method, scheme)

    def point(n: int, y: int) -> float:
        return float(ev.values(n, np.array([y], dtype=np.int64))[0])

    return point


def statistic_state(method: MethodSpec, scheme: Optional[SamplingScheme]):
    """Fresh incremental state for a session running this method."""
    if not method.order_dependent(scheme):
        return FixedCountState(point_evaluator(method, scheme))
    N = scheme.total_ballots if scheme is not None else None
    if N is None:
        raise DomainError("order-dependent statistics need total_ballots")
    t = method.null_mean
    if method.kind == "kmart":
        return KmartWithoutState(N, t)
    if method.kind == "kaplan-wald":
        return KaplanWaldWithoutState(N, method.gamma, t)
    if method.kind == "kaplan-kolmogorov":
        return KaplanKolmogorovState(N, method.gamma, t)
    raise DomainError(f"no session state for method {method.kind!r}")
