"""Exact DP evaluation against rational-arithmetic enumeration.

Every comparison here pits the vectorized forward pass against a dictionary
recursion in Fractions that consults the statistic pointwise. Agreement is
demanded to 1e-12 absolute, which leaves no room for an off-by-one in the
boundary handling or a dropped mass term.
"""
import math
from fractions import Fraction

import pytest

import ballotaudit.statistics as st
from ballotaudit import exact, lattice
from ballotaudit.types import (
    WITH_REPLACEMENT,
    WITHOUT_REPLACEMENT,
    DomainError,
    MethodSpec,
    PriorSpec,
    SamplingScheme,
    StoppingRule,
    TrueTally,
)
from oracles import (
    CERTIFY,
    CONTINUE,
    ESCALATE,
    PROVEN,
    enumerate_audit,
    make_decision_fn,
)

TOL = 1e-12


def _methods(total):
    """(label, method, upper, lower) covering every count-based statistic.

    Thresholds are picked so that tiny audits still mix all four outcomes:
    certification, proof, escalation, and exhausting the schedule.
    """
    return [
        (
            "bayes-uniform",
            MethodSpec(
                "bayesian",
                prior=PriorSpec.beta_binomial(total, 1, 1),
                scheme_variant=WITHOUT_REPLACEMENT,
            ),
            4.0,
            0.25,
        ),
        (
            "bayes-heavy",
            MethodSpec(
                "bayesian",
                prior=PriorSpec.beta_binomial(total, 100, 100),
                scheme_variant=WITHOUT_REPLACEMENT,
            ),
            3.0,
            0.5,
        ),
        (
            "bravo-narrow",
            MethodSpec("bravo", p1=0.55, scheme_variant=WITH_REPLACEMENT),
            2.0,
            0.4,
        ),
        (
            "bravo-strong",
            MethodSpec("bravo", p1=0.7, scheme_variant=WITH_REPLACEMENT),
            4.0,
            0.3,
        ),
        (
            "riskmax",
            MethodSpec(
                "bayesian-risk-max",
                prior=PriorSpec.risk_maximizing(1, 1),
                scheme_variant=WITH_REPLACEMENT,
            ),
            3.0,
            0.6,
        ),
        (
            "max-bravo",
            MethodSpec("max-bravo", scheme_variant=WITH_REPLACEMENT),
            4.0,
            1.05,
        ),
        ("clip", MethodSpec("clip-audit"), 2.0, -0.8),
        (
            "kmart",
            MethodSpec("kmart", scheme_variant=WITH_REPLACEMENT),
            3.0,
            0.5,
        ),
    ]


def _methods_without(total):
    # p1 = 0.75 keeps the rounded alternative tally above the null tally at
    # every population size down to 1, so the finite-lattice form is valid.
    extra = [
        ("bravo-exact-tally", MethodSpec("bravo", p1=0.75), 4.0, 0.3),
    ]
    return _methods(total) + extra


def _oracle_decision(method, scheme, rule):
    stat = st.point_evaluator(method, scheme)
    upper = st.scaled_threshold(method, rule.upper_threshold)
    lower = None
    if rule.lower_threshold is not None:
        lower = st.scaled_threshold(method, rule.lower_threshold)
    proven = lattice.proven_threshold(scheme, method.null_mean)
    return make_decision_fn(
        stat, upper, lower, rule.min_sample, rule.max_sample, proven
    )


def _assert_matches(res, ref):
    assert set(res.stop_pmf) == set(res.schedule)
    assert set(res.escalate_pmf) == set(res.schedule)
    for n in res.schedule:
        assert res.stop_pmf[n] == pytest.approx(
            float(ref["stop_pmf"].get(n, 0)), abs=TOL
        )
        assert res.escalate_pmf[n] == pytest.approx(
            float(ref["escalate_pmf"].get(n, 0)), abs=TOL
        )
    assert res.power == pytest.approx(float(ref["power"]), abs=TOL)
    assert res.certify_proven_mass == pytest.approx(float(ref["proven"]), abs=TOL)
    assert res.mean_sample_size == pytest.approx(float(ref["mean"]), abs=TOL)


def _tallies(N):
    return sorted({N // 2, (3 * N + 3) // 4, N})


@pytest.mark.parametrize("N", range(1, 13))
@pytest.mark.parametrize(
    "case", _methods_without(1), ids=[c[0] for c in _methods_without(1)]
)
def test_forward_dp_matches_enumeration_without_replacement(case, N):
    label, _, upper, lower = case
    method = dict(
        (c[0], c[1]) for c in _methods_without(N)
    )[label]
    scheme = SamplingScheme.without_replacement(N)
    rule = StoppingRule.with_increment(upper, N, lower_threshold=lower)
    decide = _oracle_decision(method, scheme, rule)
    for T in _tallies(N):
        res = exact.forward_dp(method, rule, scheme, TrueTally.count(T))
        ref = enumerate_audit(decide, N, rule.schedule, N=N, T=T)
        _assert_matches(res, ref)


@pytest.mark.parametrize("p", [0.5, 0.5625, 0.75])
@pytest.mark.parametrize("case", _methods(12), ids=[c[0] for c in _methods(12)])
def test_forward_dp_matches_enumeration_with_replacement(case, p):
    _, method, upper, lower = case
    scheme = SamplingScheme.with_replacement()
    rule = StoppingRule.with_increment(upper, 12, lower_threshold=lower)
    decide = _oracle_decision(method, scheme, rule)
    res = exact.forward_dp(method, rule, scheme, TrueTally.share(p))
    # these shares are binary fractions, so Fraction(p) is the same number
    ref = enumerate_audit(decide, 12, rule.schedule, p=Fraction(p))
    _assert_matches(res, ref)


def test_forward_dp_sparse_schedule():
    N = 12
    method = MethodSpec("bayesian", prior=PriorSpec.beta_binomial(N, 1, 1))
    scheme = SamplingScheme.without_replacement(N)
    rule = StoppingRule(
        upper_threshold=4.0,
        max_sample=N,
        lower_threshold=0.25,
        schedule=(3, 7, 12),
    )
    decide = _oracle_decision(method, scheme, rule)
    for T in (6, 9, 12):
        res = exact.forward_dp(method, rule, scheme, TrueTally.count(T))
        assert set(res.stop_pmf) == {3, 7, 12}
        ref = enumerate_audit(decide, N, rule.schedule, N=N, T=T)
        _assert_matches(res, ref)


def test_forward_dp_min_sample_gates_every_exit():
    # with all twelve ballots for the winner the outcome is proven at Y = 7,
    # but the gate holds the audit until n = 9
    N = 12
    method = MethodSpec("bayesian", prior=PriorSpec.beta_binomial(N, 1, 1))
    scheme = SamplingScheme.without_replacement(N)
    rule = StoppingRule.with_increment(4.0, N, min_sample=9)
    decide = _oracle_decision(method, scheme, rule)
    res = exact.forward_dp(method, rule, scheme, TrueTally.count(N))
    assert all(res.stop_pmf[n] == 0.0 for n in res.schedule if n < 9)
    assert res.stop_pmf[9] == 1.0
    assert res.mean_sample_size == 9.0
    ref = enumerate_audit(decide, N, rule.schedule, N=N, T=N)
    _assert_matches(res, ref)


def test_forward_dp_proven_exit_is_exact():
    # an unreachable upper threshold isolates the proven region: every
    # trajectory exits at floor(N/2) + 1 draws with probability one
    N = 12
    method = MethodSpec("bayesian", prior=PriorSpec.beta_binomial(N, 1, 1))
    scheme = SamplingScheme.without_replacement(N)
    rule = StoppingRule.with_increment(1e12, N)
    res = exact.forward_dp(method, rule, scheme, TrueTally.count(N))
    assert res.stop_pmf[7] == 1.0
    assert res.certify_proven_mass == 1.0
    assert res.power == 1.0
    assert res.mean_sample_size == 7.0


@pytest.mark.parametrize("scheme_kind", ["without", "with"])
def test_eval_result_accounting(scheme_kind):
    if scheme_kind == "without":
        scheme = SamplingScheme.without_replacement(12)
        tally = TrueTally.count(8)
    else:
        scheme = SamplingScheme.with_replacement()
        tally = TrueTally.share(0.5625)
    for _, method, upper, lower in _methods(12):
        rule = StoppingRule.with_increment(upper, 12, lower_threshold=lower)
        res = exact.forward_dp(method, rule, scheme, tally)
        assert all(0.0 <= v <= 1.0 for v in res.stop_pmf.values())
        assert all(0.0 <= v <= 1.0 for v in res.escalate_pmf.values())
        assert res.power == pytest.approx(
            math.fsum(res.stop_pmf.values()), abs=1e-15
        )
        exits = res.power + math.fsum(res.escalate_pmf.values())
        assert exits <= 1.0 + 1e-12
        cum = res.cumulative_stop()
        assert [n for n, _ in cum] == list(res.schedule)
        assert all(b[1] >= a[1] for a, b in zip(cum, cum[1:]))
        assert cum[-1][1] == pytest.approx(res.power, abs=1e-15)
        mean = math.fsum(n * v for n, v in res.stop_pmf.items())
        mean += rule.max_sample * (1.0 - res.power)
        assert res.mean_sample_size == pytest.approx(mean, abs=1e-12)
        assert res.risk_context == tally


def test_max_risk_attained_at_largest_losing_tally():
    N = 12
    scheme = SamplingScheme.without_replacement(N)
    for label, method, upper, lower in _methods_without(N):
        rule = StoppingRule.with_increment(upper, N, lower_threshold=lower)
        powers = {
            T: exact.forward_dp(method, rule, scheme, TrueTally.count(T)).power
            for T in range(0, N // 2 + 1)
        }
        risk = exact.max_risk(method, rule, scheme)
        assert risk == max(powers.values()), label
        assert risk == powers[N // 2], label


def test_max_risk_attained_at_exact_tie_share():
    scheme = SamplingScheme.with_replacement()
    method = MethodSpec("bravo", p1=0.7)
    rule = StoppingRule.with_increment(4.0, 12)
    powers = {
        k: exact.forward_dp(
            method, rule, scheme, TrueTally.share(k / 16)
        ).power
        for k in range(0, 9)
    }
    risk = exact.max_risk(method, rule, scheme)
    assert risk == powers[8]
    assert risk == max(powers.values())


def test_forward_dp_domain_errors():
    scheme = SamplingScheme.without_replacement(12)
    method = MethodSpec("clip-audit")
    with pytest.raises(DomainError, match="exceeds the ballot population"):
        exact.forward_dp(
            method, StoppingRule.with_increment(2.0, 13), scheme, TrueTally.count(6)
        )
    with pytest.raises(DomainError, match="exceeds total_ballots"):
        exact.forward_dp(
            method, StoppingRule.with_increment(2.0, 12), scheme, TrueTally.count(13)
        )
    with pytest.raises(DomainError, match="needs the true share"):
        exact.forward_dp(
            method,
            StoppingRule.with_increment(2.0, 12),
            SamplingScheme.with_replacement(),
            TrueTally.count(6),
        )


# ---------------------------------------------------------------------------
# conditional (mid-audit) evaluation


def _enumerate_from(decide, n0, y0, end, pts, *, N=None, T=None, p=None):
    """Certification mass within (n0, end] starting from state (n0, y0)."""
    without = p is None
    mass = {y0: Fraction(1)}
    pts_set = set(pts)
    stopped = Fraction(0)
    for n in range(n0 + 1, end + 1):
        nxt = {}
        for y, pr in mass.items():
            if without:
                q = Fraction(T - y, N - (n - 1))
                if q < 0:
                    q = Fraction(0)
            else:
                q = p
            if q > 0:
                nxt[y + 1] = nxt.get(y + 1, Fraction(0)) + pr * q
            if q < 1:
                nxt[y] = nxt.get(y, Fraction(0)) + pr * (1 - q)
        mass = nxt
        if n in pts_set:
            for y in sorted(mass):
                d = decide(n, y)
                if d in (CERTIFY, PROVEN):
                    stopped += mass.pop(y)
                elif d == ESCALATE:
                    mass.pop(y)
    return stopped


def _probe_points(rule, n0, delta):
    end = min(n0 + delta, rule.max_sample)
    pts = tuple(n for n in rule.schedule if n0 < n <= end)
    if not pts or pts[-1] != end:
        pts = pts + (end,)
    return end, pts


@pytest.mark.parametrize("y0", [2, 3, 4])
def test_conditional_eval_matches_enumeration_without_replacement(y0):
    N, T, n0 = 12, 9, 4
    method = MethodSpec("bayesian", prior=PriorSpec.beta_binomial(N, 1, 1))
    scheme = SamplingScheme.without_replacement(N)
    rule = StoppingRule.with_increment(4.0, N, lower_threshold=0.25)
    decide = _oracle_decision(method, scheme, rule)
    horizons = [1, 2, 5, 8, 100]
    got = exact.conditional_eval(
        method, rule, scheme, TrueTally.count(T), (n0, y0), horizons
    )
    assert sorted(got) == sorted(horizons)
    for delta in horizons:
        end, pts = _probe_points(rule, n0, delta)
        want = _enumerate_from(decide, n0, y0, end, pts, N=N, T=T)
        assert got[delta] == pytest.approx(float(want), abs=TOL)


def test_conditional_eval_matches_enumeration_with_replacement():
    method = MethodSpec("bravo", p1=0.7)
    scheme = SamplingScheme.with_replacement()
    rule = StoppingRule.with_increment(4.0, 12, lower_threshold=0.3)
    decide = _oracle_decision(method, scheme, rule)
    p = Fraction(3, 4)
    got = exact.conditional_eval(
        method, rule, scheme, TrueTally.share(0.75), (5, 3), [1, 4, 7, 40]
    )
    for delta, prob in got.items():
        end, pts = _probe_points(rule, 5, delta)
        want = _enumerate_from(decide, 5, 3, end, pts, p=p)
        assert prob == pytest.approx(float(want), abs=TOL)


def test_conditional_eval_respects_min_sample():
    N, T = 12, 9
    method = MethodSpec("bayesian", prior=PriorSpec.beta_binomial(N, 1, 1))
    scheme = SamplingScheme.without_replacement(N)
    rule = StoppingRule.with_increment(2.0, N, min_sample=8, lower_threshold=0.25)
    decide = _oracle_decision(method, scheme, rule)
    got = exact.conditional_eval(
        method, rule, scheme, TrueTally.count(T), (4, 3), [2, 6]
    )
    # the horizon of 2 ends at n = 6, before the gate opens
    assert got[2] == 0.0
    end, pts = _probe_points(rule, 4, 6)
    want = _enumerate_from(decide, 4, 3, end, pts, N=N, T=T)
    assert got[6] == pytest.approx(float(want), abs=TOL)


def test_conditional_eval_sparse_schedule_adds_horizon_end():
    N, T = 12, 9
    method = MethodSpec("bayesian", prior=PriorSpec.beta_binomial(N, 1, 1))
    scheme = SamplingScheme.without_replacement(N)
    rule = StoppingRule(
        upper_threshold=4.0,
        max_sample=N,
        lower_threshold=0.25,
        schedule=(3, 7, 12),
    )
    decide = _oracle_decision(method, scheme, rule)
    got = exact.conditional_eval(
        method, rule, scheme, TrueTally.count(T), (4, 1), [2, 3, 8]
    )
    # delta 2 ends between schedule points: the end itself decides
    for delta, pts in [(2, (6,)), (3, (7,)), (8, (7, 12))]:
        end = 4 + delta
        assert _probe_points(rule, 4, delta) == (end, pts)
        want = _enumerate_from(decide, 4, 1, end, pts, N=N, T=T)
        assert got[delta] == pytest.approx(float(want), abs=TOL)


def test_conditional_eval_from_start_matches_forward_dp():
    N, T = 12, 9
    method = MethodSpec("bayesian", prior=PriorSpec.beta_binomial(N, 1, 1))
    scheme = SamplingScheme.without_replacement(N)
    rule = StoppingRule.with_increment(4.0, N, lower_threshold=0.25)
    full = exact.forward_dp(method, rule, scheme, TrueTally.count(T))
    got = exact.conditional_eval(
        method, rule, scheme, TrueTally.count(T), (0, 0), [N]
    )
    assert got[N] == pytest.approx(full.power, abs=1e-14)


def test_conditional_eval_horizon_clamps_to_max_sample():
    N, T = 12, 9
    method = MethodSpec("bayesian", prior=PriorSpec.beta_binomial(N, 1, 1))
    scheme = SamplingScheme.without_replacement(N)
    rule = StoppingRule.with_increment(4.0, N)
    got = exact.conditional_eval(
        method, rule, scheme, TrueTally.count(T), (8, 6), [4, 9, 1000]
    )
    assert got[9] == got[4]
    assert got[1000] == got[4]


def test_conditional_eval_domain_errors():
    N = 12
    method = MethodSpec("bayesian", prior=PriorSpec.beta_binomial(N, 1, 1))
    scheme = SamplingScheme.without_replacement(N)
    rule = StoppingRule.with_increment(4.0, N)
    tally = TrueTally.count(6)

    def call(state, horizons, tal=tally, sch=scheme):
        return exact.conditional_eval(method, rule, sch, tal, state, horizons)

    with pytest.raises(DomainError, match="horizons must be positive"):
        call((4, 2), [0])
    with pytest.raises(DomainError, match="already at max_sample"):
        call((12, 6), [1])
    with pytest.raises(DomainError, match="winner count must lie"):
        call((4, 5), [1])
    with pytest.raises(DomainError, match="winner count must lie"):
        call((4, -1), [1])
    # more winners seen than the hypothesized tally holds
    with pytest.raises(DomainError, match="unreachable"):
        call((8, 7), [1])
    # more losers seen than the tally leaves in the population
    with pytest.raises(DomainError, match="unreachable"):
        call((4, 0), [1], tal=TrueTally.count(10))
    with pytest.raises(DomainError, match="needs the true share"):
        call((4, 2), [1], sch=SamplingScheme.with_replacement())
