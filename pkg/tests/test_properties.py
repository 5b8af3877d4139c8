"""Structural invariants checked over randomized inputs."""
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as hs

import oracles
from ballotaudit import lattice
from ballotaudit import statistics as st
from ballotaudit.types import (
    BallotSample,
    MethodSpec,
    PriorSpec,
    SamplingScheme,
)

WR = SamplingScheme.with_replacement()


def wo(N):
    return SamplingScheme.without_replacement(N)


def _method_case(draw, n):
    """Draw one (method, scheme) pair valid for a sample of size n."""
    kind = draw(
        hs.sampled_from(
            [
                "bravo-wr",
                "bravo-wor",
                "max-bravo",
                "clip",
                "kaplan-markov",
                "kaplan-wald-wr",
                "kmart-wr",
                "beta",
                "beta-binomial",
                "risk-max",
                "point-pair",
            ]
        )
    )
    shapes = hs.floats(min_value=0.05, max_value=50.0)
    if kind == "bravo-wr":
        p1 = draw(hs.floats(min_value=0.51, max_value=1.0))
        return MethodSpec(kind="bravo", p1=p1), WR
    if kind == "bravo-wor":
        N = draw(hs.integers(min_value=n, max_value=400))
        p1 = draw(hs.floats(min_value=0.51, max_value=1.0))
        assume(int(round(p1 * N)) > N // 2)  # alternative must clear the null tally
        return MethodSpec(kind="bravo", p1=p1), wo(N)
    if kind == "max-bravo":
        return MethodSpec(kind="max-bravo"), WR
    if kind == "clip":
        return MethodSpec(kind="clip-audit"), WR
    if kind == "kaplan-markov":
        gamma = draw(hs.floats(min_value=0.05, max_value=5.0))
        return MethodSpec(kind="kaplan-markov", gamma=gamma), WR
    if kind == "kaplan-wald-wr":
        gamma = draw(hs.floats(min_value=0.01, max_value=1.0))
        return MethodSpec(kind="kaplan-wald", gamma=gamma), WR
    if kind == "kmart-wr":
        return MethodSpec(kind="kmart"), WR
    if kind == "beta":
        prior = PriorSpec.beta(draw(shapes), draw(shapes))
        return MethodSpec(kind="bayesian", prior=prior), WR
    if kind == "beta-binomial":
        N = draw(hs.integers(min_value=n, max_value=300))
        prior = PriorSpec.beta_binomial(N, draw(shapes), draw(shapes))
        return MethodSpec(kind="bayesian", prior=prior), wo(N)
    if kind == "risk-max":
        prior = PriorSpec.risk_maximizing(draw(shapes), draw(shapes))
        return MethodSpec(kind="bayesian-risk-max", prior=prior), WR
    p1 = draw(hs.floats(min_value=0.55, max_value=0.95))
    return MethodSpec(kind="bayesian", prior=PriorSpec.point_pair(0.5, p1)), WR


@given(data=hs.data())
def test_statistic_nondecreasing_in_winner_count(data):
    n = data.draw(hs.integers(min_value=1, max_value=200))
    method, scheme = _method_case(data.draw, n)
    ev = lattice.evaluator(method, scheme)
    vals = ev.values(n, np.arange(n + 1, dtype=np.int64))
    finite = np.isfinite(vals)
    # allow float noise but no real decreases
    for i in range(n):
        a, b = vals[i], vals[i + 1]
        if a == -math.inf or b == math.inf:
            continue
        assert b >= a - 1e-10 - 1e-12 * abs(a), (method.kind, n, i, a, b)
    # the infinite regions, when present, must sit on the correct sides
    if np.any(~finite):
        idx = np.nonzero(vals == math.inf)[0]
        assert np.all(idx > n / 2) if len(idx) else True


@given(data=hs.data())
def test_upset_probability_nonincreasing_in_winner_count(data):
    n = data.draw(hs.integers(min_value=1, max_value=120))
    a = data.draw(hs.floats(min_value=0.1, max_value=30.0))
    b = data.draw(hs.floats(min_value=0.1, max_value=30.0))
    prior = PriorSpec.risk_maximizing(a, b)
    prev = None
    for y in range(n + 1):
        u = st.upset_probability(BallotSample.from_counts(n, y), prior, WR)
        assert 0.0 <= u <= 1.0
        if prev is not None:
            assert u <= prev + 1e-12
        prev = u


@given(
    n=hs.integers(min_value=1, max_value=8),
    N=hs.integers(min_value=8, max_value=12),
    T=hs.integers(min_value=0, max_value=12),
)
def test_sequence_probabilities_sum_to_one_without_replacement(n, N, T):
    if T > N:
        T = N
    total = Fraction(0)
    for y in range(n + 1):
        total += math.comb(n, y) * oracles.ordered_hypergeom(n, y, N, T)
    assert total == 1
    # the package's log values integrate to the same total
    acc = 0.0
    for y in range(n + 1):
        lp = st.log_sequence_probability(BallotSample.from_counts(n, y), wo(N), T)
        if lp > -math.inf:
            acc += math.comb(n, y) * math.exp(lp)
    assert acc == pytest.approx(1.0, abs=1e-12)


@given(
    n=hs.integers(min_value=1, max_value=10),
    p=hs.floats(min_value=0.0, max_value=1.0),
)
def test_sequence_probabilities_sum_to_one_with_replacement(n, p):
    acc = 0.0
    for y in range(n + 1):
        lp = st.log_sequence_probability(BallotSample.from_counts(n, y), WR, p)
        if lp > -math.inf:
            acc += math.comb(n, y) * math.exp(lp)
    assert acc == pytest.approx(1.0, abs=1e-12)


@given(
    n=hs.integers(min_value=1, max_value=60),
    N=hs.integers(min_value=60, max_value=200),
    T=hs.integers(min_value=0, max_value=200),
    y_seed=hs.integers(min_value=0, max_value=10**6),
)
def test_sequence_probability_matches_rational_value(n, N, T, y_seed):
    T = min(T, N)
    y = y_seed % (n + 1)
    want = oracles.ordered_hypergeom(n, y, N, T)
    got = st.log_sequence_probability(BallotSample.from_counts(n, y), wo(N), T)
    if want == 0:
        assert got == -math.inf
    else:
        assert got == pytest.approx(float(math.log(want)), rel=1e-12)


@given(data=hs.data())
def test_linear_view_is_exp_of_log_view(data):
    n = data.draw(hs.integers(min_value=1, max_value=150))
    y = data.draw(hs.integers(min_value=0, max_value=n))
    method, scheme = _method_case(data.draw, n)
    if method.kind == "clip-audit":
        return  # raw scale, no log/linear pair
    sample = BallotSample.from_counts(n, y)
    point = st.point_evaluator(method, scheme)
    lv = point(n, y)
    if method.kind == "bravo":
        linear = st.bravo_statistic(sample, method.p1, scheme)
    elif method.kind == "max-bravo":
        linear = st.maxbravo_statistic(sample)
    elif method.kind == "kaplan-markov":
        linear = st.kaplan_markov(sample, method.gamma)
    elif method.kind == "kaplan-wald":
        linear = st.kaplan_wald(sample, method.gamma, scheme)
    elif method.kind == "kmart":
        linear = st.kmart_with_replacement(sample)
    else:
        linear = st.bayes_factor(sample, method.prior, scheme)
    if lv == -math.inf:
        assert linear == 0.0
    elif lv == math.inf:
        assert linear == math.inf
    else:
        assert linear == pytest.approx(math.exp(lv), rel=1e-12)


@given(data=hs.data())
def test_state_accumulation_matches_point_values(data):
    xs = data.draw(hs.lists(hs.integers(min_value=0, max_value=1), min_size=1, max_size=40))
    method, scheme = _method_case(data.draw, len(xs))
    state = st.statistic_state(method, scheme)
    point = st.point_evaluator(method, scheme)
    y = 0
    for i, x in enumerate(xs, start=1):
        state.update(x)
        y += x
        want = point(i, y)
        got = state.log_value()
        if math.isinf(want):
            assert got == want
        else:
            assert got == pytest.approx(want, rel=1e-12, abs=1e-12)


@given(
    xs=hs.lists(hs.integers(min_value=0, max_value=1), min_size=1, max_size=30),
    N=hs.integers(min_value=30, max_value=80),
)
def test_proven_state_depends_only_on_the_total(xs, N):
    state = st.KmartWithoutState(N)
    for x in xs:
        state.update(x)
    assert state.proven == (sum(xs) > N // 2)
    if state.proven:
        assert state.log_value() == math.inf


@given(
    n=hs.integers(min_value=1, max_value=200),
    y_seed=hs.integers(min_value=0, max_value=10**6),
    a=hs.floats(min_value=0.1, max_value=40.0),
    b=hs.floats(min_value=0.1, max_value=40.0),
)
def test_upset_is_sigmoid_of_posterior_odds(n, y_seed, a, b):
    y = y_seed % (n + 1)
    sample = BallotSample.from_counts(n, y)
    for prior in (PriorSpec.beta(a, b), PriorSpec.risk_maximizing(a, b)):
        lo = st.log_bayes_factor(sample, prior, WR)
        u = st.upset_probability(sample, prior, WR)
        if lo == math.inf:
            assert u == 0.0
        elif lo == -math.inf:
            assert u == 1.0
        else:
            assert u == pytest.approx(1.0 / (1.0 + math.exp(lo)), rel=1e-12)


@given(n=hs.integers(min_value=1, max_value=150))
def test_clip_antisymmetry(n):
    for y in range(n + 1):
        a = st.clip_statistic(BallotSample.from_counts(n, y))
        b = st.clip_statistic(BallotSample.from_counts(n, n - y))
        assert a == pytest.approx(-b, abs=1e-12)
