"""Special functions against high-precision references."""
import math

import mpmath
import pytest

from ballotaudit.special import (
    gauss_legendre_01,
    log_beta_fn,
    log_comb,
    log_reg_inc_beta,
    reg_inc_beta,
)
from ballotaudit.types import DomainError

mpmath.mp.dps = 50

SHAPE_GRID = [0.01, 0.5, 1.0, 2.5, 17.0, 100.0, 2000.0]
X_GRID = [0.001, 0.1, 0.25, 0.5, 0.75, 0.9, 0.999]


@pytest.mark.parametrize("a", SHAPE_GRID)
@pytest.mark.parametrize("b", SHAPE_GRID)
def test_log_beta_fn_matches_mpmath(a, b):
    want = float(mpmath.log(mpmath.beta(a, b)))
    assert log_beta_fn(a, b) == pytest.approx(want, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("a", [0.5, 1.0, 3.0, 40.0])
@pytest.mark.parametrize("b", [0.5, 1.0, 3.0, 40.0])
@pytest.mark.parametrize("x", X_GRID)
def test_reg_inc_beta_matches_mpmath(a, b, x):
    want = float(mpmath.betainc(a, b, 0, x, regularized=True))
    assert reg_inc_beta(x, a, b) == pytest.approx(want, rel=1e-12, abs=1e-14)


def test_reg_inc_beta_endpoints():
    assert reg_inc_beta(0.0, 2.0, 3.0) == 0.0
    assert reg_inc_beta(1.0, 2.0, 3.0) == 1.0


@pytest.mark.parametrize(
    "x,a,b",
    [
        (0.5, 3.0, 2.0),
        (0.5, 51.0, 1.0),
        (0.5, 600.0, 5.0),  # deep left tail, where the linear value underflows badly
        (0.5, 1200.0, 1.0),
        (0.2, 80.0, 3.0),
        (0.9, 2.0, 300.0),  # near-one side goes through log1p of the complement
        (0.5, 5.0, 600.0),
        (1e-12, 2.0, 2.0),
    ],
)
def test_log_reg_inc_beta_matches_mpmath(x, a, b):
    want = mpmath.log(mpmath.betainc(a, b, 0, x, regularized=True))
    got = log_reg_inc_beta(x, a, b)
    assert got == pytest.approx(float(want), rel=1e-11)


def test_log_reg_inc_beta_endpoints():
    assert log_reg_inc_beta(0.0, 4.0, 4.0) == -math.inf
    assert log_reg_inc_beta(1.0, 4.0, 4.0) == 0.0


def test_reg_inc_beta_reflection_identity():
    for a, b, x in [(3.0, 7.0, 0.3), (12.0, 2.0, 0.8), (1.0, 1.0, 0.5)]:
        left = reg_inc_beta(x, a, b)
        right = 1.0 - reg_inc_beta(1.0 - x, b, a)
        assert left == pytest.approx(right, rel=1e-13, abs=1e-15)


def test_domain_errors():
    with pytest.raises(DomainError):
        log_beta_fn(0.0, 1.0)
    with pytest.raises(DomainError):
        reg_inc_beta(0.5, -1.0, 2.0)
    with pytest.raises(DomainError):
        reg_inc_beta(1.5, 1.0, 2.0)
    with pytest.raises(DomainError):
        log_reg_inc_beta(0.5, 1.0, 0.0)


@pytest.mark.parametrize(
    "n,k",
    [(0, 0), (5, 2), (50, 25), (2000, 1000), (20000, 137)],
)
def test_log_comb_matches_exact(n, k):
    want = math.log(math.comb(n, k)) if math.comb(n, k) else -math.inf
    assert log_comb(n, k) == pytest.approx(want, rel=1e-13, abs=1e-13)


def test_log_comb_out_of_range():
    assert log_comb(5, 7) == -math.inf
    assert log_comb(5, -1) == -math.inf


def test_gauss_legendre_01_polynomial_exactness():
    nodes, weights = gauss_legendre_01(256)
    assert len(nodes) == 256 and len(weights) == 256
    assert abs(float(weights.sum()) - 1.0) < 1e-14
    # order-256 rule is exact through degree 511
    for k in (0, 1, 2, 7, 31, 200, 511):
        got = float((weights * nodes**k).sum())
        assert got == pytest.approx(1.0 / (k + 1), rel=1e-12)


def test_gauss_legendre_01_interval():
    nodes, _ = gauss_legendre_01(64)
    assert nodes.min() > 0.0 and nodes.max() < 1.0
