"""Vectorized statistic evaluation on the (n, Y) lattice.

Calibration and the exact DP need, for many thresholds, the smallest
certifying Y at every schedule point. Statistics here are nondecreasing in Y
at fixed n, so it suffices to tabulate a narrow window of values around the
threshold range once and binary-search it per threshold. Windows are the
expensive part (a beta-binomial evaluation per lattice point); they depend
only on the method and schedule, never on the threshold, and are cached.
"""
from __future__ import annotations

import math
from typing import Callable, List, Optional, Tuple

import numpy as np

from . import statistics as st
from .types import (
    WITH_REPLACEMENT,
    DomainError,
    MethodSpec,
    SamplingScheme,
)

_MARGIN = 0.75
_CHUNK = 32


class LatticeEval:
    """Decision-scale statistic over Y arrays at fixed n.

    values(n, ys) must be nondecreasing in Y. min_value is a hard floor the
    statistic cannot go below (used to stop window growth at plateaus);
    -inf when there is none. y_star, when set, inverts the threshold in
    closed form: smallest Y with S(n, Y) strictly above thr.
    """

    def __init__(
        self,
        scale: str,
        values: Callable[[int, np.ndarray], np.ndarray],
        min_value: float = -math.inf,
        y_star: Optional[Callable[[int, float], Optional[int]]] = None,
        y_escalate: Optional[Callable[[int, float], Optional[int]]] = None,
    ):
        self.scale = scale
        self._values = values
        self.min_value = min_value
        self.y_star = y_star
        self.y_escalate = y_escalate

    def values(self, n: int, ys: np.ndarray) -> np.ndarray:
        return self._values(n, np.asarray(ys, dtype=np.int64))


def _affine_eval(scale: str, up: float, down: float, min_value=-math.inf) -> LatticeEval:
    # S(n, Y) = Y*up + (n-Y)*down with up > down

    def values(n: int, ys: np.ndarray) -> np.ndarray:
        ysf = ys.astype(np.float64)
        if down == -math.inf:
            return np.where(ys >= n, ysf * up, -np.inf)
        return ysf * up + (n - ysf) * down

    def y_star(n: int, thr: float) -> Optional[int]:
        if down == -math.inf:
            return n if n * up > thr else None
        x = (thr - n * down) / (up - down)
        y = int(math.floor(x)) + 1
        if y > n:
            return None
        return max(y, 0)

    def y_escalate(n: int, thr: float) -> Optional[int]:
        # largest Y with S strictly below thr
        if down == -math.inf:
            if n < 1:
                return None
            return n if n * up < thr else n - 1
        x = (thr - n * down) / (up - down)
        y = int(math.ceil(x)) - 1
        if x == math.floor(x):  # S(x) == thr exactly, not strictly below
            y = int(x) - 1
        if y < 0:
            return None
        return min(y, n)

    return LatticeEval(scale, values, min_value, y_star, y_escalate)


def _need_total(scheme: Optional[SamplingScheme], kind: str) -> int:
    if scheme is None or scheme.total_ballots is None:
        raise DomainError(
            f"the without-replacement form of {kind} needs total_ballots"
        )
    return scheme.total_ballots


def evaluator(method: MethodSpec, scheme: Optional[SamplingScheme]) -> LatticeEval:
    """Build the lattice evaluator for a count-based method."""
    if method.order_dependent(scheme):
        raise DomainError(
            f"{method.kind} depends on draw order under this scheme; "
            "use a session or the simulator"
        )
    kind = method.kind
    t = method.null_mean
    variant = method.resolve_variant(scheme)

    if kind == "bravo":
        if variant == WITH_REPLACEMENT:
            up = math.log(method.p1) - math.log(t)
            down = (
                -math.inf
                if method.p1 >= 1.0
                else math.log1p(-method.p1) - math.log1p(-t)
            )
            return _affine_eval("log", up, down)
        N = _need_total(scheme, kind)
        T1 = int(round(method.p1 * N))
        T0 = int(math.floor(N * t))
        if T1 <= T0:
            raise DomainError(
                "alternative tally rounds onto the null tally at this N; "
                "p1 is too close to the null mean"
            )
        return LatticeEval("log", lambda n, ys: st.lattice_bravo_wor(n, ys, N, T1, T0))

    if kind == "max-bravo":
        if variant != WITH_REPLACEMENT:
            raise DomainError(
                "the maximized statistic uses the binomial likelihood only; "
                "set scheme_variant to with-replacement"
            )
        return LatticeEval(
            "log", lambda n, ys: st.lattice_maxbravo(n, ys, t), min_value=0.0
        )

    if kind == "clip-audit":

        def clip_star(n: int, thr: float) -> Optional[int]:
            x = (n + thr * math.sqrt(n)) / 2.0
            y = int(math.floor(x)) + 1
            return y if y <= n else None

        def clip_escalate(n: int, thr: float) -> Optional[int]:
            x = (n + thr * math.sqrt(n)) / 2.0
            y = int(math.ceil(x)) - 1
            if x == math.floor(x):
                y = int(x) - 1
            if y < 0:
                return None
            return min(y, n)

        return LatticeEval(
            "raw",
            lambda n, ys: st.lattice_clip(n, ys),
            y_star=clip_star,
            y_escalate=clip_escalate,
        )

    if kind == "kaplan-markov":
        g = method.gamma
        up = math.log1p(g) - math.log(t + g)
        down = math.log(g) - math.log(t + g)
        return _affine_eval("log", up, down)

    if kind == "kaplan-wald":
        g = method.gamma
        up = math.log1p(g * (1.0 / t - 1.0))
        down = math.log1p(-g) if g < 1 else -math.inf
        return _affine_eval("log", up, down)

    if kind == "kmart":
        if method.prior is not None and method.prior.g is not None:
            raise DomainError(
                "weighted integral statistics have no lattice form; "
                "evaluate them pointwise"
            )
        if t != 0.5:
            raise DomainError("the integral statistic's closed form needs t = 1/2")
        return LatticeEval("log", lambda n, ys: st.lattice_kmart_wr(n, ys))

    if kind == "bayesian":
        prior = method.prior
        if prior.variant == "point-pair":
            N = None if variant == WITH_REPLACEMENT else _need_total(scheme, kind)
            return LatticeEval(
                "log", lambda n, ys: st.lattice_point_pair(n, ys, prior, variant, N)
            )
        if prior.variant == "beta":
            if variant != WITH_REPLACEMENT:
                raise DomainError(
                    "a beta prior needs the binomial likelihood; use a "
                    "beta-binomial prior without replacement"
                )
            return LatticeEval(
                "log",
                lambda n, ys: st.lattice_beta_prior(n, ys, prior.a, prior.b, t),
            )
        if prior.variant == "beta-binomial":
            if variant == WITH_REPLACEMENT:
                raise DomainError(
                    "a beta-binomial prior needs without-replacement sampling"
                )
            total = prior.total
            if (
                scheme is not None
                and scheme.total_ballots is not None
                and scheme.total_ballots != total
            ):
                raise DomainError("prior total disagrees with the sampling scheme")
            null_count = int(math.floor(total * t))
            return LatticeEval(
                "log",
                lambda n, ys: st.lattice_bb(n, ys, total, prior.a, prior.b, null_count),
            )
        raise DomainError(f"no lattice form for prior variant {prior.variant!r}")

    if kind == "bayesian-risk-max":
        if variant != WITH_REPLACEMENT:
            raise DomainError(
                "the spiked-prior statistic uses the binomial likelihood only; "
                "set scheme_variant to with-replacement"
            )
        if method.null_mean != 0.5:
            raise DomainError("the spiked prior is defined at null mean 1/2")
        prior = method.prior
        return LatticeEval(
            "log", lambda n, ys: st.lattice_riskmax(n, ys, prior.a, prior.b)
        )

    raise DomainError(f"unknown method kind {kind!r}")


def proven_threshold(scheme: Optional[SamplingScheme], t: float) -> Optional[int]:
    """Smallest Y proving the outcome outright, independent of n."""
    if scheme is None or scheme.replaces:
        return None
    return int(math.floor(scheme.total_ballots * t)) + 1


# ---------------------------------------------------------------------------
# threshold-independent windows


class Windows:
    """Per schedule point: a contiguous ascending slice of statistic values.

    Covers every threshold in [lo, hi] on the decision scale, so boundaries
    for any threshold in that range come from binary search alone.
    """

    def __init__(
        self,
        schedule: Tuple[int, ...],
        starts: np.ndarray,
        vals: List[np.ndarray],
        caps: np.ndarray,
        lo: float,
        hi: float,
        min_value: float,
    ):
        self.schedule = schedule
        self._starts = starts
        self._vals = vals
        self._caps = caps
        self.lo = lo
        self.hi = hi
        self._min_value = min_value

    def certify_boundary(self, thr: float) -> np.ndarray:
        """Smallest certifying Y per schedule point; n+1 where none exists."""
        if not self.lo <= thr <= self.hi:
            raise DomainError("threshold outside the window coverage")
        out = np.empty(len(self.schedule), dtype=np.int64)
        for i, n in enumerate(self.schedule):
            v = self._vals[i]
            k = int(np.searchsorted(v, thr, side="right"))
            if k == len(v):
                out[i] = min(n, self._caps[i]) + 1
            else:
                out[i] = self._starts[i] + k
        return out

    def escalate_boundary(self, thr: Optional[float]) -> np.ndarray:
        """Largest Y strictly below thr per schedule point; -1 where none."""
        out = np.full(len(self.schedule), -1, dtype=np.int64)
        if thr is None or thr <= self._min_value:
            return out
        if not self.lo <= thr <= self.hi:
            raise DomainError("threshold outside the window coverage")
        for i in range(len(self.schedule)):
            v = self._vals[i]
            j = int(np.searchsorted(v, thr, side="left"))
            out[i] = self._starts[i] + j - 1
        return out


def build_windows(
    ev: LatticeEval,
    schedule: Tuple[int, ...],
    lo: float,
    hi: float,
    caps: Optional[np.ndarray] = None,
) -> Windows:
    if hi < lo:
        raise DomainError("empty threshold coverage")
    if caps is None:
        caps = np.asarray(schedule, dtype=np.int64)
    starts = np.empty(len(schedule), dtype=np.int64)
    all_vals: List[np.ndarray] = []
    y0, y1 = 0, 0
    lo_stop = lo - _MARGIN
    hi_stop = hi + _MARGIN
    for i, n in enumerate(schedule):
        cap = int(min(n, caps[i]))
        y0 = min(y0, cap)
        y1 = min(max(y1, y0), cap)
        vals = ev.values(n, np.arange(y0, y1 + 1))
        # grow until the slice brackets the coverage or hits the lattice edge
        while vals[-1] <= hi_stop and y1 < cap:
            nxt = min(y1 + _CHUNK, cap)
            vals = np.concatenate([vals, ev.values(n, np.arange(y1 + 1, nxt + 1))])
            y1 = nxt
        while vals[0] > lo_stop and vals[0] > ev.min_value and y0 > 0:
            nxt = max(y0 - _CHUNK, 0)
            vals = np.concatenate([ev.values(n, np.arange(nxt, y0)), vals])
            y0 = nxt
        with np.errstate(invalid="ignore"):
            if np.any(np.diff(vals) < -1e-8):
                raise AssertionError(
                    f"statistic not nondecreasing in Y at n={n}; lattice walk invalid"
                )
            vals = np.maximum.accumulate(vals)
        i0 = int(np.searchsorted(vals, lo_stop, side="left"))
        i0 = max(i0 - 1, 0)
        i1 = int(np.searchsorted(vals, hi_stop, side="right"))
        i1 = min(i1 + 1, len(vals))
        starts[i] = y0 + i0
        all_vals.append(np.ascontiguousarray(vals[i0:i1]))
        y0, y1 = y0 + i0, y0 + i1 - 1
    return Windows(schedule, starts, all_vals, caps.copy(), lo, hi, ev.min_value)


_window_cache: dict = {}


def cached_windows(
    method: MethodSpec,
    scheme: Optional[SamplingScheme],
    schedule: Tuple[int, ...],
    lo: float,
    hi: float,
) -> Windows:
    """Window table cache; hit when only thresholds or min_sample change."""
    key = (method, scheme, schedule, round(lo, 9), round(hi, 9))
    win = _window_cache.get(key)
    if win is None:
        ev = evaluator(method, scheme)
        caps = _walk_caps(method, scheme, schedule)
        win = build_windows(ev, schedule, lo, hi, caps)
        if len(_window_cache) > 64:
            _window_cache.clear()
        _window_cache[key] = win
    return win


def _walk_caps(
    method: MethodSpec, scheme: Optional[SamplingScheme], schedule: Tuple[int, ...]
) -> np.ndarray:
    # never tabulate past the proven-win region; the statistic may be
    # infinite there and decisions never consult it
    sched = np.asarray(schedule, dtype=np.int64)
    prov = proven_threshold(scheme, method.null_mean)
    if prov is None:
        return sched
    return np.minimum(sched, prov)
