"""Declarative benchmark grids over methods and election sizes.

A grid is the cross product of methods, election sizes, sample caps,
schedule increments, and minimum sample sizes. Each cell either calibrates
to the target risk limit or applies a fixed threshold, then evaluates power
and mean sample size at every hypothesized true share. Cells run
concurrently; failures are recorded per cell and never abort the grid.

Output is a versioned CSV plus an aligned text table. Both are assembled
in cell order, so identical configurations produce byte-identical files.
"""
from __future__ import annotations

import io
import itertools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple

from . import exact
from .calibrate import calibrate, nominal_scale
from .types import (
    DomainError,
    EvalResult,
    MethodSpec,
    PriorSpec,
    SamplingScheme,
    StoppingRule,
    TrueTally,
    WITH_REPLACEMENT,
    WITHOUT_REPLACEMENT,
)

JOBS_ENV = "BALLOTAUDIT_JOBS"

MODE_CALIBRATED = "calibrated"
MODE_FIXED = "fixed"

CSV_VERSION = "# ballotaudit-bench v1"
PMF_VERSION = "# ballotaudit-pmf v1"


def method_label(method: MethodSpec) -> str:
    kind = method.kind
    if kind == "bravo":
        return f"bravo(p1={method.p1:g})"
    if kind == "bayesian":
        p = method.prior
        if p.variant == "beta-binomial":
            return f"bayes(bb a={p.a:g} b={p.b:g})"
        if p.variant == "beta":
            return f"bayes(beta a={p.a:g} b={p.b:g})"
        return f"bayes({p.variant})"
    if kind == "bayesian-risk-max":
        p = method.prior
        return f"riskmax(a={p.a:g} b={p.b:g})"
    if kind in ("kaplan-wald", "kaplan-markov", "kaplan-kolmogorov"):
        return f"{kind}(gamma={method.gamma:g})"
    return kind


@dataclass(frozen=True)
class ExperimentConfig:
    methods: Tuple[MethodSpec, ...]
    total_ballots: Tuple[int, ...]
    max_samples: Tuple[int, ...]
    true_shares: Tuple[float, ...]
    increments: Tuple[int, ...] = (1,)
    min_samples: Tuple[int, ...] = (0,)
    scheme_mode: str = WITHOUT_REPLACEMENT
    alpha: float = 0.05
    mode: str = MODE_CALIBRATED
    fixed_threshold: Optional[float] = None
    csv_path: Optional[str] = None
    table_path: Optional[str] = None
    jobs: Optional[int] = None

    def __post_init__(self):
        for name in ("methods", "total_ballots", "max_samples", "true_shares",
                     "increments", "min_samples"):
            if not getattr(self, name):
                raise DomainError(f"{name} must be non-empty")
        if self.scheme_mode not in (WITH_REPLACEMENT, WITHOUT_REPLACEMENT):
            raise DomainError(f"unknown sampling mode {self.scheme_mode!r}")
        if self.mode not in (MODE_CALIBRATED, MODE_FIXED):
            raise DomainError(f"unknown benchmark mode {self.mode!r}")
        if self.mode == MODE_FIXED and self.fixed_threshold is None:
            raise DomainError("fixed mode needs fixed_threshold")
        if not 0 < self.alpha < 1:
            raise DomainError("alpha must lie in (0, 1)")
        if self.scheme_mode == WITHOUT_REPLACEMENT:
            for N, m in itertools.product(self.total_ballots, self.max_samples):
                if m > N:
                    raise DomainError(f"max_sample {m} exceeds population {N}")

    def cells(self) -> List[Tuple[MethodSpec, int, int, int, int]]:
        return list(
            itertools.product(
                self.methods,
                self.total_ballots,
                self.max_samples,
                self.increments,
                self.min_samples,
            )
        )


@dataclass(frozen=True)
class ShareResult:
    share: float
    power: float
    mean_sample_size: float


@dataclass(frozen=True)
class BenchRow:
    label: str
    kind: str
    mode: str
    total_ballots: int
    max_sample: int
    increment: int
    min_sample: int
    threshold: Optional[float] = None
    nominal_name: Optional[str] = None
    nominal_value: Optional[float] = None
    achieved_risk: Optional[float] = None
    shares: Tuple[ShareResult, ...] = ()
    error: Optional[str] = None


@dataclass(frozen=True)
class BenchmarkResult:
    config: ExperimentConfig
    rows: Tuple[BenchRow, ...]

    @property
    def failed(self) -> bool:
        return any(row.error is not None for row in self.rows)

    def to_csv(self) -> str:
        shares = self.config.true_shares
        out = io.StringIO()
        out.write(CSV_VERSION + "\n")
        head = [
            "label", "kind", "mode", "N", "m", "increment", "min_sample",
            "nominal_name", "nominal_value", "threshold", "risk_pct",
        ]
        for p in shares:
            head += [f"power_pct@{p:g}", f"mean@{p:g}"]
        head.append("error")
        out.write(",".join(head) + "\n")
        for row in self.rows:
            cells = [
                row.label, row.kind, row.mode, str(row.total_ballots),
                str(row.max_sample), str(row.increment), str(row.min_sample),
                row.nominal_name or "", _fmt(row.nominal_value),
                _fmt(row.threshold),
                _fmt(None if row.achieved_risk is None else 100 * row.achieved_risk),
            ]
            by_share = {s.share: s for s in row.shares}
            for p in shares:
                s = by_share.get(p)
                cells += [
                    _fmt(None if s is None else 100 * s.power),
                    _fmt(None if s is None else s.mean_sample_size),
                ]
            cells.append(row.error or "")
            out.write(",".join(cells) + "\n")
        return out.getvalue()

    def to_table(self) -> str:
        shares = self.config.true_shares
        head = ["method", "mode", "n>=", "nominal", "risk%"]
        for p in shares:
            head += [f"pow%@{p:g}", f"mean@{p:g}"]
        body: List[List[str]] = []
        for row in self.rows:
            if row.error is not None:
                body.append([row.label, row.mode, str(row.min_sample),
                             "-", "-"] + ["!" for _ in shares for _ in (0, 1)])
                continue
            nominal = (
                f"{row.nominal_value:.4g}"
                if row.nominal_name == "clip_constant"
                else f"{100 * row.nominal_value:.2f}%"
            )
            line = [
                row.label, row.mode, str(row.min_sample), nominal,
                f"{100 * row.achieved_risk:.2f}",
            ]
            by_share = {s.share: s for s in row.shares}
            for p in shares:
                s = by_share[p]
                line += [f"{100 * s.power:.1f}", f"{s.mean_sample_size:.0f}"]
            body.append(line)
        widths = [max(len(h), *(len(r[i]) for r in body)) if body else len(h)
                  for i, h in enumerate(head)]
        lines = ["  ".join(h.ljust(w) for h, w in zip(head, widths)).rstrip()]
        lines.append("  ".join("-" * w for w in widths))
        for r in body:
            lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
        errors = [f"{row.label}: {row.error}" for row in self.rows if row.error]
        if errors:
            lines.append("")
            lines.append("failed cells:")
            lines.extend("  " + e for e in errors)
        return "\n".join(lines) + "\n"


def _fmt(x: Optional[float]) -> str:
    if x is None:
        return ""
    return f"{x:.10g}"


def _resolve_jobs(config: ExperimentConfig, jobs: Optional[int]) -> int:
    if jobs is not None:
        return max(1, int(jobs))
    if config.jobs is not None:
        return max(1, int(config.jobs))
    env = os.environ.get(JOBS_ENV)
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def _run_cell(
    config: ExperimentConfig, cell: Tuple[MethodSpec, int, int, int, int]
) -> BenchRow:
    method, N, m, increment, n_min = cell
    base = dict(
        label=method_label(method), kind=method.kind, mode=config.mode,
        total_ballots=N, max_sample=m, increment=increment, min_sample=n_min,
    )
    try:
        if config.scheme_mode == WITHOUT_REPLACEMENT:
            scheme = SamplingScheme.without_replacement(N)
        else:
            scheme = SamplingScheme.with_replacement()
        template = StoppingRule.with_increment(
            upper_threshold=2.0, max_sample=m, increment=increment,
            min_sample=n_min,
        )
        if config.mode == MODE_CALIBRATED:
            report = calibrate(method, template, scheme, alpha=config.alpha)
            rule = report.rule
            threshold = report.raw_threshold
            name, value = report.nominal_name, report.nominal_value
            risk = report.achieved_risk
        else:
            threshold = float(config.fixed_threshold)
            rule = template.with_threshold(threshold)
            name, value = nominal_scale(method, threshold)
            risk = exact.max_risk(method, rule, scheme)
        shares = tuple(
            ShareResult(
                share=p,
                power=res.power,
                mean_sample_size=res.mean_sample_size,
            )
            for p in config.true_shares
            for res in (exact.forward_dp(method, rule, scheme, TrueTally.share(p)),)
        )
        return BenchRow(
            **base, threshold=threshold, nominal_name=name, nominal_value=value,
            achieved_risk=risk, shares=shares,
        )
    except Exception as exc:  # per-cell isolation is the contract
        return BenchRow(**base, error=f"{type(exc).__name__}: {exc}")


def run_benchmark(
    config: ExperimentConfig, jobs: Optional[int] = None
) -> BenchmarkResult:
    cells = config.cells()
    workers = min(_resolve_jobs(config, jobs), len(cells))
    if workers <= 1:
        rows = [_run_cell(config, cell) for cell in cells]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda c: _run_cell(config, c), cells))
    result = BenchmarkResult(config=config, rows=tuple(rows))
    if config.csv_path:
        Path(config.csv_path).write_text(result.to_csv(), encoding="utf-8")
    if config.table_path:
        Path(config.table_path).write_text(result.to_table(), encoding="utf-8")
    return result


# ---------------------------------------------------------------------------
# presets: the headline grid at N=20000, m=2000, unit increment


def _main_methods(N: int) -> Tuple[MethodSpec, ...]:
    return (
        MethodSpec(kind="bayesian", prior=PriorSpec.beta_binomial(N, 1, 1)),
        MethodSpec(kind="bayesian", prior=PriorSpec.beta_binomial(N, 100, 100)),
        MethodSpec(kind="bravo", p1=0.55),
        MethodSpec(
            kind="bayesian-risk-max",
            prior=PriorSpec.risk_maximizing(1, 1),
            scheme_variant=WITH_REPLACEMENT,
        ),
        MethodSpec(kind="max-bravo", scheme_variant=WITH_REPLACEMENT),
        MethodSpec(kind="clip-audit"),
    )


def main_grid(N: int = 20000, m: int = 2000, alpha: float = 0.05) -> ExperimentConfig:
    """Calibrated methods side by side on one election."""
    return ExperimentConfig(
        methods=_main_methods(N),
        total_ballots=(N,),
        max_samples=(m,),
        true_shares=(0.52, 0.55, 0.60, 0.64, 0.70),
        alpha=alpha,
    )


def fixed_threshold_grid(
    N: int = 20000, m: int = 2000, threshold: float = 20.0
) -> ExperimentConfig:
    """Conventional fixed-threshold rules and their worst-case risks."""
    return ExperimentConfig(
        methods=(
            MethodSpec(kind="bravo", p1=0.7),
            MethodSpec(kind="bravo", p1=0.55),
            MethodSpec(kind="bravo", p1=0.51),
            MethodSpec(
                kind="bayesian-risk-max",
                prior=PriorSpec.risk_maximizing(1, 1),
                scheme_variant=WITH_REPLACEMENT,
            ),
        ),
        total_ballots=(N,),
        max_samples=(m,),
        true_shares=(0.52, 0.55, 0.60, 0.64, 0.70),
        mode=MODE_FIXED,
        fixed_threshold=threshold,
    )


def min_sample_grid(
    N: int = 20000, m: int = 2000, n_min: int = 300, alpha: float = 0.05
) -> ExperimentConfig:
    """Effect of a required minimum draw before any decision."""
    return ExperimentConfig(
        methods=(
            MethodSpec(kind="bayesian", prior=PriorSpec.beta_binomial(N, 1, 1)),
            MethodSpec(kind="bravo", p1=0.7),
        ),
        total_ballots=(N,),
        max_samples=(m,),
        true_shares=(0.52, 0.55, 0.60, 0.64, 0.70),
        min_samples=(n_min,),
        alpha=alpha,
    )


PRESETS = {
    "main": main_grid,
    "fixed-threshold": fixed_threshold_grid,
    "min-sample": min_sample_grid,
}


# ---------------------------------------------------------------------------
# stopping-distribution export


def export_pmf(
    method: MethodSpec,
    rule: StoppingRule,
    scheme: SamplingScheme,
    tally: TrueTally,
    path,
) -> EvalResult:
    """Write the per-n certification masses at one hypothesized tally.

    At the largest tally consistent with losing, the total equals the rule's
    achieved risk; elsewhere it equals the power.
    """
    res = exact.forward_dp(method, rule, scheme, tally)
    out = io.StringIO()
    out.write(PMF_VERSION + "\n")
    out.write(
        f"# method={method_label(method)} threshold={rule.upper_threshold:.10g} "
        f"max_sample={rule.max_sample} scheme={scheme.mode}\n"
    )
    out.write("n,certify_mass,cumulative\n")
    acc = 0.0
    for n in rule.schedule:
        mass = res.stop_pmf.get(n, 0.0)
        acc += mass
        out.write(f"{n},{mass:.12e},{acc:.12e}\n")
    Path(path).write_text(out.getvalue(), encoding="utf-8")
    return res
