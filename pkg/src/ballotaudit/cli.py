"""Command-line interface.

Every subcommand accepts --config pointing at a flat JSON object; any key in
that file can be overridden by the flag of the same name (dashes and
underscores are interchangeable). Flags that were not given fall back to the
config value, then to the documented default.
"""
from __future__ import annotations

import json
import sys
from typing import Dict, List, Optional

import click

from . import exact, montecarlo
from .bench import PRESETS, ExperimentConfig, export_pmf, run_benchmark
from .calibrate import CalibrationError, calibrate
from .engine import AuditSession
from .statistics import decision_scale
from .storage import rule_from_json
from .types import (
    DomainError,
    MethodSpec,
    PriorSpec,
    SamplingScheme,
    StoppingRule,
    TrueTally,
    WITH_REPLACEMENT,
    WITHOUT_REPLACEMENT,
)


def _load_config(path: Optional[str]) -> Dict[str, object]:
    if not path:
        return {}
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise click.ClickException("config file must hold a JSON object")
    return {str(k).replace("-", "_"): v for k, v in data.items()}


def _merge(config: Dict[str, object], **flags) -> Dict[str, object]:
    """Config values first, explicit flags on top. None means 'not given'."""
    merged = dict(config)
    for key, value in flags.items():
        if value is not None and value != ():
            merged[key] = value
    return merged


def _build_method(cfg: Dict[str, object]) -> MethodSpec:
    kind = cfg.get("kind")
    if not kind:
        raise DomainError("a method kind is required (--kind)")
    prior = None
    variant = cfg.get("prior")
    if variant:
        a, b = cfg.get("prior_a"), cfg.get("prior_b")
        if variant == "beta":
            prior = PriorSpec.beta(a, b)
        elif variant == "beta-binomial":
            total = cfg.get("prior_total", cfg.get("total_ballots"))
            if total is None:
                raise DomainError("beta-binomial prior needs prior_total")
            prior = PriorSpec.beta_binomial(int(total), a, b)
        elif variant == "risk-maximizing":
            prior = PriorSpec.risk_maximizing(a, b)
        elif variant == "point-pair":
            prior = PriorSpec.point_pair(cfg.get("prior_p0"), cfg.get("prior_p1"))
        else:
            raise DomainError(f"unknown prior variant {variant!r}")
    kwargs: Dict[str, object] = {"kind": str(kind)}
    if prior is not None:
        kwargs["prior"] = prior
    for key in ("p1", "reported_share", "epsilon", "gamma", "null_mean"):
        if cfg.get(key) is not None:
            kwargs[key] = float(cfg[key])
    if cfg.get("scheme_variant") is not None:
        kwargs["scheme_variant"] = str(cfg["scheme_variant"])
    return MethodSpec(**kwargs)


def _build_scheme(cfg: Dict[str, object]) -> SamplingScheme:
    mode = cfg.get("scheme", WITHOUT_REPLACEMENT)
    if mode == WITH_REPLACEMENT:
        return SamplingScheme.with_replacement()
    if mode == WITHOUT_REPLACEMENT:
        total = cfg.get("total_ballots")
        if total is None:
            raise DomainError("without-replacement sampling needs --total-ballots")
        return SamplingScheme.without_replacement(int(total))
    raise DomainError(f"unknown sampling mode {mode!r}")


def _build_rule(cfg: Dict[str, object], threshold: float) -> StoppingRule:
    if cfg.get("max_sample") is None:
        raise DomainError("a stopping rule needs --max-sample")
    data: Dict[str, object] = {
        "upper_threshold": threshold,
        "max_sample": int(cfg["max_sample"]),
        "min_sample": int(cfg.get("min_sample") or 0),
    }
    if cfg.get("lower_threshold") is not None:
        data["lower_threshold"] = float(cfg["lower_threshold"])
    if cfg.get("schedule") is not None:
        data["schedule"] = cfg["schedule"]
    else:
        data["increment"] = int(cfg.get("increment") or 1)
    return rule_from_json(data)


def _tallies(cfg: Dict[str, object]) -> List[TrueTally]:
    out: List[TrueTally] = []
    shares = cfg.get("share") or ()
    counts = cfg.get("count") or ()
    if not isinstance(shares, (list, tuple)):
        shares = (shares,)
    if not isinstance(counts, (list, tuple)):
        counts = (counts,)
    out += [TrueTally.share(float(p)) for p in shares]
    out += [TrueTally.count(int(t)) for t in counts]
    if not out:
        raise DomainError("give at least one --share or --count")
    return out


def _echo_json(payload) -> None:
    click.echo(json.dumps(payload, indent=2, sort_keys=True))


def _tally_key(tally: TrueTally) -> Dict[str, object]:
    if tally.winner_share is not None:
        return {"share": tally.winner_share}
    return {"count": tally.winner_count}


method_options = [
    click.option("--kind", type=str, help="statistic kind"),
    click.option("--p1", type=float, help="alternative share (bravo)"),
    click.option("--reported-share", type=float),
    click.option("--epsilon", type=float),
    click.option("--gamma", type=float),
    click.option("--null-mean", type=float),
    click.option("--prior", type=str, help="prior variant for bayesian kinds"),
    click.option("--prior-a", type=float),
    click.option("--prior-b", type=float),
    click.option("--prior-total", type=int),
    click.option("--scheme-variant", type=str),
]

scheme_options = [
    click.option("--scheme", type=click.Choice([WITH_REPLACEMENT, WITHOUT_REPLACEMENT])),
    click.option("--total-ballots", "-N", "total_ballots", type=int),
]

rule_options = [
    click.option("--max-sample", "-m", "max_sample", type=int),
    click.option("--increment", type=int),
    click.option("--min-sample", type=int),
    click.option("--lower-threshold", type=float),
]


def _apply(options):
    def wrap(fn):
        for option in reversed(options):
            fn = option(fn)
        return fn

    return wrap


@click.group()
def main():
    """Ballot-polling audit toolkit."""


def _run(fn):
    try:
        fn()
    except (DomainError, CalibrationError) as exc:
        raise click.ClickException(str(exc))


@main.command("calibrate")
@click.option("--config", type=click.Path(exists=True))
@click.option("--alpha", type=float)
@click.option("--tolerance", type=float)
@_apply(method_options)
@_apply(scheme_options)
@_apply(rule_options)
def calibrate_cmd(config, **flags):
    """Smallest threshold meeting a worst-case risk limit."""

    def go():
        cfg = _merge(_load_config(config), **flags)
        if cfg.get("alpha") is None:
            raise DomainError("calibration needs --alpha")
        method = _build_method(cfg)
        scheme = _build_scheme(cfg)
        template = _build_rule(cfg, threshold=2.0)
        report = calibrate(
            method, template, scheme,
            alpha=float(cfg["alpha"]),
            tolerance=cfg.get("tolerance"),
        )
        out = report.as_dict()
        out["nominal_name"] = report.nominal_name
        out["nominal_value"] = report.nominal_value
        out["decision_scale"] = decision_scale(method)
        _echo_json(out)

    _run(go)


@main.command("risk")
@click.option("--config", type=click.Path(exists=True))
@click.option("--threshold", type=float, help="upper threshold on the decision scale")
@_apply(method_options)
@_apply(scheme_options)
@_apply(rule_options)
def risk_cmd(config, **flags):
    """Worst-case certification probability of a fixed rule."""

    def go():
        cfg = _merge(_load_config(config), **flags)
        if cfg.get("threshold") is None:
            raise DomainError("risk evaluation needs --threshold")
        method = _build_method(cfg)
        scheme = _build_scheme(cfg)
        rule = _build_rule(cfg, threshold=float(cfg["threshold"]))
        _echo_json({
            "threshold": rule.upper_threshold,
            "max_risk": exact.max_risk(method, rule, scheme),
        })

    _run(go)


@main.command("evaluate")
@click.option("--config", type=click.Path(exists=True))
@click.option("--threshold", type=float)
@click.option("--share", type=float, multiple=True, help="true share (repeatable)")
@click.option("--count", type=int, multiple=True, help="true tally (repeatable)")
@_apply(method_options)
@_apply(scheme_options)
@_apply(rule_options)
def evaluate_cmd(config, **flags):
    """Exact power and mean sample size at hypothesized tallies."""

    def go():
        cfg = _merge(_load_config(config), **flags)
        if cfg.get("threshold") is None:
            raise DomainError("evaluation needs --threshold")
        method = _build_method(cfg)
        scheme = _build_scheme(cfg)
        rule = _build_rule(cfg, threshold=float(cfg["threshold"]))
        results = []
        for tally in _tallies(cfg):
            res = exact.forward_dp(method, rule, scheme, tally)
            results.append({
                "tally": _tally_key(tally),
                "power": res.power,
                "mean_sample_size": res.mean_sample_size,
                "certify_proven_mass": res.certify_proven_mass,
            })
        _echo_json({"threshold": rule.upper_threshold, "results": results})

    _run(go)


@main.command("simulate")
@click.option("--config", type=click.Path(exists=True))
@click.option("--threshold", type=float)
@click.option("--share", type=float, multiple=True)
@click.option("--count", type=int, multiple=True)
@click.option("--trials", type=int)
@click.option("--seed", type=int)
@click.option("--batch", type=int)
@_apply(method_options)
@_apply(scheme_options)
@_apply(rule_options)
def simulate_cmd(config, **flags):
    """Seeded Monte Carlo cross-check of the exact evaluator."""

    def go():
        cfg = _merge(_load_config(config), **flags)
        if cfg.get("threshold") is None:
            raise DomainError("simulation needs --threshold")
        method = _build_method(cfg)
        scheme = _build_scheme(cfg)
        rule = _build_rule(cfg, threshold=float(cfg["threshold"]))
        trials = int(cfg.get("trials") or 10000)
        seed = int(cfg.get("seed") or 0)
        batch = int(cfg.get("batch") or 2048)
        results = []
        for tally in _tallies(cfg):
            res = montecarlo.simulate(
                method, rule, scheme, tally,
                trials=trials, seed=seed, batch_size=batch,
            )
            results.append({
                "tally": _tally_key(tally),
                "power": res.power,
                "mean_sample_size": res.mean_sample_size,
                "certify_proven_mass": res.certify_proven_mass,
                "stderr": dict(res.stderr),
            })
        _echo_json({"trials": trials, "seed": seed, "results": results})

    _run(go)


@main.command("benchmark")
@click.option("--config", type=click.Path(exists=True), help="full grid as JSON")
@click.option("--preset", type=click.Choice(sorted(PRESETS)))
@click.option("--total-ballots", "-N", "total_ballots", type=int)
@click.option("--max-sample", "-m", "max_sample", type=int)
@click.option("--alpha", type=float)
@click.option("--csv", "csv_path", type=click.Path())
@click.option("--table", "table_path", type=click.Path())
@click.option("--jobs", type=int)
def benchmark_cmd(config, preset, total_ballots, max_sample, alpha, csv_path,
                  table_path, jobs):
    """Run a benchmark grid and print the aligned table."""
    try:
        if preset:
            kwargs = {}
            if total_ballots is not None:
                kwargs["N"] = total_ballots
            if max_sample is not None:
                kwargs["m"] = max_sample
            if alpha is not None:
                kwargs["alpha"] = alpha
            cfg = PRESETS[preset](**kwargs)
        elif config:
            raw = _load_config(config)
            methods = tuple(_build_method(m) for m in raw.pop("methods"))
            raw = {k: tuple(v) if isinstance(v, list) else v for k, v in raw.items()}
            cfg = ExperimentConfig(methods=methods, **raw)
        else:
            raise DomainError("give --preset or --config")
        import dataclasses

        if csv_path or table_path:
            cfg = dataclasses.replace(
                cfg,
                csv_path=csv_path or cfg.csv_path,
                table_path=table_path or cfg.table_path,
            )
        result = run_benchmark(cfg, jobs=jobs)
    except (DomainError, CalibrationError) as exc:
        raise click.ClickException(str(exc))
    click.echo(result.to_table(), nl=False)
    if result.failed:
        sys.exit(1)


@main.command("pmf")
@click.option("--config", type=click.Path(exists=True))
@click.option("--threshold", type=float, help="explicit threshold; omit to calibrate")
@click.option("--alpha", type=float)
@click.option("--share", type=float)
@click.option("--count", type=int)
@click.option("--out", type=click.Path(), required=True)
@_apply(method_options)
@_apply(scheme_options)
@_apply(rule_options)
def pmf_cmd(config, out, **flags):
    """Export the stopping distribution at one hypothesized tally."""

    def go():
        cfg = _merge(_load_config(config), **flags)
        method = _build_method(cfg)
        scheme = _build_scheme(cfg)
        if cfg.get("threshold") is not None:
            rule = _build_rule(cfg, threshold=float(cfg["threshold"]))
        elif cfg.get("alpha") is not None:
            template = _build_rule(cfg, threshold=2.0)
            rule = calibrate(method, template, scheme, alpha=float(cfg["alpha"])).rule
        else:
            raise DomainError("give --threshold or --alpha")
        tallies = _tallies(cfg)
        if len(tallies) != 1:
            raise DomainError("pmf export takes exactly one tally")
        res = export_pmf(method, rule, scheme, tallies[0], out)
        _echo_json({
            "out": str(out),
            "threshold": rule.upper_threshold,
            "total_mass": sum(res.stop_pmf.values()),
        })

    _run(go)


@main.command("session")
@click.option("--config", type=click.Path(exists=True))
@click.option("--threshold", type=float)
@_apply(method_options)
@_apply(scheme_options)
@_apply(rule_options)
def session_cmd(config, **flags):
    """Interactive audit: one round of 0/1 interpretations per line.

    A line like `17/20` enters a round of 20 ballots with 17 for the
    winner; `q` quits. Reads stdin, so piping rounds in works too.
    """

    def go():
        cfg = _merge(_load_config(config), **flags)
        if cfg.get("threshold") is None:
            raise DomainError("a session needs --threshold")
        method = _build_method(cfg)
        scheme = _build_scheme(cfg)
        rule = _build_rule(cfg, threshold=float(cfg["threshold"]))
        session = AuditSession(method, rule, scheme)
        click.echo(
            f"session open: threshold {rule.upper_threshold:g}, "
            f"max sample {rule.max_sample}"
        )
        while not session.terminal:
            try:
                line = click.prompt("round", prompt_suffix="> ", type=str)
            except click.Abort:
                break
            line = line.strip()
            if line in ("q", "quit", ""):
                break
            try:
                if "/" in line:
                    wins, size = (int(x) for x in line.split("/", 1))
                    if method.order_dependent(scheme):
                        raise DomainError(
                            "this statistic needs the draw order; enter 0/1 digits"
                        )
                    ballots = [1] * wins + [0] * (size - wins)
                else:
                    ballots = [int(ch) for ch in line.replace(" ", "")]
                record = session.append_round(ballots)
            except (DomainError, ValueError) as exc:
                click.echo(f"  rejected: {exc}")
                continue
            click.echo(
                f"  n={record.n} Y={record.winner_count} "
                f"stat={record.log_statistic:.4f} -> {record.decision.kind}"
            )
        click.echo(f"session closed: {session.status}")

    _run(go)


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
@click.option(
    "--data-dir",
    envvar="BALLOTAUDIT_DATA_DIR",
    required=True,
    type=click.Path(file_okay=False),
)
def serve_cmd(host, port, data_dir):
    """Start the HTTP service."""
    from .service import run_service

    run_service(data_dir, host=host, port=port)


if __name__ == "__main__":
    main()
