"""Ballot-polling audit engine.

Sequential statistics for election audits, an exact evaluator of their risk
and sample-size behavior, a risk-limit calibrator, a seeded simulator, and
a live session engine with an HTTP service on top.
"""
from .types import (
    WITH_REPLACEMENT,
    WITHOUT_REPLACEMENT,
    BallotSample,
    Decision,
    DecisionBoundary,
    DomainError,
    EvalResult,
    MethodSpec,
    PriorSpec,
    SamplingScheme,
    StoppingRule,
    TrueTally,
)
from .special import log_beta_fn, log_reg_inc_beta, reg_inc_beta
from .statistics import (
    bayes_factor,
    bravo_statistic,
    clip_statistic,
    kaplan_kolmogorov,
    kaplan_markov,
    kaplan_wald,
    kmart_with_replacement,
    kmart_without_replacement,
    log_bayes_factor,
    log_bravo_statistic,
    log_kaplan_markov,
    log_kaplan_wald,
    log_kmart_with_replacement,
    log_maxbravo_statistic,
    log_sequence_probability,
    maxbravo_statistic,
    riskmax_upset_closed_form,
    upset_probability,
)
from .boundary import compute_boundary
from .exact import conditional_eval, forward_dp, max_risk
from .calibrate import (
    CalibrationError,
    CalibrationReport,
    calibrate,
    verify_risk_limit,
)
from .engine import (
    AuditSession,
    RoundRecord,
    append_round,
    bayes_thresholds,
    bayes_to_sprt,
    decide,
    sprt_to_bayes,
)
from .montecarlo import simulate
from .bench import ExperimentConfig, export_pmf, run_benchmark
from .storage import ContestStore
from ._kernels import active_backend, requested_backend, set_backend

__version__ = "0.1.0"

__all__ = [
    "WITH_REPLACEMENT",
    "WITHOUT_REPLACEMENT",
    "BallotSample",
    "Decision",
    "DecisionBoundary",
    "DomainError",
    "EvalResult",
    "MethodSpec",
    "PriorSpec",
    "SamplingScheme",
    "StoppingRule",
    "TrueTally",
    "log_beta_fn",
    "log_reg_inc_beta",
    "reg_inc_beta",
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
    "log_sequence_probability",
    "compute_boundary",
    "forward_dp",
    "max_risk",
    "conditional_eval",
    "calibrate",
    "verify_risk_limit",
    "CalibrationReport",
    "CalibrationError",
    "decide",
    "bayes_thresholds",
    "sprt_to_bayes",
    "bayes_to_sprt",
    "AuditSession",
    "RoundRecord",
    "append_round",
    "simulate",
    "ExperimentConfig",
    "run_benchmark",
    "export_pmf",
    "ContestStore",
    "set_backend",
    "active_backend",
    "requested_backend",
]
