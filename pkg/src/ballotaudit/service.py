"""HTTP front end: calibration, evaluation, and live audit contests.

A thin adapter over the domain modules. Request bodies are plain JSON and
validation stays with the domain types, so the same errors surface locally
and over the wire: malformed configuration maps to 400, infeasible
calibration to 422, sequence conflicts to 409, terminated contests to 410.

Every round append is fsynced before the response leaves; the in-memory
session is a cache that can always be rebuilt by replaying the log.
"""
from __future__ import annotations

import math
import threading
from typing import Dict, List

from fastapi import Body, FastAPI, Request
from fastapi.responses import JSONResponse

from . import exact
from .calibrate import CalibrationError, calibrate
from .engine import AuditSession, RoundRecord, STATUS_CERTIFIED, STATUS_OPEN
from .statistics import decision_scale, scaled_threshold
from .storage import (
    ContestStore,
    StorageError,
    method_from_json,
    method_to_json,
    rule_from_json,
    rule_to_json,
    scheme_from_json,
    scheme_to_json,
)
from .types import (
    DomainError,
    MethodSpec,
    SamplingScheme,
    StoppingRule,
    TrueTally,
    WITH_REPLACEMENT,
    WITHOUT_REPLACEMENT,
)

API_PREFIX = "/v1"


class ApiError(Exception):
    def __init__(self, status_code: int, detail: str, **extra):
        super().__init__(detail)
        self.status_code = status_code
        self.detail = detail
        self.extra = extra


def _parse_scheme(body: Dict[str, object]) -> SamplingScheme:
    if isinstance(body.get("scheme"), dict):
        return scheme_from_json(body["scheme"])
    mode = body.get("scheme", WITHOUT_REPLACEMENT)
    if mode == WITH_REPLACEMENT:
        return SamplingScheme.with_replacement()
    if mode == WITHOUT_REPLACEMENT:
        total = body.get("total_ballots")
        if total is None:
            raise DomainError("without-replacement sampling requires total_ballots")
        return SamplingScheme.without_replacement(int(total))
    raise DomainError(f"unknown sampling mode {mode!r}")


def _parse_method(body: Dict[str, object]) -> MethodSpec:
    method = body.get("method")
    if not isinstance(method, dict):
        raise DomainError("request needs a method object")
    return method_from_json(method)


def _parse_rule_template(body: Dict[str, object], threshold: float) -> StoppingRule:
    data = dict(body.get("rule") or {})
    for key in ("max_sample", "increment", "schedule", "min_sample", "lower_threshold"):
        if key in body:
            data[key] = body[key]
    if "max_sample" not in data:
        raise DomainError("request needs max_sample")
    data.setdefault("upper_threshold", threshold)
    return rule_from_json(data)


def _parse_tally(data: Dict[str, object]) -> TrueTally:
    if "share" in data and data["share"] is not None:
        return TrueTally.share(float(data["share"]))
    if "count" in data and data["count"] is not None:
        return TrueTally.count(int(data["count"]))
    raise DomainError("tally needs a share or a count")


def _json_value(x: float) -> object:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return x


def _threshold_block(method: MethodSpec, rule: StoppingRule) -> Dict[str, object]:
    out: Dict[str, object] = {
        "decision_scale": decision_scale(method),
        "upper": rule.upper_threshold,
        "upper_scaled": _json_value(scaled_threshold(method, rule.upper_threshold)),
    }
    if rule.lower_threshold is not None:
        out["lower"] = rule.lower_threshold
        out["lower_scaled"] = _json_value(
            scaled_threshold(method, rule.lower_threshold)
        )
    return out


def _round_response(contest_id: str, session: AuditSession, record: RoundRecord):
    return {
        "contest_id": contest_id,
        "round": record.to_json(),
        "status": session.status,
        "frozen": session.frozen,
        "trajectory_point": {
            "n": record.n,
            "log_statistic": _json_value(record.log_statistic),
        },
        "next_sequence_number": len(session.rounds),
    }


_METHOD_CATALOG: List[Dict[str, object]] = [
    {
        "kind": "bravo",
        "label": "BRAVO likelihood ratio",
        "params": ["p1"],
        "notes": "p1 is the alternative share; reported_share minus epsilon also works.",
    },
    {
        "kind": "bayesian",
        "label": "Bayesian posterior odds",
        "params": ["prior"],
        "priors": ["beta", "beta-binomial"],
        "notes": "beta prior pairs with with-replacement, beta-binomial with without.",
    },
    {
        "kind": "bayesian-risk-max",
        "label": "Bayes factor, risk-maximizing prior",
        "params": ["prior"],
        "priors": ["risk-maximizing"],
    },
    {
        "kind": "max-bravo",
        "label": "BRAVO maximized over the alternative",
        "params": [],
    },
    {
        "kind": "clip-audit",
        "label": "Clipped deviation statistic",
        "params": [],
        "notes": "raw decision scale; the threshold is the constant itself.",
    },
    {"kind": "kmart", "label": "Integrated martingale", "params": []},
    {"kind": "kaplan-wald", "label": "Kaplan-Wald product", "params": ["gamma"]},
    {"kind": "kaplan-markov", "label": "Kaplan-Markov product", "params": ["gamma"]},
    {
        "kind": "kaplan-kolmogorov",
        "label": "Kaplan-Kolmogorov product",
        "params": ["gamma"],
        "notes": "without-replacement only; depends on draw order.",
    },
]


def create_app(data_dir) -> FastAPI:
    app = FastAPI(title="ballotaudit", version="1")
    store = ContestStore(data_dir)
    sessions: Dict[str, AuditSession] = {}
    sessions_guard = threading.Lock()
    # serializes contest creation so idempotency keys cannot race; round
    # traffic uses per-contest locks and is unaffected
    create_guard = threading.Lock()
    idempotency: Dict[str, str] = {}
    for entry in store.index_entries():
        key = entry.get("idempotency_key")
        if key:
            idempotency[str(key)] = str(entry["contest_id"])

    @app.exception_handler(DomainError)
    async def _domain_error(_: Request, exc: DomainError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(CalibrationError)
    async def _calibration_error(_: Request, exc: CalibrationError):
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.exception_handler(ApiError)
    async def _api_error(_: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status_code, content={"detail": exc.detail, **exc.extra}
        )

    def get_session(contest_id: str) -> AuditSession:
        with sessions_guard:
            cached = sessions.get(contest_id)
        if cached is not None:
            return cached
        try:
            session = store.replay(contest_id)
        except StorageError:
            raise ApiError(404, f"unknown contest {contest_id!r}")
        with sessions_guard:
            return sessions.setdefault(contest_id, session)

    def contest_payload(contest_id: str, session: AuditSession) -> Dict[str, object]:
        _, _, _, meta = store.load_header(contest_id)
        return {
            "contest_id": contest_id,
            "status": session.status,
            "frozen": session.frozen,
            "method": method_to_json(session.method),
            "rule": rule_to_json(session.rule),
            "scheme": scheme_to_json(session.scheme),
            "thresholds": _threshold_block(session.method, session.rule),
            "n": session.n,
            "winner_count": session.winner_count,
            "next_sequence_number": len(session.rounds),
            "rounds": [r.to_json() for r in session.rounds],
            "meta": {k: v for k, v in meta.items() if k != "idempotency_key"},
        }

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.get(f"{API_PREFIX}/methods")
    def methods():
        return {"methods": _METHOD_CATALOG}

    @app.post(f"{API_PREFIX}/contests", status_code=201)
    def create_contest(body: Dict[str, object] = Body(...)):
        with create_guard:
            return _create_contest(body)

    def _create_contest(body: Dict[str, object]):
        key = body.get("idempotency_key")
        if key is not None and str(key) in idempotency:
            existing = idempotency[str(key)]
            session = get_session(existing)
            return JSONResponse(
                status_code=200, content=contest_payload(existing, session)
            )
        scheme = _parse_scheme(body)
        method = _parse_method(body)
        meta: Dict[str, object] = {}
        if body.get("name") is not None:
            meta["name"] = str(body["name"])
        if key is not None:
            meta["idempotency_key"] = str(key)
        if body.get("alpha") is not None:
            template = _parse_rule_template(body, threshold=2.0)
            report = calibrate(method, template, scheme, alpha=float(body["alpha"]))
            rule = report.rule
            meta["calibration"] = report.as_dict()
        else:
            threshold = body.get("upper_threshold")
            if threshold is None:
                raise DomainError("request needs alpha or an explicit upper_threshold")
            rule = _parse_rule_template(body, threshold=float(threshold))
        session = AuditSession(method, rule, scheme)
        contest_id = store.create(method, rule, scheme, meta=meta)
        session.session_id = contest_id
        with sessions_guard:
            sessions[contest_id] = session
        if key is not None:
            idempotency[str(key)] = contest_id
        return contest_payload(contest_id, session)

    @app.get(f"{API_PREFIX}/contests/{{contest_id}}")
    def get_contest(contest_id: str):
        session = get_session(contest_id)
        return contest_payload(contest_id, session)

    @app.post(f"{API_PREFIX}/contests/{{contest_id}}/rounds")
    def post_round(contest_id: str, body: Dict[str, object] = Body(...)):
        session = get_session(contest_id)
        seq = body.get("sequence_number")
        if seq is None:
            raise DomainError("round needs a sequence_number")
        seq = int(seq)
        if "interpretations" in body:
            ballots = [int(x) for x in body["interpretations"]]
        elif "round_size" in body and "winner_count" in body:
            if session.method.order_dependent(session.scheme):
                raise DomainError(
                    "this statistic depends on draw order; "
                    "send the full interpretations list"
                )
            size, wins = int(body["round_size"]), int(body["winner_count"])
            if not 0 <= wins <= size:
                raise DomainError("winner_count must lie in [0, round_size]")
            ballots = [1] * wins + [0] * (size - wins)
        else:
            raise DomainError("round needs interpretations or round_size/winner_count")

        with store.lock(contest_id):
            if seq == len(session.rounds) - 1 and seq >= 0:
                prior = session.rounds[seq]
                if list(prior.interpretations) == ballots:
                    return _round_response(contest_id, session, prior)
                raise ApiError(409, "sequence number already used with a different round")
            if session.terminal:
                raise ApiError(410, f"contest is closed with status {session.status!r}")
            if seq != len(session.rounds):
                raise ApiError(
                    409,
                    "sequence conflict",
                    expected_sequence_number=len(session.rounds),
                )
            record = session.append_round(ballots)
            try:
                store.append(contest_id, record)
            except Exception:
                # memory ran ahead of the log; drop the cache so the next
                # request replays from disk
                with sessions_guard:
                    sessions.pop(contest_id, None)
                raise
        return _round_response(contest_id, session, record)

    @app.get(f"{API_PREFIX}/contests/{{contest_id}}/projection")
    def get_projection(
        contest_id: str, round_sizes: str = "", margins: str = ""
    ):
        session = get_session(contest_id)
        try:
            sizes = [int(s) for s in round_sizes.split(",") if s.strip() != ""]
            shares = [float(s) for s in margins.split(",") if s.strip() != ""]
        except ValueError:
            raise DomainError("round_sizes and margins must be comma-separated numbers")
        if not sizes or not shares:
            raise DomainError("projection needs round_sizes and margins")
        if any(s < 0 for s in sizes):
            raise DomainError("round sizes must be nonnegative")

        certified_now = 1.0 if session.status == STATUS_CERTIFIED else 0.0
        projections = []
        for share in shares:
            tally = TrueTally.share(share)
            per_size: Dict[str, float] = {}
            live = [s for s in sizes if s > 0]
            if session.status == STATUS_OPEN and live:
                if session.n >= session.rule.max_sample:
                    results = {s: 0.0 for s in live}
                else:
                    results = exact.conditional_eval(
                        session.method,
                        session.rule,
                        session.scheme,
                        tally,
                        state=(session.n, session.winner_count),
                        horizons=live,
                    )
            else:
                results = {s: certified_now for s in live}
            for s in sizes:
                per_size[str(s)] = certified_now if s == 0 else float(results[s])
            projections.append({"margin": share, "certify_probability": per_size})
        return {
            "contest_id": contest_id,
            "state": {"n": session.n, "winner_count": session.winner_count},
            "status": session.status,
            "projections": projections,
        }

    @app.post(f"{API_PREFIX}/calibrate")
    def calibrate_endpoint(body: Dict[str, object] = Body(...)):
        scheme = _parse_scheme(body)
        method = _parse_method(body)
        if body.get("alpha") is None:
            raise DomainError("calibration needs alpha")
        template = _parse_rule_template(body, threshold=2.0)
        report = calibrate(method, template, scheme, alpha=float(body["alpha"]))
        out = report.as_dict()
        out["nominal_name"] = report.nominal_name
        out["nominal_value"] = report.nominal_value
        out["rule"] = rule_to_json(report.rule)
        out["thresholds"] = _threshold_block(method, report.rule)
        return out

    @app.post(f"{API_PREFIX}/evaluate")
    def evaluate_endpoint(body: Dict[str, object] = Body(...)):
        scheme = _parse_scheme(body)
        method = _parse_method(body)
        threshold = body.get("upper_threshold")
        if threshold is None:
            raise DomainError("evaluation needs an explicit upper_threshold")
        rule = _parse_rule_template(body, threshold=float(threshold))
        raw_tallies = body.get("tallies")
        if not isinstance(raw_tallies, list) or not raw_tallies:
            raise DomainError("evaluation needs a nonempty tallies list")
        include_pmf = bool(body.get("include_pmf", False))
        results = []
        for raw in raw_tallies:
            tally = _parse_tally(raw)
            res = exact.forward_dp(method, rule, scheme, tally)
            entry: Dict[str, object] = {
                "tally": raw,
                "power": res.power,
                "mean_sample_size": res.mean_sample_size,
                "certify_proven_mass": res.certify_proven_mass,
            }
            if include_pmf:
                entry["stop_pmf"] = {
                    str(n): p for n, p in sorted(res.stop_pmf.items()) if p > 0.0
                }
            results.append(entry)
        return {"results": results}

    return app


def run_service(data_dir, host: str = "127.0.0.1", port: int = 8000) -> None:
    import uvicorn

    uvicorn.run(create_app(data_dir), host=host, port=port, log_level="warning")
