"""Wire codec round-trips and the append-only contest store."""
import json
import math

import pytest

from ballotaudit.engine import AuditSession
from ballotaudit.storage import (
    ContestStore,
    StorageError,
    method_from_json,
    method_to_json,
    prior_from_json,
    prior_to_json,
    rule_from_json,
    rule_to_json,
    scheme_from_json,
    scheme_to_json,
)
from ballotaudit.types import (
    WITH_REPLACEMENT,
    DomainError,
    MethodSpec,
    PriorSpec,
    SamplingScheme,
    StoppingRule,
)

PRIORS = [
    PriorSpec.point_pair(0.4, 0.8, 0.3, 0.7),
    PriorSpec.beta(2, 5),
    PriorSpec.beta_binomial(200, 100, 100),
    PriorSpec.risk_maximizing(1, 1.5),
]

METHODS = [
    MethodSpec("bravo", p1=0.7),
    MethodSpec("bravo", reported_share=0.64, epsilon=0.01),
    MethodSpec("bayesian", prior=PriorSpec.beta_binomial(20000, 1, 1)),
    MethodSpec("bayesian", prior=PriorSpec.beta(2, 5), scheme_variant=WITH_REPLACEMENT),
    MethodSpec(
        "bayesian-risk-max",
        prior=PriorSpec.risk_maximizing(1, 1),
        scheme_variant=WITH_REPLACEMENT,
    ),
    MethodSpec("max-bravo"),
    MethodSpec("clip-audit"),
    MethodSpec("kmart", scheme_variant=WITH_REPLACEMENT),
    MethodSpec("kaplan-wald", gamma=0.4),
    MethodSpec("kaplan-markov", gamma=1.0, null_mean=0.55),
]

RULES = [
    StoppingRule.with_increment(9.0, 100),
    StoppingRule.with_increment(9.0, 100, increment=10),
    StoppingRule.with_increment(19.0, 100, increment=7, min_sample=30),
    StoppingRule(upper_threshold=9.0, max_sample=40, schedule=(7, 19, 33, 40)),
    StoppingRule(upper_threshold=2.5, max_sample=40, lower_threshold=0.5),
    StoppingRule.with_increment(9.0, 1),
]

SCHEMES = [
    SamplingScheme.with_replacement(),
    SamplingScheme.without_replacement(20000),
]


def test_prior_codec_round_trip():
    for prior in PRIORS:
        blob = json.loads(json.dumps(prior_to_json(prior)))
        assert prior_from_json(blob) == prior


def test_weighted_prior_cannot_be_persisted():
    prior = PriorSpec.weighted_kmart(lambda g: 2 * g)
    with pytest.raises(DomainError, match="cannot be persisted"):
        prior_to_json(prior)


def test_method_codec_round_trip():
    for method in METHODS:
        blob = json.loads(json.dumps(method_to_json(method)))
        assert method_from_json(blob) == method


def test_rule_codec_round_trip():
    for rule in RULES:
        blob = json.loads(json.dumps(rule_to_json(rule)))
        assert rule_from_json(blob) == rule


def test_rule_codec_compacts_uniform_schedules():
    dense = rule_to_json(StoppingRule.with_increment(9.0, 100, increment=10))
    assert dense["increment"] == 10 and "schedule" not in dense
    sparse = rule_to_json(
        StoppingRule(upper_threshold=9.0, max_sample=40, schedule=(7, 19, 33, 40))
    )
    assert sparse["schedule"] == [7, 19, 33, 40] and "increment" not in sparse


def test_scheme_codec_round_trip():
    for scheme in SCHEMES:
        blob = json.loads(json.dumps(scheme_to_json(scheme)))
        assert scheme_from_json(blob) == scheme


# ---------------------------------------------------------------------------
# store

BRAVO = MethodSpec("bravo", p1=0.7)
RULE = StoppingRule.with_increment(4.0, 12, lower_threshold=0.3)
WR = SamplingScheme.with_replacement()


def _store(tmp_path):
    return ContestStore(tmp_path / "data")


def _run_rounds(store, cid, rounds):
    method, rule, scheme, _ = store.load_header(cid)
    session = AuditSession(method, rule, scheme, session_id=cid)
    for ballots in rounds:
        record = session.append_round(ballots)
        store.append(cid, record)
    return session


def test_create_and_replay_round_trip(tmp_path):
    store = _store(tmp_path)
    cid = store.create(BRAVO, RULE, WR, contest_id="race-1", meta={"name": "Race"})
    assert cid == "race-1"
    assert store.exists(cid)
    assert store.contest_ids() == ["race-1"]
    assert store.index_entries() == [{"contest_id": "race-1", "name": "Race"}]

    inputs = [[1, 1, 0], [1, 0, 1, 1], [1, 1]]
    live = _run_rounds(store, cid, inputs)
    assert store.load_rounds(cid) == inputs

    replayed = store.replay(cid)
    assert replayed.session_id == cid
    assert replayed.status == live.status
    for a, b in zip(live.rounds, replayed.rounds):
        assert a.interpretations == b.interpretations
        assert a.log_statistic == b.log_statistic
        assert a.decision == b.decision


def test_header_survives_codec(tmp_path):
    store = _store(tmp_path)
    method = MethodSpec("bayesian", prior=PriorSpec.beta_binomial(50, 1, 1))
    rule = StoppingRule.with_increment(9.0, 50, min_sample=5)
    scheme = SamplingScheme.without_replacement(50)
    cid = store.create(method, rule, scheme)
    assert len(cid) == 32  # generated ids are uuid hex
    got_method, got_rule, got_scheme, meta = store.load_header(cid)
    assert got_method == method
    assert got_rule == rule
    assert got_scheme == scheme
    assert meta == {}


def test_duplicate_contest_rejected(tmp_path):
    store = _store(tmp_path)
    store.create(BRAVO, RULE, WR, contest_id="race-1")
    with pytest.raises(StorageError, match="already exists"):
        store.create(BRAVO, RULE, WR, contest_id="race-1")


def test_bad_contest_ids_rejected(tmp_path):
    store = _store(tmp_path)
    for bad in ("../escape", "a b", "x/y", ""):
        with pytest.raises(StorageError, match="bad contest id"):
            store.exists(bad)


def test_unknown_contest_errors(tmp_path):
    store = _store(tmp_path)
    with pytest.raises(StorageError, match="unknown contest"):
        store.load_header("nope")
    session = AuditSession(BRAVO, RULE, WR)
    record = session.append_round([1, 0])
    with pytest.raises(StorageError, match="unknown contest"):
        store.append("nope", record)


def test_partial_trailing_line_is_dropped(tmp_path):
    # a crash mid-append leaves an unterminated JSON fragment; reads must
    # see everything before it
    store = _store(tmp_path)
    cid = store.create(BRAVO, RULE, WR, contest_id="race-1")
    _run_rounds(store, cid, [[1, 1, 0], [1, 0]])
    path = store.contests_dir / "race-1.jsonl"
    with open(path, "ab") as fh:
        fh.write(b'{"record":"round","interp')
    assert store.load_rounds(cid) == [[1, 1, 0], [1, 0]]
    assert store.replay(cid).n == 5


def test_corrupt_middle_record_raises(tmp_path):
    store = _store(tmp_path)
    cid = store.create(BRAVO, RULE, WR, contest_id="race-1")
    path = store.contests_dir / "race-1.jsonl"
    with open(path, "ab") as fh:
        fh.write(b"not json at all\n")
    _run_rounds(store, cid, [[1, 1]])
    with pytest.raises(StorageError, match="corrupt record"):
        store.load_rounds(cid)


def test_missing_header_detected(tmp_path):
    store = _store(tmp_path)
    path = store.contests_dir / "headless.jsonl"
    with open(path, "w") as fh:
        fh.write('{"record":"round","interpretations":[1]}\n')
    with pytest.raises(StorageError, match="no header record"):
        store.load_header("headless")


def test_non_finite_statistics_stored_as_strings(tmp_path):
    # all twelve ballots for the winner proves the race; the statistic is
    # +inf, which JSON cannot carry as a number
    store = _store(tmp_path)
    method = MethodSpec("bayesian", prior=PriorSpec.beta_binomial(12, 1, 1))
    rule = StoppingRule.with_increment(1e9, 12)
    scheme = SamplingScheme.without_replacement(12)
    cid = store.create(method, rule, scheme, contest_id="proved")
    _run_rounds(store, cid, [[1, 1, 1, 1, 1, 1, 1]])
    raw = (store.contests_dir / "proved.jsonl").read_text().splitlines()
    last = json.loads(raw[-1])
    assert last["log_statistic"] == "inf"
    replayed = store.replay(cid)
    assert replayed.rounds[-1].log_statistic == math.inf
    assert replayed.status == "certified"


def test_contest_lock_is_reentrant_per_contest(tmp_path):
    store = _store(tmp_path)
    cid = store.create(BRAVO, RULE, WR, contest_id="race-1")
    with store.lock(cid):
        pass  # acquiring and releasing must leave the lock usable
    with store.lock(cid):
        assert store.exists(cid)
