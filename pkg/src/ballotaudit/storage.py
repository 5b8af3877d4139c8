"""Durable contest persistence.

One append-only JSON-lines file per contest plus an index file. The first
line of a contest log is a header record carrying the full configuration;
every later line is one round. Replaying the log through the session engine
reconstructs state exactly, so the log is the single source of truth and
any in-memory session is a disposable cache.

Writes are fsynced before the caller sees a result. A crash mid-append can
leave at most one partial trailing line, which the reader drops.
"""
from __future__ import annotations

import json
import os
import threading
import uuid
from contextlib import contextmanager
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Tuple

from .engine import AuditSession, RoundRecord
from .types import (
    DomainError,
    MethodSpec,
    PriorSpec,
    SamplingScheme,
    StoppingRule,
    WITHOUT_REPLACEMENT,
)

FORMAT_VERSION = 1


# ---------------------------------------------------------------------------
# wire codec
#
# The same shapes travel over HTTP and into the logs, so round-tripping is
# load-bearing: from_json(to_json(x)) must reproduce x exactly.


def scheme_to_json(scheme: SamplingScheme) -> Dict[str, object]:
    out: Dict[str, object] = {"mode": scheme.mode}
    if scheme.total_ballots is not None:
        out["total_ballots"] = scheme.total_ballots
    return out


def scheme_from_json(data: Dict[str, object]) -> SamplingScheme:
    mode = data.get("mode")
    if mode == WITHOUT_REPLACEMENT:
        return SamplingScheme.without_replacement(int(data["total_ballots"]))
    return SamplingScheme(mode=str(mode))


def prior_to_json(prior: PriorSpec) -> Dict[str, object]:
    if prior.variant == "weighted-kmart":
        raise DomainError("weighted priors carry a function and cannot be persisted")
    out: Dict[str, object] = {"variant": prior.variant}
    for name in ("a", "b", "total", "p0", "p1", "weight0", "weight1"):
        value = getattr(prior, name)
        if value is not None:
            out[name] = value
    return out


def prior_from_json(data: Dict[str, object]) -> PriorSpec:
    kwargs = {k: data[k] for k in ("a", "b", "p0", "p1", "weight0", "weight1") if k in data}
    kwargs = {k: float(v) for k, v in kwargs.items()}
    if "total" in data:
        kwargs["total"] = int(data["total"])
    return PriorSpec(variant=str(data["variant"]), **kwargs)


def method_to_json(method: MethodSpec) -> Dict[str, object]:
    out: Dict[str, object] = {"kind": method.kind}
    if method.prior is not None:
        out["prior"] = prior_to_json(method.prior)
    for name in ("p1", "reported_share", "epsilon", "gamma", "scheme_variant"):
        value = getattr(method, name)
        if value is not None:
            out[name] = value
    if method.null_mean != 0.5:
        out["null_mean"] = method.null_mean
    return out


def method_from_json(data: Dict[str, object]) -> MethodSpec:
    kwargs: Dict[str, object] = {"kind": str(data["kind"])}
    if "prior" in data and data["prior"] is not None:
        kwargs["prior"] = prior_from_json(data["prior"])
    for name in ("p1", "reported_share", "epsilon", "gamma", "null_mean"):
        if name in data and data[name] is not None:
            kwargs[name] = float(data[name])
    if data.get("scheme_variant") is not None:
        kwargs["scheme_variant"] = str(data["scheme_variant"])
    return MethodSpec(**kwargs)


def _uniform_increment(schedule: Tuple[int, ...], max_sample: int) -> Optional[int]:
    """The increment k that regenerates this schedule, if one exists."""
    k = schedule[0]
    if k < 1:
        return None
    expected = tuple(range(k, max_sample + 1, k))
    if not expected or expected[-1] != max_sample:
        expected = expected + (max_sample,)
    return k if expected == schedule else None


def rule_to_json(rule: StoppingRule) -> Dict[str, object]:
    out: Dict[str, object] = {
        "upper_threshold": rule.upper_threshold,
        "max_sample": rule.max_sample,
    }
    if rule.lower_threshold is not None:
        out["lower_threshold"] = rule.lower_threshold
    if rule.min_sample:
        out["min_sample"] = rule.min_sample
    k = _uniform_increment(rule.schedule, rule.max_sample)
    if k is not None:
        out["increment"] = k
    else:
        out["schedule"] = list(rule.schedule)
    return out


def rule_from_json(data: Dict[str, object]) -> StoppingRule:
    common = dict(
        upper_threshold=float(data["upper_threshold"]),
        max_sample=int(data["max_sample"]),
        min_sample=int(data.get("min_sample", 0)),
        lower_threshold=(
            float(data["lower_threshold"])
            if data.get("lower_threshold") is not None
            else None
        ),
    )
    if "schedule" in data:
        return StoppingRule(schedule=tuple(int(n) for n in data["schedule"]), **common)
    return StoppingRule.with_increment(increment=int(data.get("increment", 1)), **common)


# ---------------------------------------------------------------------------
# store


class StorageError(RuntimeError):
    pass


def _append_line(path: Path, payload: Dict[str, object]) -> None:
    line = json.dumps(payload, separators=(",", ":"), allow_nan=False)
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(line + "\n")
        fh.flush()
        os.fsync(fh.fileno())


def _read_records(path: Path) -> List[Dict[str, object]]:
    """All complete records; a partial trailing line (crash residue) is dropped."""
    chunks = [c for c in path.read_bytes().split(b"\n") if c]
    records: List[Dict[str, object]] = []
    for i, chunk in enumerate(chunks):
        try:
            records.append(json.loads(chunk))
        except json.JSONDecodeError:
            if i == len(chunks) - 1:
                break
            raise StorageError(f"corrupt record in {path.name}") from None
    return records


class ContestStore:
    """Contest logs under a data directory, one writer per contest.

    Layout:
        {data_dir}/index.jsonl            creation events
        {data_dir}/contests/{id}.jsonl    header line, then one line per round
    """

    def __init__(self, data_dir):
        self.root = Path(data_dir)
        self.contests_dir = self.root / "contests"
        self.contests_dir.mkdir(parents=True, exist_ok=True)
        self.index_path = self.root / "index.jsonl"
        self._master = threading.Lock()
        self._locks: Dict[str, threading.Lock] = {}

    def _lock_for(self, contest_id: str) -> threading.Lock:
        with self._master:
            lock = self._locks.get(contest_id)
            if lock is None:
                lock = self._locks[contest_id] = threading.Lock()
            return lock

    @contextmanager
    def lock(self, contest_id: str) -> Iterator[None]:
        with self._lock_for(contest_id):
            yield

    def _log_path(self, contest_id: str) -> Path:
        if not contest_id.replace("-", "").isalnum():
            raise StorageError(f"bad contest id {contest_id!r}")
        return self.contests_dir / f"{contest_id}.jsonl"

    def exists(self, contest_id: str) -> bool:
        return self._log_path(contest_id).exists()

    def contest_ids(self) -> List[str]:
        return sorted(p.stem for p in self.contests_dir.glob("*.jsonl"))

    def index_entries(self) -> List[Dict[str, object]]:
        if not self.index_path.exists():
            return []
        return _read_records(self.index_path)

    def create(
        self,
        method: MethodSpec,
        rule: StoppingRule,
        scheme: SamplingScheme,
        contest_id: Optional[str] = None,
        meta: Optional[Dict[str, object]] = None,
    ) -> str:
        contest_id = contest_id or uuid.uuid4().hex
        path = self._log_path(contest_id)
        with self.lock(contest_id):
            if path.exists():
                raise StorageError(f"contest {contest_id!r} already exists")
            header = {
                "record": "header",
                "version": FORMAT_VERSION,
                "contest_id": contest_id,
                "method": method_to_json(method),
                "rule": rule_to_json(rule),
                "scheme": scheme_to_json(scheme),
            }
            if meta:
                header["meta"] = meta
            _append_line(path, header)
            _append_line(self.index_path, {"contest_id": contest_id, **(meta or {})})
        return contest_id

    def append(self, contest_id: str, record: RoundRecord) -> None:
        """Durably append one round. Caller holds the contest lock."""
        path = self._log_path(contest_id)
        if not path.exists():
            raise StorageError(f"unknown contest {contest_id!r}")
        _append_line(path, {"record": "round", **record.to_json()})

    def load_header(
        self, contest_id: str
    ) -> Tuple[MethodSpec, StoppingRule, SamplingScheme, Dict[str, object]]:
        path = self._log_path(contest_id)
        if not path.exists():
            raise StorageError(f"unknown contest {contest_id!r}")
        records = _read_records(path)
        if not records or records[0].get("record") != "header":
            raise StorageError(f"contest {contest_id!r} has no header record")
        header = records[0]
        return (
            method_from_json(header["method"]),
            rule_from_json(header["rule"]),
            scheme_from_json(header["scheme"]),
            header.get("meta", {}),
        )

    def load_rounds(self, contest_id: str) -> List[List[int]]:
        path = self._log_path(contest_id)
        records = _read_records(path)
        return [
            [int(x) for x in r["interpretations"]]
            for r in records[1:]
            if r.get("record") == "round"
        ]

    def replay(self, contest_id: str) -> AuditSession:
        """Reconstruct the live session from the log, re-deciding each round."""
        method, rule, scheme, _ = self.load_header(contest_id)
        rounds = self.load_rounds(contest_id)
        return AuditSession.replay(method, rule, scheme, rounds, session_id=contest_id)
