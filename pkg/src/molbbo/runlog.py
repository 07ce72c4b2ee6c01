"""Run logs: a header plus ordered per-call records, stored as JSON Lines.

The first line is the header (config snapshot, objective spec, seed);
every following line is one exact-objective call with its running best.
Serialization uses sorted keys and compact separators so identical runs
produce byte-identical files.
"""

import json
from dataclasses import dataclass, field
from typing import List

SCHEMA_VERSION = 1


class LogSchemaError(ValueError):
    """Unknown or inconsistent run-log schema."""


@dataclass
class RunLog:
    header: dict
    records: List[dict] = field(default_factory=list)

    @property
    def best_final(self):
        return self.records[-1]["bestSoFar"] if self.records else None

    @property
    def total_calls(self) -> int:
        return len(self.records)


def make_header(method, label, config, objective, seed, deterministic_timing):
    return {"schema_version": SCHEMA_VERSION,
            "method": method,
            "label": label,
            "config": config,
            "objective": objective,
            "seed": seed,
            "deterministic_timing": bool(deterministic_timing)}


def records_from_calls(call_records, deterministic_timing: bool):
    """RunLog record dicts from objective CallRecords, adding bestSoFar.

    Deterministic mode zeroes the measured CPU and wall times, since they
    can never be bit-stable across executions.
    """
    out = []
    best = None
    for r in call_records:
        best = r.value if best is None else max(best, r.value)
        out.append({"callIndex": r.call_index,
                    "step": r.step,
                    "restart": r.restart,
                    "smiles": r.key,
                    "value": r.value,
                    "bestSoFar": best,
                    "cpuTimeS": 0.0 if deterministic_timing else r.cpu_s,
                    "wallTimeS": 0.0 if deterministic_timing else r.wall_s})
    return out


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def write_jsonl(log: RunLog, path):
    with open(path, "w") as fh:
        fh.write(_dump(log.header) + "\n")
        for rec in log.records:
            fh.write(_dump(rec) + "\n")


def load_jsonl(path) -> RunLog:
    with open(path) as fh:
        lines = [line for line in fh if line.strip()]
    if not lines:
        raise LogSchemaError("%s: empty run log" % path)
    header = json.loads(lines[0])
    version = header.get("schema_version")
    if version != SCHEMA_VERSION:
        raise LogSchemaError("%s: unknown schema version %r" % (path, version))
    return RunLog(header, [json.loads(line) for line in lines[1:]])


_RECORD_FIELDS = ("callIndex", "step", "restart", "smiles", "value",
                  "bestSoFar", "cpuTimeS", "wallTimeS")


def validate(log: RunLog):
    """Raise LogSchemaError unless every record carries the full field
    set, call indices are contiguous from 1, and bestSoFar tracks the
    running maximum of value."""
    if log.header.get("schema_version") != SCHEMA_VERSION:
        raise LogSchemaError("unknown schema version %r"
                             % log.header.get("schema_version"))
    best = None
    for i, rec in enumerate(log.records, start=1):
        missing = [f for f in _RECORD_FIELDS if f not in rec]
        if missing:
            raise LogSchemaError("record %d lacks %s" % (i, ", ".join(missing)))
        if rec["callIndex"] != i:
            raise LogSchemaError("call index %r at position %d" % (rec["callIndex"], i))
        best = rec["value"] if best is None else max(best, rec["value"])
        if rec["bestSoFar"] != best:
            raise LogSchemaError("bestSoFar off at call %d" % i)
    return log
