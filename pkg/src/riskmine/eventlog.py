"""Process-mining data model: events, traces and event logs.

Logs are multisets of traces over an ordered activity universe.  The on-disk
format is line-delimited JSON with fields ``case``, ``activity``, ``ts_us``
and optional ``attrs``, written sorted by (case, ts_us) so serialization is
byte-stable.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable


class LogError(Exception):
    pass


class LogParseError(LogError):
    pass


@dataclass(frozen=True)
class NetworkEvent:
    activity: str
    ts_us: int
    attrs: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        if not self.activity:
            raise LogError("event activity must be non-empty")


@dataclass(frozen=True)
class Trace:
    case_id: str
    events: tuple[NetworkEvent, ...]

    def __post_init__(self):
        if not self.case_id:
            raise LogError("trace case_id must be non-empty")
        if not self.events:
            raise LogError(f"trace {self.case_id!r} has no events")
        last = None
        for ev in self.events:
            if last is not None and ev.ts_us < last:
                raise LogError(
                    f"trace {self.case_id!r}: timestamps not non-decreasing "
                    f"({ev.ts_us} after {last})")
            last = ev.ts_us

    def activities(self) -> tuple[str, ...]:
        return tuple(ev.activity for ev in self.events)


@dataclass(frozen=True)
class EventLog:
    traces: tuple[Trace, ...]
    activity_universe: tuple[str, ...] = field(default=())

    def __post_init__(self):
        observed = {ev.activity for tr in self.traces for ev in tr.events}
        universe = tuple(sorted(observed | set(self.activity_universe)))
        object.__setattr__(self, "activity_universe", universe)

    def __len__(self) -> int:
        return len(self.traces)

    def sequence_multiset(self) -> Counter:
        """Multiset of activity sequences (the log's content modulo case ids)."""
        return Counter(tr.activities() for tr in self.traces)


def write_log(log: EventLog, path) -> None:
    rows = []
    for trace in log.traces:
        for ev in trace.events:
            row = {"case": trace.case_id, "activity": ev.activity, "ts_us": ev.ts_us}
            if ev.attrs:
                row["attrs"] = dict(ev.attrs)
            rows.append(row)
    rows.sort(key=lambda r: (r["case"], r["ts_us"]))
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def read_log(path) -> EventLog:
    """Parse a line-delimited log file; groups rows into traces by case id."""
    events_by_case: dict[str, list[NetworkEvent]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
                case = str(row["case"])
                activity = str(row["activity"])
                ts_us = int(row["ts_us"])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise LogParseError(f"{path}:{lineno}: malformed log record: {exc}") from exc
            attrs = tuple(sorted((str(k), str(v))
                                 for k, v in (row.get("attrs") or {}).items()))
            bucket = events_by_case.setdefault(case, [])
            if bucket and ts_us < bucket[-1].ts_us:
                raise LogParseError(
                    f"{path}:{lineno}: case {case!r}: timestamp {ts_us} decreases "
                    f"after {bucket[-1].ts_us}")
            bucket.append(NetworkEvent(activity=activity, ts_us=ts_us, attrs=attrs))
    traces = tuple(Trace(case_id=case, events=tuple(evs))
                   for case, evs in sorted(events_by_case.items()))
    return EventLog(traces=traces)


def merge_logs(a: EventLog, b: EventLog) -> EventLog:
    """Multiset union; colliding case ids from ``b`` get a deterministic suffix."""
    taken = {tr.case_id for tr in a.traces}
    merged = list(a.traces)
    for trace in b.traces:
        case = trace.case_id
        if case in taken:
            n = 2
            while f"{case}~{n}" in taken:
                n += 1
            case = f"{case}~{n}"
            trace = Trace(case_id=case, events=trace.events)
        taken.add(case)
        merged.append(trace)
    return EventLog(traces=tuple(merged),
                    activity_universe=tuple(sorted(set(a.activity_universe)
                                                   | set(b.activity_universe))))


def log_from_sequences(sequences: Iterable[Iterable[str]], prefix: str = "c") -> EventLog:
    """Build a log from bare activity sequences; handy for tests and fixtures."""
    traces = []
    for i, seq in enumerate(sequences):
        events = tuple(NetworkEvent(activity=a, ts_us=j) for j, a in enumerate(seq))
        traces.append(Trace(case_id=f"{prefix}{i}", events=events))
    return EventLog(traces=tuple(traces))
