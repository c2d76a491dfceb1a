"""Process discovery: frequency-filtered directly-follows automata.

The discovered model has one state per observed activity plus an artificial
start state; a transition (s, a, s') is kept when its relative frequency among
s's outgoing observations reaches the noise threshold.  The result is trimmed
so every state is reachable from the start and co-reachable to a final state.
"""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass
from typing import Iterable, Sequence

from .eventlog import EventLog

START = "__start__"
_END = "__end__"  # virtual marker used only while counting


class DiscoveryError(Exception):
    pass


@dataclass(frozen=True)
class ProcessModel:
    """Labeled transition system over activity states."""

    states: tuple[str, ...]
    transitions: tuple[tuple[str, str, str, int], ...]  # (source, activity, target, frequency)
    initial: str
    finals: frozenset[str]

    def out_transitions(self, state: str) -> tuple[tuple[str, str, str, int], ...]:
        return tuple(t for t in self.transitions if t[0] == state)

    def activities(self) -> tuple[str, ...]:
        return tuple(sorted({t[1] for t in self.transitions}))

    def accepts(self, activities: Sequence[str]) -> bool:
        state = self.initial
        nxt = {(t[0], t[1]): t[2] for t in self.transitions}
        for act in activities:
            state = nxt.get((state, act))
            if state is None:
                return False
        return state in self.finals

    def to_dict(self) -> dict:
        return {
            "states": list(self.states),
            "transitions": [list(t) for t in self.transitions],
            "initial": self.initial,
            "finals": sorted(self.finals),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ProcessModel":
        return cls(states=tuple(data["states"]),
                   transitions=tuple((str(s), str(a), str(d), int(f))
                                     for s, a, d, f in data["transitions"]),
                   initial=str(data["initial"]),
                   finals=frozenset(str(s) for s in data["finals"]))


def discover(log: EventLog, noise_threshold: float = 0.0) -> ProcessModel:
    """Discover a directly-follows automaton from an event log.

    Depends only on the log's multiset content, not on trace order.  With
    threshold 0 the model accepts every trace of the input log.
    """
    if not (0.0 <= noise_threshold < 1.0):
        raise DiscoveryError(f"noise_threshold must be in [0, 1), got {noise_threshold}")
    if len(log.traces) == 0:
        raise DiscoveryError("cannot discover a model from an empty log")

    follows: Counter = Counter()
    ends: Counter = Counter()
    for seq, mult in sorted(log.sequence_multiset().items()):
        prev = START
        for act in seq:
            follows[(prev, act)] += mult
            prev = act
        ends[prev] += mult

    out_totals: Counter = Counter()
    for (src, _), freq in follows.items():
        out_totals[src] += freq
    for src, freq in ends.items():
        out_totals[src] += freq

    kept = [(src, act, act, freq) for (src, act), freq in sorted(follows.items())
            if freq / out_totals[src] >= noise_threshold]
    finals = {src for src, freq in ends.items()
              if freq / out_totals[src] >= noise_threshold}

    # Trim: forward-reachable from start, backward-reachable from a final.
    succ: dict[str, set[str]] = {}
    pred: dict[str, set[str]] = {}
    for src, _, dst, _ in kept:
        succ.setdefault(src, set()).add(dst)
        pred.setdefault(dst, set()).add(src)
    reachable = _closure({START}, succ)
    co_reachable = _closure(finals & reachable, pred)
    live = reachable & co_reachable

    transitions = tuple(t for t in kept if t[0] in live and t[2] in live)
    finals = frozenset(f for f in finals if f in live)
    states = tuple(sorted({START} | {t[0] for t in transitions} | {t[2] for t in transitions}
                          | finals))
    if not finals or START not in live:
        raise DiscoveryError("model empty; lower threshold")
    return ProcessModel(states=states, transitions=transitions, initial=START, finals=finals)


def _closure(seed: Iterable[str], adjacency: dict[str, set[str]]) -> set[str]:
    seen = set(seed)
    queue = deque(seen)
    while queue:
        node = queue.popleft()
        for nxt in adjacency.get(node, ()):
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return seen


def shortest_accepting_path(model: ProcessModel) -> int:
    """Minimal number of activity transitions from the initial state to a final."""
    if model.initial in model.finals:
        return 0
    dist = {model.initial: 0}
    queue = deque([model.initial])
    succ: dict[str, list[str]] = {}
    for src, _, dst, _ in model.transitions:
        succ.setdefault(src, []).append(dst)
    while queue:
        state = queue.popleft()
        for nxt in succ.get(state, ()):
            if nxt not in dist:
                dist[nxt] = dist[state] + 1
                if nxt in model.finals:
                    return dist[nxt]
                queue.append(nxt)
    raise DiscoveryError("no final state reachable (model invariant violated)")


def distances_to_final(model: ProcessModel) -> dict[str, int]:
    """Per-state minimal transition count to any final state (BFS on reversed edges)."""
    pred: dict[str, list[str]] = {}
    for src, _, dst, _ in model.transitions:
        pred.setdefault(dst, []).append(src)
    dist = {f: 0 for f in model.finals}
    queue = deque(sorted(model.finals))
    while queue:
        state = queue.popleft()
        for prev in pred.get(state, ()):
            if prev not in dist:
                dist[prev] = dist[state] + 1
                queue.append(prev)
    return dist
