"""Alignment-based conformance checking.

Optimal alignments are found by A* over the synchronous product of trace
position and model state (unit cost for log-only and model-only moves, zero
for synchronous ones).  Per-trace diagnoses collect the number of
synchronously aligned events per activity plus the global fitness value;
per-state diagnosis means form the alignment distribution that traffic
profiles are compared against.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .discovery import ProcessModel, distances_to_final, shortest_accepting_path
from .eventlog import EventLog, Trace

UNKNOWN = "UNKNOWN"

SYNC = "sync"
LOG_ONLY = "log_only"
MODEL_ONLY = "model_only"


class ConformanceError(Exception):
    pass


@dataclass(frozen=True)
class Alignment:
    moves: tuple[tuple[str, str], ...]  # (kind, activity)
    cost: int

    def log_projection(self) -> tuple[str, ...]:
        return tuple(a for k, a in self.moves if k in (SYNC, LOG_ONLY))

    def model_projection(self) -> tuple[str, ...]:
        return tuple(a for k, a in self.moves if k in (SYNC, MODEL_ONLY))


@dataclass(frozen=True)
class Diagnosis:
    """Per-activity synchronous-move counts plus global fitness.

    ``vector()`` has length ``len(universe) + 1``: one slot per activity in
    the canonical universe followed by the fitness value.
    """

    universe: tuple[str, ...]
    per_activity: np.ndarray
    fitness: float

    def vector(self) -> np.ndarray:
        return np.append(self.per_activity, self.fitness)


@dataclass(frozen=True)
class AlignmentDistribution:
    """Per-state mean diagnosis blocks and their concatenation (state order)."""

    per_state: tuple[np.ndarray, ...]
    concatenated: np.ndarray


def _activities(trace) -> tuple[str, ...]:
    if isinstance(trace, Trace):
        return trace.activities()
    return tuple(trace)


def optimal_alignment(model: ProcessModel, trace) -> Alignment:
    """Minimum-cost alignment of a trace against the model.

    Deterministic: equal-cost frontier entries are expanded FIFO and
    successors are generated sync first, then model moves in lexicographic
    activity order, then the log move.
    """
    seq = _activities(trace)
    n = len(seq)
    dist_final = distances_to_final(model)
    out: dict[str, list[tuple[str, str]]] = {}
    for src, act, dst, _ in model.transitions:
        out.setdefault(src, []).append((act, dst))
    for src in out:
        out[src].sort()

    def heuristic(pos: int, state: str) -> int:
        return max(0, dist_final[state] - (n - pos))

    start = (0, model.initial)
    counter = itertools.count()
    best_g: dict[tuple[int, str], int] = {start: 0}
    parent: dict[tuple[int, str], tuple[tuple[int, str], tuple[str, str]]] = {}
    heap: list[tuple[int, int, int, tuple[int, str]]] = []
    heapq.heappush(heap, (heuristic(0, model.initial), next(counter), 0, start))

    goal = None
    while heap:
        f, _, g, node = heapq.heappop(heap)
        if g > best_g.get(node, g):
            continue
        pos, state = node
        if pos == n and state in model.finals:
            goal = node
            break
        successors: list[tuple[tuple[int, str], tuple[str, str], int]] = []
        if pos < n:
            for act, dst in out.get(state, ()):
                if act == seq[pos]:
                    successors.append(((pos + 1, dst), (SYNC, act), 0))
        for act, dst in out.get(state, ()):
            successors.append(((pos, dst), (MODEL_ONLY, act), 1))
        if pos < n:
            successors.append(((pos + 1, state), (LOG_ONLY, seq[pos]), 1))
        for nxt, move, step in successors:
            ng = g + step
            if ng < best_g.get(nxt, ng + 1):
                best_g[nxt] = ng
                parent[nxt] = (node, move)
                heapq.heappush(heap, (ng + heuristic(*nxt), next(counter), ng, nxt))

    if goal is None:
        raise ConformanceError("no accepting alignment found (model invariant violated)")

    moves: list[tuple[str, str]] = []
    node = goal
    while node != start:
        node, move = parent[node]
        moves.append(move)
    moves.reverse()
    return Alignment(moves=tuple(moves), cost=best_g[goal])


def fitness(model: ProcessModel, trace) -> float:
    """Global conformance in [0, 1]: 1 at perfect fit, 0 at the worst case of
    skipping the whole trace plus the model's shortest accepting path."""
    seq = _activities(trace)
    cost = optimal_alignment(model, seq).cost
    denom = len(seq) + shortest_accepting_path(model)
    if denom == 0:
        return 1.0
    return min(1.0, max(0.0, 1.0 - cost / denom))


def diagnose(model: ProcessModel, trace, universe: Sequence[str]) -> Diagnosis:
    """Per-activity alignment diagnosis of one trace.

    Slot k counts the synchronous moves on activity k; activities outside the
    universe fold into the reserved ``UNKNOWN`` slot (they can never align).
    """
    universe = tuple(universe)
    index = {act: i for i, act in enumerate(universe)}
    seq = _activities(trace)
    unknown = [a for a in seq if a not in index]
    if unknown and UNKNOWN not in index:
        raise ConformanceError(
            f"activities {sorted(set(unknown))} outside universe and no "
            f"{UNKNOWN!r} slot present")
    alignment = optimal_alignment(model, seq)
    counts = np.zeros(len(universe))
    for kind, act in alignment.moves:
        if kind == SYNC:
            counts[index.get(act, index.get(UNKNOWN, 0))] += 1.0
    denom = len(seq) + shortest_accepting_path(model)
    fit = 1.0 if denom == 0 else min(1.0, max(0.0, 1.0 - alignment.cost / denom))
    return Diagnosis(universe=universe, per_activity=counts, fitness=fit)


def distribution(logs: Sequence[EventLog], models: Sequence[ProcessModel],
                 universe: Sequence[str]) -> AlignmentDistribution:
    """Aggregate per-trace diagnoses into one block per state.

    Block j is the element-wise mean diagnosis vector of log j checked against
    model j; a state with no traffic contributes an all-zero block (absence of
    traffic is not evidence of anything).  Blocks are concatenated in state
    order.
    """
    if len(logs) != len(models):
        raise ConformanceError(
            f"state count mismatch: {len(logs)} logs vs {len(models)} models")
    universe = tuple(universe)
    width = len(universe) + 1
    blocks: list[np.ndarray] = []
    for log, model in zip(logs, models):
        if len(log.traces) == 0:
            blocks.append(np.zeros(width))
            continue
        vectors = [diagnose(model, trace, universe).vector() for trace in log.traces]
        blocks.append(np.mean(vectors, axis=0))
    return AlignmentDistribution(per_state=tuple(blocks),
                                 concatenated=np.concatenate(blocks))
