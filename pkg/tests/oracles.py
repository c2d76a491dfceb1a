"""Independent reference implementations used as test oracles.

Everything here is deliberately written with different algorithms than the
package code it checks: full-joint enumeration over explicit dictionaries for
inference, and Bellman-Ford relaxation over the synchronous product for
alignment costs.
"""

from __future__ import annotations

import itertools
import random

from riskmine.bag import Bag, load_bag
from riskmine.discovery import ProcessModel
from riskmine.eventlog import log_from_sequences


def random_bag_document(rng: random.Random, max_nodes: int = 12) -> dict:
    """Random DAG over ordered node ids (edges only go forward, so acyclic)."""
    n = rng.randint(3, max_nodes)
    nodes = [{"id": "n00", "host": "h0", "privilege": "user",
              "kind": "attacker_entry", "combiner": "or"}]
    for i in range(1, n):
        nodes.append({"id": f"n{i:02d}", "host": f"h{i}", "privilege": "root",
                      "kind": "condition",
                      "combiner": rng.choice(["or", "or", "and"])})
    edges = []
    k = 0
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < 0.4:
                edges.append({"id": f"e{k}", "source": f"n{i:02d}",
                              "target": f"n{j:02d}",
                              "vulnerability": f"VULN-{k}",
                              "base_probability": round(rng.random(), 6)})
                k += 1
    return {"nodes": nodes, "edges": edges}


def random_bag(rng: random.Random, max_nodes: int = 12) -> Bag:
    return load_bag(random_bag_document(rng, max_nodes))


def joint_probability(bag: Bag, assignment: dict[str, bool]) -> float:
    """P(full assignment) as a plain product of CPT row lookups."""
    p = 1.0
    for node_id in bag.nodes:
        if node_id == bag.attacker:
            if bag.attacker_prior is not None:
                prior = bag.attacker_prior
                p *= prior if assignment[node_id] else 1.0 - prior
            continue
        cpt = bag.cpts[node_id]
        row = cpt.rows[tuple(assignment[parent] for parent in cpt.parents)]
        p *= row if assignment[node_id] else 1.0 - row
    return p


def posterior_by_hand(bag: Bag, query: str, evidence: dict[str, bool]) -> float:
    """Third-path posterior: explicit loop over every assignment."""
    names = sorted(bag.nodes)
    free = [x for x in names if x not in evidence]
    num = den = 0.0
    for values in itertools.product((False, True), repeat=len(free)):
        assignment = dict(evidence)
        assignment.update(zip(free, values))
        p = joint_probability(bag, assignment)
        den += p
        if assignment[query]:
            num += p
    if den == 0.0:
        raise ZeroDivisionError("evidence impossible")
    return num / den


def bellman_ford_alignment_cost(model: ProcessModel, trace) -> int:
    """Minimum alignment cost by exhaustive relaxation over the product graph."""
    seq = tuple(trace)
    n = len(seq)
    states = list(model.states)
    out: dict[str, list[tuple[str, str]]] = {}
    for src, act, dst, _ in model.transitions:
        out.setdefault(src, []).append((act, dst))

    inf = float("inf")
    dist = {(i, s): inf for i in range(n + 1) for s in states}
    dist[(0, model.initial)] = 0
    changed = True
    while changed:
        changed = False
        for (i, s), d in list(dist.items()):
            if d == inf:
                continue
            moves = []
            if i < n:
                moves.append(((i + 1, s), 1))  # log move
                for act, t in out.get(s, ()):
                    if act == seq[i]:
                        moves.append(((i + 1, t), 0))  # synchronous
            for _, t in out.get(s, ()):
                moves.append(((i, t), 1))  # model move
            for nxt, step in moves:
                if d + step < dist[nxt]:
                    dist[nxt] = d + step
                    changed = True
    return int(min(dist[(n, f)] for f in model.finals))


def random_model(rng: random.Random, alphabet: str = "abcdef") -> ProcessModel:
    """Random directly-follows model with at most len(alphabet)+1 states."""
    from riskmine.discovery import discover

    n_traces = rng.randint(1, 6)
    sequences = []
    for _ in range(n_traces):
        length = rng.randint(1, 6)
        sequences.append([rng.choice(alphabet) for _ in range(length)])
    return discover(log_from_sequences(sequences), noise_threshold=0.0)


def random_trace(rng: random.Random, alphabet: str = "abcdefz",
                 max_len: int = 6) -> list[str]:
    return [rng.choice(alphabet) for _ in range(rng.randint(0, max_len))]
