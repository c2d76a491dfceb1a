"""Bayesian attack graph model: security conditions, exploit edges and CPTs.

A ``Bag`` is a DAG of security conditions (attacker privilege levels on
hosts).  Each edge carries the probability that its vulnerability is being
exploited; node CPTs are derived from those edge probabilities and refreshed
whenever new traffic evidence arrives.
"""

from __future__ import annotations

import itertools
import json
import warnings
from dataclasses import dataclass, replace
from importlib import resources
from typing import Iterable, Mapping

PRIVILEGES = ("guest", "user", "root")
KINDS = ("attacker_entry", "condition")
COMBINERS = ("or", "and")


class BagError(Exception):
    """Base error for attack-graph definition and update problems."""


class BagValidationError(BagError):
    pass


class BagParseError(BagError):
    pass


class UnknownNodeError(BagError):
    pass


class UnknownEdgeError(BagError):
    pass


@dataclass(frozen=True)
class SecurityCondition:
    """A node: an attacker privilege level on a specific host."""

    id: str
    host: str
    privilege: str
    kind: str = "condition"
    combiner: str = "or"

    def __post_init__(self):
        if not self.id:
            raise BagValidationError("node id must be non-empty")
        if self.privilege not in PRIVILEGES:
            raise BagValidationError(
                f"node {self.id!r}: privilege must be one of {PRIVILEGES}, got {self.privilege!r}")
        if self.kind not in KINDS:
            raise BagValidationError(
                f"node {self.id!r}: kind must be one of {KINDS}, got {self.kind!r}")
        if self.combiner not in COMBINERS:
            raise BagValidationError(
                f"node {self.id!r}: combiner must be one of {COMBINERS}, got {self.combiner!r}")


@dataclass(frozen=True)
class ExploitEdge:
    """A directed exploit: source privilege enables compromising target."""

    id: str
    source: str
    target: str
    vulnerability: str
    base_probability: float
    evidence_probability: float

    def __post_init__(self):
        if self.source == self.target:
            raise BagValidationError(f"edge {self.id!r}: source equals target ({self.source!r})")
        for name in ("base_probability", "evidence_probability"):
            p = getattr(self, name)
            if not (0.0 <= p <= 1.0):
                raise BagValidationError(f"edge {self.id!r}: {name} {p} outside [0, 1]")


@dataclass(frozen=True)
class Cpt:
    """Conditional probability table: P(node = True | parent assignment).

    ``parents`` is the canonical (lexicographic) ordering of in-edge sources;
    ``rows`` maps every full parent truth-assignment to P(True).
    """

    node: str
    parents: tuple[str, ...]
    rows: Mapping[tuple[bool, ...], float]

    def p_true(self, assignment: tuple[bool, ...]) -> float:
        return self.rows[assignment]


@dataclass(frozen=True)
class Bag:
    """Validated Bayesian attack graph.

    Immutable after construction: updates (``set_edge_evidence``) return new
    values, so a Bag can be shared read-only across concurrent queries.
    """

    nodes: Mapping[str, SecurityCondition]
    edges: Mapping[str, ExploitEdge]
    cpts: Mapping[str, Cpt]
    attacker: str
    attacker_prior: float | None = None

    def node_ids(self) -> tuple[str, ...]:
        return tuple(sorted(self.nodes))

    def in_edges(self, node_id: str) -> tuple[ExploitEdge, ...]:
        return tuple(sorted((e for e in self.edges.values() if e.target == node_id),
                            key=lambda e: e.source))

    def edges_for_vulnerability(self, vulnerability: str) -> tuple[ExploitEdge, ...]:
        return tuple(sorted((e for e in self.edges.values() if e.vulnerability == vulnerability),
                            key=lambda e: e.id))


def _topological_order(nodes: Iterable[str], edges: Iterable[ExploitEdge]) -> list[str]:
    """Deterministic Kahn topological sort; raises on cycles with a cycle path."""
    node_list = sorted(nodes)
    out: dict[str, list[str]] = {n: [] for n in node_list}
    indeg: dict[str, int] = {n: 0 for n in node_list}
    for e in edges:
        out[e.source].append(e.target)
        indeg[e.target] += 1
    ready = sorted(n for n in node_list if indeg[n] == 0)
    order: list[str] = []
    while ready:
        n = ready.pop(0)
        order.append(n)
        for child in sorted(out[n]):
            indeg[child] -= 1
            if indeg[child] == 0:
                ready.append(child)
        ready.sort()
    if len(order) != len(node_list):
        cycle = _find_cycle(out, set(node_list) - set(order))
        raise BagValidationError("cycle detected: " + " -> ".join(cycle))
    return order


def _find_cycle(out: dict[str, list[str]], remaining: set[str]) -> list[str]:
    # Strip nodes that merely hang off the cyclic core, then walk until a
    # node repeats.
    core = set(remaining)
    stripped = True
    while stripped:
        stripped = False
        for node in sorted(core):
            if not any(c in core for c in out[node]):
                core.discard(node)
                stripped = True
    seen: list[str] = []
    node = sorted(core)[0]
    while node not in seen:
        seen.append(node)
        node = sorted(c for c in out[node] if c in core)[0]
    i = seen.index(node)
    return seen[i:] + [node]


def rebuild_cpt(bag: Bag, node_id: str) -> Cpt:
    """Recompute a node's CPT from the current evidence of its in-edges.

    Disjunctive nodes combine as noisy-OR over the in-edges whose source is
    true; conjunctive nodes succeed only when every parent is true, with
    probability equal to the product of all in-edge probabilities.  The
    all-parents-false row is always 0.
    """
    if node_id not in bag.nodes:
        raise UnknownNodeError(f"unknown node {node_id!r}")
    node = bag.nodes[node_id]
    if node.kind == "attacker_entry":
        raise BagValidationError(f"node {node_id!r} is the attacker entry; it has no CPT")
    in_edges = bag.in_edges(node_id)
    # Parents are the distinct in-edge sources; parallel edges with different
    # vulnerabilities each contribute their own term.
    parents = tuple(sorted({e.source for e in in_edges}))
    rows: dict[tuple[bool, ...], float] = {}
    for assignment in itertools.product((False, True), repeat=len(parents)):
        true_parents = {p for p, on in zip(parents, assignment) if on}
        if node.combiner == "and":
            if parents and len(true_parents) == len(parents):
                p = 1.0
                for e in in_edges:
                    p *= e.evidence_probability
            else:
                p = 0.0
        else:
            active = [e.evidence_probability for e in in_edges
                      if e.source in true_parents]
            if len(active) == 1:
                p = active[0]  # exact: avoids 1 - (1 - s) float error
            else:
                acc = 1.0
                for q in active:
                    acc *= 1.0 - q
                p = 1.0 - acc
        rows[assignment] = p
    return Cpt(node=node_id, parents=parents, rows=rows)


def _build_bag(nodes: list[SecurityCondition], edges: list[ExploitEdge],
               attacker_prior: float | None = None) -> Bag:
    node_map: dict[str, SecurityCondition] = {}
    for n in nodes:
        if n.id in node_map:
            raise BagValidationError(f"duplicate node id {n.id!r}")
        node_map[n.id] = n

    entries = [n.id for n in nodes if n.kind == "attacker_entry"]
    if len(entries) != 1:
        raise BagValidationError(
            f"expected exactly one attacker_entry node, found {len(entries)}")
    attacker = entries[0]

    merged: dict[tuple[str, str, str], ExploitEdge] = {}
    edge_map: dict[str, ExploitEdge] = {}
    for e in edges:
        if e.source not in node_map:
            raise BagValidationError(f"edge {e.id!r}: unknown source node {e.source!r}")
        if e.target not in node_map:
            raise BagValidationError(f"edge {e.id!r}: unknown target node {e.target!r}")
        if e.target == attacker:
            raise BagValidationError(
                f"edge {e.id!r} targets the attacker entry node {attacker!r}")
        if e.id in edge_map:
            raise BagValidationError(f"duplicate edge id {e.id!r}")
        key = (e.source, e.target, e.vulnerability)
        if key in merged:
            warnings.warn(
                f"duplicate edge for {key}; keeping {merged[key].id!r}, dropping {e.id!r}",
                stacklevel=3)
            continue
        merged[key] = e
        edge_map[e.id] = e

    _topological_order(node_map, edge_map.values())  # raises on cycles

    if attacker_prior is not None and not (0.0 <= attacker_prior <= 1.0):
        raise BagValidationError(f"attacker_prior {attacker_prior} outside [0, 1]")

    bag = Bag(nodes=node_map, edges=edge_map, cpts={}, attacker=attacker,
              attacker_prior=attacker_prior)
    cpts = {nid: rebuild_cpt(bag, nid) for nid in sorted(node_map) if nid != attacker}
    return replace(bag, cpts=cpts)


def load_bag(document: str | Mapping) -> Bag:
    """Parse a BAG definition (JSON text or an already-decoded mapping).

    Expected shape: ``{"nodes": [...], "edges": [...]}`` with optional
    ``attacker_prior``.  Edge ``evidence_probability`` starts at
    ``base_probability``; CPTs are generated on load.
    """
    if isinstance(document, str):
        try:
            data = json.loads(document)
        except json.JSONDecodeError as exc:
            raise BagParseError(f"invalid BAG document: {exc}") from exc
    else:
        data = document
    if not isinstance(data, Mapping):
        raise BagParseError("BAG document must be a JSON object")
    for key in ("nodes", "edges"):
        if key not in data:
            raise BagParseError(f"BAG document missing {key!r}")

    try:
        nodes = [SecurityCondition(
            id=str(item["id"]), host=str(item.get("host", "")),
            privilege=str(item.get("privilege", "root")),
            kind=str(item.get("kind", "condition")),
            combiner=str(item.get("combiner", "or")),
        ) for item in data["nodes"]]
        edges = [ExploitEdge(
            id=str(item["id"]), source=str(item["source"]), target=str(item["target"]),
            vulnerability=str(item["vulnerability"]),
            base_probability=float(item.get("base_probability", 0.0)),
            evidence_probability=float(item.get("base_probability", 0.0)),
        ) for item in data["edges"]]
    except KeyError as exc:
        raise BagParseError(f"missing required field {exc.args[0]!r}") from exc
    except (TypeError, ValueError) as exc:
        raise BagParseError(f"malformed BAG document: {exc}") from exc

    prior = data.get("attacker_prior")
    return _build_bag(nodes, edges, None if prior is None else float(prior))


def load_bag_file(path) -> Bag:
    with open(path, "r", encoding="utf-8") as fh:
        return load_bag(fh.read())


def load_builtin_bag(name: str = "paper-testbed") -> Bag:
    """Load one of the BAG definitions shipped with the package."""
    try:
        text = (resources.files("riskmine") / "data" / f"{name}.json").read_text("utf-8")
    except FileNotFoundError:
        raise BagParseError(f"no built-in BAG named {name!r}") from None
    return load_bag(text)


def set_edge_evidence(bag: Bag, edge_id: str, cos_sim: float) -> Bag:
    """Return a new Bag with the edge's exploitation evidence replaced.

    Only the target node's CPT is rebuilt; all others are shared unchanged.
    """
    if edge_id not in bag.edges:
        raise UnknownEdgeError(f"unknown edge {edge_id!r}")
    if not (0.0 <= cos_sim <= 1.0):
        raise BagValidationError(f"evidence value {cos_sim} outside [0, 1]")
    edge = bag.edges[edge_id]
    new_edges = dict(bag.edges)
    new_edges[edge_id] = replace(edge, evidence_probability=cos_sim)
    updated = replace(bag, edges=new_edges)
    new_cpts = dict(bag.cpts)
    new_cpts[edge.target] = rebuild_cpt(updated, edge.target)
    return replace(updated, cpts=new_cpts)


def bag_to_document(bag: Bag) -> dict:
    """Serializable form of a Bag; deterministic ordering for byte-stable dumps."""
    doc: dict = {
        "nodes": [{"id": n.id, "host": n.host, "privilege": n.privilege,
                   "kind": n.kind, "combiner": n.combiner}
                  for n in sorted(bag.nodes.values(), key=lambda n: n.id)],
        "edges": [{"id": e.id, "source": e.source, "target": e.target,
                   "vulnerability": e.vulnerability,
                   "base_probability": e.base_probability}
                  for e in sorted(bag.edges.values(), key=lambda e: e.id)],
    }
    if bag.attacker_prior is not None:
        doc["attacker_prior"] = bag.attacker_prior
    return doc
