"""Exact posterior inference over attack graphs.

``posterior_ve`` implements variable elimination; ``posterior_enumerate``
computes the same marginal by summing the full joint distribution and serves
as the reference oracle for testing.  Both are pure functions of an immutable
Bag, so concurrent queries are safe.
"""

from __future__ import annotations

import itertools
from typing import Mapping

import numpy as np

from .bag import Bag, UnknownNodeError

ENUMERATION_LIMIT = 24


class InferenceError(Exception):
    pass


class DegenerateEvidenceError(InferenceError):
    """The supplied evidence has probability zero under the model."""


class _Factor:
    """Table over a sorted tuple of binary variables."""

    __slots__ = ("vars", "table")

    def __init__(self, vars: tuple[str, ...], table: np.ndarray):
        self.vars = vars
        self.table = table

    @classmethod
    def from_unsorted(cls, vars: tuple[str, ...], table: np.ndarray) -> "_Factor":
        perm = sorted(range(len(vars)), key=lambda i: vars[i])
        return cls(tuple(vars[i] for i in perm), np.transpose(table, perm))

    def product(self, other: "_Factor") -> "_Factor":
        union = tuple(sorted(set(self.vars) | set(other.vars)))
        return _Factor(union, self._expand(union) * other._expand(union))

    def _expand(self, union: tuple[str, ...]) -> np.ndarray:
        mine = set(self.vars)
        shape = tuple(2 if v in mine else 1 for v in union)
        return self.table.reshape(shape)

    def marginalize(self, var: str) -> "_Factor":
        axis = self.vars.index(var)
        return _Factor(self.vars[:axis] + self.vars[axis + 1:], self.table.sum(axis=axis))

    def reduce(self, var: str, value: bool) -> "_Factor":
        axis = self.vars.index(var)
        return _Factor(self.vars[:axis] + self.vars[axis + 1:],
                       np.take(self.table, int(value), axis=axis))


def _cpt_factor(bag: Bag, node_id: str) -> _Factor:
    cpt = bag.cpts[node_id]
    vars = cpt.parents + (node_id,)
    table = np.empty((2,) * len(vars))
    for assignment in itertools.product((False, True), repeat=len(cpt.parents)):
        p = cpt.rows[assignment]
        idx = tuple(int(v) for v in assignment)
        table[idx + (0,)] = 1.0 - p
        table[idx + (1,)] = p
    return _Factor.from_unsorted(vars, table)


def _validate_query(bag: Bag, query: str, evidence: Mapping[str, bool]) -> None:
    if query not in bag.nodes:
        raise UnknownNodeError(f"unknown query node {query!r}")
    for node in evidence:
        if node not in bag.nodes:
            raise UnknownNodeError(f"unknown evidence node {node!r}")
    if query in evidence:
        raise InferenceError(f"query node {query!r} is already fixed as evidence")
    if bag.attacker not in evidence and bag.attacker_prior is None:
        raise InferenceError(
            f"evidence must clamp the attacker entry node {bag.attacker!r} "
            "(or configure attacker_prior)")


def _attacker_factor(bag: Bag) -> _Factor:
    if bag.attacker_prior is not None:
        p = bag.attacker_prior
        return _Factor((bag.attacker,), np.array([1.0 - p, p]))
    # Clamped via evidence: an uninformative local factor is exact for any
    # query conditioned on the attacker's value.
    return _Factor((bag.attacker,), np.array([1.0, 1.0]))


def _elimination_order(bag: Bag, hidden: set[str]) -> list[str]:
    """Reverse-topological elimination with (degree, id) tie-breaking."""
    children: dict[str, set[str]] = {n: set() for n in bag.nodes}
    parents: dict[str, set[str]] = {n: set() for n in bag.nodes}
    for e in bag.edges.values():
        children[e.source].add(e.target)
        parents[e.target].add(e.source)
    degree = {n: len(children[n] | parents[n]) for n in bag.nodes}
    pending = {n: len(children[n]) for n in bag.nodes}
    ready = {n for n, c in pending.items() if c == 0}
    order: list[str] = []
    while ready:
        n = min(ready, key=lambda x: (degree[x], x))
        ready.discard(n)
        order.append(n)
        for p in parents[n]:
            pending[p] -= 1
            if pending[p] == 0:
                ready.add(p)
    return [n for n in order if n in hidden]


def posterior_ve(bag: Bag, query: str, evidence: Mapping[str, bool]) -> float:
    """Exact P(query = True | evidence) by variable elimination."""
    _validate_query(bag, query, evidence)
    factors = [_attacker_factor(bag)]
    factors.extend(_cpt_factor(bag, n) for n in bag.node_ids() if n != bag.attacker)

    for var, value in sorted(evidence.items()):
        factors = [f.reduce(var, bool(value)) if var in f.vars else f for f in factors]

    hidden = set(bag.nodes) - set(evidence) - {query}
    for var in _elimination_order(bag, hidden):
        related = [f for f in factors if var in f.vars]
        if not related:
            continue
        prod = related[0]
        for f in related[1:]:
            prod = prod.product(f)
        factors = [f for f in factors if var not in f.vars]
        factors.append(prod.marginalize(var))

    result = factors[0]
    for f in factors[1:]:
        result = result.product(f)
    table = result.table.reshape(2)
    z = float(table.sum())
    if z <= 0.0:
        raise DegenerateEvidenceError(
            "evidence has probability zero under the model; conditional undefined")
    return float(table[1] / z)


def posterior_enumerate(bag: Bag, query: str, evidence: Mapping[str, bool]) -> float:
    """Reference marginal: sum the full 2^n joint distribution.

    Deliberately independent of the variable-elimination code path.
    """
    n = len(bag.nodes)
    if n > ENUMERATION_LIMIT:
        raise InferenceError(f"graph too large for enumeration ({n} > {ENUMERATION_LIMIT} nodes)")
    _validate_query(bag, query, evidence)

    names = sorted(bag.nodes)
    pos = {name: i for i, name in enumerate(names)}
    joint = np.ones((2,) * n)
    for name in names:
        if name == bag.attacker:
            if bag.attacker_prior is None:
                continue  # clamped by evidence; uniform local term
            local = np.array([1.0 - bag.attacker_prior, bag.attacker_prior])
            shape = [1] * n
            shape[pos[name]] = 2
            joint = joint * local.reshape(shape)
            continue
        cpt = bag.cpts[name]
        axes = [pos[p] for p in cpt.parents] + [pos[name]]
        local = np.empty((2,) * len(axes))
        for assignment in itertools.product((False, True), repeat=len(cpt.parents)):
            p = cpt.rows[assignment]
            idx = tuple(int(v) for v in assignment)
            local[idx + (0,)] = 1.0 - p
            local[idx + (1,)] = p
        order = sorted(range(len(axes)), key=lambda i: axes[i])
        local = np.transpose(local, order)
        shape = [1] * n
        for a in axes:
            shape[a] = 2
        joint = joint * local.reshape(shape)

    index: list[slice | int] = [slice(None)] * n
    for var, value in evidence.items():
        index[pos[var]] = int(bool(value))
    sliced = joint[tuple(index)]
    remaining = [names[i] for i in range(n) if isinstance(index[i], slice)]
    q_axis = remaining.index(query)
    other_axes = tuple(i for i in range(len(remaining)) if i != q_axis)
    marginal = sliced.sum(axis=other_axes) if other_axes else sliced
    z = float(marginal.sum())
    if z <= 0.0:
        raise DegenerateEvidenceError(
            "evidence has probability zero under the model; conditional undefined")
    return float(marginal[1] / z)


def assess_risk(bag: Bag) -> dict[str, float]:
    """Posterior compromise probability of every non-entry node, with the
    attacker entry clamped true."""
    evidence = {bag.attacker: True}
    return {node: posterior_ve(bag, node, evidence)
            for node in bag.node_ids() if node != bag.attacker}
