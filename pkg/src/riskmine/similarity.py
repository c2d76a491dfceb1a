"""Cosine-similarity evidence between offline and online alignment distributions."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence, TYPE_CHECKING

import numpy as np

from .conformance import distribution
from .eventlog import EventLog

if TYPE_CHECKING:
    from .monitor import NodeProfile


class SimilarityError(Exception):
    pass


@dataclass(frozen=True)
class SimilarityScore:
    node: str
    value: float
    step: str = ""


def cosine_similarity(a: Sequence[float], b: Sequence[float]) -> float:
    """Inner product over the product of Euclidean norms.

    A zero vector has no conformance signal and must never read as
    exploitation evidence, so it yields 0.0 (with a warning).
    """
    va = np.asarray(a, dtype=float)
    vb = np.asarray(b, dtype=float)
    if va.shape != vb.shape:
        raise SimilarityError(f"vector length mismatch: {va.shape} vs {vb.shape}")
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        warnings.warn("cosine similarity of a zero vector defined as 0.0", stacklevel=2)
        return 0.0
    value = float(np.dot(va, vb) / (na * nb))
    # Guard against float error pushing a mathematically-bounded result past 1.
    return min(1.0, max(-1.0, value))


def evidence_from_traffic(profile: "NodeProfile", online_logs: Sequence[EventLog],
                          step: str = "") -> SimilarityScore:
    """Compare online traffic against a node's malicious-pattern profile.

    The online logs (produced with the profile's state model) are checked
    against the profile's process models; the resulting distribution is
    scored against the offline one by cosine similarity.
    """
    if len(online_logs) != len(profile.models):
        raise SimilarityError(
            f"profile {profile.node!r}: expected {len(profile.models)} state logs, "
            f"got {len(online_logs)}")
    online = distribution(online_logs, profile.models, profile.universe)
    value = cosine_similarity(online.concatenated,
                              profile.offline_distribution.concatenated)
    return SimilarityScore(node=profile.node, value=value, step=step)
