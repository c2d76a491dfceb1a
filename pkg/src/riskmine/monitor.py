"""Orchestration of the two assessment phases.

Offline: ``characterize`` turns per-vulnerability exploit captures into node
profiles (state model, per-state process models, canonical activity universe
and the offline alignment distribution).  Online: ``monitor_step`` pipes
unknown captures through each node's profile, converts the similarity scores
into edge evidence on the attack graph and recomputes all posteriors.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .bag import Bag, set_edge_evidence
from .conformance import UNKNOWN, AlignmentDistribution, distribution
from .discovery import ProcessModel, discover
from .inference import assess_risk
from .similarity import SimilarityScore, evidence_from_traffic
from .traffic import (DEFAULT_WINDOW, StateModel, extract_event_logs,
                      extract_features, fit_states, ingest_packets)

DEFAULT_BETA = 3


class MonitorError(Exception):
    pass


@dataclass(frozen=True)
class NodeProfile:
    """Malicious-pattern characterization of one node's vulnerability."""

    node: str
    vulnerability: str
    state_model: StateModel
    models: tuple[ProcessModel, ...]
    universe: tuple[str, ...]
    offline_distribution: AlignmentDistribution
    window: int

    @property
    def beta(self) -> int:
        return len(self.models)


@dataclass(frozen=True)
class StepRecord:
    label: str
    scores: tuple[SimilarityScore, ...]
    posteriors: Mapping[str, float]
    # evidence actually injected into the graph: (node, edge id, value)
    applied: tuple[tuple[str, str, float], ...] = ()


@dataclass(frozen=True)
class RiskReport:
    steps: tuple[StepRecord, ...]


def characterize(captures: Sequence[tuple[str, str, str]], beta: int = DEFAULT_BETA,
                 seed: int = 7, window: int = DEFAULT_WINDOW) -> dict[str, NodeProfile]:
    """Build a NodeProfile per (node, vulnerability, capture path) entry.

    Pipeline per node: feature extraction, state clustering, event-log
    extraction, per-state discovery at threshold 0, then the offline
    distribution from re-checking the characterization logs themselves.
    """
    profiles: dict[str, NodeProfile] = {}
    for node, vulnerability, path in captures:
        if node in profiles:
            raise MonitorError(f"duplicate capture for node {node!r}")
        packets = ingest_packets(path)
        if not packets:
            raise MonitorError(f"node {node!r}: empty characterization capture {path}")
        logs = _state_logs(packets, beta, seed, window)
        state_model = logs["model"]
        event_logs = logs["logs"]
        for j, log in enumerate(event_logs):
            if len(log.traces) == 0:
                raise MonitorError(
                    f"node {node!r}: state {j} received no traffic windows; "
                    "lower beta or provide a richer capture")
        universe = event_logs[0].activity_universe + (UNKNOWN,)
        models = tuple(discover(log, noise_threshold=0.0) for log in event_logs)
        offline = distribution(event_logs, models, universe)
        profiles[node] = NodeProfile(
            node=node, vulnerability=vulnerability, state_model=state_model,
            models=models, universe=universe, offline_distribution=offline,
            window=window)
    return profiles


def _state_logs(packets, beta: int, seed: int, window: int) -> dict:
    pairs = extract_features(packets, window)
    model = fit_states([feats for _, feats in pairs], beta, seed)
    return {"model": model, "logs": extract_event_logs(packets, model, window)}


def characterize_from_manifest(traffic_dir, beta: int = DEFAULT_BETA, seed: int = 7,
                               window: int = DEFAULT_WINDOW) -> dict[str, NodeProfile]:
    """Characterize from a capture directory carrying a ``captures.json`` manifest."""
    traffic_dir = Path(traffic_dir)
    manifest_path = traffic_dir / "captures.json"
    if not manifest_path.exists():
        raise MonitorError(f"no captures.json manifest in {traffic_dir}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    entries = []
    for node_id, info in sorted(manifest.get("nodes", {}).items()):
        if "vulnerability" not in info:
            raise MonitorError(
                f"{manifest_path}: node {node_id!r} has no vulnerability; "
                "use a characterization capture set")
        entries.append((node_id, info["vulnerability"], str(traffic_dir / info["file"])))
    if not entries:
        raise MonitorError(f"{manifest_path}: no capture entries")
    return characterize(entries, beta=beta, seed=seed, window=window)


def monitor_step(bag: Bag, profiles: Mapping[str, NodeProfile],
                 captures: Mapping[str, str], step_label: str) -> tuple[Bag, StepRecord]:
    """Process one monitoring step: per-node similarity evidence, CPT refresh,
    then a full risk assessment of the updated graph.

    Edge evidence keeps the running maximum of observed similarity values, so
    a node once detected as exploited stays detected.
    """
    scores: list[SimilarityScore] = []
    applied: list[tuple[str, str, float]] = []
    for node in sorted(captures):
        if node not in profiles:
            raise MonitorError(f"capture for unprofiled node {node!r}")
        profile = profiles[node]
        packets = ingest_packets(captures[node])
        logs = extract_event_logs(packets, profile.state_model, profile.window)
        score = evidence_from_traffic(profile, logs, step=step_label)
        scores.append(score)
        for edge in bag.edges_for_vulnerability(profile.vulnerability):
            value = max(edge.evidence_probability, score.value)
            bag = set_edge_evidence(bag, edge.id, value)
            applied.append((node, edge.id, value))
    record = StepRecord(label=step_label, scores=tuple(scores),
                        posteriors=assess_risk(bag), applied=tuple(applied))
    return bag, record


def run_assessment(bag: Bag, profiles: Mapping[str, NodeProfile],
                   steps: Sequence[tuple[str, Mapping[str, str]]]) -> RiskReport:
    """Fold ``monitor_step`` over an ordered list of (label, captures) steps."""
    records: list[StepRecord] = []
    for label, captures in steps:
        bag, record = monitor_step(bag, profiles, captures, label)
        records.append(record)
    return RiskReport(steps=tuple(records))


# ---------------------------------------------------------------------------
# Profile and report persistence

def _safe_name(node_id: str) -> str:
    return node_id.replace(":", "_").replace(" ", "_").replace("(", "").replace(")", "")


def save_profiles(profiles: Mapping[str, NodeProfile], out_dir) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for node in sorted(profiles):
        profile = profiles[node]
        pdir = out_dir / _safe_name(node)
        pdir.mkdir(parents=True, exist_ok=True)
        meta = {"node": profile.node, "vulnerability": profile.vulnerability,
                "universe": list(profile.universe), "beta": profile.beta,
                "window": profile.window}
        (pdir / "profile.json").write_text(
            json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        (pdir / "state_model.json").write_text(
            json.dumps(profile.state_model.to_dict(), sort_keys=True) + "\n",
            encoding="utf-8")
        for j, model in enumerate(profile.models):
            (pdir / f"model_{j}.json").write_text(
                json.dumps(model.to_dict(), sort_keys=True) + "\n", encoding="utf-8")
        with open(pdir / "distribution.txt", "w", encoding="utf-8") as fh:
            for value in profile.offline_distribution.concatenated:
                fh.write(repr(float(value)) + "\n")


def load_profiles(profiles_dir) -> dict[str, NodeProfile]:
    profiles_dir = Path(profiles_dir)
    profiles: dict[str, NodeProfile] = {}
    for pdir in sorted(p for p in profiles_dir.iterdir() if p.is_dir()):
        meta_path = pdir / "profile.json"
        if not meta_path.exists():
            continue
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        state_model = StateModel.from_dict(
            json.loads((pdir / "state_model.json").read_text(encoding="utf-8")))
        models = tuple(
            ProcessModel.from_dict(
                json.loads((pdir / f"model_{j}.json").read_text(encoding="utf-8")))
            for j in range(int(meta["beta"])))
        flat = np.array([float(line) for line in
                         (pdir / "distribution.txt").read_text(encoding="utf-8").split()])
        width = len(meta["universe"]) + 1
        blocks = tuple(flat[j * width:(j + 1) * width] for j in range(int(meta["beta"])))
        profiles[meta["node"]] = NodeProfile(
            node=meta["node"], vulnerability=meta["vulnerability"],
            state_model=state_model, models=models,
            universe=tuple(meta["universe"]),
            offline_distribution=AlignmentDistribution(per_state=blocks,
                                                       concatenated=flat),
            window=int(meta["window"]))
    if not profiles:
        raise MonitorError(f"no profiles found under {profiles_dir}")
    return profiles


def report_to_dict(report: RiskReport) -> dict:
    return {"steps": [{
        "label": rec.label,
        "cos_sim": {s.node: s.value for s in rec.scores},
        "evidence": [{"node": n, "edge": e, "value": v}
                     for n, e, v in rec.applied],
        "posteriors": dict(rec.posteriors),
    } for rec in report.steps]}


def report_from_dict(data: Mapping) -> RiskReport:
    steps = []
    for rec in data["steps"]:
        scores = tuple(SimilarityScore(node=node, value=value, step=rec["label"])
                       for node, value in sorted(rec["cos_sim"].items()))
        applied = tuple((item["node"], item["edge"], item["value"])
                        for item in rec.get("evidence", ()))
        steps.append(StepRecord(label=rec["label"], scores=scores,
                                posteriors=dict(rec["posteriors"]),
                                applied=applied))
    return RiskReport(steps=tuple(steps))


def report_to_json(report: RiskReport) -> str:
    return json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n"


def write_report(report: RiskReport, path) -> None:
    Path(path).write_text(report_to_json(report), encoding="utf-8")


def load_report(path) -> RiskReport:
    return report_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def cossim_csv(report: RiskReport) -> str:
    """Similarity table shaped like the per-step evidence matrix: one row per
    monitored node, one column per attack step."""
    labels = [rec.label for rec in report.steps]
    nodes = sorted({s.node for rec in report.steps for s in rec.scores})
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["node"] + labels)
    for node in nodes:
        row = [node]
        for rec in report.steps:
            value = next((s.value for s in rec.scores if s.node == node), "")
            row.append(repr(value) if value != "" else "")
        writer.writerow(row)
    return buf.getvalue()


def posterior_csv(report: RiskReport) -> str:
    labels = [rec.label for rec in report.steps]
    nodes = sorted({n for rec in report.steps for n in rec.posteriors})
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["node"] + labels)
    for node in nodes:
        writer.writerow([node] + [repr(rec.posteriors[node]) for rec in report.steps])
    return buf.getvalue()
