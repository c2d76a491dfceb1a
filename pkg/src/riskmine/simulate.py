"""Deterministic traffic scenario simulator.

Generates synthetic benign and attack-step traffic for the built-in testbed
scenarios ("paper-ap1", "paper-ap2") so the whole assessment pipeline can run
without a physical testbed.  Attacks follow the four-stage attacker procedure
(network scan, host scan, vulnerability scan, exploitation); each CVE gets a
distinct deterministic flag/length template.  Identical (scenario, step, seed)
inputs produce byte-identical capture files.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from .traffic import PacketRecord, write_packets

BASE_TS_US = 1_700_000_000_000_000

# Flag bytes for the named combinations used below.
SYN, SYNACK, ACK, PSHACK, FINACK, RST, RSTACK = 0x02, 0x12, 0x10, 0x18, 0x11, 0x04, 0x14


class ScenarioError(Exception):
    pass


@dataclass(frozen=True)
class NodeSpec:
    id: str
    host: str
    vulnerability: str
    service_port: int


@dataclass(frozen=True)
class AttackStep:
    label: str
    node: str | None = None          # None: benign-only step
    vulnerability: str | None = None
    shape: str | None = None         # CVE template key


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    nodes: tuple[NodeSpec, ...]
    benign_profile: Mapping[str, object]
    attack_steps: tuple[AttackStep, ...]
    seed: int = 7
    attacker_ip: str = "192.168.56.102"

    def step_labels(self) -> tuple[str, ...]:
        return tuple(s.label for s in self.attack_steps)


@dataclass(frozen=True)
class CveTemplate:
    """Synthetic exploitation signature: two marker flag combinations plus a
    characteristic payload size.  Purely synthetic; chosen for reproducible
    separation from benign traffic, not realism."""

    sig1: int
    sig2: int
    payload_len: int
    burst_pairs: int


CVE_TEMPLATES: dict[str, CveTemplate] = {
    "CVE-2023-0600": CveTemplate(sig1=0x2A, sig2=0x38, payload_len=777, burst_pairs=6),
    "CVE-2010-2075": CveTemplate(sig1=0x29, sig2=0x03, payload_len=666, burst_pairs=7),
    "CVE-2019-15107": CveTemplate(sig1=0x31, sig2=0x19, payload_len=999, burst_pairs=8),
    "CVE-2011-2523": CveTemplate(sig1=0x06, sig2=0x22, payload_len=1234, burst_pairs=9),
}

_DEFAULT_BENIGN = {
    "flows": 10,
    "data_packets": (6, 14),
    "request_len": (300, 600),
    "response_len": (600, 1400),
    "abort_fraction": 0.0,
    "client_port": 443,
}

_TESTBED_NODES = (
    NodeSpec("RA:192.168.56.1", "192.168.56.1", "CVE-2023-0600", 80),
    NodeSpec("RA:20.0.0.9", "20.0.0.9", "CVE-2010-2075", 6667),
    NodeSpec("RA:20.0.0.1", "20.0.0.1", "CVE-2019-15107", 10000),
    NodeSpec("RA:10.0.0.3", "10.0.0.3", "CVE-2011-2523", 21),
)

_BUILTINS = {
    "paper-ap1": ScenarioSpec(
        name="paper-ap1",
        nodes=_TESTBED_NODES,
        benign_profile=_DEFAULT_BENIGN,
        attack_steps=(
            AttackStep("I"),
            AttackStep("II", "RA:192.168.56.1", "CVE-2023-0600", "CVE-2023-0600"),
            AttackStep("III", "RA:20.0.0.9", "CVE-2010-2075", "CVE-2010-2075"),
            AttackStep("IV", "RA:10.0.0.3", "CVE-2011-2523", "CVE-2011-2523"),
        ),
    ),
    "paper-ap2": ScenarioSpec(
        name="paper-ap2",
        nodes=_TESTBED_NODES,
        benign_profile=_DEFAULT_BENIGN,
        attack_steps=(
            AttackStep("I"),
            AttackStep("II", "RA:20.0.0.9", "CVE-2010-2075", "CVE-2010-2075"),
            AttackStep("III", "RA:20.0.0.1", "CVE-2019-15107", "CVE-2019-15107"),
            AttackStep("IV", "RA:10.0.0.3", "CVE-2011-2523", "CVE-2011-2523"),
        ),
    ),
}


def scenario_names() -> tuple[str, ...]:
    return tuple(sorted(_BUILTINS))


def builtin_scenario(name: str) -> ScenarioSpec:
    if name not in _BUILTINS:
        raise ScenarioError(
            f"unknown scenario {name!r}; built-ins: {', '.join(scenario_names())}")
    return _BUILTINS[name]


def _rng(*parts) -> random.Random:
    digest = hashlib.sha256(":".join(str(p) for p in parts).encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def _peer_ip(rng: random.Random, host: str) -> str:
    prefix = host.rsplit(".", 1)[0]
    own = int(host.rsplit(".", 1)[1])
    suffix = rng.randint(2, 250)
    if suffix == own:
        suffix = 251
    return f"{prefix}.{suffix}"


def _pkt(ts: int, src: str, sport: int, dst: str, dport: int,
         flags: int, length: int) -> PacketRecord:
    return PacketRecord(ts_us=ts, src_ip=src, src_port=sport, dst_ip=dst,
                        dst_port=dport, protocol="tcp", tcp_flags=flags, length=length)


def _benign_flows(rng: random.Random, node: NodeSpec,
                  profile: Mapping[str, object], t0: int) -> tuple[list[PacketRecord], int]:
    """Legitimate client/server flows: handshake, plain-ACK data exchange and
    an orderly (occasionally aborted) teardown."""
    records: list[PacketRecord] = []
    n_flows = int(profile["flows"])
    dmin, dmax = profile["data_packets"]
    req_lo, req_hi = profile["request_len"]
    resp_lo, resp_hi = profile["response_len"]
    abort_fraction = float(profile["abort_fraction"])
    port = int(profile["client_port"])
    host = node.host
    for i in range(n_flows):
        client = _peer_ip(rng, host)
        sport = 20000 + i * 7 + rng.randint(0, 3)
        ts = t0 + i * 1_500_000 + rng.randint(0, 400_000)

        def gap() -> int:
            return rng.randint(3_000, 45_000)

        records.append(_pkt(ts, client, sport, host, port, SYN, 60)); ts += gap()
        records.append(_pkt(ts, host, port, client, sport, SYNACK, 60)); ts += gap()
        records.append(_pkt(ts, client, sport, host, port, ACK, 52)); ts += gap()
        for j in range(rng.randint(dmin, dmax)):
            if j % 2 == 0:
                records.append(_pkt(ts, client, sport, host, port, ACK,
                                    rng.randint(req_lo, req_hi)))
            else:
                records.append(_pkt(ts, host, port, client, sport, ACK,
                                    rng.randint(resp_lo, resp_hi)))
            ts += gap()
        if rng.random() < abort_fraction:
            records.append(_pkt(ts, client, sport, host, port, RST, 40))
        else:
            records.append(_pkt(ts, client, sport, host, port, FINACK, 52)); ts += gap()
            records.append(_pkt(ts, host, port, client, sport, FINACK, 52)); ts += gap()
            records.append(_pkt(ts, client, sport, host, port, ACK, 40))
    return records, n_flows


def _attack_flows(rng: random.Random, node: NodeSpec, cve: str, attacker_ip: str,
                  t0: int) -> tuple[list[PacketRecord], int]:
    """Four-stage attack against one node: network scan, host scan,
    vulnerability scan, exploitation with the CVE's signature."""
    if cve not in CVE_TEMPLATES:
        raise ScenarioError(f"no traffic template for vulnerability {cve!r}")
    tpl = CVE_TEMPLATES[cve]
    host = node.host
    records: list[PacketRecord] = []
    flows = 0

    # Stage 1: many short SYN/RST probe flows across the port range.  A fixed
    # 1-in-7 probe hits an open port so the closed/open mix is identical in
    # every generated capture.
    ts = t0
    for i in range(120):
        sport = 40000 + i * 5 + rng.randint(0, 2)
        dport = rng.randint(1, 1024)
        records.append(_pkt(ts, attacker_ip, sport, host, dport, SYN, 48))
        ts += rng.randint(400, 900)
        if i % 7 != 6:
            records.append(_pkt(ts, host, dport, attacker_ip, sport, RSTACK, 40))
        else:
            records.append(_pkt(ts, host, dport, attacker_ip, sport, SYNACK, 44))
            ts += rng.randint(400, 900)
            records.append(_pkt(ts, attacker_ip, sport, host, dport, RST, 40))
        ts += rng.randint(800, 1_600)
        flows += 1

    # Stage 2: probes focused on the discovered service port.
    ts = t0 + 5_000_000
    for i in range(30):
        sport = 42000 + i * 5 + rng.randint(0, 2)
        records.append(_pkt(ts, attacker_ip, sport, host, node.service_port, SYN, 52))
        ts += rng.randint(500, 1_200)
        records.append(_pkt(ts, host, node.service_port, attacker_ip, sport, SYNACK, 48))
        ts += rng.randint(500, 1_200)
        records.append(_pkt(ts, attacker_ip, sport, host, node.service_port, RST, 40))
        ts += rng.randint(1_000, 2_000)
        flows += 1

    # Stage 3: service probes with irregular PSH-ACK bursts.  The probes speak
    # the raw service-protocol signature (no handshake realism); this keeps the
    # discovered pattern vocabulary disjoint from legitimate traffic.
    ts = t0 + 10_000_000
    for i in range(20):
        sport = 44000 + i * 5 + rng.randint(0, 2)
        for k in range(9):
            ts += rng.randint(500, 2_000) if k % 2 == 0 else rng.randint(40_000, 80_000)
            records.append(_pkt(ts, attacker_ip, sport, host, node.service_port, PSHACK,
                                tpl.payload_len + rng.randint(-80, 80)))
            ts += rng.randint(500, 2_000)
            records.append(_pkt(ts, host, node.service_port, attacker_ip, sport, tpl.sig1,
                                rng.randint(60, 90)))
        ts += rng.randint(1_000, 3_000)
        records.append(_pkt(ts, attacker_ip, sport, host, node.service_port, RSTACK, 40))
        ts += rng.randint(40_000, 80_000)
        flows += 1

    # Stage 4: exploitation flow carrying the CVE signature: marker-flag pairs
    # interleaved with payload-length pushes.
    ts = t0 + 20_000_000
    for i in range(10):
        sport = 46000 + i * 5 + rng.randint(0, 2)
        for k in range(tpl.burst_pairs):
            ts += rng.randint(800, 2_500) if k % 2 == 0 else rng.randint(40_000, 80_000)
            records.append(_pkt(ts, attacker_ip, sport, host, node.service_port,
                                tpl.sig1, 64))
            ts += rng.randint(800, 2_500)
            records.append(_pkt(ts, host, node.service_port, attacker_ip, sport,
                                tpl.sig2, 72))
            ts += rng.randint(800, 2_500)
            records.append(_pkt(ts, attacker_ip, sport, host, node.service_port,
                                PSHACK, tpl.payload_len))
        ts += rng.randint(2_000, 5_000)
        records.append(_pkt(ts, attacker_ip, sport, host, node.service_port, RST, 40))
        ts += rng.randint(100_000, 200_000)
        flows += 1

    return records, flows


def synth_step_records(scenario: ScenarioSpec, step_label: str,
                       seed: int) -> dict[str, dict]:
    """In-memory traffic for one monitoring step: per node, benign background
    plus the attack shape for every node attacked at or before the step."""
    labels = scenario.step_labels()
    if step_label not in labels:
        raise ScenarioError(
            f"unknown step {step_label!r}; valid steps: {', '.join(labels)}")
    upto = labels.index(step_label)
    out: dict[str, dict] = {}
    for node in scenario.nodes:
        rng_b = _rng(seed, scenario.name, step_label, node.id, "benign")
        records, benign_flows = _benign_flows(rng_b, node, scenario.benign_profile,
                                              BASE_TS_US)
        attack_flows = 0
        for step in scenario.attack_steps[:upto + 1]:
            if step.node != node.id:
                continue
            rng_a = _rng(seed, scenario.name, step_label, node.id, "attack", step.shape)
            attack_records, n = _attack_flows(rng_a, node, step.shape,
                                              scenario.attacker_ip,
                                              BASE_TS_US + 2_000_000)
            records.extend(attack_records)
            attack_flows += n
        records.sort(key=lambda p: p.ts_us)
        out[node.id] = {
            "records": records,
            "flows": benign_flows + attack_flows,
            "attack_flows": attack_flows,
        }
    return out


def emission_manifest(scenario: ScenarioSpec, step_label: str, seed: int) -> dict:
    """Exact per-node packet and flow counts for a step's generated traffic."""
    synth = synth_step_records(scenario, step_label, seed)
    return {
        "scenario": scenario.name,
        "step": step_label,
        "seed": seed,
        "nodes": {node_id: {
            "packets": len(entry["records"]),
            "flows": entry["flows"],
            "attack_flows": entry["attack_flows"],
        } for node_id, entry in sorted(synth.items())},
    }


def _capture_filename(node_id: str) -> str:
    safe = node_id.replace(":", "_").replace(" ", "_").replace("(", "").replace(")", "")
    return f"{safe}.jsonl"


def generate_traffic(scenario: ScenarioSpec, step_label: str, seed: int,
                     out_dir) -> dict[str, str]:
    """Write one capture file per node for a monitoring step.

    Returns the node -> file mapping; a ``captures.json`` manifest with exact
    emission counts is written alongside the captures.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    synth = synth_step_records(scenario, step_label, seed)
    mapping: dict[str, str] = {}
    manifest_nodes = {}
    for node_id, entry in sorted(synth.items()):
        path = out_dir / _capture_filename(node_id)
        write_packets(entry["records"], path)
        mapping[node_id] = str(path)
        manifest_nodes[node_id] = {
            "file": path.name,
            "packets": len(entry["records"]),
            "flows": entry["flows"],
            "attack_flows": entry["attack_flows"],
        }
    manifest = {"scenario": scenario.name, "step": step_label, "seed": seed,
                "mode": "step", "nodes": manifest_nodes}
    (out_dir / "captures.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return mapping


def generate_exploit_captures(scenario: ScenarioSpec, seed: int,
                              out_dir) -> dict[str, str]:
    """Write attack-only captures used for offline pattern characterization:
    per node, the full four-stage exploitation of its vulnerability."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    mapping: dict[str, str] = {}
    manifest_nodes = {}
    for node in scenario.nodes:
        rng = _rng(seed, scenario.name, "characterize", node.id, node.vulnerability)
        records, flows = _attack_flows(rng, node, node.vulnerability,
                                       scenario.attacker_ip, BASE_TS_US)
        path = out_dir / _capture_filename(node.id)
        write_packets(records, path)
        mapping[node.id] = str(path)
        manifest_nodes[node.id] = {
            "file": path.name,
            "vulnerability": node.vulnerability,
            "packets": len(records),
            "flows": flows,
        }
    manifest = {"scenario": scenario.name, "seed": seed, "mode": "characterize",
                "nodes": manifest_nodes}
    (out_dir / "captures.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return mapping
