"""Packet-level traffic pipeline.

Turns raw packet records into per-state event logs in three steps: per-flow
windowed feature extraction, seeded k-means state clustering, and event-log
extraction where each window becomes one trace of TCP-flag activity labels.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .eventlog import EventLog, NetworkEvent, Trace

PROTOCOLS = ("tcp", "udp", "other")

FLAG_FIN = 0x01
FLAG_SYN = 0x02
FLAG_RST = 0x04
FLAG_PSH = 0x08
FLAG_ACK = 0x10
FLAG_URG = 0x20

_NAMED_FLAGS = {
    0x02: "SYN",
    0x12: "SYN-ACK",
    0x10: "ACK",
    0x18: "PSH-ACK",
    0x11: "FIN-ACK",
    0x04: "RST",
    0x14: "RST-ACK",
}

FEATURE_NAMES = (
    "packet_count",
    "iat_mean_ms",
    "iat_std_ms",
    "length_mean",
    "length_std",
    "syn_fraction",
    "rst_fraction",
    "distinct_flag_combos",
)

DEFAULT_WINDOW = 10


class TrafficError(Exception):
    pass


class TrafficFormatError(TrafficError):
    pass


class ClusteringError(TrafficError):
    pass


def flag_label(flags: int) -> str:
    """Total, deterministic label for an 8-bit TCP flag combination."""
    flags &= 0xFF
    return _NAMED_FLAGS.get(flags, f"FLAGS-0x{flags:02X}")


@dataclass(frozen=True)
class PacketRecord:
    ts_us: int
    src_ip: str
    src_port: int
    dst_ip: str
    dst_port: int
    protocol: str
    tcp_flags: int
    length: int

    def __post_init__(self):
        for port in (self.src_port, self.dst_port):
            if not (0 <= port <= 65535):
                raise TrafficError(f"port {port} out of range")
        if self.length < 0:
            raise TrafficError(f"negative packet length {self.length}")
        if self.protocol not in PROTOCOLS:
            raise TrafficError(f"protocol must be one of {PROTOCOLS}, got {self.protocol!r}")

    def activity(self) -> str:
        if self.protocol == "tcp":
            return flag_label(self.tcp_flags)
        return "UDP" if self.protocol == "udp" else "OTHER"


@dataclass(frozen=True)
class FlowWindow:
    flow_key: tuple
    window_index: int
    packets: tuple[PacketRecord, ...]


def flow_key(pkt: PacketRecord) -> tuple:
    """Canonical bidirectional flow key: both directions map to one flow."""
    a = (pkt.src_ip, pkt.src_port)
    b = (pkt.dst_ip, pkt.dst_port)
    lo, hi = (a, b) if a <= b else (b, a)
    return (lo[0], lo[1], hi[0], hi[1], pkt.protocol)


def flow_key_str(key: tuple) -> str:
    return f"{key[0]}:{key[1]}-{key[2]}:{key[3]}/{key[4]}"


def write_packets(records: Iterable[PacketRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for p in records:
            fh.write(json.dumps({
                "ts_us": p.ts_us, "src": p.src_ip, "sport": p.src_port,
                "dst": p.dst_ip, "dport": p.dst_port, "proto": p.protocol,
                "flags": f"0x{p.tcp_flags & 0xFF:02X}", "len": p.length,
            }) + "\n")


def ingest_packets(path) -> list[PacketRecord]:
    """Read packet records from the line-delimited capture format, time-sorted."""
    records: list[PacketRecord] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
                flags = row.get("flags", "0x00")
                records.append(PacketRecord(
                    ts_us=int(row["ts_us"]),
                    src_ip=str(row["src"]), src_port=int(row["sport"]),
                    dst_ip=str(row["dst"]), dst_port=int(row["dport"]),
                    protocol=str(row["proto"]),
                    tcp_flags=int(flags, 16) if isinstance(flags, str) else int(flags),
                    length=int(row["len"]),
                ))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError, TrafficError) as exc:
                raise TrafficFormatError(f"{path}:{lineno}: malformed packet record: {exc}") from exc
    records.sort(key=lambda p: p.ts_us)
    return records


def _window_features(packets: Sequence[PacketRecord]) -> np.ndarray:
    n = len(packets)
    ts = np.array([p.ts_us for p in packets], dtype=float)
    lens = np.array([p.length for p in packets], dtype=float)
    iats_ms = np.diff(ts) / 1000.0
    tcp = [p for p in packets if p.protocol == "tcp"]
    syn = sum(1 for p in tcp if (p.tcp_flags & 0xFF) == FLAG_SYN)
    rst = sum(1 for p in tcp if p.tcp_flags & FLAG_RST)
    labels = {p.activity() for p in packets}
    return np.array([
        float(n),
        float(iats_ms.mean()) if iats_ms.size else 0.0,
        float(iats_ms.std()) if iats_ms.size else 0.0,
        float(lens.mean()),
        float(lens.std()),
        syn / n,
        rst / n,
        float(len(labels)),
    ])


def extract_features(packets: Sequence[PacketRecord],
                     window: int = DEFAULT_WINDOW) -> list[tuple[FlowWindow, np.ndarray]]:
    """Slice each flow into consecutive ``window``-packet windows and compute
    one feature vector per window.

    Trailing slices keep at least two packets; singleton leftovers are dropped.
    Flows are processed in canonical flow-key order so output is deterministic.
    """
    if window < 2:
        raise TrafficError(f"window must be >= 2, got {window}")
    flows: dict[tuple, list[PacketRecord]] = {}
    for pkt in packets:
        flows.setdefault(flow_key(pkt), []).append(pkt)
    out: list[tuple[FlowWindow, np.ndarray]] = []
    for key in sorted(flows):
        pkts = sorted(flows[key], key=lambda p: p.ts_us)
        idx = 0
        for start in range(0, len(pkts), window):
            chunk = pkts[start:start + window]
            if len(chunk) < 2:
                continue
            fw = FlowWindow(flow_key=key, window_index=idx, packets=tuple(chunk))
            out.append((fw, _window_features(chunk)))
            idx += 1
    return out


@dataclass(frozen=True)
class StateModel:
    """Fitted traffic-state clustering: z-normalization plus k-means centroids."""

    beta: int
    centroids: np.ndarray          # (beta, n_features), normalized space
    mean: np.ndarray               # (n_features,)
    std: np.ndarray                # (n_features,) with dropped features at 1.0
    dropped: tuple[int, ...]       # constant-feature indices
    seed: int

    def normalize(self, features: np.ndarray) -> np.ndarray:
        return (np.asarray(features, dtype=float) - self.mean) / self.std

    def to_dict(self) -> dict:
        return {
            "beta": self.beta,
            "centroids": self.centroids.tolist(),
            "mean": self.mean.tolist(),
            "std": self.std.tolist(),
            "dropped": list(self.dropped),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "StateModel":
        return cls(beta=int(data["beta"]),
                   centroids=np.array(data["centroids"], dtype=float),
                   mean=np.array(data["mean"], dtype=float),
                   std=np.array(data["std"], dtype=float),
                   dropped=tuple(int(i) for i in data["dropped"]),
                   seed=int(data["seed"]))


def _kmeans_pp_init(x: np.ndarray, beta: int, rng: np.random.RandomState) -> np.ndarray:
    n = x.shape[0]
    centroids = [x[rng.randint(n)]]
    for _ in range(1, beta):
        d2 = np.min(((x[:, None, :] - np.array(centroids)[None, :, :]) ** 2).sum(axis=2), axis=1)
        total = d2.sum()
        if total <= 0.0:
            raise ClusteringError(
                "samples are all identical after normalization; use beta = 1")
        probs = d2 / total
        centroids.append(x[rng.choice(n, p=probs)])
    return np.array(centroids)


def fit_states(features: Sequence[np.ndarray], beta: int, seed: int,
               max_iter: int = 100, tol: float = 1e-6) -> StateModel:
    """Cluster feature vectors into ``beta`` traffic states.

    Deterministic for a fixed seed: z-normalization, seeded k-means++
    initialization, then Lloyd iterations capped at ``max_iter`` with
    centroid-movement tolerance ``tol``.
    """
    x_raw = np.array([np.asarray(f, dtype=float) for f in features])
    if x_raw.ndim != 2 or x_raw.shape[0] == 0:
        raise ClusteringError("no feature vectors to cluster")
    if beta < 1:
        raise ClusteringError(f"beta must be >= 1, got {beta}")
    if x_raw.shape[0] < beta:
        raise ClusteringError(
            f"need at least beta={beta} samples, got {x_raw.shape[0]}")

    mean = x_raw.mean(axis=0)
    std = x_raw.std(axis=0)
    dropped = tuple(int(i) for i in np.flatnonzero(std == 0.0))
    std_safe = std.copy()
    std_safe[list(dropped)] = 1.0
    x = (x_raw - mean) / std_safe

    if beta > 1 and np.allclose(x, x[0]):
        raise ClusteringError(
            "samples are all identical after normalization; use beta = 1")

    rng = np.random.RandomState(seed)
    centroids = _kmeans_pp_init(x, beta, rng)
    for _ in range(max_iter):
        d2 = ((x[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        assign = d2.argmin(axis=1)
        # Re-seed any emptied cluster with the point farthest from its centroid.
        for k in range(beta):
            if not np.any(assign == k):
                worst = int(np.argmax(d2[np.arange(len(x)), assign]))
                assign[worst] = k
                d2[worst, :] = np.inf
                d2[worst, k] = 0.0
        new_centroids = np.array([x[assign == k].mean(axis=0) for k in range(beta)])
        movement = float(np.sqrt(((new_centroids - centroids) ** 2).sum(axis=1)).max())
        centroids = new_centroids
        if movement <= tol:
            break

    for i in range(beta):
        for j in range(i + 1, beta):
            if np.array_equal(centroids[i], centroids[j]):
                raise ClusteringError(
                    f"degenerate clustering: centroids {i} and {j} coincide; lower beta")

    return StateModel(beta=beta, centroids=centroids, mean=mean, std=std_safe,
                      dropped=dropped, seed=seed)


def assign_state(model: StateModel, feature: np.ndarray) -> int:
    """Nearest centroid in normalized space; ties go to the lowest state index."""
    z = model.normalize(feature)
    d2 = ((model.centroids - z[None, :]) ** 2).sum(axis=1)
    return int(np.argmin(d2))


def extract_event_logs(packets: Sequence[PacketRecord], model: StateModel,
                       window: int = DEFAULT_WINDOW) -> list[EventLog]:
    """Route flow windows to their traffic state and emit one event log per state.

    Each window becomes a single trace whose events are the packets' flag
    labels in time order; the activity universe is shared across the returned
    logs so diagnosis vectors align index-by-index.
    """
    pairs = extract_features(packets, window)
    per_state: list[list[Trace]] = [[] for _ in range(model.beta)]
    universe: set[str] = set()
    for fw, feats in pairs:
        state = assign_state(model, feats)
        case_id = f"{flow_key_str(fw.flow_key)}#{fw.window_index}"
        events = tuple(NetworkEvent(activity=p.activity(), ts_us=p.ts_us)
                       for p in fw.packets)
        per_state[state].append(Trace(case_id=case_id, events=events))
        universe.update(ev.activity for ev in events)
    shared = tuple(sorted(universe))
    return [EventLog(traces=tuple(traces), activity_universe=shared)
            for traces in per_state]
