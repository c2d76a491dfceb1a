import numpy as np
import pytest

from riskmine.simulate import builtin_scenario, emission_manifest, generate_traffic
from riskmine.traffic import (ClusteringError, PacketRecord,
                              TrafficError, TrafficFormatError, assign_state,
                              extract_event_logs, extract_features, fit_states,
                              flag_label, flow_key, ingest_packets, write_packets)


def pkt(ts, flags, length=60, sport=1000, dport=80, src="10.0.0.1", dst="10.0.0.2"):
    return PacketRecord(ts_us=ts, src_ip=src, src_port=sport, dst_ip=dst,
                        dst_port=dport, protocol="tcp", tcp_flags=flags,
                        length=length)


def handshake(t0=0, sport=1000):
    return [pkt(t0, 0x02, sport=sport),
            pkt(t0 + 1000, 0x12, sport=80, dport=sport,
                src="10.0.0.2", dst="10.0.0.1"),
            pkt(t0 + 2000, 0x10, sport=sport)]


class TestFlagLabels:
    @pytest.mark.parametrize("flags,label", [
        (0x02, "SYN"), (0x12, "SYN-ACK"), (0x10, "ACK"), (0x18, "PSH-ACK"),
        (0x11, "FIN-ACK"), (0x04, "RST"), (0x14, "RST-ACK"),
        (0x29, "FLAGS-0x29"), (0x00, "FLAGS-0x00"), (0xFF, "FLAGS-0xFF"),
    ])
    def test_named_and_hex_labels(self, flags, label):
        assert flag_label(flags) == label

    def test_total_and_deterministic(self):
        labels = [flag_label(f) for f in range(256)]
        assert labels == [flag_label(f) for f in range(256)]
        assert all(isinstance(x, str) and x for x in labels)

    def test_non_tcp_activities(self):
        udp = PacketRecord(ts_us=0, src_ip="a", src_port=1, dst_ip="b",
                           dst_port=2, protocol="udp", tcp_flags=0, length=10)
        other = PacketRecord(ts_us=0, src_ip="a", src_port=1, dst_ip="b",
                             dst_port=2, protocol="other", tcp_flags=0, length=10)
        assert udp.activity() == "UDP"
        assert other.activity() == "OTHER"


class TestIngest:
    def test_handshake_fixture(self, tmp_path):
        path = tmp_path / "cap.jsonl"
        write_packets(handshake(), path)
        records = ingest_packets(path)
        assert len(records) == 3
        assert [r.activity() for r in records] == ["SYN", "SYN-ACK", "ACK"]

    def test_empty_file(self, tmp_path):
        path = tmp_path / "cap.jsonl"
        path.write_text("")
        assert ingest_packets(path) == []

    def test_malformed_record_reports_line(self, tmp_path):
        path = tmp_path / "cap.jsonl"
        path.write_text('{"ts_us": 0, "src": "a", "sport": 1, "dst": "b", '
                        '"dport": 2, "proto": "tcp", "flags": "0x02", "len": 60}\n'
                        '{"nope": 1}\n')
        with pytest.raises(TrafficFormatError, match=":2"):
            ingest_packets(path)

    def test_time_sorted(self, tmp_path):
        path = tmp_path / "cap.jsonl"
        records = list(reversed(handshake()))
        write_packets(records, path)
        assert [r.ts_us for r in ingest_packets(path)] == [0, 1000, 2000]

    def test_simulated_capture_matches_manifest(self, tmp_path):
        scenario = builtin_scenario("paper-ap1")
        mapping = generate_traffic(scenario, "II", 7, tmp_path)
        manifest = emission_manifest(scenario, "II", 7)
        for node, path in mapping.items():
            assert len(ingest_packets(path)) == manifest["nodes"][node]["packets"]


class TestFlows:
    def test_bidirectional_flow_key(self):
        a = pkt(0, 0x02)
        b = pkt(1, 0x12, sport=80, dport=1000, src="10.0.0.2", dst="10.0.0.1")
        assert flow_key(a) == flow_key(b)

    def test_port_validation(self):
        with pytest.raises(TrafficError):
            pkt(0, 0x02, sport=70000)
        with pytest.raises(TrafficError):
            PacketRecord(ts_us=0, src_ip="a", src_port=1, dst_ip="b",
                         dst_port=2, protocol="tcp", tcp_flags=0, length=-1)


class TestExtractFeatures:
    def test_single_window(self):
        packets = handshake()
        out = extract_features(packets, window=3)
        assert len(out) == 1
        fw, feats = out[0]
        assert fw.window_index == 0
        assert feats[0] == 3.0            # packet count
        assert feats[5] == pytest.approx(1 / 3)  # SYN fraction

    def test_two_full_windows(self):
        packets = []
        for i in range(6):
            packets.append(pkt(i * 1000, 0x10))
        out = extract_features(packets, window=3)
        assert [fw.window_index for fw, _ in out] == [0, 1]

    def test_trailing_pair_kept_singleton_dropped(self):
        out = extract_features([pkt(i * 1000, 0x10) for i in range(5)], window=3)
        assert [len(fw.packets) for fw, _ in out] == [3, 2]
        out = extract_features([pkt(i * 1000, 0x10) for i in range(4)], window=3)
        assert [len(fw.packets) for fw, _ in out] == [3]

    def test_window_must_be_at_least_two(self):
        with pytest.raises(TrafficError):
            extract_features([], window=1)

    def test_empty_input(self):
        assert extract_features([], window=5) == []

    def test_iat_in_milliseconds(self):
        out = extract_features([pkt(0, 0x10), pkt(10_000, 0x10)], window=2)
        _, feats = out[0]
        assert feats[1] == pytest.approx(10.0)
        assert feats[2] == 0.0


class TestFitStates:
    def test_beta_one_centroid_is_normalized_mean(self):
        rng = np.random.RandomState(1)
        features = list(rng.normal(5.0, 2.0, size=(20, 8)))
        model = fit_states(features, beta=1, seed=3)
        assert np.allclose(model.centroids[0], np.zeros(8), atol=1e-9)

    def test_two_separated_clouds(self):
        rng = np.random.RandomState(7)
        cloud_a = rng.normal(0.0, 1.0, size=(40, 8))
        cloud_b = rng.normal(10.0, 1.0, size=(40, 8))
        features = np.vstack([cloud_a, cloud_b])
        model = fit_states(list(features), beta=2, seed=11)
        mean = features.mean(axis=0)
        std = features.std(axis=0)
        norm_a = (cloud_a.mean(axis=0) - mean) / std
        norm_b = (cloud_b.mean(axis=0) - mean) / std
        dists = {
            tuple(np.round(norm_a, 3)): min(np.linalg.norm(model.centroids - norm_a, axis=1)),
            tuple(np.round(norm_b, 3)): min(np.linalg.norm(model.centroids - norm_b, axis=1)),
        }
        assert all(d < 0.1 for d in dists.values())

    def test_deterministic_for_fixed_seed(self):
        rng = np.random.RandomState(2)
        features = list(rng.normal(0, 1, size=(30, 8)))
        m1 = fit_states(features, beta=3, seed=42)
        m2 = fit_states(features, beta=3, seed=42)
        assert np.array_equal(m1.centroids, m2.centroids)

    def test_fewer_samples_than_beta(self):
        with pytest.raises(ClusteringError, match="beta"):
            fit_states([np.zeros(8), np.ones(8)], beta=3, seed=0)

    def test_identical_samples_advises_beta_one(self):
        features = [np.full(8, 3.0) for _ in range(10)]
        with pytest.raises(ClusteringError, match="beta = 1"):
            fit_states(features, beta=2, seed=0)
        model = fit_states(features, beta=1, seed=0)
        assert model.dropped == tuple(range(8))

    def test_constant_features_dropped(self):
        rng = np.random.RandomState(3)
        features = rng.normal(0, 1, size=(20, 8))
        features[:, 4] = 7.7
        model = fit_states(list(features), beta=2, seed=1)
        assert 4 in model.dropped
        assert model.std[4] == 1.0


class TestAssignState:
    def test_centroid_maps_to_itself(self):
        rng = np.random.RandomState(4)
        features = list(rng.normal(0, 1, size=(30, 8)))
        model = fit_states(features, beta=3, seed=9)
        for k in range(3):
            raw = model.centroids[k] * model.std + model.mean
            assert assign_state(model, raw) == k

    def test_tie_breaks_to_lowest_index(self):
        from riskmine.traffic import StateModel
        model = StateModel(beta=2,
                           centroids=np.array([[1.0] + [0.0] * 7,
                                               [-1.0] + [0.0] * 7]),
                           mean=np.zeros(8), std=np.ones(8), dropped=(), seed=0)
        assert assign_state(model, np.zeros(8)) == 0

    def test_cloud_sample_assigned_to_cloud(self):
        rng = np.random.RandomState(8)
        cloud_a = rng.normal(0.0, 1.0, size=(30, 8))
        cloud_b = rng.normal(10.0, 1.0, size=(30, 8))
        model = fit_states(list(np.vstack([cloud_a, cloud_b])), beta=2, seed=5)
        state_a = assign_state(model, cloud_a.mean(axis=0))
        state_b = assign_state(model, cloud_b.mean(axis=0))
        assert {state_a, state_b} == {0, 1}
        assert assign_state(model, cloud_a[0]) == state_a


class TestExtractEventLogs:
    def test_handshake_becomes_trace(self):
        packets = handshake()
        model = fit_states([f for _, f in extract_features(packets, 3)] * 3,
                           beta=1, seed=0)
        logs = extract_event_logs(packets, model, window=3)
        assert len(logs) == 1
        assert logs[0].traces[0].activities() == ("SYN", "SYN-ACK", "ACK")

    def test_empty_packets_give_empty_logs(self):
        model = fit_states([np.arange(8), np.arange(8) + 5], beta=2, seed=0)
        logs = extract_event_logs([], model, window=5)
        assert len(logs) == 2
        assert all(len(log) == 0 for log in logs)

    @pytest.mark.parametrize("step", ["I", "II"])
    def test_partition_property(self, ap1_env, step):
        profile = ap1_env["profiles"]["RA:192.168.56.1"]
        path = ap1_env["step_captures"][step]["RA:192.168.56.1"]
        packets = ingest_packets(path)
        windows = extract_features(packets, profile.window)
        logs = extract_event_logs(packets, profile.state_model, profile.window)
        assert sum(len(log) for log in logs) == len(windows)
        case_ids = [t.case_id for log in logs for t in log.traces]
        assert len(case_ids) == len(set(case_ids))

    def test_universe_shared_across_logs(self, ap1_env):
        profile = ap1_env["profiles"]["RA:20.0.0.9"]
        path = ap1_env["step_captures"]["I"]["RA:20.0.0.9"]
        packets = ingest_packets(path)
        logs = extract_event_logs(packets, profile.state_model, profile.window)
        universes = {log.activity_universe for log in logs}
        assert len(universes) == 1
