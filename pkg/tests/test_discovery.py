import random

import pytest

from riskmine.discovery import (DiscoveryError, discover, distances_to_final,
                                shortest_accepting_path)
from riskmine.eventlog import EventLog, log_from_sequences


class TestDiscover:
    def test_single_trace_linear_chain(self):
        model = discover(log_from_sequences([["a", "b", "c"]]))
        assert model.accepts(["a", "b", "c"])
        assert not model.accepts(["a", "b"])
        assert not model.accepts(["a", "c"])
        assert not model.accepts([])

    def test_branching(self):
        model = discover(log_from_sequences([["a", "b"], ["a", "c"]]))
        assert model.accepts(["a", "b"])
        assert model.accepts(["a", "c"])
        assert not model.accepts(["a"])

    def test_noise_threshold_removes_rare_branch(self):
        sequences = [["a", "b"]] * 99 + [["a", "z"]]
        model = discover(log_from_sequences(sequences), noise_threshold=0.05)
        assert model.accepts(["a", "b"])
        assert not model.accepts(["a", "z"])
        assert "z" not in model.activities()

    def test_zero_threshold_keeps_rare_branch(self):
        sequences = [["a", "b"]] * 99 + [["a", "z"]]
        model = discover(log_from_sequences(sequences), noise_threshold=0.0)
        assert model.accepts(["a", "z"])

    def test_empty_log_rejected(self):
        with pytest.raises(DiscoveryError, match="empty log"):
            discover(EventLog(traces=()))

    def test_overfiltering_raises(self):
        log = log_from_sequences([["a", "b"], ["a", "c"]])
        with pytest.raises(DiscoveryError, match="lower threshold"):
            discover(log, noise_threshold=0.6)

    def test_invalid_threshold(self):
        log = log_from_sequences([["a"]])
        with pytest.raises(DiscoveryError):
            discover(log, noise_threshold=1.0)

    def test_rediscovery_accepts_every_input_trace(self):
        rng = random.Random(17)
        for _ in range(20):
            sequences = [[rng.choice("abcd") for _ in range(rng.randint(1, 6))]
                         for _ in range(rng.randint(1, 8))]
            model = discover(log_from_sequences(sequences))
            for seq in sequences:
                assert model.accepts(seq), (seq, model)

    def test_order_invariance(self):
        sequences = [["a", "b"], ["b", "c"], ["a", "c"]]
        m1 = discover(log_from_sequences(sequences))
        m2 = discover(log_from_sequences(list(reversed(sequences))))
        assert m1 == m2

    def test_language_monotone_in_threshold(self):
        rng = random.Random(23)
        sequences = [[rng.choice("abc") for _ in range(rng.randint(1, 4))]
                     for _ in range(12)]
        log = log_from_sequences(sequences)
        strict = discover(log, noise_threshold=0.15)
        loose = discover(log, noise_threshold=0.0)
        for seq in sequences:
            if strict.accepts(seq):
                assert loose.accepts(seq)

    def test_trimmed_invariants(self):
        model = discover(log_from_sequences([["a", "b"], ["a", "c"], ["c", "a"]]))
        dist = distances_to_final(model)
        for state in model.states:
            assert state in dist  # co-reachable
        for src, _act, dst, freq in model.transitions:
            assert src in model.states and dst in model.states
            assert freq >= 1


class TestShortestAcceptingPath:
    def test_linear_chain(self):
        assert shortest_accepting_path(discover(log_from_sequences([["a", "b", "c"]]))) == 3

    def test_branching(self):
        model = discover(log_from_sequences([["a", "b"], ["a", "c"]]))
        assert shortest_accepting_path(model) == 2

    def test_loop_with_early_final(self):
        # Traces a and a(ba): 'a' is final after one transition.
        model = discover(log_from_sequences([["a"], ["a", "b", "a"]]))
        assert model.accepts(["a"])
        assert model.accepts(["a", "b", "a"])
        assert model.accepts(["a", "b", "a", "b", "a"])  # loop generalization
        assert shortest_accepting_path(model) == 1
