from __future__ import annotations

import warnings

import pytest

from riskmine.bag import load_builtin_bag
from riskmine.monitor import characterize_from_manifest, run_assessment
from riskmine.simulate import (builtin_scenario, generate_exploit_captures,
                               generate_traffic)

SEED = 7


@pytest.fixture()
def testbed_bag():
    return load_builtin_bag("paper-testbed")


@pytest.fixture(scope="session")
def ap1_env(tmp_path_factory):
    """Characterization captures, profiles and per-step captures for paper-ap1."""
    root = tmp_path_factory.mktemp("ap1")
    scenario = builtin_scenario("paper-ap1")
    capture_dir = root / "characterize"
    exploit_captures = generate_exploit_captures(scenario, SEED, capture_dir)
    profiles = characterize_from_manifest(capture_dir, beta=3, seed=SEED, window=10)
    step_captures = {}
    for label in scenario.step_labels():
        step_captures[label] = generate_traffic(scenario, label, SEED,
                                                root / f"step-{label}")
    return {"scenario": scenario, "root": root, "capture_dir": capture_dir,
            "exploit_captures": exploit_captures, "profiles": profiles,
            "step_captures": step_captures}


@pytest.fixture(scope="session")
def ap1_report(ap1_env):
    scenario = ap1_env["scenario"]
    steps = [(label, ap1_env["step_captures"][label])
             for label in scenario.step_labels()]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return run_assessment(load_builtin_bag(), ap1_env["profiles"], steps)


@pytest.fixture(scope="session")
def ap2_report(tmp_path_factory):
    root = tmp_path_factory.mktemp("ap2")
    scenario = builtin_scenario("paper-ap2")
    capture_dir = root / "characterize"
    generate_exploit_captures(scenario, SEED, capture_dir)
    profiles = characterize_from_manifest(capture_dir, beta=3, seed=SEED, window=10)
    steps = [(label, generate_traffic(scenario, label, SEED, root / f"step-{label}"))
             for label in scenario.step_labels()]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return run_assessment(load_builtin_bag(), profiles, steps)
