"""Command-line surface: simulate, characterize, assess and report, plus
low-level passthroughs for debugging individual pipeline stages.

Exit codes: 0 success, 1 runtime/data error, 2 usage or validation error.
"""

from __future__ import annotations

import argparse
import json
import sys
import tempfile
from pathlib import Path

from . import monitor
from .bag import BagError, load_bag_file, load_builtin_bag
from .conformance import ConformanceError, fitness, optimal_alignment
from .discovery import DiscoveryError, ProcessModel, discover
from .eventlog import LogError, read_log
from .inference import InferenceError, assess_risk, posterior_ve
from .monitor import MonitorError
from .similarity import SimilarityError
from .simulate import (ScenarioError, builtin_scenario, generate_exploit_captures,
                       generate_traffic, scenario_names)
from .traffic import TrafficError

_VALIDATION_ERRORS = (ScenarioError, BagError, MonitorError, argparse.ArgumentTypeError)
_RUNTIME_ERRORS = (TrafficError, LogError, ConformanceError, DiscoveryError,
                   SimilarityError, InferenceError, OSError, json.JSONDecodeError)

_SVG_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
               "#8c564b", "#e377c2", "#7f7f7f")


def _load_bag_arg(value: str):
    path = Path(value)
    if path.exists():
        return load_bag_file(path)
    return load_builtin_bag(value)


def _cmd_simulate(args) -> int:
    scenario = builtin_scenario(args.scenario)
    if args.characterize:
        mapping = generate_exploit_captures(scenario, args.seed, args.out)
    else:
        mapping = generate_traffic(scenario, args.step, args.seed, args.out)
    for node in sorted(mapping):
        print(f"{node}\t{mapping[node]}")
    return 0


def _cmd_characterize(args) -> int:
    profiles = monitor.characterize_from_manifest(
        args.traffic, beta=args.beta, seed=args.seed, window=args.window)
    monitor.save_profiles(profiles, args.out)
    print(f"wrote {len(profiles)} profiles to {args.out}")
    return 0


def _cmd_assess(args) -> int:
    scenario = builtin_scenario(args.scenario)
    labels = (args.steps.split(",") if args.steps
              else list(scenario.step_labels()))
    valid = scenario.step_labels()
    for label in labels:
        if label not in valid:
            raise ScenarioError(
                f"unknown step {label!r}; valid steps: {', '.join(valid)}")
    bag = _load_bag_arg(args.bag)
    profiles = monitor.load_profiles(args.profiles)

    def run(workdir: Path):
        steps = []
        for label in labels:
            captures = generate_traffic(scenario, label, args.seed,
                                        workdir / f"step-{label}")
            steps.append((label, captures))
        return monitor.run_assessment(bag, profiles, steps)

    if args.workdir:
        report = run(Path(args.workdir))
    else:
        with tempfile.TemporaryDirectory(prefix="riskmine-") as tmp:
            report = run(Path(tmp))

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    if args.format == "csv":
        out.write_text(monitor.cossim_csv(report), encoding="utf-8")
    else:
        monitor.write_report(report, out)
    print(f"wrote {args.format} report to {out}")
    return 0


def render_svg(report: monitor.RiskReport, width: int = 720, height: int = 440) -> str:
    """Static line chart: posterior compromise probability per node across steps."""
    margin = 60
    labels = [rec.label for rec in report.steps]
    nodes = sorted({n for rec in report.steps for n in rec.posteriors})
    plot_w = width - 2 * margin
    plot_h = height - 2 * margin

    def x(i: int) -> float:
        return margin + (plot_w * i / max(1, len(labels) - 1))

    def y(p: float) -> float:
        return margin + plot_h * (1.0 - p)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="black"/>',
    ]
    for i, label in enumerate(labels):
        parts.append(f'<text x="{x(i):.1f}" y="{height - margin + 20}" '
                     f'text-anchor="middle" font-size="12">{label}</text>')
    for tick in (0.0, 0.25, 0.5, 0.75, 1.0):
        parts.append(f'<text x="{margin - 8}" y="{y(tick) + 4:.1f}" '
                     f'text-anchor="end" font-size="11">{tick:.2f}</text>')
    for k, node in enumerate(nodes):
        color = _SVG_COLORS[k % len(_SVG_COLORS)]
        points = " ".join(f"{x(i):.2f},{y(rec.posteriors[node]):.2f}"
                          for i, rec in enumerate(report.steps))
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" '
                     f'points="{points}"/>')
        parts.append(f'<text x="{width - margin + 6}" y="{margin + 16 * k + 10}" '
                     f'font-size="11" fill="{color}">{node}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _cmd_report(args) -> int:
    report = monitor.load_report(args.input)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    if args.format == "json":
        monitor.write_report(report, out)
    elif args.format == "csv":
        out.write_text(monitor.cossim_csv(report), encoding="utf-8")
    else:
        out.write_text(render_svg(report), encoding="utf-8")
    print(f"wrote {args.format} to {out}")
    return 0


def _cmd_discover(args) -> int:
    log = read_log(args.log)
    model = discover(log, noise_threshold=args.threshold)
    text = json.dumps(model.to_dict(), indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_conformance(args) -> int:
    log = read_log(args.log)
    model = ProcessModel.from_dict(json.loads(Path(args.model).read_text("utf-8")))
    for trace in log.traces:
        alignment = optimal_alignment(model, trace)
        print(json.dumps({"case": trace.case_id, "cost": alignment.cost,
                          "fitness": fitness(model, trace)}, sort_keys=True))
    return 0


def _cmd_infer(args) -> int:
    bag = _load_bag_arg(args.bag)
    if args.query:
        evidence = {}
        for item in (args.evidence.split(",") if args.evidence else []):
            node, _, value = item.partition("=")
            evidence[node] = value.strip().lower() in ("1", "true", "yes")
        if not evidence:
            evidence = {bag.attacker: True}
        print(json.dumps({args.query: posterior_ve(bag, args.query, evidence)},
                         sort_keys=True))
    else:
        print(json.dumps(assess_risk(bag), indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="riskmine",
        description="Dynamic risk assessment: attack-graph posteriors driven by "
                    "process-mining traffic evidence.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate deterministic scenario traffic")
    p.add_argument("--scenario", required=True,
                   help=f"scenario name ({', '.join(scenario_names())})")
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--step", help="attack step label (online monitoring traffic)")
    mode.add_argument("--characterize", action="store_true",
                      help="emit attack-only captures for offline characterization")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("characterize", help="build node profiles from exploit captures")
    p.add_argument("--traffic", required=True, help="capture directory with captures.json")
    p.add_argument("--beta", type=int, default=monitor.DEFAULT_BETA)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--window", type=int, default=10)
    p.add_argument("--out", required=True, help="profile bundle directory")
    p.set_defaults(func=_cmd_characterize)

    p = sub.add_parser("assess", help="run the multi-step dynamic risk assessment")
    p.add_argument("--bag", default="paper-testbed",
                   help="BAG definition file or built-in name")
    p.add_argument("--profiles", required=True, help="profile bundle directory")
    p.add_argument("--scenario", required=True)
    p.add_argument("--steps", help="comma-separated step labels (default: all)")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", required=True, help="report output file")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--workdir", help="keep generated traffic here instead of a tempdir")
    p.set_defaults(func=_cmd_assess)

    p = sub.add_parser("report", help="convert a report to csv or svg")
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=("json", "csv", "svg"), required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("discover", help="discover a process model from an event log")
    p.add_argument("--log", required=True)
    p.add_argument("--threshold", type=float, default=0.0)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_discover)

    p = sub.add_parser("conformance", help="align an event log against a model")
    p.add_argument("--log", required=True)
    p.add_argument("--model", required=True)
    p.set_defaults(func=_cmd_conformance)

    p = sub.add_parser("infer", help="query posteriors on a BAG")
    p.add_argument("--bag", default="paper-testbed")
    p.add_argument("--query")
    p.add_argument("--evidence", help="comma-separated node=bool pairs")
    p.set_defaults(func=_cmd_infer)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _VALIDATION_ERRORS as exc:
        print(f"riskmine: error: {exc}", file=sys.stderr)
        return 2
    except _RUNTIME_ERRORS as exc:
        print(f"riskmine: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
