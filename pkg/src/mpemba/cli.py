"""Command line scenario runner."""

import argparse
import csv
import json
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional

import numpy as np

from . import __version__
from .scenarios import SCENARIOS, ConfigError, Context, run_scenario

EXIT_CONFIG = 2
EXIT_NUMERIC = 3
CONFIG_KEYS = ("name", "parameters", "realizations", "seed", "output")


@dataclass
class Scenario:
    name: str
    parameters: Dict[str, object] = field(default_factory=dict)
    realizations: Optional[int] = None
    seed: int = 0
    output: str = "out"

    def __post_init__(self):
        if self.name not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.name!r}")
        if not isinstance(self.parameters, dict):
            raise ConfigError("parameters must be an object")
        SCENARIOS[self.name].resolve(self.parameters)
        if self.realizations is None:
            self.realizations = SCENARIOS[self.name].realizations
        if isinstance(self.realizations, bool) or not isinstance(self.realizations, int) or self.realizations < 1:
            raise ConfigError("realizations must be a positive integer")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed must be a nonnegative integer")
        if not isinstance(self.output, str):
            raise ConfigError("output must be a path string")

    def to_dict(self):
        return {"name": self.name, "parameters": dict(self.parameters), "realizations": self.realizations,
                "seed": self.seed, "output": self.output}

    def dumps(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def parse_config(text):
    """Parse a JSON scenario document; unknown keys are rejected."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(doc) - set(CONFIG_KEYS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    if "name" not in doc:
        raise ConfigError("config needs a scenario name")
    return Scenario(**doc)


def list_scenarios():
    lines = []
    for info in SCENARIOS.values():
        lines.append(f"{info.name}: {info.figure}")
        lines.append(f"  {info.description}")
        lines.append(f"  realizations: {info.realizations}")
        lines.append(f"  defaults: {json.dumps(info.defaults, sort_keys=True)}")
    return "\n".join(lines)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        return float(x) if np.isfinite(x) else str(float(x))
    if isinstance(x, np.integer):
        return int(x)
    return x


def resolve_threads(value):
    if value is None:
        env = os.environ.get("MPEMBA_THREADS")
        if env is None:
            return 1
        try:
            value = int(env)
        except ValueError as exc:
            raise ConfigError(f"MPEMBA_THREADS must be an integer, got {env!r}") from exc
    if value < 1:
        raise ConfigError("thread count must be positive")
    return value


def write_artifacts(scenario: Scenario, params, res, out: Path, wall, threads):
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "trajectories.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scenario", "label", "t", "monotone", "value", "tag", "seed"])
        for rec in res.records:
            tr = rec.trajectory
            for t, v in zip(tr.times, tr.values):
                w.writerow([scenario.name, tr.label, repr(float(t)), tr.monotone, repr(float(v)), tr.tag, rec.seed])
    with open(out / "crossings.json", "w") as fh:
        json.dump([c.to_dict() for c in res.crossings], fh, indent=2)
    if res.spectrum:
        with open(out / "spectrum.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["real", "imag", "sector", "realization"])
            for re, im, sector, r in res.spectrum:
                w.writerow([repr(re), repr(im), sector, r])
    manifest = {
        "scenario": scenario.to_dict(),
        "resolved_parameters": params,
        "figure": SCENARIOS[scenario.name].figure,
        "threads": threads,
        "version": __version__,
        "wall_time_s": wall,
        "summary": res.summary,
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(_jsonable(manifest), fh, indent=2, sort_keys=True)


def write_plots(res, out: Path):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    families = {}
    for rec in res.records:
        families.setdefault(rec.trajectory.monotone, []).append(rec.trajectory)
    for monotone, trs in families.items():
        fig, ax = plt.subplots(figsize=(6, 4))
        positive = all(np.all(tr.values > 0) for tr in trs)
        for tr in trs:
            ax.plot(tr.times, tr.values, label=f"{tr.label} {tr.tag}".strip())
        if positive:
            ax.set_yscale("log")
        ax.set_xlabel("t")
        ax.set_ylabel(monotone)
        if len(trs) <= 16:
            ax.legend(fontsize=6)
        fig.tight_layout()
        fig.savefig(out / f"{monotone}.svg", format="svg")
        plt.close(fig)


def build_parser():
    parser = argparse.ArgumentParser(prog="mpemba", description="Mpemba-effect scenario runner")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one scenario")
    run.add_argument("scenario")
    run.add_argument("--config", type=Path)
    run.add_argument("--seed", type=int)
    run.add_argument("--realizations", type=int)
    run.add_argument("--threads", type=int)
    run.add_argument("--out", type=Path)
    run.add_argument("--plot", action="store_true")
    sub.add_parser("list", help="list scenarios")
    return parser


def _load_scenario(args):
    if args.config is not None:
        try:
            doc = parse_config(args.config.read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        if doc.name != args.scenario:
            raise ConfigError(f"config is for {doc.name}, not {args.scenario}")
    else:
        doc = Scenario(args.scenario)
    if args.seed is not None:
        doc.seed = args.seed
    if args.realizations is not None:
        doc.realizations = args.realizations
    if args.out is not None:
        doc.output = str(args.out)
    # re-validate after overrides
    return Scenario(**doc.to_dict())


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "list":
        print(list_scenarios())
        return 0
    try:
        scenario = _load_scenario(args)
        threads = resolve_threads(args.threads)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    ctx = Context(seed=scenario.seed, realizations=scenario.realizations, threads=threads)
    start = time.perf_counter()
    try:
        params, res = run_scenario(scenario.name, scenario.parameters, ctx)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    wall = time.perf_counter() - start
    out = Path(scenario.output)
    write_artifacts(scenario, params, res, out, wall, threads)
    if args.plot:
        write_plots(res, out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
