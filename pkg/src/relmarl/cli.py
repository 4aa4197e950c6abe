"""Command-line experiment driver: ``relmarl {train,verify,reproduce,eval}``.

Exit codes: 0 ok, 1 invalid input, 2 runtime failure, 3 failed verification.
"""

from __future__ import annotations

import argparse
import glob
import json
import logging
import os
import re
import sys
from concurrent.futures import ProcessPoolExecutor

from . import checks, neural
from .config import (ConfigError, ExperimentConfig, apply_overrides, load_config,
                     parse_config, serialize_config, shipped_config_text)
from .environments import write_trace
from .evalharness import aggregate, emit_report, greedy_eval
from .relgraph import NetworkError
from .trainer import train_run

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME, EXIT_VERIFY = 0, 1, 2, 3

# experiment id -> (network variants, default variant)
EXPERIMENTS = {
    "rc": (("fig3a", "fig3b", "fig3c"), "fig3b"),
    "rc-rm": (("fig3b", "fig3c"), "fig3c"),
    "drc-rm": (("fig3a", "fig3c"), "fig3c"),
    "rc-bc": (("fig3a", "fig3b"), "fig3b"),
    "switch2": (("fig3a", "fig3b", "fig3c"), "fig3b"),
    "switch3": (("fig3a", "fig3e", "fig3f", "fig3g"), "fig3e"),
    "switch4": (("fig3a", "fig3i"), "fig3i"),
    "switch4-frozen": (("fig3i",), "fig3i"),
}
VARIANT_ALIASES = {"vdn": "fig3a"}

# reduced budgets for a desk run; keys are [harness] runs or [training] fields.
# Target syncs are spaced by episode count, so shorter runs also sync more
# often to keep enough target refreshes for values to propagate.
DESK_SYNC = 20
DESK_SCALE = {
    "rc": dict(runs=3, episodes=5000),
    "rc-rm": dict(runs=3, episodes=8000),
    "drc-rm": dict(runs=3, episodes=8000),
    "rc-bc": dict(runs=3, episodes=8000),
    "switch2": dict(runs=3, episodes=5000),
    "switch3": dict(runs=3, episodes=5000),
    "switch4": dict(runs=2, episodes=5000),
    "switch4-frozen": dict(runs=2, episodes=3500, freeze_at=500),
}

log = logging.getLogger("relmarl")


def output_dir(cfg: ExperimentConfig) -> str:
    return os.environ.get("RELMARL_OUT") or cfg.out


def _one_run(args):
    cfg, run, ckpt_dir = args
    art = train_run(cfg.env(), cfg.network, cfg.run_config(run), run_id=run,
                    checkpoint_dir=ckpt_dir)
    return art.eval_records


def run_experiment(cfg: ExperimentConfig, write: bool = True):
    """Train every run of ``cfg``; returns (records, series path, table path)."""
    cfg.validate()
    out = output_dir(cfg)
    tasks = [(cfg, run, os.path.join(out, cfg.experiment, f"run{run}") if write else None)
             for run in range(cfg.runs)]
    if cfg.jobs > 1 and cfg.runs > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.jobs, cfg.runs)) as pool:
            per_run = list(pool.map(_one_run, tasks))
    else:
        per_run = [_one_run(t) for t in tasks]
    records = [rec for recs in per_run for rec in recs]
    paths = (None, None)
    if write:
        env = cfg.env()
        comment = (f"experiment={cfg.experiment} scenario={cfg.scenario} "
                   f"base_seed={cfg.base_seed} runs={cfg.runs} "
                   f"episodes={cfg.training.episodes}")
        paths = emit_report(records, out, cfg.experiment, env.agent_names, comment)
        with open(os.path.join(out, f"{cfg.experiment}.cfg"), "w") as fh:
            fh.write(serialize_config(cfg))
    return records, paths


def _parse_overrides(extra: list[str]) -> dict[str, str]:
    """Turn leftover ``--key=value`` / ``--key value`` tokens into a dict."""
    out, i = {}, 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--"):
            raise ConfigError(f"unexpected argument {tok!r}")
        key, eq, value = tok[2:].partition("=")
        if not eq:
            if i + 1 >= len(extra):
                raise ConfigError(f"--{key} needs a value")
            value = extra[i + 1]
            i += 1
        out[key] = value
        i += 1
    return out


def _print_table(cfg, records):
    env = cfg.env()
    print(f"{cfg.experiment}: {cfg.runs} run(s) x {cfg.training.episodes} episodes, "
          f"final greedy rewards (mean ± 95% CI)")
    for row in aggregate(records, env.agent_names):
        print("  " + str(row))


def cmd_train(config_path: str, overrides: dict[str, str]) -> int:
    cfg = load_config(config_path)
    if overrides:
        cfg = apply_overrides(cfg, overrides)
    records, paths = run_experiment(cfg)
    _print_table(cfg, records)
    print(f"wrote {paths[0]} and {paths[1]}")
    return EXIT_OK


def cmd_verify(vdn_episodes: int = 100) -> int:
    results = checks.run_all(vdn_episodes)
    for res in results:
        print(res.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


def reproduce_config(experiment: str, variant: str = "default", scale: str = "desk") -> ExperimentConfig:
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}; valid ids: "
                          f"{', '.join(EXPERIMENTS)}")
    variants, default = EXPERIMENTS[experiment]
    variant = VARIANT_ALIASES.get(variant, variant)
    if variant == "default":
        variant = default
    if variant not in variants:
        raise ConfigError(f"experiment {experiment} has variants "
                          f"{', '.join(variants)} (or 'default')")
    if scale not in ("desk", "full"):
        raise ConfigError("scale must be 'desk' or 'full'")
    cfg = parse_config(shipped_config_text(f"{experiment}_{variant}"))
    if scale == "desk":
        desk = {"target_sync_every": DESK_SYNC, **DESK_SCALE[experiment]}
        cfg.runs = desk.pop("runs")
        for key, value in desk.items():
            setattr(cfg.training, key, value)
        cfg.experiment += "-desk"
    return cfg.validate()


def cmd_reproduce(experiment: str, variant: str = "default", scale: str = "desk",
                  overrides: dict[str, str] | None = None) -> int:
    cfg = reproduce_config(experiment, variant, scale)
    if overrides:
        cfg = apply_overrides(cfg, overrides)
    records, paths = run_experiment(cfg)
    _print_table(cfg, records)
    print(f"wrote {paths[0]} and {paths[1]}")
    return EXIT_OK


def load_checkpoints(directory: str, n_agents: int, episode: int | None = None):
    if episode is None:
        found = glob.glob(os.path.join(directory, "agent0_*.qnet"))
        episodes = [int(re.search(r"_(\d+)\.qnet$", p).group(1)) for p in found]
        if not episodes:
            raise ConfigError(f"no checkpoints in {directory}")
        episode = max(episodes)
    nets = []
    for i in range(n_agents):
        path = os.path.join(directory, f"agent{i}_{episode}.qnet")
        if not os.path.exists(path):
            raise ConfigError(f"missing checkpoint {path}")
        with open(path, "rb") as fh:
            nets.append(neural.deserialize_net(fh.read()))
    return nets, episode


def cmd_eval(config_path: str, checkpoints: str, episode: int | None = None,
             trace_path: str | None = None) -> int:
    cfg = load_config(config_path).validate()
    env = cfg.env()
    nets, episode = load_checkpoints(checkpoints, env.n_agents, episode)
    if any(net.input_dim != env.state_dim for net in nets):
        raise ConfigError("checkpoint input size does not match the scenario encoding")
    trace: list = []
    rewards = greedy_eval(env, nets, trace)
    for rec in trace:
        print(json.dumps(rec))
    print("greedy rewards: " + ", ".join(f"{name}={r:.2f}"
                                         for name, r in zip(env.agent_names, rewards)))
    if trace_path:
        write_trace(trace_path, trace)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="relmarl", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train all runs of an experiment config")
    p.add_argument("--config", required=True)

    p = sub.add_parser("verify", help="gradient, joint-max and VDN-equivalence checks")
    p.add_argument("--vdn-episodes", type=int, default=100)

    p = sub.add_parser("reproduce", help="run one of the shipped paper experiments")
    p.add_argument("experiment")
    p.add_argument("variant", nargs="?", default="default")
    p.add_argument("scale", nargs="?", default="desk")

    p = sub.add_parser("eval", help="greedy episode from saved checkpoints")
    p.add_argument("--config", required=True)
    p.add_argument("--checkpoints", required=True, help="directory of agent<i>_<ep>.qnet files")
    p.add_argument("--episode", type=int)
    p.add_argument("--trace", help="also write the trace as JSON lines")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(message)s")
    try:
        if args.command in ("train", "reproduce"):
            overrides = _parse_overrides(extra)
        elif extra:
            raise ConfigError(f"unrecognized arguments: {' '.join(extra)}")
        if args.command == "train":
            return cmd_train(args.config, overrides)
        if args.command == "verify":
            return cmd_verify(args.vdn_episodes)
        if args.command == "reproduce":
            return cmd_reproduce(args.experiment, args.variant, args.scale, overrides)
        return cmd_eval(args.config, args.checkpoints, args.episode, args.trace)
    except (ConfigError, NetworkError, KeyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001 -- report and map to the runtime exit code
        print(f"runtime failure: {exc!r}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
