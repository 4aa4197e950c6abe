"""Experiment configuration files.

Flat sectioned ``key = value`` text with four sections::

    [scenario]
    name = rc

    [network]
    agents = 2
    edge = 0 0 1.0
    edge = 1 1 1.0
    edge = 0 1 1.0

    [training]
    episodes = 5000

    [harness]
    runs = 10
    seed = 42

``edge`` may repeat; every other key appears at most once.  ``#`` starts a
comment.  Keys left out take the defaults of :class:`TrainConfig` and
:class:`ExperimentConfig`.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from importlib import resources

from .environments import make_env, scenario_catalog
from .relgraph import NetworkError, RelationalNetwork, parse_network
from .trainer import ConfigError, TrainConfig

SECTIONS = ("scenario", "network", "training", "harness")
TRAINING_KEYS = tuple(f.name for f in dataclasses.fields(TrainConfig) if f.name != "seed")
SCENARIO_KEYS = ("name", "max_steps")
HARNESS_KEYS = ("runs", "seed", "out", "experiment", "jobs")
NETWORK_KEYS = ("agents", "edge")


@dataclass
class ExperimentConfig:
    scenario: str
    network: RelationalNetwork
    training: TrainConfig = field(default_factory=TrainConfig)
    runs: int = 10
    base_seed: int = 42
    out: str = "results"
    experiment: str = "experiment"
    max_steps: int | None = None
    jobs: int = 1

    def validate(self) -> "ExperimentConfig":
        if self.scenario not in scenario_catalog():
            raise ConfigError(f"unknown scenario {self.scenario!r}; "
                              f"known: {', '.join(scenario_catalog())}")
        n = make_env(self.scenario).n_agents
        if self.network.n_agents != n:
            raise ConfigError(f"network has {self.network.n_agents} agents, "
                              f"scenario {self.scenario} has {n}")
        if self.runs <= 0 or self.jobs <= 0:
            raise ConfigError("runs and jobs must be positive")
        if self.max_steps is not None and self.max_steps <= 0:
            raise ConfigError("max_steps must be positive")
        self.training.validate()
        if self.training.freeze_agent is not None and not 0 <= self.training.freeze_agent < n:
            raise ConfigError(f"freeze_agent {self.training.freeze_agent} out of range")
        return self

    def env(self):
        return make_env(self.scenario, self.max_steps)

    def run_config(self, run: int) -> TrainConfig:
        return dataclasses.replace(self.training, seed=self.base_seed + run)


def split_sections(text: str) -> dict[str, list[tuple[str, str]]]:
    sections: dict[str, list[tuple[str, str]]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip().lower()
            if current not in SECTIONS:
                raise ConfigError(f"line {lineno}: unknown section [{current}]")
            sections.setdefault(current, [])
            continue
        key, sep, value = line.partition("=")
        if not sep or current is None:
            raise ConfigError(f"line {lineno}: expected 'key = value' inside a section")
        sections[current].append((key.strip().lower(), value.strip()))
    return sections


def _convert(cls_field_type, key, value):
    try:
        if key == "hidden":
            return tuple(int(v) for v in value.replace(",", " ").split())
        if key in ("freeze_agent", "freeze_at"):
            return None if value.lower() in ("", "none") else int(value)
        if "int" in str(cls_field_type):
            return int(value)
        return float(value)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {value!r}") from None


def parse_config(text: str) -> ExperimentConfig:
    sections = split_sections(text)
    for name, items in sections.items():
        keys = [k for k, _ in items if k != "edge"]
        dup = {k for k in keys if keys.count(k) > 1}
        if dup:
            raise ConfigError(f"[{name}] repeats key(s): {', '.join(sorted(dup))}")
    scen = dict(sections.get("scenario", []))
    if "name" not in scen:
        raise ConfigError("[scenario] needs a name")
    unknown = set(scen) - set(SCENARIO_KEYS)
    if unknown:
        raise ConfigError(f"unknown [scenario] key(s): {', '.join(sorted(unknown))}")

    net_items = sections.get("network")
    if not net_items:
        raise ConfigError("missing [network] section")
    bad = {k for k, _ in net_items} - set(NETWORK_KEYS)
    if bad:
        raise ConfigError(f"unknown [network] key(s): {', '.join(sorted(bad))}")
    try:
        network = parse_network("\n".join(f"{k} = {v}" for k, v in net_items))
    except NetworkError as exc:
        raise ConfigError(str(exc)) from None

    types = {f.name: f.type for f in dataclasses.fields(TrainConfig)}
    train_kwargs = {}
    for key, value in sections.get("training", []):
        if key not in TRAINING_KEYS:
            raise ConfigError(f"unknown [training] key {key!r}")
        train_kwargs[key] = _convert(types[key], key, value)

    harness = dict(sections.get("harness", []))
    unknown = set(harness) - set(HARNESS_KEYS)
    if unknown:
        raise ConfigError(f"unknown [harness] key(s): {', '.join(sorted(unknown))}")
    try:
        cfg = ExperimentConfig(
            scenario=scen["name"],
            network=network,
            training=TrainConfig(**train_kwargs),
            runs=int(harness.get("runs", 10)),
            base_seed=int(harness.get("seed", 42)),
            out=harness.get("out", "results"),
            experiment=harness.get("experiment", scen["name"]),
            max_steps=int(scen["max_steps"]) if "max_steps" in scen else None,
            jobs=int(harness.get("jobs", 1)),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def serialize_config(cfg: ExperimentConfig) -> str:
    lines = ["[scenario]", f"name = {cfg.scenario}"]
    if cfg.max_steps is not None:
        lines.append(f"max_steps = {cfg.max_steps}")
    lines += ["", "[network]", f"agents = {cfg.network.n_agents}"]
    lines += [f"edge = {s} {d} {w!r}" for s, d, w in cfg.network.edges]
    lines += ["", "[training]"]
    for key in TRAINING_KEYS:
        value = getattr(cfg.training, key)
        if value is None:
            continue
        if key == "hidden":
            value = " ".join(str(h) for h in value)
        lines.append(f"{key} = {value!r}" if isinstance(value, float) else f"{key} = {value}")
    lines += ["", "[harness]", f"runs = {cfg.runs}", f"seed = {cfg.base_seed}",
              f"out = {cfg.out}", f"experiment = {cfg.experiment}", f"jobs = {cfg.jobs}", ""]
    return "\n".join(lines)


def apply_overrides(cfg: ExperimentConfig, overrides: dict[str, str]) -> ExperimentConfig:
    """Apply ``key -> value`` overrides by rewriting the serialized config.

    Keys may be bare (``episodes``) or qualified (``training.episodes``);
    ``edge`` overrides replace every edge of the network.
    """
    sections = split_sections(serialize_config(cfg))
    owners = {k: "scenario" for k in SCENARIO_KEYS}
    owners.update({k: "training" for k in TRAINING_KEYS})
    owners.update({k: "harness" for k in HARNESS_KEYS})
    owners.update({k: "network" for k in NETWORK_KEYS})
    replaced_edges = False
    for raw_key, value in overrides.items():
        key = raw_key.replace("-", "_").lower()
        section, _, bare = key.rpartition(".")
        if bare == "scenario":
            bare, section = "name", "scenario"
        section = section or owners.get(bare)
        if section not in SECTIONS or owners.get(bare) != section:
            raise ConfigError(f"unknown config key {raw_key!r}")
        items = sections.setdefault(section, [])
        if bare == "edge":
            if not replaced_edges:
                items[:] = [(k, v) for k, v in items if k != "edge"]
                replaced_edges = True
            for edge in str(value).split(";"):
                items.append(("edge", edge.strip()))
            continue
        items[:] = [(k, v) for k, v in items if k != bare]
        items.append((bare, str(value)))
    text = "\n".join(f"[{name}]\n" + "\n".join(f"{k} = {v}" for k, v in items)
                     for name, items in sections.items())
    return parse_config(text)


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read())


def shipped_config_text(name: str) -> str:
    return resources.files("relmarl").joinpath("configs", f"{name}.cfg").read_text()


def shipped_configs() -> list[str]:
    folder = resources.files("relmarl").joinpath("configs")
    return sorted(p.name[:-4] for p in folder.iterdir() if p.name.endswith(".cfg"))
