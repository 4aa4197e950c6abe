"""Greedy evaluation, cross-run aggregation and CSV reports."""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from . import neural

SERIES_HEADER = ("run", "episode", "agent", "reward", "collective")
TABLE_HEADER = ("agent", "mean", "half_width", "n_runs")


@dataclass(frozen=True)
class EvalRecord:
    run_id: int
    episode: int
    rewards: tuple[float, ...]
    collective: float
    team: float

    @classmethod
    def make(cls, run_id, episode, rewards, team):
        rewards = tuple(float(r) for r in rewards)
        collective = 0.0
        for r in rewards:
            collective += r
        return cls(int(run_id), int(episode), rewards, collective, float(team))


@dataclass(frozen=True)
class AggregateRow:
    agent: str
    mean: float
    half_width: float | None  # None when a single run leaves the CI undefined
    n: int

    def __str__(self):
        hw = "n/a" if self.half_width is None else f"{self.half_width:.2f}"
        return f"{self.agent:>8}: {self.mean:6.2f} ± {hw}"


@dataclass
class GreedyEpisode:
    rewards: np.ndarray  # undiscounted per-agent totals
    final_state: object
    steps: int
    trace: list


def greedy_rollout(env, nets) -> GreedyEpisode:
    """Play one episode with every agent taking its argmax action, keeping the trace."""
    from .environments import trace_record

    state = env.reset()
    totals = np.zeros(env.n_agents)
    trace = []
    terminal = False
    while not terminal:
        x = env.encode(state)
        actions = [int(np.argmax(neural.forward(net, x))) for net in nets]
        state, rewards, terminal = env.step(state, actions)
        totals += rewards
        trace.append(trace_record(state.t, state, actions, rewards))
    return GreedyEpisode(totals, state, state.t, trace)


def greedy_eval(env, nets, trace: list | None = None) -> np.ndarray:
    """Per-agent rewards of one greedy episode.

    Both the environment and the greedy policy are deterministic, so one
    episode is the whole measurement.  Pass a list as ``trace`` to collect
    per-step records.
    """
    episode = greedy_rollout(env, nets)
    if trace is not None:
        trace.extend(episode.trace)
    return episode.rewards


def ci_half_width(samples: Sequence[float], confidence: float = 0.95) -> float | None:
    """Two-sided Student-t half-width; ``None`` for fewer than two samples."""
    x = np.asarray(samples, dtype=np.float64)
    n = len(x)
    if n < 2:
        return None
    sd = np.std(x, ddof=1)
    if sd == 0.0:
        return 0.0
    return float(stats.t.ppf(0.5 + confidence / 2, n - 1) * sd / math.sqrt(n))


def final_records(records: Iterable[EvalRecord]) -> list[EvalRecord]:
    """The last evaluation of each run, ordered by run id."""
    last = {}
    for rec in records:
        if rec.run_id not in last or rec.episode > last[rec.run_id].episode:
            last[rec.run_id] = rec
    return [last[k] for k in sorted(last)]


def aggregate(records: Iterable[EvalRecord], agent_names: Sequence[str] | None = None):
    finals = final_records(records)
    if not finals:
        return []
    rewards = np.array([r.rewards for r in finals])
    names = agent_names or [f"agent{i}" for i in range(rewards.shape[1])]
    rows = []
    for i, name in enumerate(names):
        col = np.sort(rewards[:, i])  # sorted so the mean ignores run order
        rows.append(AggregateRow(name, float(np.mean(col)), ci_half_width(col), len(col)))
    return rows


def series_csv(records: Iterable[EvalRecord], agent_names=None, comment: str | None = None) -> str:
    buf = io.StringIO()
    if comment:
        buf.write(f"# {comment}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SERIES_HEADER)
    for rec in sorted(records, key=lambda r: (r.run_id, r.episode)):
        for i, reward in enumerate(rec.rewards):
            agent = agent_names[i] if agent_names else str(i)
            w.writerow((rec.run_id, rec.episode, agent, repr(reward), repr(rec.collective)))
    return buf.getvalue()


def table_csv(rows: Sequence[AggregateRow], comment: str | None = None) -> str:
    buf = io.StringIO()
    if comment:
        buf.write(f"# {comment}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TABLE_HEADER)
    for row in rows:
        hw = "n/a" if row.half_width is None else repr(row.half_width)
        w.writerow((row.agent, repr(row.mean), hw, row.n))
    return buf.getvalue()


def emit_report(records, out_dir, experiment: str, agent_names=None,
                comment: str | None = None) -> tuple[str, str]:
    """Write ``<experiment>_series.csv`` and ``<experiment>_table.csv``."""
    records = list(records)
    os.makedirs(out_dir, exist_ok=True)
    series_path = os.path.join(out_dir, f"{experiment}_series.csv")
    table_path = os.path.join(out_dir, f"{experiment}_table.csv")
    with open(series_path, "w", newline="") as fh:
        fh.write(series_csv(records, agent_names, comment))
    with open(table_path, "w", newline="") as fh:
        fh.write(table_csv(aggregate(records, agent_names), comment))
    return series_path, table_path


def _rows(text: str):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.reader(lines))


def read_series(text: str) -> list[EvalRecord]:
    """Parse a series CSV back into records.

    The file does not carry team rewards, so they come back equal to the
    collective reward.
    """
    rows = _rows(text)
    if not rows or tuple(rows[0]) != SERIES_HEADER:
        raise ValueError("not a series CSV")
    grouped: dict = {}
    for run, episode, _agent, reward, collective in rows[1:]:
        key = (int(run), int(episode))
        grouped.setdefault(key, ([], float(collective)))[0].append(float(reward))
    return [EvalRecord(run, ep, tuple(rs), coll, coll)
            for (run, ep), (rs, coll) in sorted(grouped.items())]


def read_table(text: str) -> list[AggregateRow]:
    rows = _rows(text)
    if not rows or tuple(rows[0]) != TABLE_HEADER:
        raise ValueError("not a table CSV")
    return [AggregateRow(a, float(m), None if hw == "n/a" else float(hw), int(n))
            for a, m, hw, n in rows[1:]]
