"""Deterministic simultaneous-move grid worlds.

Two families share one interface (``reset``, ``step``, ``encode``):

* :class:`GridWorld` -- the 5x5 resource-collection board with pushing,
  restricted mobility and batteries.  Cells are ``(col, row)``.
* :class:`SwitchWorld` -- the 3x7 two-room board joined by a one-lane bridge.
  Cells are ``(row, col)``.

States are immutable values; ``step`` is a pure function of (state, actions).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

UP, DOWN, LEFT, RIGHT, STAY = range(5)
ACTION_NAMES = ("up", "down", "left", "right", "stay")
N_ACTIONS = 5

# (dcol, drow) for the grid world; the switch world swaps to (drow, dcol)
_GRID_DELTA = {UP: (0, -1), DOWN: (0, 1), LEFT: (-1, 0), RIGHT: (1, 0), STAY: (0, 0)}
_SWITCH_DELTA = {UP: (-1, 0), DOWN: (1, 0), LEFT: (0, -1), RIGHT: (0, 1), STAY: (0, 0)}

CONSUME_REWARD = 10.0
GOAL_REWARD = 5.0
SWITCH_STEP_COST = 0.1


class TerminalStateError(RuntimeError):
    """Raised when stepping an episode that has already ended."""


def _check_actions(actions, n_agents):
    acts = [int(a) for a in actions]
    if len(acts) != n_agents or any(not 0 <= a < N_ACTIONS for a in acts):
        raise ValueError(f"need {n_agents} actions in [0, {N_ACTIONS}), got {list(actions)!r}")
    return acts


def resolve_moves(current, targets, fixed=()):
    """Cancel conflicting simultaneous moves.

    ``current`` and ``targets`` are per-agent cells (``None`` entries are
    ignored, used for agents that left the board).  A mover is sent back to
    its own cell when another agent ends up targeting the same cell, or when
    two agents try to swap.  Agents listed in ``fixed`` always keep their
    target.  Iterates to a fixed point so cancelled moves propagate.
    """
    final = list(targets)
    fixed = set(fixed)
    live = [i for i in range(len(current)) if current[i] is not None]
    while True:
        # cancel every conflicting mover of this round at once, so the order
        # agents are visited in cannot pick a winner
        cancel = set()
        for i in live:
            if i in fixed or final[i] == current[i]:
                continue
            for j in live:
                if j == i:
                    continue
                contested = final[j] == final[i]
                swapped = final[j] == current[i] and final[i] == current[j]
                if contested or swapped:
                    cancel.add(i)
                    break
        if not cancel:
            break
        for i in cancel:
            final[i] = current[i]
    return final


# --------------------------------------------------------------------------
# resource grid world
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Resource:
    cell: tuple[int, int]
    color: str  # "green" is open to everyone; otherwise only the same-colored agent

    def allows(self, agent_color: str) -> bool:
        return self.color == "green" or self.color == agent_color


@dataclass(frozen=True)
class GridScenario:
    name: str
    agent_colors: tuple[str, ...]
    starts: tuple[tuple[int, int], ...]
    resources: tuple[Resource, ...]
    vertical_only: tuple[bool, ...] = ()
    batteries: tuple[int, ...] | None = None
    max_steps: int = 50
    size: int = 5

    def __post_init__(self):
        n = len(self.agent_colors)
        if not self.vertical_only:
            object.__setattr__(self, "vertical_only", (False,) * n)
        if len(self.starts) != n or len(self.vertical_only) != n:
            raise ValueError("per-agent fields must have one entry per agent")
        if self.batteries is not None and len(self.batteries) != n:
            raise ValueError("batteries need one entry per agent")


@dataclass(frozen=True)
class GridWorldState:
    cells: tuple[tuple[int, int], ...]
    consumed: tuple[bool, ...]
    counts: tuple[int, ...]
    batteries: tuple[int, ...] | None
    t: int = 0
    terminal: bool = False


class GridWorld:
    n_actions = N_ACTIONS

    def __init__(self, scenario: GridScenario):
        self.scenario = scenario
        self.n_agents = len(scenario.agent_colors)
        self.max_steps = scenario.max_steps
        self.agent_names = scenario.agent_colors
        self._spawn = frozenset(r.cell for r in scenario.resources)
        self.state_dim = len(self.encode(self.reset()))

    @property
    def name(self) -> str:
        return self.scenario.name

    def reset(self) -> GridWorldState:
        sc = self.scenario
        return GridWorldState(cells=tuple(sc.starts),
                              consumed=(False,) * len(sc.resources),
                              counts=(0,) * self.n_agents,
                              batteries=None if sc.batteries is None else tuple(sc.batteries))

    def _inside(self, cell) -> bool:
        return 0 <= cell[0] < self.scenario.size and 0 <= cell[1] < self.scenario.size

    def step(self, state: GridWorldState, actions: Sequence[int]):
        if state.terminal:
            raise TerminalStateError("episode already terminated; call reset()")
        sc = self.scenario
        n = self.n_agents
        acts = _check_actions(actions, n)

        # constraint filter
        battery = None if state.batteries is None else list(state.batteries)
        for i in range(n):
            if sc.vertical_only[i] and acts[i] in (LEFT, RIGHT):
                acts[i] = STAY
            if battery is not None and acts[i] != STAY:
                if battery[i] == 0:
                    acts[i] = STAY
                else:
                    battery[i] -= 1

        cur = list(state.cells)
        targets = list(cur)
        fixed = set()

        # pushes: a mover facing an adjacent idle agent shoves it one cell
        occupant = {c: i for i, c in enumerate(cur)}
        for p in range(n):
            if acts[p] == STAY or p in fixed:
                continue
            dc, dr = _GRID_DELTA[acts[p]]
            facing = (cur[p][0] + dc, cur[p][1] + dr)
            q = occupant.get(facing)
            if q is None or acts[q] != STAY or q in fixed:
                continue
            dest = (facing[0] + dc, facing[1] + dr)
            if self._inside(dest) and dest not in occupant:
                targets[q] = dest
            fixed.update((p, q))

        # ordinary moves; off-board moves are void
        for i in range(n):
            if i in fixed or acts[i] == STAY:
                continue
            dc, dr = _GRID_DELTA[acts[i]]
            nxt = (cur[i][0] + dc, cur[i][1] + dr)
            if self._inside(nxt):
                targets[i] = nxt
        cells = resolve_moves(cur, targets, fixed)

        # consumption, then the per-step penalty on what is still out there
        rewards = np.zeros(n)
        consumed = list(state.consumed)
        counts = list(state.counts)
        for i in range(n):
            for k, res in enumerate(sc.resources):
                if (not consumed[k] and res.cell == cells[i] and counts[i] == 0
                        and res.allows(sc.agent_colors[i])):
                    consumed[k] = True
                    counts[i] = 1
                    rewards[i] += CONSUME_REWARD
        remaining = consumed.count(False)
        if remaining:
            for i in range(n):
                if cells[i] not in self._spawn:
                    rewards[i] -= remaining

        t = state.t + 1
        terminal = remaining == 0 or t >= sc.max_steps
        nxt_state = GridWorldState(tuple(cells), tuple(consumed), tuple(counts),
                                   None if battery is None else tuple(battery), t, terminal)
        return nxt_state, rewards, terminal

    def encode(self, state: GridWorldState) -> np.ndarray:
        """Layout: per-agent (col, row) scaled to [0, 1]; per-resource consumed
        flag; per-agent battery fraction (battery scenarios only); per-agent
        consumed-count flag."""
        span = self.scenario.size - 1
        out = []
        for col, row in state.cells:
            out += [col / span, row / span]
        out += [float(c) for c in state.consumed]
        if state.batteries is not None:
            out += [b / cap for b, cap in zip(state.batteries, self.scenario.batteries)]
        out += [float(c) for c in state.counts]
        return np.array(out, dtype=np.float64)

    def cells_of(self, state):
        return state.cells


# --------------------------------------------------------------------------
# switch (bridge) world
# --------------------------------------------------------------------------

SWITCH_ROWS, SWITCH_COLS = 3, 7
SWITCH_COLORS = ("red", "blue", "green", "yellow")
SWITCH_STARTS = ((0, 0), (0, 6), (2, 0), (2, 6))
SWITCH_GOALS = ((0, 6), (0, 0), (2, 6), (2, 0))


def switch_walls() -> np.ndarray:
    """Boolean wall mask: row 1 is open end to end, rows 0 and 2 only at the
    two outer columns on each side."""
    walls = np.zeros((SWITCH_ROWS, SWITCH_COLS), dtype=bool)
    walls[0, 2:5] = True
    walls[2, 2:5] = True
    return walls


@dataclass(frozen=True)
class SwitchScenario:
    name: str
    n_agents: int
    max_steps: int = 50
    agent_colors: tuple[str, ...] = field(init=False)
    starts: tuple[tuple[int, int], ...] = field(init=False)
    goals: tuple[tuple[int, int], ...] = field(init=False)

    def __post_init__(self):
        if not 1 <= self.n_agents <= 4:
            raise ValueError("the switch world supports 1 to 4 agents")
        k = self.n_agents
        # three agents drop yellow, two also drop green
        object.__setattr__(self, "agent_colors", SWITCH_COLORS[:k])
        object.__setattr__(self, "starts", SWITCH_STARTS[:k])
        object.__setattr__(self, "goals", SWITCH_GOALS[:k])


@dataclass(frozen=True)
class SwitchState:
    cells: tuple[tuple[int, int], ...]
    reached: tuple[bool, ...]
    t: int = 0
    terminal: bool = False


class SwitchWorld:
    """Agents earn +5 on entering their goal and pay 0.1 for every step they
    start away from it, the arriving step included.  Arrived agents leave the
    board for collision purposes and earn nothing further."""

    n_actions = N_ACTIONS

    def __init__(self, scenario: SwitchScenario):
        self.scenario = scenario
        self.n_agents = scenario.n_agents
        self.max_steps = scenario.max_steps
        self.agent_names = scenario.agent_colors
        self.walls = switch_walls()
        self.state_dim = 3 * self.n_agents

    @property
    def name(self) -> str:
        return self.scenario.name

    def reset(self) -> SwitchState:
        return SwitchState(tuple(self.scenario.starts), (False,) * self.n_agents)

    def open_cell(self, cell) -> bool:
        r, c = cell
        return 0 <= r < SWITCH_ROWS and 0 <= c < SWITCH_COLS and not self.walls[r, c]

    def step(self, state: SwitchState, actions: Sequence[int]):
        if state.terminal:
            raise TerminalStateError("episode already terminated; call reset()")
        n = self.n_agents
        acts = _check_actions(actions, n)
        cur = [None if state.reached[i] else state.cells[i] for i in range(n)]
        targets = list(cur)
        for i in range(n):
            if cur[i] is None:
                continue
            dr, dc = _SWITCH_DELTA[acts[i]]
            nxt = (cur[i][0] + dr, cur[i][1] + dc)
            if self.open_cell(nxt):
                targets[i] = nxt
        moved = resolve_moves(cur, targets)

        rewards = np.zeros(n)
        cells = list(state.cells)
        reached = list(state.reached)
        for i in range(n):
            if reached[i]:
                continue
            cells[i] = moved[i]
            rewards[i] -= SWITCH_STEP_COST
            if cells[i] == self.scenario.goals[i]:
                reached[i] = True
                rewards[i] += GOAL_REWARD
        t = state.t + 1
        terminal = all(reached) or t >= self.max_steps
        return SwitchState(tuple(cells), tuple(reached), t, terminal), rewards, terminal

    def encode(self, state: SwitchState) -> np.ndarray:
        """Layout: per agent (row / 2, col / 6, reached flag)."""
        out = []
        for (r, c), done in zip(state.cells, state.reached):
            out += [r / (SWITCH_ROWS - 1), c / (SWITCH_COLS - 1), float(done)]
        return np.array(out, dtype=np.float64)

    def shortest_path(self, agent: int) -> int:
        """Breadth-first distance from the agent's start to its goal on the
        empty board."""
        start, goal = self.scenario.starts[agent], self.scenario.goals[agent]
        frontier, seen, dist = [start], {start}, 0
        while frontier:
            if goal in frontier:
                return dist
            nxt = []
            for r, c in frontier:
                for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                    cell = (r + dr, c + dc)
                    if self.open_cell(cell) and cell not in seen:
                        seen.add(cell)
                        nxt.append(cell)
            frontier, dist = nxt, dist + 1
        raise ValueError(f"goal unreachable for agent {agent}")


# --------------------------------------------------------------------------
# catalog and traces
# --------------------------------------------------------------------------

def scenario_catalog() -> dict:
    """Named scenario configs.  Grid cells are ``(col, row)``."""
    g = "green"
    return {
        "rc": GridScenario("rc", ("red", "blue"), ((1, 1), (3, 3)),
                           (Resource((1, 2), g),)),
        "rc-rm": GridScenario("rc-rm", ("red", "blue"), ((2, 0), (0, 4)),
                              (Resource((4, 2), g),), vertical_only=(True, False)),
        "drc-rm": GridScenario("drc-rm", ("red", "blue"), ((2, 0), (0, 0)),
                               (Resource((4, 2), "red"), Resource((0, 4), "blue")),
                               vertical_only=(True, False)),
        "rc-bc": GridScenario("rc-bc", ("red", "blue"), ((0, 0), (1, 1)),
                              (Resource((2, 1), g), Resource((4, 4), g)),
                              batteries=(10, 5)),
        "switch2": SwitchScenario("switch2", 2),
        "switch3": SwitchScenario("switch3", 3),
        "switch4": SwitchScenario("switch4", 4),
    }


def make_env(name: str, max_steps: int | None = None):
    catalog = scenario_catalog()
    if name not in catalog:
        raise KeyError(f"unknown scenario {name!r}; known: {', '.join(catalog)}")
    sc = catalog[name]
    if max_steps is not None:
        sc = replace(sc, max_steps=int(max_steps))
    return GridWorld(sc) if isinstance(sc, GridScenario) else SwitchWorld(sc)


def trace_record(step: int, state, actions, rewards) -> dict:
    return {"step": step,
            "cells": [list(c) for c in state.cells],
            "actions": [ACTION_NAMES[a] for a in actions],
            "rewards": [float(r) for r in rewards]}


def write_trace(path, records) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
