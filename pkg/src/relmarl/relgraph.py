"""Relational networks between agents and the relationship-weighted team reward.

An edge ``i -> j`` with weight ``w`` means agent ``i`` is vested in the outcome
of agent ``j``: during training, ``w * r_j`` is credited to the team reward once
for that edge.  Self-loops are ordinary edges, so a graph that omits an
agent's self-loop drops that agent's own reward from the objective.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


class NetworkError(ValueError):
    """Raised for malformed relational networks."""


@dataclass(frozen=True)
class RelationalNetwork:
    n_agents: int
    edges: tuple[tuple[int, int, float], ...]

    def __post_init__(self):
        if not isinstance(self.n_agents, (int, np.integer)) or self.n_agents <= 0:
            raise NetworkError(f"agent count must be a positive integer, got {self.n_agents!r}")
        seen = set()
        canonical = []
        for edge in self.edges:
            src, dst, weight = int(edge[0]), int(edge[1]), float(edge[2])
            triple = (src, dst, weight)
            if not (0 <= src < self.n_agents and 0 <= dst < self.n_agents):
                raise NetworkError(f"edge {triple}: agent index out of range [0, {self.n_agents})")
            if not 0.0 <= weight <= 1.0:
                raise NetworkError(f"edge {triple}: weight outside [0, 1]")
            if (src, dst) in seen:
                raise NetworkError(f"edge {triple}: duplicate ordered pair ({src}, {dst})")
            seen.add((src, dst))
            canonical.append(triple)
        canonical.sort(key=lambda e: (e[0], e[1]))
        object.__setattr__(self, "n_agents", int(self.n_agents))
        object.__setattr__(self, "edges", tuple(canonical))

    @classmethod
    def self_interest(cls, n_agents: int) -> "RelationalNetwork":
        return cls(n_agents, tuple((i, i, 1.0) for i in range(n_agents)))

    @classmethod
    def with_priorities(cls, n_agents: int, priorities: Iterable[tuple[int, int]],
                        weight: float = 0.5) -> "RelationalNetwork":
        """Self-interest graph plus one ``src -> dst`` edge per priority pair."""
        edges = [(i, i, 1.0) for i in range(n_agents)]
        edges += [(s, d, weight) for s, d in priorities]
        return cls(n_agents, tuple(edges))

    def weight_matrix(self) -> np.ndarray:
        w = np.zeros((self.n_agents, self.n_agents))
        for src, dst, weight in self.edges:
            w[src, dst] = weight
        return w

    def relabel(self, perm: Sequence[int]) -> "RelationalNetwork":
        """Return the graph with agent ``k`` renamed to ``perm[k]``."""
        return RelationalNetwork(self.n_agents,
                                 tuple((perm[s], perm[d], w) for s, d, w in self.edges))

    def to_text(self) -> str:
        parts = [f"{s}->{d}:{w!r}" for s, d, w in self.edges]
        return f"agents={self.n_agents}; " + ", ".join(parts)


_EDGE_RE = re.compile(r"^\s*(-?\d+)\s*(?:->|→)\s*(-?\d+)\s*:\s*(\S+)\s*$")


def parse_network(text: str) -> RelationalNetwork:
    """Parse a network from either of two textual forms.

    Compact, one line::

        agents=2; 0->0:1.0, 1->1:1.0, 0->1:0.5

    (``→`` is accepted in place of ``->``), or the body of a config
    ``[network]`` section::

        agents = 2
        edge = 0 0 1.0
        edge = 0 1 0.5
    """
    n_agents = None
    edges = []
    for line in re.split(r"[;\n]", text):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().lower()
        if sep and key == "agents":
            try:
                n_agents = int(value)
            except ValueError:
                raise NetworkError(f"bad agent count {value.strip()!r}") from None
        elif sep and key == "edge":
            fields = value.split()
            if len(fields) != 3:
                raise NetworkError(f"edge line needs 'src dst weight', got {value.strip()!r}")
            edges.append(_edge_triple(*fields))
        else:
            for item in line.split(","):
                if not item.strip():
                    continue
                m = _EDGE_RE.match(item)
                if m is None:
                    raise NetworkError(f"cannot parse edge {item.strip()!r}")
                edges.append(_edge_triple(*m.groups()))
    if n_agents is None:
        raise NetworkError("network text does not state the agent count")
    return RelationalNetwork(n_agents, tuple(edges))


def _edge_triple(src: str, dst: str, weight: str) -> tuple[int, int, float]:
    try:
        return int(src), int(dst), float(weight)
    except ValueError:
        raise NetworkError(f"bad edge ({src}, {dst}, {weight})") from None


def team_reward(net: RelationalNetwork, rewards) -> float:
    """Sum of ``w_ij * r_j`` over every edge ``i -> j``.

    Accepts a single reward vector or a batch with agents along the last
    axis; the batch form returns one team reward per row.  The weights
    crediting each agent are added up first, then the weighted rewards are
    accumulated left to right in agent order.  So ``r0 + 1.5 r1`` comes out
    exactly as written, and a self-interest graph reproduces a plain
    left-to-right reward sum bit for bit.
    """
    r = np.asarray(rewards, dtype=np.float64)
    if r.shape[-1:] != (net.n_agents,):
        raise NetworkError(f"expected {net.n_agents} rewards, got shape {r.shape}")
    credit = [0.0] * net.n_agents
    for _, dst, weight in net.edges:
        credit[dst] += weight
    total = np.zeros(r.shape[:-1])
    for j, c in enumerate(credit):
        if c != 0.0:
            total = total + c * r[..., j]
    return float(total) if total.ndim == 0 else total


def is_self_interest(net: RelationalNetwork) -> bool:
    return net.edges == tuple((i, i, 1.0) for i in range(net.n_agents))
