"""Relationship-aware value decomposition for cooperative multi-agent Q-learning."""

from .relgraph import RelationalNetwork, parse_network, team_reward, is_self_interest
from .environments import make_env, scenario_catalog
from .trainer import TrainConfig, train_run

__all__ = ["RelationalNetwork", "parse_network", "team_reward", "is_self_interest",
           "make_env", "scenario_catalog", "TrainConfig", "train_run"]
__version__ = "0.1.0"
