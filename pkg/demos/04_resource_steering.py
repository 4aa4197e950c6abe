"""Steering who takes the single resource.

In the "rc" grid scenario red starts one step from a shared resource and blue
three steps away.  Left alone, the team lets red take it.  Crediting blue's
reward through the relational network makes red stand aside instead.

Run:  python3 demos/04_resource_steering.py [--episodes 5000]
"""

import argparse

import numpy as np

from relmarl.cli import reproduce_config
from relmarl.evalharness import greedy_rollout
from relmarl.trainer import train_run

parser = argparse.ArgumentParser()
parser.add_argument("--episodes", type=int, default=5000)
args = parser.parse_args()

for variant in ("fig3a", "fig3b", "fig3c"):
    cfg = reproduce_config("rc", variant, "desk")
    cfg.training.episodes = args.episodes
    env = cfg.env()
    art = train_run(env, cfg.network, cfg.run_config(0))
    episode = greedy_rollout(env, art.nets)
    taker = [name for name, r in zip(env.agent_names, episode.rewards) if r > 0]
    curve = np.array([rec.rewards for rec in art.eval_records])
    print(f"{variant}  {cfg.network.to_text()}")
    print(f"   greedy rewards red={episode.rewards[0]:.0f} blue={episode.rewards[1]:.0f}, "
          f"resource taken by {taker[0] if taker else 'nobody'} in {episode.steps} steps")
    print(f"   last five evaluations (red, blue): {curve[-5:].tolist()}")
