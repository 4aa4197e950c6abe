"""Relational networks and the rewards they hand to the learner.

A relational network is a small weighted digraph over agents.  Each agent
keeps a self-loop; an extra edge ``a -> b`` makes agent ``a`` also care about
``b``'s reward.  The learner only ever sees one scalar per step, the
graph-weighted sum of everyone's rewards.

Run:  python3 demos/01_team_rewards.py
"""

import numpy as np

from relmarl import RelationalNetwork, is_self_interest, parse_network, team_reward

# Plain value decomposition: every agent counts once.
vdn = RelationalNetwork.self_interest(2)
print("self-interest:", vdn.to_text())
print("  is self-interest?", is_self_interest(vdn))

# Red (agent 0) also credits blue (agent 1) at half weight, so blue's reward
# enters the team signal one and a half times.
blue_first = RelationalNetwork.with_priorities(2, [(0, 1)], weight=0.5)
print("\nblue-prioritized:", blue_first.to_text())
print("weight matrix (row credits column):")
print(blue_first.weight_matrix())

for r in ([10.0, 0.0], [0.0, 10.0], [-2.0, 8.0]):
    print(f"  rewards {r} -> team {team_reward(blue_first, r):5.1f}"
          f"   (plain sum {team_reward(vdn, r):5.1f})")

# The same graph written as text, e.g. inside a config file.
text = "agents=2; 0->0:1.0, 1->1:1.0, 0->1:0.5"
assert parse_network(text) == blue_first

# Rewards can come in batches along the leading axes.
batch = np.array([[1.0, 2.0], [3.0, -1.0], [0.0, 0.0]])
print("\nbatched team rewards:", team_reward(blue_first, batch))

# Renaming agents moves the edges with them and leaves totals unchanged.
swapped = blue_first.relabel([1, 0])
print("relabelled:", swapped.to_text())
print("  team([8, -2]) =", team_reward(swapped, [8.0, -2.0]),
      "== team([-2, 8]) =", team_reward(blue_first, [-2.0, 8.0]))

# Four agents all crediting the last one, as in the bridge-crossing setups.
all_to_yellow = RelationalNetwork.with_priorities(4, [(0, 3), (1, 3), (2, 3)], weight=1.0)
print("\nall -> yellow:", all_to_yellow.to_text())
print("  yellow's effective weight:", all_to_yellow.weight_matrix()[:, 3].sum())
