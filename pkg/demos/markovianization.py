"""Collapsing a history-dependent signal tree.

The tree first draws an uninformative coin, then reveals the state only
after heads.  Both histories share one belief, so the collapsed process
mixes the two continuations.  Under MI^2 that halves the cost; under mutual
information the two costs agree.
"""

import numpy as np

from infocost import SignalTree, markovianize, mutual_information, power_transform, terminal_law

tree = SignalTree([0.5, 0.5], [
    ("acquire", [np.array([[0.5, 0.5], [0.5, 0.5]])]),
    ("dispose", np.eye(2)),
    ("acquire", [np.eye(2), np.ones((1, 2))]),
])

for name, C in (("MI", mutual_information()), ("MI^2", power_transform(mutual_information(), 2))):
    res = markovianize(tree, C)
    print(f"{name:5s} tree {res.original_cost:.6f}  collapsed {res.markov_cost:.6f}")

law = terminal_law(res.process)
for w, nu in law.sorted():
    print(f"terminal posterior {nu[0]:.2f} with weight {w:.2f}")
