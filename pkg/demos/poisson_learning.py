"""Poisson learning strategies and the static reduction.

A decision maker guesses a binary state (payoff 1 if right).  Waiting costs
m = 0.02 per period and acquiring information at rate lam costs lam^2 more.
Jumping to {0.1, 0.9} with hazard lam / MI pays 0.9 minus the expected
waiting cost, which the Monte Carlo run reproduces.
"""

import numpy as np

from infocost import (
    DynamicProblem,
    FlowTransform,
    PoissonStrategy,
    make_structure,
    mutual_information,
    poisson_value,
    simulate,
    static_solve,
)

mi = mutual_information()
problem = DynamicProblem(np.eye(2), 0.02, FlowTransform("power", 2.0), [0.5, 0.5])
target = make_structure([(0.5, (0.1, 0.9)), (0.5, (0.9, 0.1))])
strategy = PoissonStrategy(target, rate=0.1)

v = poisson_value(strategy, problem, mi)
sim = simulate(strategy, problem, mi, paths=100_000, seed=0)
print(f"closed form {v:.6f}; simulated {sim.mean:.6f} +/- {sim.std_error:.1e}")
print(f"expected periods {1 / strategy.hazard(mi):.3f}")

sol = static_solve(problem, mi)
print(f"\noptimal rate {sol.lam:.4f}, value {sol.value:.6f}, price {sol.price:.4f}, binding {sol.binding}")
for w, nu in sol.pi.sorted():
    print(f"  posterior {nu[0]:.4f} with weight {w:.4f}")
