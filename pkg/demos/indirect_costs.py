"""Direct versus indirect cost for mutual information and its square.

Mutual information is additive under sequential acquisition, so no sequence
of small experiments beats buying the target at once.  Squaring it rewards
splitting: a dilution chain with K expected steps costs (ln 2)^2 / K, and a
random walk on a fine belief grid does better still.
"""

import math

from infocost import (
    InformationStructure,
    compare,
    dilution_chain,
    indirect_upper,
    make_structure,
    mutual_information,
    power_transform,
    process_cost,
    random_walk_replication,
    verify_replicates,
)

mi = mutual_information()
mi_sq = power_transform(mi, 2)
full = InformationStructure.full_revelation([0.5, 0.5])
noisy = make_structure([(0.5, (0.1, 0.9)), (0.5, (0.9, 0.1))])

print("Blackwell:", compare(full, noisy).relation.value)
print(f"MI(noisy) = {mi(noisy):.6f}, MI(full) = ln 2 = {mi(full):.6f}")

print("\nDilution chains for full revelation")
print(" K   MI cost    MI^2 cost   (ln2)^2/K")
for K in (1, 2, 4, 8, 16):
    p = dilution_chain(full, K)
    assert verify_replicates(p, full)
    print(f"{K:2d}  {process_cost(p, mi):.6f}   {process_cost(p, mi_sq):.6f}    {math.log(2) ** 2 / K:.6f}")

print("\nRandom walk replication of the noisy structure")
for M in (20, 40, 80, 160):
    p = random_walk_replication(noisy, M)
    print(f"M = {M:3d}: MI cost {process_cost(p, mi):.12f}, MI^2 cost {process_cost(p, mi_sq):.3e}, "
          f"{p.info['walk_steps']} walk steps")

est = indirect_upper(mi_sq, full)
print(f"\nBest MI^2 replication of full revelation: {est.family}, cost {est.upper:.3e} "
      f"(direct {mi_sq(full):.6f})")
