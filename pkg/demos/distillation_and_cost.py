"""
Distilling coherence and paying for it
======================================

One-shot tasks: how many bits of coherence a channel yields, how many it
takes to simulate it, and how far apart two channels are under free
processing.
"""

from dyncoh import channels as ch
from dyncoh import superchannels as sc
from dyncoh.superchannels import FreeSet
from dyncoh.tasks import conversion_distance, exact_one_shot_cost, one_shot_distill

# distillation from depolarizing channels, with error budget 0.1
for lam in (0.0, 0.3, 0.7, 1.0):
    N = ch.depolarizing(lam, 2)
    res = one_shot_distill(N, 0.1, FreeSet.MISC)
    print(f"depolarizing {lam}: distill n={res.n} ({res.bits:.3f} bits), fidelity {res.fidelity:.4f}")

# cost: the smallest maximally coherent state that simulates N exactly
N = ch.depolarizing(0.5, 2)
cost = exact_one_shot_cost(N)
print(f"\nLR = {cost.lr:.4f}, cost = log2({cost.m}) = {cost.cost_bits:.4f}")
out = sc.apply_superchannel(cost.omega, ch.plus_state_prep(cost.m))
print("the superchannel rebuilds N:", ch.channels_close(out, N))
print("and it is free:", sc.classify_superchannel(cost.omega))

# conversion distance: identity is out of reach from a dephasing channel
res = conversion_distance(ch.dephasing(2), ch.identity(2), FreeSet.MISC)
print(f"\nd(dephasing -> identity) = {res.value:.6f} (dual {res.dual_value:.6f})")
res = conversion_distance(ch.identity(2), ch.dephasing(2), FreeSet.MISC)
print(f"d(identity -> dephasing) = {res.value:.2e}")
