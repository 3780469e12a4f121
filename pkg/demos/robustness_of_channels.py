"""
How coherent is a channel?
==========================

Log-robustness of a few familiar qubit channels, and how it compares with
the dephasing-covariant variant and the smoothed version.
"""

import numpy as np

from dyncoh import channels as ch
from dyncoh.measures import dephasing_log_robustness, log_robustness, smoothed_log_robustness

# a few named channels; classical ones should come out at zero
named = {
    "identity": ch.identity(2),
    "dephasing": ch.dephasing(2),
    "replace with |+>": ch.replace_plus(2),
    "depolarizing 0.5": ch.depolarizing(0.5, 2),
    "bit flip (classical)": ch.classical([[0, 1], [1, 0]]),
}

print(f"{'channel':<22}{'LR':>10}{'LR_delta':>10}{'gap':>10}")
for name, N in named.items():
    res = log_robustness(N)
    lr, lr_delta = (round(v, 5) + 0.0 for v in (res.value, dephasing_log_robustness(N)))
    print(f"{name:<22}{lr:>10.5f}{lr_delta:>10.5f}{res.gap:>10.1e}")

# LR is additive, so two uses of the identity cost two bits
both = ch.tensor_channels(ch.identity(2), ch.identity(2))
print("\nLR(id x id) =", round(log_robustness(both).value, 6))

# smoothing over an eps-ball in diamond distance only ever lowers the value
N = ch.depolarizing(0.2, 2)
for eps in (0.0, 0.05, 0.1, 0.2):
    print(f"eps={eps:<5} smoothed LR = {smoothed_log_robustness(N, eps):.5f}")

# random channels are all coherent to some degree
rng = np.random.default_rng(0)
vals = [log_robustness(ch.random_channel(2, rng=rng)).value for _ in range(20)]
print(f"\n20 random qubit channels: min {min(vals):.4f}, max {max(vals):.4f}")
