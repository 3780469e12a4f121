"""
Free superchannels
==================

Superchannels act on channels. The two free classes here are MISC (maximally
incoherent) and DISC (dephasing-covariant); DISC sits inside MISC.
"""

import numpy as np

from dyncoh import channels as ch
from dyncoh import superchannels as sc
from dyncoh.channels import SystemDim
from dyncoh.superchannels import FreeSet

Q = SystemDim(2, 2)

# completely dephasing a channel on both sides is itself a DISC superchannel
delta = sc.dephasing_superchannel(Q)
print("dephasing superchannel:", sc.classify_superchannel(delta))

out = sc.apply_superchannel(delta, ch.identity(2))
print("Delta[identity] equals dephasing:", ch.channels_close(out, ch.dephasing(2)))

# wrapping a channel with coherent pre/post processing is not free
H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
theta = sc.sandwich_superchannel(ch.unitary(H), ch.identity(2))
print("Hadamard sandwich:", sc.classify_superchannel(theta))

# random members of each class, and their composition
rng = np.random.default_rng(1)
a = sc.random_superchannel(Q, Q, rng, free_set=FreeSet.DISC)
b = sc.random_superchannel(Q, Q, rng, free_set=FreeSet.MISC)
print("DISC then MISC:", sc.classify_superchannel(sc.compose_superchannels(b, a)))

# dimensions of the free subspaces, from an explicit orthonormal basis
for free in FreeSet:
    basis = sc.free_subspace_basis(free, Q, Q, warn=False)
    print(f"{free.value}: {basis.count} basis elements (closed form says {basis.expected})")
