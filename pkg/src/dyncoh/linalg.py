"""Dense operator algebra in a fixed (computational) basis.

Tensor products follow numpy's ``kron``: the left factor is the slower
index. A composite basis state ``|i k>`` on dims ``(d0, d1)`` therefore
sits at row ``i * d1 + k``. Every function accepting ``dims`` acts on the
last two axes of its input, so stacks of operators can be passed through
in one call.
"""

from functools import reduce
from typing import Sequence

import numpy as np

HERM_TOL = 1e-12


class DimensionMismatch(ValueError):
    """Operands whose system dimensions are incompatible."""


def hermitize(x, tol: float = HERM_TOL) -> np.ndarray:
    """Return ``(x + x^dag)/2`` after checking the asymmetry is negligible.

    :param x: square matrix
    :param tol: allowed asymmetry relative to the largest entry
    :raises ValueError: if ``x`` is not square or is visibly non-Hermitian
    """
    x = np.asarray(x, dtype=complex)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("matrix has non-finite entries")
    scale = np.abs(x).max() if x.size else 0.0
    asym = np.abs(x - x.conj().T).max() if x.size else 0.0
    if asym > tol * max(scale, 1e-300):
        raise ValueError(f"matrix is not Hermitian (asymmetry {asym:.3g})")
    return (x + x.conj().T) / 2


def tensor(*ops) -> np.ndarray:
    """Kronecker product of the arguments, left factor slowest."""
    return reduce(np.kron, [np.asarray(o) for o in ops])


def _check_dims(x, dims):
    n = int(np.prod(dims))
    if x.shape[-1] != n or x.shape[-2] != n:
        raise DimensionMismatch(f"dims {tuple(dims)} do not match operator of shape {x.shape[-2:]}")


def partial_trace(x, dims: Sequence[int], keep) -> np.ndarray:
    """Trace out every factor not listed in ``keep``.

    Kept factors stay in their original order.
    """
    x = np.asarray(x)
    dims = [int(d) for d in dims]
    _check_dims(x, dims)
    keep = sorted(set(keep))
    nf = len(dims)
    if any(k < 0 or k >= nf for k in keep):
        raise ValueError(f"keep={keep} out of range for {nf} factors")
    batch = x.shape[:-2]
    t = x.reshape(batch + tuple(dims) + tuple(dims))
    letters = "abcdefghijklmnopqrstuvwxyz"
    row = list(letters[:nf])
    col = [letters[nf + i] if i in keep else row[i] for i in range(nf)]
    out = [row[i] for i in keep] + [col[i] for i in keep]
    sub = "..." + "".join(row) + "".join(col) + "->..." + "".join(out)
    kd = int(np.prod([dims[i] for i in keep])) if keep else 1
    return np.einsum(sub, t).reshape(batch + (kd, kd))


def _diag_mask(dims, which):
    """Boolean mask that is True where row and column agree on ``which`` factors."""
    n = int(np.prod(dims))
    idx = np.array(np.unravel_index(np.arange(n), dims))
    mask = np.ones((n, n), dtype=bool)
    for f in which:
        mask &= idx[f][:, None] == idx[f][None, :]
    return mask


def dephase(x, dims: Sequence[int] | None = None, which=None) -> np.ndarray:
    """Remove coherences in the product basis.

    With ``which=None`` all factors are dephased, i.e. every off-diagonal
    entry is zeroed. Otherwise only the listed factors are dephased and the
    rest are left untouched.
    """
    x = np.asarray(x)
    if dims is None or which is None:
        if dims is not None:
            _check_dims(x, dims)
        return x * np.eye(x.shape[-1], dtype=bool)
    _check_dims(x, dims)
    return x * _diag_mask(dims, which)


def permute_factors(x, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors so that new factor ``k`` is old factor ``perm[k]``."""
    x = np.asarray(x)
    dims = list(dims)
    _check_dims(x, dims)
    nf = len(dims)
    batch = x.shape[:-2]
    nb = len(batch)
    t = x.reshape(batch + tuple(dims) + tuple(dims))
    axes = list(range(nb)) + [nb + p for p in perm] + [nb + nf + p for p in perm]
    n = x.shape[-1]
    return t.transpose(axes).reshape(batch + (n, n))


def embed(x, dims: Sequence[int], factors: Sequence[int]) -> np.ndarray:
    """Place an operator on ``factors`` into the full space, identity elsewhere.

    ``x`` acts on the listed factors in the listed order.
    """
    x = np.asarray(x)
    dims = list(dims)
    factors = list(factors)
    rest = [i for i in range(len(dims)) if i not in factors]
    _check_dims(x, [dims[f] for f in factors])
    eye = np.eye(int(np.prod([dims[i] for i in rest])) if rest else 1)
    full = np.kron(x, eye) if x.ndim == 2 else np.einsum("...ij,kl->...ikjl", x, eye).reshape(
        x.shape[:-2] + (x.shape[-1] * eye.shape[0],) * 2)
    order = factors + rest
    inv = [order.index(i) for i in range(len(dims))]
    return permute_factors(full, [dims[i] for i in order], inv)


def trace_norm(x) -> float:
    """Schatten 1-norm; uses eigenvalues for Hermitian input."""
    x = np.asarray(x)
    if np.allclose(x, x.conj().T, atol=1e-14, rtol=0):
        return float(np.abs(np.linalg.eigvalsh((x + x.conj().T) / 2)).sum())
    return float(np.linalg.svd(x, compute_uv=False).sum())


def hs_inner(x, y) -> float:
    """Real part of ``Tr[x^dag y]``."""
    return float(np.real(np.vdot(np.asarray(x), np.asarray(y))))


def min_eig(x) -> float:
    x = np.asarray(x)
    return float(np.linalg.eigvalsh((x + x.conj().T) / 2)[0])


def is_psd(x, tol: float = 1e-9) -> bool:
    return min_eig(x) >= -tol


def phi_plus(d: int) -> np.ndarray:
    """Unnormalized maximally entangled projector ``sum_ij |ii><jj|`` (trace d)."""
    v = np.eye(d).reshape(-1)
    return np.outer(v, v).astype(complex)


def plus_state(d: int) -> np.ndarray:
    """Normalized maximally coherent state ``|+><+|`` with ``|+> = sum_i |i>/sqrt(d)``."""
    return np.full((d, d), 1.0 / d, dtype=complex)

