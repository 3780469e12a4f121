"""Superchannels A -> B as Choi matrices on (A0, A1, B0, B1).

A superchannel acts on a channel's Choi matrix by
``J_out = Tr_A[ JJ ((J_in)^T (x) I_B) ]``. Validity is checked through the
marginal conditions ``JJ >= 0``, ``JJ_{A1 B0} = I`` and
``JJ_{A B0} = JJ_{A0 B0} (x) I_{A1}/|A1|``.
"""

import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import linalg
from .channels import ChannelChoi, SystemDim, is_classical
from .sdp import herm_basis, hunvec, hvec


class FreeSet(str, Enum):
    MISC = "misc"
    DISC = "disc"


class SuperchannelError(ValueError):
    """Invalid superchannel; ``condition`` names the failed check."""

    def __init__(self, condition: str, message: str):
        super().__init__(message)
        self.condition = condition


def _dims(sys_in: SystemDim, sys_out: SystemDim) -> tuple:
    return (sys_in.d_in, sys_in.d_out, sys_out.d_in, sys_out.d_out)


@dataclass(frozen=True, eq=False)
class SuperchannelChoi:
    sys_in: SystemDim
    sys_out: SystemDim
    J: np.ndarray = field(repr=False)

    def __post_init__(self):
        J = linalg.hermitize(self.J)
        if J.shape[0] != self.sys_in.size * self.sys_out.size:
            raise SuperchannelError("shape", f"Choi matrix of size {J.shape[0]} does not match dims {self.dims}")
        J.setflags(write=False)
        object.__setattr__(self, "J", J)

    @property
    def dims(self) -> tuple:
        return _dims(self.sys_in, self.sys_out)

    def __repr__(self):
        a0, a1, b0, b1 = self.dims
        return f"SuperchannelChoi(({a0}->{a1}) -> ({b0}->{b1}))"


def marginal_errors(J, dims) -> dict:
    """Deviations of ``J`` from the three superchannel conditions."""
    a0, a1, b0, b1 = dims
    m1 = linalg.partial_trace(J, dims, [1, 2])
    m2 = linalg.partial_trace(J, dims, [0, 1, 2])
    m3 = linalg.partial_trace(J, dims, [0, 2])
    fact = linalg.embed(m3 / a1, (a0, a1, b0), [0, 2])
    return {
        "psd": max(0.0, -linalg.min_eig(J)),
        "marginal_a1b0": float(np.abs(m1 - np.eye(a1 * b0)).max()),
        "factorization": float(np.abs(m2 - fact).max()),
    }


def validate_superchannel(J, sys_in: SystemDim, sys_out: SystemDim, tol: float = 1e-8) -> SuperchannelChoi:
    """Return a validated superchannel or raise naming the violated condition."""
    J = np.asarray(J, dtype=complex)
    theta = SuperchannelChoi(sys_in, sys_out, J)
    err = marginal_errors(theta.J, theta.dims)
    scale = max(1.0, np.abs(theta.J).max())
    if err["marginal_a1b0"] > tol * scale:
        raise SuperchannelError("marginal_a1b0", f"J_(A1 B0) differs from the identity by {err['marginal_a1b0']:.3g}")
    if err["factorization"] > tol * scale:
        raise SuperchannelError("factorization", f"J_(A B0) does not factor as J_(A0 B0) x u_A1 "
                                                 f"(error {err['factorization']:.3g})")
    if err["psd"] > tol * scale:
        raise SuperchannelError("psd", f"Choi matrix is not PSD (min eigenvalue {-err['psd']:.3g})")
    return theta


def _as4(J, A, B):
    return J.reshape(A, B, A, B)


def apply_raw(J, JM, dims) -> np.ndarray:
    """Superchannel action on an arbitrary (not necessarily Hermitian) Choi matrix."""
    a0, a1, b0, b1 = dims
    return np.einsum("abcd,ac->bd", _as4(J, a0 * a1, b0 * b1), JM)


def apply_superchannel(theta: SuperchannelChoi, M: ChannelChoi) -> ChannelChoi:
    if M.sys != theta.sys_in:
        raise linalg.DimensionMismatch(f"channel dims {M.sys.dims} do not match superchannel input {theta.sys_in.dims}")
    return ChannelChoi(theta.sys_out, apply_raw(theta.J, M.J, theta.dims), M.cp_only)


def compose_superchannels(second: SuperchannelChoi, first: SuperchannelChoi) -> SuperchannelChoi:
    """Choi matrix of ``second o first``."""
    if first.sys_out != second.sys_in:
        raise linalg.DimensionMismatch("superchannel dimensions do not chain")
    A, B, C = first.sys_in.size, first.sys_out.size, second.sys_out.size
    J = np.einsum("abxy,bcyz->acxz", _as4(first.J, A, B), _as4(second.J, B, C)).reshape(A * C, A * C)
    return SuperchannelChoi(first.sys_in, second.sys_out, J)


# named superchannels

def identity_superchannel(sys: SystemDim) -> SuperchannelChoi:
    return SuperchannelChoi(sys, sys, linalg.phi_plus(sys.size))


def dephasing_superchannel(sys: SystemDim) -> SuperchannelChoi:
    """``N -> D o N o D``."""
    return SuperchannelChoi(sys, sys, linalg.dephase(linalg.phi_plus(sys.size)))


def constant_superchannel(M: ChannelChoi, sys_in: SystemDim) -> SuperchannelChoi:
    """Discard the input channel and output ``M``."""
    u = np.eye(sys_in.d_in) / sys_in.d_in
    return SuperchannelChoi(sys_in, M.sys, np.kron(np.kron(u, np.eye(sys_in.d_out)), M.J))


def sandwich_superchannel(pre: ChannelChoi, post: ChannelChoi) -> SuperchannelChoi:
    """``N -> post o N o pre`` with ``pre: B0 -> A0`` and ``post: A1 -> B1``."""
    b0, a0 = pre.d_in, pre.d_out
    a1, b1 = post.d_in, post.d_out
    F = pre.J.reshape(b0, a0, b0, a0)
    E = post.J.reshape(a1, b1, a1, b1)
    J = np.einsum("pkql,mrns->kmprlnqs", F, E)
    n = a0 * a1 * b0 * b1
    return SuperchannelChoi(SystemDim(a0, a1), SystemDim(b0, b1), J.reshape(n, n))


def make_free_superchannel(kind: str, **params) -> SuperchannelChoi:
    """Free superchannels used as generators: identity, delta, constant, sandwich."""
    if kind == "identity":
        return identity_superchannel(params["sys"])
    if kind == "delta":
        return dephasing_superchannel(params["sys"])
    if kind == "constant":
        M = params["target"]
        if not is_classical(M):
            raise ValueError("constant superchannel is free only for a classical target")
        return constant_superchannel(M, params["sys_in"])
    if kind == "sandwich":
        pre, post = params["pre"], params["post"]
        if not (is_classical(pre) and is_classical(post)):
            raise ValueError("sandwich superchannel is free only for classical pre/post channels")
        return sandwich_superchannel(pre, post)
    raise ValueError(f"unknown superchannel kind {kind!r}")


# free sets

@dataclass(frozen=True)
class Membership:
    is_misc: bool
    is_disc: bool
    misc_error: float
    disc_error: float


def _misc_map(J, dims):
    return linalg.dephase(J) - linalg.dephase(J, dims, [0, 1])


def _disc_map(J, dims):
    return linalg.dephase(J, dims, [2, 3]) - linalg.dephase(J, dims, [0, 1])


def classify_superchannel(theta: SuperchannelChoi, tol: float | None = None) -> Membership:
    """MISC: dephasing everything equals dephasing A only.
    DISC: dephasing A equals dephasing B."""
    if tol is None:
        tol = 1e-8 * max(np.linalg.norm(theta.J), 1e-300)
    em = float(np.abs(_misc_map(theta.J, theta.dims)).max())
    ed = float(np.abs(_disc_map(theta.J, theta.dims)).max())
    return Membership(bool(em <= tol), bool(ed <= tol), em, ed)


def is_free(theta: SuperchannelChoi, free_set: FreeSet, tol: float | None = None) -> bool:
    m = classify_superchannel(theta, tol)
    return m.is_misc if FreeSet(free_set) is FreeSet.MISC else m.is_disc


def expected_basis_count(free_set: FreeSet, sys_in: SystemDim, sys_out: SystemDim) -> int:
    """Subspace dimension claimed in the literature for the free-set constraints."""
    A, B = sys_in.size, sys_out.size
    if FreeSet(free_set) is FreeSet.MISC:
        return A * B * (B - 1)
    return A * B * (A + B - 1)


@dataclass(frozen=True, eq=False)
class SubspaceBasis:
    free_set: FreeSet
    elements: np.ndarray = field(repr=False)    # (n, D, D) Hermitian, orthonormal
    sys_in: SystemDim
    sys_out: SystemDim
    expected: int

    @property
    def count(self) -> int:
        return self.elements.shape[0]

    @property
    def count_matches(self) -> bool:
        return self.count == self.expected

    def overlaps(self, J) -> np.ndarray:
        """``Tr[J X^i]`` for every basis element."""
        return np.real(np.einsum("nij,ji->n", self.elements, J))


def _mgs(vecs, drop=1e-9):
    out = []
    for v in vecs:
        w = v.astype(float).copy()
        for _ in range(2):
            for q in out:
                w -= (q @ w) * q
        nrm = np.linalg.norm(w)
        if nrm >= drop:
            out.append(w / nrm)
    return np.array(out) if out else np.zeros((0, vecs.shape[1]))


_BASIS_CACHE: dict = {}


def free_subspace_basis(free_set: FreeSet, sys_in: SystemDim, sys_out: SystemDim,
                        warn: bool = True) -> SubspaceBasis:
    """Orthonormal basis of the image of the defining map of the free set.

    A superchannel is in the set iff it is orthogonal to every element.
    Built by mapping the canonical Hermitian generators and running modified
    Gram-Schmidt; a count that differs from :func:`expected_basis_count` is
    reported with a warning, not corrected.
    """
    free_set = FreeSet(free_set)
    key = (free_set, sys_in, sys_out)
    if key not in _BASIS_CACHE:
        dims = _dims(sys_in, sys_out)
        n = sys_in.size * sys_out.size
        gens = herm_basis(n)
        fn = _misc_map if free_set is FreeSet.MISC else _disc_map
        images = hvec(fn(gens, dims))
        q = _mgs(images)
        elems = hunvec(q.T, n) if q.shape[0] else np.zeros((0, n, n), dtype=complex)
        elems.setflags(write=False)
        _BASIS_CACHE[key] = SubspaceBasis(free_set, elems, sys_in, sys_out,
                                          expected_basis_count(free_set, sys_in, sys_out))
    basis = _BASIS_CACHE[key]
    if warn and not basis.count_matches:
        warnings.warn(f"{free_set.value.upper()} subspace has dimension {basis.count}, "
                      f"expected {basis.expected}", stacklevel=2)
    return basis


# random generation (test utility; no uniformity claims)

def _constraint_rows(dims, free_set):
    """Real linear map on hvec coordinates whose zero set (with offsets) is the target."""
    a0, a1, b0, b1 = dims
    n = a0 * a1 * b0 * b1
    gens = herm_basis(n)
    parts = [hvec(linalg.partial_trace(gens, dims, [1, 2])).T]
    m2 = linalg.partial_trace(gens, dims, [0, 1, 2])
    m3 = linalg.partial_trace(gens, dims, [0, 2])
    parts.append(hvec(m2 - linalg.embed(m3 / a1, (a0, a1, b0), [0, 2])).T)
    rhs = [hvec(np.eye(a1 * b0)), np.zeros(parts[1].shape[0])]
    if free_set is not None:
        basis = free_subspace_basis(free_set, SystemDim(a0, a1), SystemDim(b0, b1), warn=False)
        parts.append(hvec(basis.elements))
        rhs.append(np.zeros(basis.count))
    return np.concatenate(parts), np.concatenate(rhs)


def random_superchannel(sys_in: SystemDim, sys_out: SystemDim, rng=None,
                        free_set: FreeSet | None = None, iters: int = 400) -> SuperchannelChoi:
    """Random superchannel (optionally in a free set).

    A random PSD matrix is pushed toward the superchannel conditions by
    alternating affine and PSD projections; the result is then mixed with the
    interior point ``I/(|A0||B1|)`` just enough to be PSD, so every linear
    condition holds to rounding error.
    """
    rng = np.random.default_rng(rng)
    dims = _dims(sys_in, sys_out)
    a0, a1, b0, b1 = dims
    n = a0 * a1 * b0 * b1
    C, r = _constraint_rows(dims, FreeSet(free_set) if free_set is not None else None)
    Cp = np.linalg.pinv(C, rcond=1e-10)

    def affine(x):
        return x - Cp @ (C @ x - r)

    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    X = g @ g.conj().T
    X *= (a1 * b0) / np.trace(X).real * (n / (a1 * b0)) / (a0 * b1)
    x = hvec(X)
    for _ in range(iters):
        x = affine(x)
        w, v = np.linalg.eigh(hunvec(x, n))
        if w[0] >= -1e-12:
            break
        x = hvec((v * np.maximum(w, 0)) @ v.conj().T)
    X = hunvec(affine(x), n)
    c = 1.0 / (a0 * b1)
    lo = linalg.min_eig(X)
    t = 0.0 if lo >= 1e-3 * c else (1e-3 * c - lo) / (c - lo)
    J = (1 - t) * X + t * c * np.eye(n)
    return SuperchannelChoi(sys_in, sys_out, J)


def add_superchannel_constraints(p, alpha, sys_in: SystemDim, sys_out: SystemDim,
                                 free_set: FreeSet | None = None, prefix: str = "alpha") -> None:
    """Constrain the Hermitian expression ``alpha`` to be a (free) superchannel Choi matrix."""
    dims = _dims(sys_in, sys_out)
    a0, a1, b0, b1 = dims
    p.add_psd(alpha, f"{prefix}_psd")
    p.add_eq(alpha.ptrace(dims, [1, 2]), np.eye(a1 * b0), f"{prefix}_a1b0")
    fact = alpha.ptrace(dims, [0, 2]).embed((a0, a1, b0), [0, 2]) / a1
    p.add_eq(alpha.ptrace(dims, [0, 1, 2]) - fact, name=f"{prefix}_ab0")
    if free_set is not None:
        basis = free_subspace_basis(free_set, sys_in, sys_out, warn=False)
        p.add_orthogonal(alpha, basis.elements, f"{prefix}_free")
