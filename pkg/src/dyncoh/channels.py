"""Quantum channels stored as Choi matrices.

Convention: ``J = sum_ij |i><j| (x) N(|i><j|)`` with the input factor first,
so ``<ik|J|jl> = <k|N(|i><j|)|l>`` and ``N(rho) = Tr_in[J (rho^T (x) I)]``.
The maximally entangled operator used here is unnormalized (trace d).
"""

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .sdp import ConicProblem, SolverError, Tolerances, solve

CHOI_TOL = 1e-9
PRECISE = Tolerances(gap_tol=1e-9, feas_tol=1e-9)


@dataclass(frozen=True)
class SystemDim:
    d_in: int
    d_out: int

    def __post_init__(self):
        if int(self.d_in) < 1 or int(self.d_out) < 1:
            raise ValueError(f"dimensions must be positive, got {self.d_in}, {self.d_out}")

    @property
    def dims(self) -> tuple:
        return (self.d_in, self.d_out)

    @property
    def size(self) -> int:
        return self.d_in * self.d_out


@dataclass(frozen=True, eq=False)
class ChannelChoi:
    sys: SystemDim
    J: np.ndarray = field(repr=False)
    cp_only: bool = False

    def __post_init__(self):
        J = linalg.hermitize(self.J)
        if J.shape[0] != self.sys.size:
            raise ValueError(f"Choi matrix of size {J.shape[0]} does not match dims {self.sys.dims}")
        J.setflags(write=False)
        object.__setattr__(self, "J", J)

    @property
    def d_in(self) -> int:
        return self.sys.d_in

    @property
    def d_out(self) -> int:
        return self.sys.d_out

    def __repr__(self):
        kind = "CP map" if self.cp_only else "channel"
        return f"ChannelChoi({kind} {self.d_in}->{self.d_out})"


def validate_channel(N: ChannelChoi, tol: float = CHOI_TOL) -> ChannelChoi:
    """Check complete positivity and, unless ``cp_only``, trace preservation."""
    scale = max(1.0, np.abs(N.J).max())
    if linalg.min_eig(N.J) < -tol * scale:
        raise ValueError(f"Choi matrix is not PSD (min eigenvalue {linalg.min_eig(N.J):.3g})")
    if not N.cp_only:
        err = np.linalg.norm(linalg.partial_trace(N.J, N.sys.dims, [0]) - np.eye(N.d_in))
        if err > tol * scale:
            raise ValueError(f"map is not trace preserving (marginal error {err:.3g})")
    return N


def from_choi(J, d_in: int, d_out: int, cp_only: bool = False, tol: float = CHOI_TOL) -> ChannelChoi:
    return validate_channel(ChannelChoi(SystemDim(d_in, d_out), np.asarray(J, dtype=complex), cp_only), tol)


# named families

def identity(d: int) -> ChannelChoi:
    return from_choi(linalg.phi_plus(d), d, d)


def dephasing(d: int) -> ChannelChoi:
    return from_choi(linalg.dephase(linalg.phi_plus(d)), d, d)


def _check_lambda(lam):
    lam = float(lam)
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    return lam


def depolarizing(lam: float, d: int) -> ChannelChoi:
    """``rho -> lam*rho + (1-lam) Tr[rho] I/d``."""
    lam = _check_lambda(lam)
    return from_choi(lam * linalg.phi_plus(d) + (1 - lam) / d * np.eye(d * d), d, d)


def partial_dephasing(lam: float, d: int) -> ChannelChoi:
    """``rho -> lam*rho + (1-lam) D(rho)``."""
    lam = _check_lambda(lam)
    phi = linalg.phi_plus(d)
    return from_choi(lam * phi + (1 - lam) * linalg.dephase(phi), d, d)


def replacement(state, d_in: int) -> ChannelChoi:
    """Discard the input and prepare ``state``."""
    state = linalg.hermitize(state)
    if abs(np.trace(state) - 1) > 1e-9 or linalg.min_eig(state) < -1e-9:
        raise ValueError("replacement target must be a density matrix")
    return from_choi(np.kron(np.eye(d_in), state), d_in, state.shape[0])


def replace_plus(d: int) -> ChannelChoi:
    return replacement(linalg.plus_state(d), d)


def plus_state_prep(m: int) -> ChannelChoi:
    """Preparation of the maximally coherent state on ``m`` levels (trivial input)."""
    return replacement(linalg.plus_state(m), 1)


def unitary(U) -> ChannelChoi:
    U = np.asarray(U, dtype=complex)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise ValueError("unitary must be a square matrix")
    if np.abs(U.conj().T @ U - np.eye(U.shape[0])).max() > 1e-9:
        raise ValueError("matrix is not unitary")
    v = U.T.reshape(-1)
    d = U.shape[0]
    return from_choi(np.outer(v, v.conj()), d, d)


def kraus(ops, d_in: int | None = None) -> ChannelChoi:
    ops = [np.asarray(k, dtype=complex) for k in ops]
    d_out, d_in_ = ops[0].shape
    vs = np.array([k.T.reshape(-1) for k in ops])
    return from_choi(vs.T @ vs.conj(), d_in or d_in_, d_out)


def classical(P) -> ChannelChoi:
    """Classical channel from a column-stochastic matrix ``P[k, i] = p(k|i)``."""
    P = np.asarray(P, dtype=float)
    if np.any(P < -1e-12) or np.abs(P.sum(axis=0) - 1).max() > 1e-9:
        raise ValueError("classical channel needs a column-stochastic matrix")
    d_out, d_in = P.shape
    return from_choi(np.diag(P.T.reshape(-1)).astype(complex), d_in, d_out)


@dataclass(frozen=True)
class ChannelSpec:
    """Named channel description; ``kind`` is one of the keys of ``SPEC_KINDS``."""
    kind: str
    d: int | None = None
    lam: float | None = None
    state: np.ndarray | None = None
    matrix: np.ndarray | None = None
    d_in: int | None = None
    d_out: int | None = None


SPEC_KINDS = ("identity", "dephasing", "depolarizing", "partial-dephasing",
              "replace-plus", "replacement", "unitary", "choi")


def make_channel(spec: ChannelSpec) -> ChannelChoi:
    k = spec.kind
    if k == "identity":
        return identity(spec.d)
    if k == "dephasing":
        return dephasing(spec.d)
    if k == "depolarizing":
        return depolarizing(spec.lam, spec.d)
    if k == "partial-dephasing":
        return partial_dephasing(spec.lam, spec.d)
    if k == "replace-plus":
        return replace_plus(spec.d)
    if k == "replacement":
        return replacement(spec.state, spec.d_in or spec.d)
    if k == "unitary":
        return unitary(spec.matrix)
    if k == "choi":
        J = np.asarray(spec.matrix, dtype=complex)
        d_in = spec.d_in or spec.d
        d_out = spec.d_out or spec.d
        if d_in is None or d_out is None:
            n = int(round(np.sqrt(J.shape[0])))
            if n * n != J.shape[0]:
                raise ValueError("raw Choi matrix needs explicit d_in/d_out")
            d_in = d_in or n
            d_out = d_out or n
        return from_choi(J, d_in, d_out)
    raise ValueError(f"unknown channel kind {k!r}")


# operations

def apply_channel(N: ChannelChoi, rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (N.d_in, N.d_in):
        raise linalg.DimensionMismatch(f"input of shape {rho.shape} does not match d_in={N.d_in}")
    J4 = N.J.reshape(N.d_in, N.d_out, N.d_in, N.d_out)
    return np.einsum("ikjl,ij->kl", J4, rho)


def compose_channels(second: ChannelChoi, first: ChannelChoi) -> ChannelChoi:
    """Choi matrix of ``second o first``."""
    if first.d_out != second.d_in:
        raise linalg.DimensionMismatch(f"cannot compose: output {first.d_out} vs input {second.d_in}")
    a, b, c = first.d_in, first.d_out, second.d_out
    J1 = first.J.reshape(a, b, a, b)
    J2 = second.J.reshape(b, c, b, c)
    J = np.einsum("ikjl,kmln->imjn", J1, J2).reshape(a * c, a * c)
    return ChannelChoi(SystemDim(a, c), J, first.cp_only or second.cp_only)


def tensor_channels(a: ChannelChoi, b: ChannelChoi) -> ChannelChoi:
    """Parallel composition; input factors (A0, A0'), output factors (A1, A1')."""
    dims = (a.d_in, a.d_out, b.d_in, b.d_out)
    J = linalg.permute_factors(np.kron(a.J, b.J), dims, (0, 2, 1, 3))
    return ChannelChoi(SystemDim(a.d_in * b.d_in, a.d_out * b.d_out), J, a.cp_only or b.cp_only)


def dephased(N: ChannelChoi) -> ChannelChoi:
    """``D o N o D``: keep only the diagonal of the Choi matrix."""
    return ChannelChoi(N.sys, linalg.dephase(N.J), N.cp_only)


def is_classical(N: ChannelChoi, tol: float = 1e-9) -> bool:
    off = N.J - np.diag(np.diag(N.J))
    return bool(np.abs(off).max(initial=0.0) <= tol)


def channels_close(N: ChannelChoi, M: ChannelChoi, tol: float = 1e-9) -> bool:
    return N.sys == M.sys and bool(np.abs(N.J - M.J).max() <= tol)


def diamond_distance(N: ChannelChoi, M: ChannelChoi, tols: Tolerances | None = None,
                     return_report: bool = False):
    """Half the diamond norm of ``N - M``, from the Watrous SDP.

    ``min lam  s.t.  lam I >= Tr_out Z,  Z >= 0,  Z >= J_N - J_M``.
    """
    if N.sys != M.sys:
        raise linalg.DimensionMismatch(f"dimension mismatch {N.sys.dims} vs {M.sys.dims}")
    # fixed argument order makes the result exactly symmetric
    if N.J.tobytes() > M.J.tobytes():
        N, M = M, N
    dims = N.sys.dims
    p = ConicProblem("diamond")
    lam = p.scalar("lambda")
    Z = p.hermitian("Z", N.sys.size)
    p.add_psd(Z, "Z_psd")
    p.add_ge(Z, N.J - M.J, "Z_dom")
    p.add_psd(lam.kron(right=np.eye(N.d_in)) - Z.ptrace(dims, [0]), "norm")
    p.minimize(lam)
    rep = solve(p, tols or PRECISE)
    if not rep.optimal:
        raise SolverError(f"diamond-distance SDP ended with status {rep.status}")
    val = max(0.0, rep.primal_value)
    return (val, rep) if return_report else val


def _clean(J, rel=1e-13):
    J = np.array(J, dtype=complex)
    J[np.abs(J) < rel * max(np.abs(J).max(), 1e-300)] = 0
    return J


def _dmax_sdp(JN, JE, tols):
    p = ConicProblem("dmax")
    t = p.scalar("t")
    p.add_psd(t.kron(right=JE) - JN, "dom")
    p.minimize(t)
    return solve(p, tols or PRECISE)


def dmax_channels(N: ChannelChoi, E: ChannelChoi, tols: Tolerances | None = None,
                  return_report: bool = False):
    """Max-relative entropy ``log2 min{t : t J_E >= J_N}`` in bits.

    Returns ``inf`` when the support of ``J_N`` is not inside that of ``J_E``.
    """
    if N.sys != E.sys:
        raise linalg.DimensionMismatch(f"dimension mismatch {N.sys.dims} vs {E.sys.dims}")
    JN, JE = _clean(N.J), _clean(E.J)
    rep = _dmax_sdp(JN, JE, tols)
    if rep.status == "max_iter" and tols is None:
        # near-singular J_E can stall short of PRECISE; settle for the standard tolerances
        rep = _dmax_sdp(JN, JE, Tolerances())
    if rep.status == "primal_infeasible":
        val = np.inf
    elif rep.optimal:
        val = float(np.log2(rep.primal_value)) if rep.primal_value > 0 else -np.inf
    else:
        raise SolverError(f"D_max SDP ended with status {rep.status}")
    return (val, rep) if return_report else val


# random instances (test and demo utilities)

def random_unitary(d: int, rng=None) -> np.ndarray:
    rng = np.random.default_rng(rng)
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_density(d: int, rng=None, rank: int | None = None) -> np.ndarray:
    rng = np.random.default_rng(rng)
    r = rank or d
    g = rng.standard_normal((d, r)) + 1j * rng.standard_normal((d, r))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_channel(d_in: int, d_out: int | None = None, rng=None, rank: int | None = None) -> ChannelChoi:
    """Random channel from a Haar-like isometry; full Kraus rank by default."""
    rng = np.random.default_rng(rng)
    d_out = d_out or d_in
    r = rank or d_in * d_out
    g = rng.standard_normal((d_out * r, d_in)) + 1j * rng.standard_normal((d_out * r, d_in))
    v, _ = np.linalg.qr(g)
    ops = v.reshape(r, d_out, d_in)
    return kraus(ops, d_in)


def random_classical(d_in: int, d_out: int | None = None, rng=None) -> ChannelChoi:
    rng = np.random.default_rng(rng)
    d_out = d_out or d_in
    P = rng.dirichlet(np.ones(d_out), size=d_in).T
    return classical(P)
