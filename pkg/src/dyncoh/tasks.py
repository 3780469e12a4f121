"""Operational tasks: conversion distance, exact one-shot coherence cost and
one-shot coherence distillation, all under MISC or DISC."""

import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .channels import PRECISE, ChannelChoi, SystemDim, dephased, dmax_channels
from .measures import log_robustness, optimal_classical_channel
from .sdp import ConicProblem, SolverError, Tolerances, solve
from .superchannels import (FreeSet, SuperchannelChoi, add_superchannel_constraints,
                            constant_superchannel, free_subspace_basis)


def _require(rep, what):
    if not rep.optimal:
        raise SolverError(f"{what}: solver status {rep.status}")
    return rep


# conversion distance

@dataclass(frozen=True, eq=False)
class ConversionResult:
    value: float
    theta: SuperchannelChoi
    dual_value: float
    dual_blocks: dict = field(repr=False)
    gap: float
    omega: np.ndarray = field(repr=False)


def _action_map(JN, A, B):
    """``alpha -> Tr_A[alpha (J_N^T x I_B)]`` on coefficient stacks."""
    def fn(m):
        lead = m.shape[:-2]
        m4 = m.reshape(lead + (A, B, A, B))
        return np.einsum("...abcd,ac->...bd", m4, JN)
    return fn


def conversion_primal(N: ChannelChoi, M: ChannelChoi, free_set: FreeSet, tols: Tolerances | None = None):
    """``min lam`` over free superchannels ``alpha`` and ``omega >= 0`` with
    ``omega >= Theta[N] - M`` and ``lam I >= omega_B0``."""
    A, B = N.sys.size, M.sys.size
    b0, b1 = M.sys.dims
    p = ConicProblem("conversion_primal")
    lam = p.scalar("lambda")
    omega = p.hermitian("omega", B)
    alpha = p.hermitian("theta", A * B)
    p.add_psd(lam.kron(right=np.eye(b0)) - omega.ptrace((b0, b1), [0]), "norm")
    p.add_psd(omega, "omega_psd")
    p.add_psd(omega - alpha.map(_action_map(N.J, A, B)) + M.J, "omega_dom")
    add_superchannel_constraints(p, alpha, N.sys, M.sys, FreeSet(free_set), "theta")
    p.minimize(lam)
    return _require(solve(p, tols or PRECISE), "conversion distance primal")


def conversion_dual(N: ChannelChoi, M: ChannelChoi, free_set: FreeSet, tols: Tolerances | None = None):
    """Lagrange dual of :func:`conversion_primal`, solved as its own SDP."""
    a0, a1 = N.sys.dims
    b0, b1 = M.sys.dims
    dims = (a0, a1, b0, b1)
    basis = free_subspace_basis(free_set, N.sys, M.sys, warn=False)
    p = ConicProblem("conversion_dual")
    beta = p.hermitian("beta", b0)
    gamma = p.hermitian("gamma", b0 * b1)
    tau = p.hermitian("tau", a0 * a1 * b0)
    zeta = p.hermitian("zeta", a1 * b0)
    p.add_psd(gamma, "gamma_psd")
    p.add_psd(beta.kron(right=np.eye(b1)) - gamma, "beta_dom")
    p.add_psd(1.0 - beta.trace(), "beta_trace")
    tau_a0b0 = tau.ptrace((a0, a1, b0), [0, 2]).embed((a0, a1, b0), [0, 2]) / a1
    lmi = (gamma.kron(left=N.J.T)
           - tau.kron(right=np.eye(b1))
           + tau_a0b0.kron(right=np.eye(b1))
           - zeta.embed(dims, [1, 2]))
    if basis.count:
        lmi = lmi - p.combination("t", basis.elements)
    p.add_psd(lmi, "alpha_coeff")
    p.maximize(zeta.trace() - gamma.inner(M.J))
    return _require(solve(p, tols or PRECISE), "conversion distance dual")


def conversion_distance(N: ChannelChoi, M: ChannelChoi, free_set: FreeSet = FreeSet.MISC,
                        tols: Tolerances | None = None) -> ConversionResult:
    """Smallest half diamond distance between ``Theta[N]`` and ``M`` over free
    superchannels ``Theta``; primal and dual are solved separately."""
    free_set = FreeSet(free_set)
    pr = conversion_primal(N, M, free_set, tols)
    du = conversion_dual(N, M, free_set, tols)
    pv, dv = pr.primal_value, du.primal_value
    theta = SuperchannelChoi(N.sys, M.sys, pr.primal_blocks["theta"])
    blocks = {k: du.primal_blocks[k] for k in ("beta", "gamma", "tau", "zeta")}
    blocks["t"] = du.primal_blocks.get("t", np.zeros(0))
    return ConversionResult(float(max(0.0, pv)), theta, float(dv), blocks,
                            abs(pv - dv) / (1 + abs(pv)), pr.primal_blocks["omega"])


# exact one-shot cost

@dataclass(frozen=True, eq=False)
class CostResult:
    lr: float
    m: int
    cost_bits: float
    omega: SuperchannelChoi
    free_set: FreeSet
    feasible_at_m: bool
    infeasible_below: bool
    classical: ChannelChoi | None = None


def cost_superchannel(N: ChannelChoi, E: ChannelChoi, m: int) -> SuperchannelChoi:
    """Superchannel from an m-dimensional state to N's system that sends the
    plus state to N and every incoherent state to ``X = (mE - N)/(m-1)``."""
    if m < 2:
        raise ValueError("the construction needs m >= 2")
    X = (m * E.J - N.J) / (m - 1)
    J = np.kron(linalg.plus_state(m).T, N.J - X) + np.kron(np.eye(m), X)
    return SuperchannelChoi(SystemDim(1, m), N.sys, J)


def exact_one_shot_cost(N: ChannelChoi, free_set: FreeSet = FreeSet.MISC,
                        tols: Tolerances | None = None, eig_tol: float = 1e-8) -> CostResult:
    """Exact single-shot coherence cost ``log2 m`` with the superchannel that
    realizes N from an m-dimensional maximally coherent state.

    MISC uses the classical channel E attaining the log-robustness; DISC uses
    ``E = D o N o D`` and the dephasing log-robustness.
    """
    free_set = FreeSet(free_set)
    if free_set is FreeSet.MISC:
        res = log_robustness(N, tols)
        lr, t, t_low = res.value, res.primal_value, res.dual_value
        E = optimal_classical_channel(res, N.sys)
    else:
        lr = dmax_channels(N, dephased(N), tols)
        if not np.isfinite(lr):
            raise SolverError("dephasing log-robustness is infinite")
        lr = max(0.0, lr)
        t = t_low = 2.0 ** lr
        E = dephased(N)

    if lr <= 1e-9:
        return CostResult(lr, 1, 0.0, constant_superchannel(N, SystemDim(1, 1)), free_set, True, True, E)

    m = max(2, math.ceil(t - 1e-7))
    feasible = linalg.min_eig(m * E.J - N.J) >= -eig_tol
    if free_set is FreeSet.MISC:
        infeasible_below = m == 1 or t_low > m - 1 + 1e-9
    else:
        infeasible_below = linalg.min_eig((m - 1) * E.J - N.J) < -eig_tol
    omega = cost_superchannel(N, E, m)
    return CostResult(lr, m, float(np.log2(m)), omega, free_set, bool(feasible), bool(infeasible_below), E)


# distillation

class DistillError(SolverError):
    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True, eq=False)
class DistillResult:
    n: int
    bits: float
    rho: np.ndarray
    gamma: np.ndarray
    fidelity: float
    trace: list = field(repr=False)


def distill_fidelity(N: ChannelChoi, n: int, free_set: FreeSet, tols: Tolerances | None = None):
    """Largest ``Tr[gamma J_N^T]`` over the distillation constraints at ``n``.

    Returns ``(value, rho, gamma)``; n is feasible when
    ``value >= 1 - 1/n - eps``.
    """
    d0, d1 = N.sys.dims
    free_set = FreeSet(free_set)
    p = ConicProblem("distill")
    rho = p.hermitian("rho", d0)
    gamma = p.hermitian("gamma", d0 * d1)
    p.add_psd(rho, "rho_psd")
    p.add_eq(rho.trace(), 1.0, "rho_trace")
    p.add_eq(gamma.dephase(), name="gamma_offdiag")
    drho = rho.dephase().kron(right=np.eye(d1))
    if free_set is FreeSet.MISC:
        upper = rho.kron(right=np.eye(d1)) - drho / n
    else:
        upper = drho * ((n - 1) / n)
    p.add_psd(upper - gamma, "upper")
    p.add_psd(gamma + drho / n, "lower")
    p.maximize(gamma.inner(N.J.T))
    rep = _require(solve(p, tols or PRECISE), f"distillation at n={n}")
    return rep.primal_value, rep.primal_blocks["rho"], rep.primal_blocks["gamma"]


def one_shot_distill(N: ChannelChoi, eps: float, free_set: FreeSet = FreeSet.MISC,
                     tols: Tolerances | None = None, margin: float = 1e-7,
                     n_max: int | None = None) -> DistillResult:
    """Largest n such that a free superchannel turns N into an n-dimensional
    plus-state preparation with fidelity at least ``1 - eps``.

    Scans n upward and stops at the first infeasible n, after confirming that
    n+1 is infeasible too; a feasible n+1 raises :class:`DistillError`.
    """
    if not 0 <= eps < 1:
        raise ValueError(f"eps must lie in [0, 1), got {eps}")
    d0, d1 = N.sys.dims
    cap = n_max or math.ceil(d0 * d1 / (1 - eps)) + 1
    best = (1, np.eye(d0) / d0, np.zeros((d0 * d1, d0 * d1), dtype=complex), 1.0)
    trace = [(1, np.inf, True)]
    n = 2
    while n <= cap:
        val, rho, gamma = distill_fidelity(N, n, free_set, tols)
        slack = val - (1 - 1 / n - eps)
        ok = slack >= -margin
        trace.append((n, float(slack), bool(ok)))
        if ok:
            best = (n, rho, gamma, val + 1 / n)
            n += 1
            continue
        if n + 1 <= cap:
            val2, _, _ = distill_fidelity(N, n + 1, free_set, tols)
            slack2 = val2 - (1 - 1 / (n + 1) - eps)
            trace.append((n + 1, float(slack2), bool(slack2 >= -margin)))
            if slack2 >= -margin:
                raise DistillError(f"feasibility is not monotone: n={n} fails but n={n + 1} passes", trace)
        break
    n_best, rho, gamma, fid = best
    return DistillResult(n_best, float(np.log2(n_best)), rho, gamma, float(fid), trace)


def lemma_distillable_n(lam: float, d: int, eps: float) -> int:
    """Closed-form optimal n for the partial depolarizing and partial
    dephasing channels with parameter ``lam`` on dimension ``d``."""
    if eps < (d - 1) * (1 - lam) / d:
        x = (1 - lam) / (1 - lam - eps)
    else:
        x = (1 - lam + lam * d) / (1 - eps)
    # absorb rounding at exact integers
    return int(math.floor(x + 1e-9))


# twirling

@dataclass(frozen=True)
class TwirlDecomposition:
    p: float
    q: float
    r: float
    d: int

    def matrix(self) -> np.ndarray:
        d = self.d
        off = np.ones((d, d)) - np.eye(d)
        diag_ii = np.diag(np.eye(d).reshape(-1))
        out = self.p * np.diag(off.reshape(-1)) + (self.q - self.r) * diag_ii + self.r * linalg.phi_plus(d)
        return out.astype(complex)

    def eigenvalues(self) -> tuple:
        return (self.p, self.q - self.r, self.q - self.r + self.r * self.d)


def incoherent_twirl(sigma, d: int) -> TwirlDecomposition:
    """Project an operator on ``d x d`` onto the span of the off-diagonal
    populations, the diagonal populations and the ``|ii><jj|`` coherences."""
    s = np.asarray(sigma).reshape(d, d, d, d)
    pop = np.real(np.einsum("ijij->ij", s))
    q = float(np.mean(np.diag(pop)))
    if d < 2:
        return TwirlDecomposition(0.0, q, 0.0, d)
    mask = ~np.eye(d, dtype=bool)
    p = float(pop[mask].mean())
    coh = np.real(np.einsum("iijj->ij", s))
    r = float(coh[mask].mean())
    return TwirlDecomposition(p, q, r, d)
