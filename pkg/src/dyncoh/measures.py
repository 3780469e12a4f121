"""Coherence measures for channels: log-robustness and its relatives, and the
complete family of monotones G_P. All values are in bits."""

from dataclasses import dataclass

import numpy as np

from . import linalg
from .channels import PRECISE, ChannelChoi, SystemDim, dephased, dmax_channels
from .sdp import ConicProblem, SolverError, Tolerances, solve
from .superchannels import FreeSet, SuperchannelChoi, add_superchannel_constraints


@dataclass(frozen=True, eq=False)
class MeasureResult:
    value: float
    primal_witness: np.ndarray | None
    dual_witness: np.ndarray | None
    gap: float
    primal_value: float = np.nan
    dual_value: float = np.nan


def _require(rep, what):
    if not rep.optimal:
        raise SolverError(f"{what}: solver status {rep.status}")
    return rep


def robustness_primal(N: ChannelChoi, tols: Tolerances | None = None):
    """``min Tr[w]/d_in`` over diagonal ``w >= J_N`` whose input marginal is flat."""
    d0, d1 = N.sys.dims
    p = ConicProblem("lr_primal")
    w = p.diagonal("omega", d0 * d1)
    scale = w.trace() / d0
    p.add_psd(w, "omega_pos")
    p.add_ge(w, N.J, "dominates")
    p.add_eq(w.ptrace((d0, d1), [0]) - scale.kron(right=np.eye(d0)), name="flat_marginal")
    p.minimize(scale)
    return _require(solve(p, tols or PRECISE), "log-robustness primal")


def robustness_dual(N: ChannelChoi, tols: Tolerances | None = None):
    """``max Tr[eta J_N]`` over ``eta >= 0`` with ``D(eta) = D(eta_in) x I/d_out``
    and ``D(eta_out) = I``."""
    d0, d1 = N.sys.dims
    dims = (d0, d1)
    p = ConicProblem("lr_dual")
    eta = p.hermitian("eta", d0 * d1)
    p.add_psd(eta, "eta_psd")
    marg = eta.ptrace(dims, [0]).dephase().kron(right=np.eye(d1) / d1)
    p.add_eq(eta.dephase() - marg, name="flat_diagonal")
    p.add_eq(eta.ptrace(dims, [1]).dephase(), np.eye(d1), "output_diagonal")
    p.maximize(eta.inner(N.J))
    return _require(solve(p, tols or PRECISE), "log-robustness dual")


def log_robustness(N: ChannelChoi, tols: Tolerances | None = None) -> MeasureResult:
    """Log-robustness of coherence, with primal witness ``omega`` (a scaled
    classical Choi matrix) and dual witness ``eta``."""
    pr = robustness_primal(N, tols)
    du = robustness_dual(N, tols)
    pv, dv = pr.primal_value, du.primal_value
    omega = np.real(pr.primal_blocks["omega"])
    return MeasureResult(float(max(0.0, np.log2(pv))), omega, du.primal_blocks["eta"],
                         abs(pv - dv) / (1 + abs(pv)), pv, dv)


def optimal_classical_channel(result: MeasureResult, sys: SystemDim) -> ChannelChoi:
    """Classical channel ``omega / 2^LR`` read off the primal witness, with
    each column renormalized so it is exactly trace preserving."""
    w = np.clip(np.real(np.diag(result.primal_witness)), 0, None).reshape(sys.d_in, sys.d_out)
    w = w / w.sum(axis=1, keepdims=True)
    return ChannelChoi(sys, np.diag(w.reshape(-1)).astype(complex))


def dephasing_log_robustness(N: ChannelChoi, tols: Tolerances | None = None) -> float:
    """``D_max(N || D o N o D)``; ``inf`` on a support violation."""
    return dmax_channels(N, dephased(N), tols)


def smoothed_log_robustness(N: ChannelChoi, eps: float, tols: Tolerances | None = None) -> float:
    """Smallest log-robustness over channels within diamond distance ``eps``."""
    if not 0 <= eps < 1:
        raise ValueError(f"eps must lie in [0, 1), got {eps}")
    if eps == 0:
        return log_robustness(N, tols).value
    d0, d1 = N.sys.dims
    dims = (d0, d1)
    n = d0 * d1
    p = ConicProblem("smoothed_lr")
    w = p.diagonal("omega", n)
    Jp = p.hermitian("J_near", n)
    Z = p.hermitian("Z", n)
    scale = w.trace() / d0
    p.add_ge(w, Jp, "dominates")
    p.add_eq(w.ptrace(dims, [0]) - scale.kron(right=np.eye(d0)), name="flat_marginal")
    p.add_psd(Jp, "near_cp")
    p.add_eq(Jp.ptrace(dims, [0]), np.eye(d0), "near_tp")
    p.add_psd(Z, "Z_psd")
    p.add_ge(Z, Jp - N.J, "Z_dom")
    p.add_psd(eps * np.eye(d0) - Z.ptrace(dims, [0]), "ball")
    p.minimize(scale)
    rep = _require(solve(p, tols or PRECISE), "smoothed log-robustness")
    return float(max(0.0, np.log2(rep.primal_value)))


@dataclass(frozen=True)
class MonotoneProbe:
    P: ChannelChoi
    free_set: FreeSet = FreeSet.MISC


@dataclass(frozen=True, eq=False)
class MonotoneResult:
    value: float
    first_term: float
    second_term: float
    theta: SuperchannelChoi
    gap: float


def best_classical_overlap(P: ChannelChoi) -> float:
    """``max Tr[J_P J_M]`` over classical M: for each input pick the best output."""
    diag = np.real(np.diag(P.J)).reshape(P.d_in, P.d_out)
    return float(diag.max(axis=1).sum())


def monotone_G(probe: MonotoneProbe, N: ChannelChoi, tols: Tolerances | None = None) -> MonotoneResult:
    """``max_Theta Tr[J_Theta (J_N^T x J_P)] - max_M Tr[J_P J_M]`` with Theta
    ranging over free superchannels from N's system to the probe's system."""
    sys_in, sys_out = N.sys, probe.P.sys
    n = sys_in.size * sys_out.size
    p = ConicProblem("monotone_G")
    alpha = p.hermitian("theta", n)
    add_superchannel_constraints(p, alpha, sys_in, sys_out, FreeSet(probe.free_set), "theta")
    p.maximize(alpha.inner(np.kron(N.J.T, probe.P.J)))
    rep = _require(solve(p, tols or PRECISE), "monotone G")
    first = rep.primal_value
    second = best_classical_overlap(probe.P)
    theta = SuperchannelChoi(sys_in, sys_out, rep.primal_blocks["theta"])
    return MonotoneResult(first - second, first, second, theta, rep.gap)
