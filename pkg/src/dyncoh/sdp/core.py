"""Compile a :class:`ConicProblem` to real cone form, presolve, solve, report."""

from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from . import ipm
from .model import ConicProblem, hvec, hunvec


class SolverError(RuntimeError):
    pass


class IllPosedProblem(SolverError):
    pass


@dataclass(frozen=True)
class Tolerances:
    gap_tol: float = 1e-7
    feas_tol: float = 1e-8
    max_iter: int = 200


@dataclass
class SolveReport:
    status: str
    primal_value: float
    dual_value: float
    gap: float
    primal_blocks: dict
    dual_blocks: dict
    iterations: int
    residuals: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"

    @property
    def value(self) -> float:
        return self.primal_value


def _cvxopt(*args, **kw):
    from . import cvxopt_backend
    return cvxopt_backend.solve(*args, **kw)


_BACKENDS = {"builtin": ipm.solve, "cvxopt": _cvxopt}


def register_backend(name: str, fn) -> None:
    """Install an external cone solver.

    ``fn(c, A, b, cones, gap_tol=, feas_tol=, max_iter=)`` receives the
    presolved real problem (see :mod:`dyncoh.sdp.ipm` for the form and the
    :class:`~dyncoh.sdp.ipm.Cone` layout) and returns an
    :class:`~dyncoh.sdp.ipm.RawResult`.
    """
    _BACKENDS[name] = fn


def backends() -> list:
    return sorted(_BACKENDS)


_default_backend = ["builtin"]


@contextmanager
def use_backend(name: str):
    """Route every :func:`solve` call without an explicit backend to ``name``.

    Process-wide; not meant for use from several threads at once.
    """
    if name not in _BACKENDS:
        raise KeyError(f"unknown backend {name!r}; available: {backends()}")
    prev = _default_backend[0]
    _default_backend[0] = name
    try:
        yield
    finally:
        _default_backend[0] = prev


def _herm_check(stack, what):
    asym = np.abs(stack - np.conj(np.swapaxes(stack, -1, -2))).max(initial=0.0)
    scale = np.abs(stack).max(initial=0.0)
    if asym > 1e-10 * max(scale, 1.0):
        raise ValueError(f"{what} is not Hermitian-valued (asymmetry {asym:.3g})")
    return (stack + np.conj(np.swapaxes(stack, -1, -2))) / 2


def _embed(m):
    """Real symmetric image [[Re, -Im], [Im, Re]] of Hermitian matrices."""
    re, im = m.real, m.imag
    top = np.concatenate([re, -im], axis=-1)
    bot = np.concatenate([im, re], axis=-1)
    return np.concatenate([top, bot], axis=-2)


class _Compiled:
    pass


def _full_stack(expr, problem, nx):
    m = expr.dim
    out = np.zeros((nx, m, m), dtype=complex)
    for v, c in expr.terms.items():
        if v not in problem.variables:
            raise ValueError(f"expression uses variable {v.name!r} from another problem")
        out[v.offset:v.offset + v.size] += c
    return out, expr.const


def compile_problem(problem: ConicProblem) -> _Compiled:
    if problem.objective is None:
        raise ValueError("problem has no objective")
    nx = 0
    for v in problem.variables:
        v.offset = nx
        nx += v.size
    out = _Compiled()
    out.nx = nx
    oc, o0 = _full_stack(problem.objective, problem, nx)
    if np.abs(oc.imag).max(initial=0) > 1e-10 * max(1.0, np.abs(oc).max(initial=0)):
        raise ValueError("objective is not real-valued")
    sign = 1.0 if problem.sense == "min" else -1.0
    out.c = sign * oc[:, 0, 0].real
    out.c0 = float(o0.real[0, 0])
    out.sign = sign

    rows, rhs, eq_info = [], [], []
    cones, cone_info = [], []
    for con in problem.constraints:
        C, C0 = _full_stack(con.expr, problem, nx)
        C = _herm_check(C, f"constraint {con.name!r}")
        C0 = _herm_check(C0, f"constraint {con.name!r}")
        m = con.expr.dim
        if con.kind == "eq":
            r = hvec(C).T              # (m*m, nx)
            rows.append(r)
            rhs.append(-hvec(C0))
            eq_info.append((con.name, m, r.shape[0]))
            continue
        if con.kind == "orth":
            hm = hvec(_herm_check(con.mats, f"matrices of {con.name!r}"))
            rows.append(hm @ hvec(C).T)
            rhs.append(-hm @ hvec(C0))
            eq_info.append((con.name, 0, hm.shape[0]))
            continue
        active = (np.abs(C).max(axis=(0, 2), initial=0) > 0) | (np.abs(C0).max(axis=1, initial=0) > 0)
        keep = np.flatnonzero(active)
        if keep.size == 0:
            continue
        C = C[:, keep][:, :, keep]
        C0 = C0[keep][:, keep]
        k = keep.size
        offd = ~np.eye(k, dtype=bool)
        if not np.any(np.abs(C[:, offd]) > 0) and not np.any(np.abs(C0[offd]) > 0):
            idx = np.arange(k)
            G = -C[:, idx, idx].real.T
            h = C0[idx, idx].real
            cones.append(ipm.Cone("l", np.ascontiguousarray(G), h))
            cone_info.append((con.name, m, keep, "l"))
        elif np.abs(C.imag).max(initial=0) == 0 and np.abs(C0.imag).max(initial=0) == 0:
            cones.append(ipm.Cone("s", -C.real, C0.real))
            cone_info.append((con.name, m, keep, "r"))
        else:
            cones.append(ipm.Cone("s", -_embed(C), _embed(C0)))
            cone_info.append((con.name, m, keep, "c"))
    out.A = np.concatenate(rows, axis=0) if rows else np.zeros((0, nx))
    out.b = np.concatenate(rhs) if rhs else np.zeros(0)
    out.eq_info = eq_info
    out.cones = cones
    out.cone_info = cone_info
    return out


def _presolve(cp: _Compiled):
    """Orthonormalize equality rows, check consistency, drop free directions."""
    A, b = cp.A, cp.b
    nz = np.abs(A).max(axis=1, initial=0) > 0
    if np.any(np.abs(b[~nz]) > 1e-9 * max(1.0, np.abs(b).max(initial=0))):
        raise IllPosedProblem("empty feasible set: an equality reads 0 = nonzero")
    An, bn = A[nz], b[nz]
    if An.shape[0]:
        U, S, Vt = np.linalg.svd(An, full_matrices=False)
        r = int(np.sum(S > 1e-11 * S[0]))
        U, S, Vt = U[:, :r], S[:r], Vt[:r]
        proj = U.T @ bn
        miss = np.linalg.norm(bn - U @ proj)
        if miss > 1e-9 * max(1.0, np.linalg.norm(bn)):
            raise IllPosedProblem(f"empty feasible set: inconsistent equalities (residual {miss:.3g})")
        A2, b2 = Vt, proj / S
        ymap = np.zeros((A.shape[0], r))
        ymap[nz] = U / S
    else:
        A2, b2 = np.zeros((0, cp.nx)), np.zeros(0)
        ymap = np.zeros((A.shape[0], 0))

    blocks = [A2]
    for c in cp.cones:
        blocks.append(c.G if c.kind == "l" else c.G.reshape(cp.nx, -1).T)
    M = np.concatenate(blocks, axis=0)
    _, S, Vt = np.linalg.svd(M, full_matrices=False)
    r = int(np.sum(S > 1e-11 * max(S[0], 1e-300))) if S.size else 0
    V = Vt[:r].T
    cperp = cp.c - V @ (V.T @ cp.c)
    if np.linalg.norm(cperp) > 1e-9 * max(1.0, np.linalg.norm(cp.c)):
        raise IllPosedProblem("unbounded block: objective decreases along a direction no constraint sees")
    cones = []
    for c in cp.cones:
        if c.kind == "l":
            cones.append(ipm.Cone("l", c.G @ V, c.h))
        else:
            cones.append(ipm.Cone("s", np.tensordot(V, c.G, axes=(0, 0)), c.h))
    return V, V.T @ cp.c, A2 @ V, b2, cones, ymap


def _unpack_z(zi, m, keep, mode):
    k = keep.size
    if mode == "l":
        small = np.diag(zi).astype(complex)
    elif mode == "r":
        small = zi.astype(complex)
    else:
        z11, z12, z21, z22 = zi[:k, :k], zi[:k, k:], zi[k:, :k], zi[k:, k:]
        small = (z11 + z22) + 1j * (z21 - z12)
    small = (small + small.conj().T) / 2
    full = np.zeros((m, m), dtype=complex)
    full[np.ix_(keep, keep)] = small
    return full


def _block_value(v, coords):
    if v.kind == "scalar":
        return float(coords[0])
    if v.kind == "vector":
        return coords.copy()
    return np.tensordot(coords, v.basis, axes=(0, 0))


def solve(problem: ConicProblem, tols: Tolerances | None = None, backend: str | None = None) -> SolveReport:
    """Solve ``problem`` and return primal and dual blocks with a certified gap.

    Dual blocks are keyed by constraint name: a PSD constraint ``F(x) >= 0``
    gets its multiplier ``Z >= 0``; an equality gets a Hermitian multiplier
    ``Y``. Both refer to the problem written as a minimization
    (``c'x + <Y, E(x)> - <Z, F(x)>``). On infeasibility the blocks hold the
    certificate instead.
    """
    tols = tols or Tolerances()
    cp = compile_problem(problem)
    V, c, A, b, cones, ymap = _presolve(cp)
    fn = _BACKENDS[backend or _default_backend[0]]
    raw = fn(c, A, b, cones, gap_tol=tols.gap_tol, feas_tol=tols.feas_tol, max_iter=tols.max_iter)

    x = V @ raw.x
    y = ymap @ raw.y if raw.y.size else np.zeros(cp.A.shape[0])
    primal = {}
    for v in problem.variables:
        primal[v.name] = _block_value(v, x[v.offset:v.offset + v.size])
    dual = {}
    pos = 0
    for name, m, nrows in cp.eq_info:
        seg = y[pos:pos + nrows]
        pos += nrows
        if m == 0:
            dual[name] = seg.copy()
        else:
            dual[name] = float(seg[0]) if m == 1 else hunvec(seg, m)
    for (name, m, keep, mode), zi in zip(cp.cone_info, raw.z):
        Z = _unpack_z(zi, m, keep, mode)
        dual[name] = float(Z.real[0, 0]) if m == 1 else Z

    if raw.status == "primal_infeasible":
        pv = dv = np.inf * cp.sign
        gap = np.nan
    elif raw.status == "dual_infeasible":
        pv = dv = -np.inf * cp.sign
        gap = np.nan
    else:
        pv = cp.sign * raw.pcost + cp.c0
        dv = cp.sign * raw.dcost + cp.c0
        gap = abs(pv - dv) / (1 + abs(pv))

    resid = {}
    if raw.status in ("optimal", "max_iter"):
        for con in problem.constraints:
            val = con.expr.value(primal_raw(problem, x))
            if con.kind == "orth":
                resid[con.name] = float(np.abs(np.einsum("nij,ji->n", con.mats, val)).max(initial=0.0))
            elif con.kind == "eq":
                resid[con.name] = float(np.abs(val).max())
            else:
                resid[con.name] = float(max(0.0, -np.linalg.eigvalsh((val + val.conj().T) / 2)[0]))
    return SolveReport(raw.status, float(pv), float(dv), float(gap), primal, dual, raw.iterations, resid)


def primal_raw(problem, x):
    return {v.name: x[v.offset:v.offset + v.size] for v in problem.variables}
