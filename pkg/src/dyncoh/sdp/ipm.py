"""Homogeneous self-dual interior-point method for real LP/PSD cone programs.

Problem form::

    minimize    c'x
    subject to  G x + s = h,   A x = b,   s in K

where K is a product of nonnegative orthants ('l') and real symmetric PSD
cones ('s'). The dual is ``maximize -h'z - b'y  s.t.  G'z + A'y + c = 0,
z in K``. Nesterov-Todd scaling is kept in factored form, as in cvxopt's
``conelp``; the search direction is Mehrotra's predictor-corrector applied
to the homogeneous embedding, so infeasible problems terminate with a
certificate instead of diverging.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

STEP = 0.99
EXPON = 3


@dataclass
class Cone:
    kind: str            # 'l' or 's'
    G: np.ndarray        # (k, nx) for 'l'; (nx, n, n) for 's'
    h: np.ndarray        # (k,) for 'l'; (n, n) for 's'

    @property
    def degree(self) -> int:
        return self.h.shape[0]


@dataclass
class RawResult:
    status: str
    x: np.ndarray
    y: np.ndarray
    z: list
    s: list
    pcost: float
    dcost: float
    iterations: int
    pres: float = np.nan
    dres: float = np.nan
    info: dict = field(default_factory=dict)


# cone-wise helpers; every "cone vector" is a list of arrays, one per cone

def _gx(cones, x):
    out = []
    for c in cones:
        out.append(c.G @ x if c.kind == "l" else np.tensordot(x, c.G, axes=(0, 0)))
    return out


def _gtz(cones, z, nx):
    r = np.zeros(nx)
    for c, zi in zip(cones, z):
        r += c.G.T @ zi if c.kind == "l" else np.tensordot(c.G, zi, axes=([1, 2], [0, 1]))
    return r


def _dot(u, v):
    return float(sum(np.vdot(a, b).real for a, b in zip(u, v)))


def _norm(u):
    return float(np.sqrt(sum(np.vdot(a, a).real for a in u)))


def _sym(m):
    return (m + m.T) / 2


class _Scaling:
    """Nesterov-Todd scaling W with W z = W^{-T} s = lambda."""

    def __init__(self, cones):
        self.kinds = [c.kind for c in cones]
        self.d = []       # 'l': sqrt(s/z); 's': R
        self.rinv = []
        self.lam = []     # 'l': vector; 's': eigenvalue vector of diagonal lambda
        for c in cones:
            n = c.degree
            if c.kind == "l":
                self.d.append(np.ones(n))
                self.rinv.append(None)
            else:
                self.d.append(np.eye(n))
                self.rinv.append(np.eye(n))
            self.lam.append(np.ones(n))

    def w(self, u):
        """Apply W."""
        out = []
        for k, d, ui in zip(self.kinds, self.d, u):
            out.append(d * ui if k == "l" else d.T @ ui @ d)
        return out

    def winv(self, u):
        """Apply W^{-1}."""
        out = []
        for k, d, ri, ui in zip(self.kinds, self.d, self.rinv, u):
            out.append(ui / d if k == "l" else _sym(ri.T @ ui @ ri))
        return out

    def wt(self, u):
        """Apply W^T."""
        out = []
        for k, d, ui in zip(self.kinds, self.d, u):
            out.append(d * ui if k == "l" else d @ ui @ d.T)
        return out

    def lam_mat(self):
        return [l if k == "l" else np.diag(l) for k, l in zip(self.kinds, self.lam)]

    def lam_solve(self, r):
        """Solve lambda o X = r for the Jordan product with diagonal lambda."""
        out = []
        for k, l, ri in zip(self.kinds, self.lam, r):
            out.append(ri / l if k == "l" else 2 * ri / (l[:, None] + l[None, :]))
        return out

    def max_step(self, ds, dz):
        """Largest alpha with lambda + alpha*ds, lambda + alpha*dz in the cone."""
        amax = np.inf
        for k, l, a, b in zip(self.kinds, self.lam, ds, dz):
            for v in (a, b):
                if k == "l":
                    m = np.min(v / l) if v.size else 0.0
                else:
                    sl = 1 / np.sqrt(l)
                    m = np.linalg.eigvalsh(_sym(sl[:, None] * v * sl[None, :]))[0]
                if m < 0:
                    amax = min(amax, -1.0 / m)
        return amax

    def update(self, s, z, ds_t, dz_t, alpha):
        """Move along scaled directions and recompute the scaling point."""
        new_s, new_z = [], []
        for i, k in enumerate(self.kinds):
            l = self.lam[i]
            if k == "l":
                d = self.d[i]
                si = s[i] + alpha * d * ds_t[i]
                zi = z[i] + alpha * dz_t[i] / d
                si = np.maximum(si, 1e-300)
                zi = np.maximum(zi, 1e-300)
                self.d[i] = np.sqrt(si / zi)
                self.lam[i] = np.sqrt(si * zi)
                new_s.append(si)
                new_z.append(zi)
            else:
                st = _sym(np.diag(l) + alpha * ds_t[i])
                zt = _sym(np.diag(l) + alpha * dz_t[i])
                ls = _chol(st)
                lz = _chol(zt)
                u, lam, vt = np.linalg.svd(lz.T @ ls)
                lam = np.maximum(lam, 1e-300)
                # s and z come from the old factors; rebuilding them from the
                # new ones loses accuracy when the scaling is ill-conditioned
                new_s.append(_sym(self.d[i] @ st @ self.d[i].T))
                new_z.append(_sym(self.rinv[i].T @ zt @ self.rinv[i]))
                r = self.d[i] @ ls @ vt.T / np.sqrt(lam)[None, :]
                self.d[i] = r
                self.rinv[i] = np.linalg.inv(r)
                self.lam[i] = lam
        return new_s, new_z


def _chol(m):
    try:
        return np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(m)
        w = np.maximum(w, 1e-300)
        q, r = np.linalg.qr((v * np.sqrt(w)).T)
        return (r.T * np.sign(np.diag(r))[None, :])


def _jordan(kinds, u, v):
    out = []
    for k, a, b in zip(kinds, u, v):
        out.append(a * b if k == "l" else (a @ b + b @ a) / 2)
    return out


class _EqualityBasis:
    """Orthogonal split of x-space into range(A') and null(A)."""

    def __init__(self, A, nx):
        m = A.shape[0]
        if m:
            q, r = np.linalg.qr(A.T, mode="complete")
            self.qa = q[:, :m]
            self.ra = r[:m]
            self.null = q[:, m:]
        else:
            self.qa = np.zeros((nx, 0))
            self.ra = np.zeros((0, 0))
            self.null = np.eye(nx)

    def particular(self, r2):
        """Minimum-norm solution of A x = r2."""
        if not r2.size:
            return np.zeros(self.qa.shape[0])
        return self.qa @ sla.solve_triangular(self.ra, r2, trans="T")

    def multiplier(self, v):
        """Solve A' y = v for v in the range of A'."""
        if not v.size or not self.ra.size:
            return np.zeros(self.ra.shape[0])
        return sla.solve_triangular(self.ra, self.qa.T @ v)


class _KKT:
    """Newton-system solver for one scaling.

    With ``M = W^{-T} G`` the reduced system is ``M'M dx + A'dy = r``,
    ``A dx = r2``. It is solved as a least-squares problem on the null space
    of A using a QR factorization of ``M N``, which keeps the conditioning
    at kappa(M N) rather than its square.
    """

    def __init__(self, cones, A, scaling, nx, eqb):
        self.cones = cones
        self.A = A
        self.sc = scaling
        self.nx = nx
        self.eqb = eqb
        blocks = []
        for c, k, d, ri in zip(cones, scaling.kinds, scaling.d, scaling.rinv):
            if k == "l":
                blocks.append(c.G / d[:, None])
            else:
                blocks.append(np.matmul(np.matmul(ri, c.G), ri.T).reshape(nx, -1).T)
        self.M = np.concatenate(blocks, axis=0) if blocks else np.zeros((0, nx))
        B = self.M @ eqb.null
        self.q, self.r = np.linalg.qr(B, mode="reduced")
        if B.shape[1] and np.abs(np.diag(self.r)).min() <= 1e-300:
            raise np.linalg.LinAlgError("Newton system is singular")

    def scaled(self, u):
        """Flatten W^{-T} u into the row layout of M."""
        out = []
        for k, d, ri, ui in zip(self.sc.kinds, self.sc.d, self.sc.rinv, u):
            out.append(ui / d if k == "l" else (ri @ ui @ ri.T).reshape(-1))
        return np.concatenate(out) if out else np.zeros(0)

    def _blocks(self, v):
        out, pos = [], 0
        for k, d in zip(self.sc.kinds, self.sc.d):
            n = d.shape[0]
            if k == "l":
                out.append(v[pos:pos + n].copy())
                pos += n
            else:
                out.append(_sym(v[pos:pos + n * n].reshape(n, n)))
                pos += n * n
        return out

    def _once(self, r1, r2, v):
        xp = self.eqb.particular(r2)
        w = v - self.M @ xp
        t = self.eqb.null.T @ r1
        if t.size:
            t = sla.solve_triangular(self.r, t, trans="T")
        xi = sla.solve_triangular(self.r, t + self.q.T @ w) if self.r.size else np.zeros(0)
        dx = xp + self.eqb.null @ xi
        res = v - self.M @ dx
        dy = self.eqb.multiplier(r1 + self.M.T @ res)
        return dx, dy, -res

    def solve(self, r1, r2, v, refine: int = 3):
        """Solve [[0,A',G'],[A,0,0],[G,0,-W'W]] [dx;dy;dz] = [r1;r2;r3] with v = W^{-T} r3.

        Returns dx, dy, dz and the scaled ``W dz``; the residual is measured
        in scaled coordinates, which stay well conditioned near the optimum.
        """
        dx, dy, wz = self._once(r1, r2, v)
        for _ in range(refine):
            e1 = r1 - (self.A.T @ dy + self.M.T @ wz)
            e2 = r2 - self.A @ dx
            e3 = v - (self.M @ dx - wz)
            err = max(np.abs(e1).max(initial=0), np.abs(e2).max(initial=0), np.abs(e3).max(initial=0))
            if err < 1e-15:
                break
            a, b, c = self._once(e1, e2, e3)
            dx, dy, wz = dx + a, dy + b, wz + c
        wz = self._blocks(wz)
        return dx, dy, self.sc.winv(wz), wz


def solve(c, A, b, cones, gap_tol=1e-7, feas_tol=1e-8, max_iter=200, verbose=False) -> RawResult:
    """Run the homogeneous self-dual method; see module docstring for the form."""
    c = np.asarray(c, float)
    nx = c.size
    A = np.asarray(A, float).reshape(-1, nx)
    b = np.asarray(b, float).reshape(-1)
    kinds = [k.kind for k in cones]
    h = [k.h for k in cones]
    nu = sum(k.degree for k in cones)

    eqb = _EqualityBasis(A, nx)
    resx0 = max(1.0, np.linalg.norm(c))
    resy0 = max(1.0, np.linalg.norm(b))
    resz0 = max(1.0, _norm(h))

    x = np.zeros(nx)
    y = np.zeros(A.shape[0])
    sc = _Scaling(cones)
    s = [np.ones(k.degree) if k.kind == "l" else np.eye(k.degree) for k in cones]
    z = [si.copy() for si in s]
    tau, kappa = 1.0, 1.0

    best = None
    stall = 0
    ratio_low = tau / kappa
    for it in range(max_iter + 1):
        gx = _gx(cones, x)
        rx = A.T @ y + _gtz(cones, z, nx) + c * tau
        ry = A @ x - b * tau
        rz = [g + si - hi * tau for g, si, hi in zip(gx, s, h)]
        cx, by, hz = c @ x, b @ y, _dot(h, z)
        rt = cx + by + hz + kappa
        sz = _dot(s, z)
        mu = (sz + tau * kappa) / (nu + 1)

        pcost, dcost = cx / tau, -(by + hz) / tau
        pres = max(np.linalg.norm(ry) / resy0, _norm(rz) / resz0) / tau
        dres = np.linalg.norm(rx) / resx0 / tau
        relgap = abs(pcost - dcost) / (1 + abs(pcost))
        compl = sz / tau**2 / (1 + abs(pcost))

        res = RawResult("max_iter", x / tau, y / tau, [zi / tau for zi in z], [si / tau for si in s],
                        pcost, dcost, it, pres, dres)
        if verbose:
            print(f"{it:3d} p={pcost: .9e} d={dcost: .9e} pres={pres:.2e} dres={dres:.2e} gap={relgap:.2e} "
                  f"tau={tau:.2e} kappa={kappa:.2e}")
        merit = max(pres, dres, relgap, compl)
        if best is None or merit < best[0]:
            best = (merit, res)
            stall = 0
        elif tau / kappa < 0.5 * ratio_low:
            # heading for an infeasibility certificate
            ratio_low = tau / kappa
            stall = 0
        else:
            stall += 1
            if stall >= 8 or merit > 1e4 * best[0]:
                break
        if pres <= feas_tol and dres <= feas_tol and relgap <= gap_tol and compl <= gap_tol:
            res.status = "optimal"
            return res
        if hz + by < 0:
            pinf = np.linalg.norm(rx - c * tau) / resx0 / -(hz + by)
            if pinf <= feas_tol:
                scale = -1.0 / (hz + by)
                return RawResult("primal_infeasible", x * 0, y * scale, [zi * scale for zi in z],
                                 [si * 0 for si in s], np.inf, np.inf, it, info={"pinfres": pinf})
        if cx < 0:
            ax = A @ x
            dinf = max(np.linalg.norm(ax) / resy0, _norm([g + si for g, si in zip(gx, s)]) / resz0) / -cx
            if dinf <= feas_tol:
                scale = -1.0 / cx
                return RawResult("dual_infeasible", x * scale, y * 0, [zi * 0 for zi in z],
                                 [si * scale for si in s], -np.inf, -np.inf, it, info={"dinfres": dinf})
        if it == max_iter:
            break

        try:
            kkt = _KKT(cones, A, sc, nx, eqb)
        except np.linalg.LinAlgError:
            break
        x1, y1, z1, wz1 = kkt.solve(c, -b, -kkt.scaled(h))
        denom = c @ x1 + b @ y1 + _dot(h, z1) + kappa / tau
        lam = sc.lam_mat()
        lam_sq = _jordan(kinds, lam, lam)
        e = [np.ones(k.degree) if k.kind == "l" else np.eye(k.degree) for k in cones]

        ds_a = dz_a = None
        dtau_a = dkappa_a = 0.0
        for phase in (0, 1):
            if phase == 0:
                sigma, eta = 0.0, 1.0
                rc = [-l2 for l2 in lam_sq]
                rk = -tau * kappa
            else:
                eta = 1.0 - sigma
                cross = _jordan(kinds, ds_a, dz_a)
                rc = [-l2 + sigma * mu * ei - cr for l2, ei, cr in zip(lam_sq, e, cross)]
                rk = -tau * kappa + sigma * mu - dtau_a * dkappa_a
            lr = sc.lam_solve(rc)
            v = -eta * kkt.scaled(rz) - np.concatenate([m.reshape(-1) for m in lr])
            x2, y2, z2, wz2 = kkt.solve(-eta * rx, -eta * ry, v)
            r4 = -eta * rt - rk / tau
            dtau = (c @ x2 + b @ y2 + _dot(h, z2) - r4) / denom
            dx = x2 - dtau * x1
            dy = y2 - dtau * y1
            dkappa = (rk - kappa * dtau) / tau
            dz_t = [a - dtau * b_ for a, b_ in zip(wz2, wz1)]
            ds_t = [a - b_ for a, b_ in zip(lr, dz_t)]

            amax = sc.max_step(ds_t, dz_t)
            if dtau < 0:
                amax = min(amax, -tau / dtau)
            if dkappa < 0:
                amax = min(amax, -kappa / dkappa)
            if phase == 0:
                alpha = min(1.0, amax)
                sigma = (1.0 - alpha) ** EXPON
                ds_a, dz_a, dtau_a, dkappa_a = ds_t, dz_t, dtau, dkappa
            else:
                alpha = min(1.0, STEP * amax)

        x = x + alpha * dx
        y = y + alpha * dy
        tau = tau + alpha * dtau
        kappa = kappa + alpha * dkappa
        s, z = sc.update(s, z, ds_t, dz_t, alpha)
        if not (np.isfinite(tau) and tau > 0 and np.all(np.isfinite(x))):
            break

    res = best[1]
    res.status = "max_iter"
    return res
