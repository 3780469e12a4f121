"""Adapter that runs the presolved cone program through cvxopt's ``conelp``.

cvxopt is optional; it is imported on first use.
"""

import numpy as np

from .ipm import RawResult

_STATUS = {"optimal": "optimal", "primal infeasible": "primal_infeasible",
           "dual infeasible": "dual_infeasible"}


def solve(c, A, b, cones, gap_tol=1e-7, feas_tol=1e-8, max_iter=200) -> RawResult:
    import cvxopt
    from cvxopt import solvers

    c = np.asarray(c, float)
    nx = c.size
    order = [i for i, k in enumerate(cones) if k.kind == "l"] + [i for i, k in enumerate(cones) if k.kind == "s"]
    rows, hs, lsize, ssizes = [], [], 0, []
    for i in order:
        k = cones[i]
        if k.kind == "l":
            rows.append(k.G)
            hs.append(k.h)
            lsize += k.degree
        else:
            n = k.degree
            # column-major vectorization, as conelp expects
            rows.append(np.transpose(k.G, (0, 2, 1)).reshape(nx, n * n).T)
            hs.append(k.h.T.reshape(-1))
            ssizes.append(n)
    G = np.concatenate(rows, axis=0) if rows else np.zeros((0, nx))
    h = np.concatenate(hs) if hs else np.zeros(0)
    opts = {"show_progress": False, "abstol": gap_tol, "reltol": gap_tol,
            "feastol": feas_tol, "maxiters": max_iter}
    kw = {}
    if A.shape[0]:
        kw = {"A": cvxopt.matrix(np.asarray(A, float)), "b": cvxopt.matrix(np.asarray(b, float))}
    sol = solvers.conelp(cvxopt.matrix(c), cvxopt.matrix(G), cvxopt.matrix(h),
                         {"l": lsize, "q": [], "s": ssizes}, options=opts, **kw)
    status = _STATUS.get(sol["status"], "max_iter")
    x = np.zeros(nx) if sol["x"] is None else np.array(sol["x"]).ravel()
    y = np.zeros(A.shape[0]) if sol["y"] is None else np.array(sol["y"]).ravel()
    zflat = np.zeros(G.shape[0]) if sol["z"] is None else np.array(sol["z"]).ravel()
    sflat = np.zeros(G.shape[0]) if sol["s"] is None else np.array(sol["s"]).ravel()
    z, s = [None] * len(cones), [None] * len(cones)
    pos = 0
    for i in order:
        k = cones[i]
        n = k.degree
        size = n if k.kind == "l" else n * n
        zi, si = zflat[pos:pos + size], sflat[pos:pos + size]
        if k.kind == "s":
            zi, si = zi.reshape(n, n).T, si.reshape(n, n).T
        z[i], s[i] = zi, si
        pos += size
    pcost = sol.get("primal objective") or np.nan
    dcost = sol.get("dual objective") or np.nan
    if status == "primal_infeasible":
        pcost = dcost = np.inf
    elif status == "dual_infeasible":
        pcost = dcost = -np.inf
    return RawResult(status, x, y, z, s, float(pcost), float(dcost), int(sol.get("iterations", 0)),
                     float(sol.get("primal infeasibility") or np.nan), float(sol.get("dual infeasibility") or np.nan))
