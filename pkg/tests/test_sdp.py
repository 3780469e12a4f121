import numpy as np
import pytest

from dyncoh import channels as ch
from dyncoh import linalg
from dyncoh.measures import robustness_dual, robustness_primal
from dyncoh.sdp import (ConicProblem, IllPosedProblem, Tolerances, backends, register_backend, solve,
                        use_backend)
from dyncoh.sdp import ipm

from conftest import random_herm


def min_eig_problem(C):
    n = C.shape[0]
    p = ConicProblem("min_eig")
    X = p.hermitian("X", n)
    p.add_psd(X, "X_psd")
    p.add_eq(X.trace(), 1.0, "unit_trace")
    p.minimize(X.inner(C))
    return p


def test_scalar_eigenvalue_bound():
    p = ConicProblem()
    t = p.scalar("t")
    p.add_psd(t.kron(right=np.eye(2)) - np.diag([1.0, 3.0]), "bound")
    p.minimize(t)
    rep = solve(p)
    assert rep.optimal
    assert np.isclose(rep.primal_value, 3, atol=1e-7)


def test_trace_above_phi_plus():
    p = ConicProblem()
    X = p.hermitian("X", 4)
    p.add_ge(X, linalg.phi_plus(2), "dom")
    p.minimize(X.trace())
    rep = solve(p)
    assert rep.optimal
    assert np.isclose(rep.primal_value, 2, atol=1e-7)
    # the multiplier of X >= phi+ is the identity: Tr[Z phi+] = 2
    Z = rep.dual_blocks["dom"]
    assert np.allclose(Z, np.eye(4), atol=1e-6)


def test_log_robustness_program_for_identity():
    pr = robustness_primal(ch.identity(2))
    du = robustness_dual(ch.identity(2))
    assert np.isclose(pr.primal_value, 2, atol=1e-7)
    assert abs(pr.primal_value - du.primal_value) / 3 <= 1e-7
    # analytic witness: 2 J_D >= phi+
    assert linalg.min_eig(2 * linalg.dephase(linalg.phi_plus(2)) - linalg.phi_plus(2)) >= -1e-12


def test_complex_data_matches_eigenvalue(rng):
    C = random_herm(rng, 4)
    rep = solve(min_eig_problem(C))
    assert rep.optimal
    assert np.isclose(rep.primal_value, np.linalg.eigvalsh(C)[0], atol=1e-7)


def test_real_embedding_self_test(rng):
    C = random_herm(rng, 3)
    emb = np.block([[C.real, -C.imag], [C.imag, C.real]])
    sym = []
    for i in range(6):
        for j in range(i, 6):
            e = np.zeros((6, 6))
            e[i, j] = e[j, i] = 1
            sym.append(e)
    p = ConicProblem("real")
    Y = p.combination("Y", np.array(sym))
    p.add_psd(Y)
    p.add_eq(Y.trace(), 1.0)
    p.minimize(Y.inner(emb))
    tight = Tolerances(gap_tol=1e-11, feas_tol=1e-11)
    real = solve(p, tight)
    cplx = solve(min_eig_problem(C), tight)
    assert abs(real.primal_value - cplx.primal_value) <= 1e-9


def test_support_violation_is_primal_infeasible():
    # the identity is not supported on a channel that always outputs |0>
    N, E = ch.identity(2), ch.replacement(np.diag([1.0, 0.0]), 2)
    p = ConicProblem()
    t = p.scalar("t")
    p.add_psd(t.kron(right=E.J) - N.J, "dom")
    p.minimize(t)
    rep = solve(p)
    assert rep.status == "primal_infeasible"
    assert rep.primal_value == np.inf


def test_infeasibility_certificate():
    # t * diag(1, 0) >= diag(0, 1) has no solution; Z = diag(0, 1) certifies it
    p = ConicProblem()
    t = p.scalar("t")
    p.add_psd(t.kron(right=np.diag([1.0, 0.0])) - np.diag([0.0, 1.0]), "dom")
    p.minimize(t)
    rep = solve(p)
    assert rep.status == "primal_infeasible"
    Z = rep.dual_blocks["dom"]
    assert linalg.min_eig(Z) >= -1e-8
    assert abs(Z[0, 0].real) <= 1e-6 * abs(Z[1, 1].real)
    assert Z[1, 1].real > 0


def test_unbounded_is_dual_infeasible():
    p = ConicProblem()
    t = p.scalar("t")
    p.add_ge(t, 0.0, "nonneg")
    p.maximize(t)
    rep = solve(p)
    assert rep.status == "dual_infeasible"


def test_inconsistent_equalities_are_ill_posed():
    p = ConicProblem()
    t = p.scalar("t")
    p.add_eq(t, 1.0)
    p.add_eq(t, 2.0)
    p.minimize(t)
    with pytest.raises(IllPosedProblem):
        solve(p)


def test_free_direction_in_objective_is_ill_posed():
    p = ConicProblem()
    t = p.scalar("t")
    s = p.scalar("s")
    p.add_ge(s, 0.0)
    p.minimize(t + s)
    with pytest.raises(IllPosedProblem):
        solve(p)


def test_max_iter_keeps_best_iterate():
    p = min_eig_problem(np.diag([1.0, 2.0, 3.0]).astype(complex))
    rep = solve(p, Tolerances(max_iter=2))
    assert rep.status == "max_iter"
    assert rep.primal_blocks["X"].shape == (3, 3)
    assert rep.iterations <= 2


def test_weak_duality_at_termination(rng):
    tols = Tolerances()
    for _ in range(5):
        rep = solve(min_eig_problem(random_herm(rng, 3)), tols)
        slack = tols.gap_tol * (1 + abs(rep.primal_value))
        assert rep.primal_value >= rep.dual_value - slack
        assert rep.gap <= tols.gap_tol


def test_deterministic(rng):
    C = random_herm(rng, 4)
    a = solve(min_eig_problem(C))
    b = solve(min_eig_problem(C))
    assert a.iterations == b.iterations
    assert a.primal_value == b.primal_value
    assert np.array_equal(a.primal_blocks["X"], b.primal_blocks["X"])


def test_residuals_reported(rng):
    rep = solve(min_eig_problem(random_herm(rng, 3)))
    assert set(rep.residuals) == {"X_psd", "unit_trace"}
    assert max(rep.residuals.values()) <= 1e-8


def test_dump_lists_blocks():
    text = min_eig_problem(np.eye(2, dtype=complex)).dump()
    assert "var X kind=hermitian" in text
    assert "eq unit_trace" in text


def test_backend_registry():
    assert {"builtin", "cvxopt"} <= set(backends())
    calls = []

    def spy(*args, **kw):
        calls.append(1)
        return ipm.solve(*args, **kw)

    register_backend("spy", spy)
    rep = solve(min_eig_problem(np.eye(2, dtype=complex)), backend="spy")
    assert calls and rep.optimal
    with use_backend("spy"):
        solve(min_eig_problem(np.eye(2, dtype=complex)))
    assert len(calls) == 2


def test_builtin_agrees_with_cvxopt(rng):
    pytest.importorskip("cvxopt")
    for _ in range(3):
        N = ch.random_channel(2, rng=rng)
        a = robustness_primal(N).primal_value
        with use_backend("cvxopt"):
            b = robustness_primal(N).primal_value
        assert abs(a - b) <= 1e-7
