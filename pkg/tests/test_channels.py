import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dyncoh import channels as ch
from dyncoh import linalg

from strategies import seeds


def apply_on_half(N, psi, d_ref):
    """(N (x) id)(|psi><psi|) with the channel acting on the first factor."""
    rho = np.outer(psi, psi.conj())
    d = N.d_in
    r4 = rho.reshape(d, d_ref, d, d_ref)
    J4 = N.J.reshape(d, N.d_out, d, N.d_out)
    out = np.einsum("ikjl,iajb->kalb", J4, r4)
    return out.reshape(N.d_out * d_ref, N.d_out * d_ref)


def pure_input_lower_bound(N, M, rng, trials=400):
    d = N.d_in
    best = 0.0
    cands = [linalg.phi_plus(d)[:, 0] * 0 + np.eye(d).reshape(-1) / np.sqrt(d)]
    for _ in range(trials):
        g = rng.standard_normal(d * d) + 1j * rng.standard_normal(d * d)
        cands.append(g / np.linalg.norm(g))
    for psi in cands:
        diff = apply_on_half(N, psi, d) - apply_on_half(M, psi, d)
        best = max(best, linalg.trace_norm(diff) / 2)
    return best


def assert_valid(N):
    assert linalg.min_eig(N.J) >= -1e-9
    err = np.linalg.norm(linalg.partial_trace(N.J, N.sys.dims, [0]) - np.eye(N.d_in))
    assert err <= 1e-9


# constructors

def test_identity_choi_is_phi_plus():
    J = ch.identity(2).J
    assert J.shape == (4, 4)
    assert np.isclose(np.trace(J), 2)
    assert np.linalg.matrix_rank(J) == 1
    assert np.allclose(J, linalg.phi_plus(2))


@pytest.mark.parametrize("d", [2, 3])
def test_full_depolarizing_is_identity(d):
    assert ch.channels_close(ch.depolarizing(1.0, d), ch.identity(d))


def test_half_depolarizing_entries():
    J = ch.depolarizing(0.5, 2).J
    assert np.allclose(np.diag(J).real, [0.75, 0.25, 0.25, 0.75])
    assert np.isclose(J[0, 3], 0.5) and np.isclose(J[3, 0], 0.5)


def test_partial_dephasing_choi():
    lam = 0.3
    J = ch.partial_dephasing(lam, 3).J
    phi = linalg.phi_plus(3)
    expect = lam * phi + (1 - lam) * np.diag(np.diag(phi))
    assert np.allclose(J, expect)


@pytest.mark.parametrize("lam", [-0.1, 1.5])
def test_bad_lambda_rejected(lam):
    with pytest.raises(ValueError):
        ch.depolarizing(lam, 2)


def test_non_unitary_rejected():
    with pytest.raises(ValueError):
        ch.unitary(np.array([[1, 1], [0, 1]]))


def test_malformed_choi_rejected():
    with pytest.raises(ValueError):
        ch.from_choi(np.diag([1, 0, 0, 0]), 2, 2)           # not trace preserving
    with pytest.raises(ValueError):
        ch.from_choi(np.diag([1, -1, 1, 1]), 2, 2)          # not positive


def test_make_channel_dispatch():
    spec = ch.ChannelSpec("depolarizing", d=2, lam=0.5)
    assert ch.channels_close(ch.make_channel(spec), ch.depolarizing(0.5, 2))
    raw = ch.ChannelSpec("choi", matrix=linalg.phi_plus(2))
    assert ch.channels_close(ch.make_channel(raw), ch.identity(2))
    with pytest.raises(ValueError):
        ch.make_channel(ch.ChannelSpec("teleport", d=2))


def test_constructors_are_valid(rng):
    made = [ch.identity(3), ch.dephasing(3), ch.depolarizing(0.2, 3), ch.partial_dephasing(0.7, 2),
            ch.replace_plus(3), ch.unitary(ch.random_unitary(3, rng)), ch.random_channel(2, 3, rng),
            ch.random_classical(3, 2, rng), ch.plus_state_prep(4)]
    for N in made:
        assert_valid(N)


# application and composition

def test_identity_acts_trivially(rng):
    rho = ch.random_density(2, rng)
    assert np.allclose(ch.apply_channel(ch.identity(2), rho), rho)


def test_dephasing_plus_gives_maximally_mixed():
    out = ch.apply_channel(ch.dephasing(2), linalg.plus_state(2))
    assert np.allclose(out, np.eye(2) / 2)


@pytest.mark.parametrize("lam,d", [(0.3, 2), (0.8, 3)])
def test_depolarizing_formula(rng, lam, d):
    rho = ch.random_density(d, rng)
    out = ch.apply_channel(ch.depolarizing(lam, d), rho)
    assert np.allclose(out, lam * rho + (1 - lam) * np.eye(d) / d)


def test_apply_matches_kraus(rng):
    U = ch.random_unitary(3, rng)
    rho = ch.random_density(3, rng)
    out = ch.apply_channel(ch.unitary(U), rho)
    assert np.allclose(out, U @ rho @ U.conj().T)


def test_apply_dimension_mismatch():
    with pytest.raises(linalg.DimensionMismatch):
        ch.apply_channel(ch.identity(2), np.eye(3) / 3)


def test_dephasing_idempotent():
    D = ch.dephasing(3)
    assert ch.channels_close(ch.compose_channels(D, D), D)


def test_identity_is_neutral(rng):
    N = ch.random_channel(2, 3, rng)
    assert ch.channels_close(ch.compose_channels(ch.identity(3), N), N)
    assert ch.channels_close(ch.compose_channels(N, ch.identity(2)), N)


def test_compose_matches_sequential_application(rng):
    A, B = ch.random_channel(2, 3, rng), ch.random_channel(3, 2, rng)
    rho = ch.random_density(2, rng)
    lhs = ch.apply_channel(ch.compose_channels(B, A), rho)
    rhs = ch.apply_channel(B, ch.apply_channel(A, rho))
    assert np.allclose(lhs, rhs)


def test_compose_dimension_mismatch():
    with pytest.raises(linalg.DimensionMismatch):
        ch.compose_channels(ch.identity(2), ch.identity(3))


def test_tensor_acts_on_products(rng):
    A, B = ch.random_channel(2, rng=rng), ch.random_channel(3, 2, rng)
    rho, sigma = ch.random_density(2, rng), ch.random_density(3, rng)
    out = ch.apply_channel(ch.tensor_channels(A, B), np.kron(rho, sigma))
    assert np.allclose(out, np.kron(ch.apply_channel(A, rho), ch.apply_channel(B, sigma)))


# classicality

def test_classicality_examples():
    assert ch.is_classical(ch.dephasing(3))
    assert not ch.is_classical(ch.identity(2))
    assert not ch.is_classical(ch.replace_plus(2))


def direct_classical(N, tol=1e-9):
    Din, Dout = ch.dephasing(N.d_in), ch.dephasing(N.d_out)
    sandwiched = ch.compose_channels(Dout, ch.compose_channels(N, Din))
    return bool(np.abs(sandwiched.J - N.J).max() <= tol)


def test_classicality_two_paths_agree(rng):
    chans = [ch.random_classical(2, 3, rng), ch.random_channel(2, rng=rng), ch.identity(2),
             ch.dephasing(2), ch.partial_dephasing(0.0, 3), ch.partial_dephasing(0.5, 3)]
    for N in chans:
        assert ch.is_classical(N) == direct_classical(N)


# diamond distance

def test_diamond_of_equal_channels(rng):
    N = ch.random_channel(2, rng=rng)
    assert ch.diamond_distance(N, N) <= 1e-7


def test_diamond_identity_vs_dephasing(rng):
    val = ch.diamond_distance(ch.identity(2), ch.dephasing(2))
    low = pure_input_lower_bound(ch.identity(2), ch.dephasing(2), rng)
    assert np.isclose(val, 0.5, atol=1e-7)
    assert np.isclose(low, 0.5, atol=1e-9)


def test_diamond_above_pure_input_bound(rng):
    for _ in range(3):
        N, M = ch.random_channel(2, rng=rng), ch.random_channel(2, rng=rng)
        assert ch.diamond_distance(N, M) >= pure_input_lower_bound(N, M, rng, 200) - 1e-7


def test_diamond_between_replacements(rng):
    rho, sigma = ch.random_density(2, rng), ch.random_density(2, rng)
    val = ch.diamond_distance(ch.replacement(rho, 2), ch.replacement(sigma, 2))
    assert np.isclose(val, linalg.trace_norm(rho - sigma) / 2, atol=1e-7)


def test_diamond_metric(rng):
    for _ in range(3):
        A, B, C = (ch.random_channel(2, rng=rng) for _ in range(3))
        ab, ba = ch.diamond_distance(A, B), ch.diamond_distance(B, A)
        assert ab == ba
        assert ab <= ch.diamond_distance(A, C) + ch.diamond_distance(C, B) + 2e-6
        assert ab <= 1 + 1e-9


def test_diamond_dimension_mismatch():
    with pytest.raises(linalg.DimensionMismatch):
        ch.diamond_distance(ch.identity(2), ch.identity(3))


# max-relative entropy

def generalized_eig_dmax(N, E):
    w, v = np.linalg.eigh(E.J)
    inv_sqrt = (v / np.sqrt(w)) @ v.conj().T
    return np.log2(np.linalg.eigvalsh(inv_sqrt @ N.J @ inv_sqrt)[-1])


def test_dmax_of_equal_channels(rng):
    N = ch.random_channel(2, rng=rng)
    assert abs(ch.dmax_channels(N, N)) <= 1e-6


def test_dmax_identity_vs_dephasing():
    JD = ch.dephasing(2).J
    phi = linalg.phi_plus(2)
    assert linalg.min_eig(2 * JD - phi) >= -1e-12
    assert linalg.min_eig((2 - 1e-3) * JD - phi) < 0
    assert np.isclose(ch.dmax_channels(ch.identity(2), ch.dephasing(2)), 1, atol=1e-7)


def test_dmax_matches_generalized_eigenvalue(rng):
    for _ in range(3):
        N, E = ch.random_channel(2, rng=rng), ch.random_channel(2, rng=rng)
        assert np.isclose(ch.dmax_channels(N, E), generalized_eig_dmax(N, E), atol=1e-6)


def test_dmax_support_violation_is_infinite():
    E = ch.replacement(np.diag([1.0, 0.0]), 2)
    assert ch.dmax_channels(ch.identity(2), E) == np.inf


def test_dmax_positive_for_distinct_channels(rng):
    N, E = ch.random_channel(2, rng=rng), ch.random_channel(2, rng=rng)
    assert ch.dmax_channels(N, E) > 1e-6


def test_dmax_additive(rng):
    for _ in range(25):
        N, M, E, F = (ch.random_channel(2, rng=rng) for _ in range(4))
        joint = ch.dmax_channels(ch.tensor_channels(N, M), ch.tensor_channels(E, F))
        assert abs(joint - ch.dmax_channels(N, E) - ch.dmax_channels(M, F)) <= 1e-6


# properties

@settings(max_examples=20)
@given(seeds, st.integers(1, 3), st.integers(1, 3))
def test_random_channels_valid(seed, d_in, d_out):
    assert_valid(ch.random_channel(d_in, d_out, seed))


@settings(max_examples=20)
@given(seeds, st.integers(1, 3))
def test_dephased_channel_is_classical(seed, d):
    N = ch.random_channel(d, rng=seed)
    assert ch.is_classical(ch.dephased(N))
    assert direct_classical(ch.dephased(N))


@settings(max_examples=20)
@given(seeds, st.integers(2, 3))
def test_outputs_are_states(seed, d):
    rng = np.random.default_rng(seed)
    N = ch.random_channel(d, rng=rng)
    out = ch.apply_channel(N, ch.random_density(d, rng))
    assert np.isclose(np.trace(out), 1)
    assert linalg.min_eig(out) >= -1e-12
