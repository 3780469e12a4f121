import numpy as np
import pytest

from dyncoh import channels as ch
from dyncoh import linalg
from dyncoh import superchannels as sc
from dyncoh.channels import SystemDim
from dyncoh.measures import (MonotoneProbe, best_classical_overlap, dephasing_log_robustness, log_robustness,
                             monotone_G, optimal_classical_channel, smoothed_log_robustness)
from dyncoh.superchannels import FreeSet

Q = SystemDim(2, 2)


def brute_classical_overlap(P):
    """max Tr[J_P J_M] over deterministic classical channels, by enumeration."""
    best = -np.inf
    diag = np.real(np.diag(P.J)).reshape(P.d_in, P.d_out)
    for choice in np.ndindex(*([P.d_out] * P.d_in)):
        best = max(best, sum(diag[i, k] for i, k in enumerate(choice)))
    return best


# log-robustness

def test_lr_classical_is_zero(rng):
    for N in (ch.dephasing(2), ch.random_classical(2, 3, rng), ch.random_classical(3, 2, rng)):
        assert abs(log_robustness(N).value) <= 1e-7


@pytest.mark.parametrize("N", [ch.identity(2), ch.replace_plus(2)], ids=["identity", "replace-plus"])
def test_lr_one_bit(N):
    assert np.isclose(log_robustness(N).value, 1, atol=1e-7)


def test_lr_identity_three_levels():
    assert np.isclose(log_robustness(ch.identity(3)).value, np.log2(3), atol=1e-7)


def test_lr_witnesses_feasible(rng):
    N = ch.random_channel(2, rng=rng)
    res = log_robustness(N)
    w, eta = res.primal_witness, res.dual_witness
    assert np.allclose(w, np.diag(np.diag(w)))
    assert linalg.min_eig(w - N.J) >= -1e-8
    marg = linalg.partial_trace(w, (2, 2), [0])
    assert np.allclose(marg, np.trace(w) / 2 * np.eye(2), atol=1e-8)
    assert linalg.min_eig(eta) >= -1e-8
    flat = linalg.tensor(linalg.dephase(linalg.partial_trace(eta, (2, 2), [0])), np.eye(2) / 2)
    assert np.abs(linalg.dephase(eta) - flat).max() <= 1e-8
    assert np.abs(linalg.dephase(linalg.partial_trace(eta, (2, 2), [1])) - np.eye(2)).max() <= 1e-8


def test_lr_gap_small(rng):
    for _ in range(50):
        res = log_robustness(ch.random_channel(2, rng=rng))
        assert abs(res.primal_value - res.dual_value) <= 1e-6
        assert res.value >= 0


def test_lr_equals_dmax_to_optimal_classical(rng):
    N = ch.random_channel(2, rng=rng)
    res = log_robustness(N)
    E = optimal_classical_channel(res, N.sys)
    assert ch.is_classical(E)
    assert np.isclose(ch.dmax_channels(N, E), res.value, atol=1e-6)
    # any other classical channel does no better
    for _ in range(5):
        assert ch.dmax_channels(N, ch.random_classical(2, rng=rng)) >= res.value - 1e-7


def test_lr_additive(rng):
    for _ in range(10):
        N, M = ch.random_channel(2, rng=rng), ch.random_channel(2, rng=rng)
        joint = log_robustness(ch.tensor_channels(N, M)).value
        assert abs(joint - log_robustness(N).value - log_robustness(M).value) <= 1e-5


# dephasing log-robustness

def test_lr_delta_examples(rng):
    assert abs(dephasing_log_robustness(ch.random_classical(2, rng=rng))) <= 1e-7
    assert np.isclose(dephasing_log_robustness(ch.identity(2)), 1, atol=1e-7)


def test_lr_delta_finite_for_unitaries():
    # a zero diagonal entry of a PSD Choi matrix forces its whole row to vanish,
    # so J_N always lies in the support of D(J_N)
    H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    assert np.isfinite(dephasing_log_robustness(ch.unitary(H)))
    X = np.array([[0, 1], [1, 0]])
    assert np.isfinite(dephasing_log_robustness(ch.unitary(X)))


def test_lr_below_lr_delta(rng):
    for _ in range(10):
        N = ch.random_channel(2, rng=rng)
        assert log_robustness(N).value <= dephasing_log_robustness(N) + 1e-8


def test_lr_delta_additive(rng):
    for _ in range(5):
        N, M = ch.random_channel(2, rng=rng), ch.random_channel(2, rng=rng)
        joint = dephasing_log_robustness(ch.tensor_channels(N, M))
        assert abs(joint - dephasing_log_robustness(N) - dephasing_log_robustness(M)) <= 1e-6


# smoothing

def test_smoothing_at_zero(rng):
    N = ch.random_channel(2, rng=rng)
    assert smoothed_log_robustness(N, 0.0) == log_robustness(N).value


def test_smoothing_classical(rng):
    assert smoothed_log_robustness(ch.random_classical(2, rng=rng), 0.2) <= 1e-7


def test_smoothing_monotone_in_eps():
    vals = [smoothed_log_robustness(ch.identity(2), e) for e in (0.0, 0.05, 0.1, 0.2)]
    assert all(a >= b - 1e-8 for a, b in zip(vals, vals[1:]))
    assert 0 < vals[2] < 1


def test_smoothing_rejects_bad_eps():
    with pytest.raises(ValueError):
        smoothed_log_robustness(ch.identity(2), 1.0)


# complete monotones

def test_best_classical_overlap_matches_enumeration(rng):
    for P in (ch.random_channel(2, rng=rng), ch.random_channel(2, 3, rng), ch.identity(3)):
        assert np.isclose(best_classical_overlap(P), brute_classical_overlap(P))


@pytest.mark.parametrize("free", list(FreeSet))
def test_G_of_classical_is_zero(rng, free):
    probe = MonotoneProbe(ch.identity(2), free)
    assert abs(monotone_G(probe, ch.random_classical(2, rng=rng)).value) <= 1e-7


@pytest.mark.parametrize("free", list(FreeSet))
def test_G_identity_probe_maximum(rng, free):
    probe = MonotoneProbe(ch.identity(2), free)
    for N in (ch.unitary(ch.random_unitary(2, rng)), ch.identity(2), ch.replace_plus(2)):
        assert np.isclose(monotone_G(probe, N).value, 2, atol=1e-6)


def test_G_below_two_for_noisy_channels():
    probe = MonotoneProbe(ch.identity(2))
    assert monotone_G(probe, ch.depolarizing(0.5, 2)).value < 2 - 1e-3


def test_G_nonnegative(rng):
    for _ in range(5):
        probe = MonotoneProbe(ch.random_channel(2, rng=rng))
        assert monotone_G(probe, ch.random_channel(2, rng=rng)).value >= -1e-8


def test_G_optimizer_is_free(rng):
    res = monotone_G(MonotoneProbe(ch.identity(2), FreeSet.DISC), ch.random_channel(2, rng=rng))
    sc.validate_superchannel(res.theta.J, Q, Q, tol=1e-7)
    m = sc.classify_superchannel(res.theta, tol=1e-7)
    assert m.is_disc and m.is_misc


# monotonicity under free superchannels

def free_superchannels(rng):
    return [sc.dephasing_superchannel(Q), sc.identity_superchannel(Q),
            sc.constant_superchannel(ch.random_classical(2, rng=rng), Q),
            sc.random_superchannel(Q, Q, rng, free_set=FreeSet.MISC),
            sc.random_superchannel(Q, Q, rng, free_set=FreeSet.DISC)]


def test_lr_monotone(rng):
    N = ch.random_channel(2, rng=rng)
    base = log_robustness(N).value
    for theta in free_superchannels(rng):
        out = sc.apply_superchannel(theta, N)
        assert log_robustness(out).value <= base + 1e-6


def test_lr_delta_monotone_under_disc(rng):
    N = ch.random_channel(2, rng=rng)
    base = dephasing_log_robustness(N)
    for theta in free_superchannels(rng):
        if not sc.classify_superchannel(theta).is_disc:
            continue
        out = sc.apply_superchannel(theta, N)
        assert dephasing_log_robustness(out) <= base + 1e-6


def test_G_monotone(rng):
    probe = MonotoneProbe(ch.random_channel(2, rng=rng))
    N = ch.random_channel(2, rng=rng)
    base = monotone_G(probe, N).value
    for theta in free_superchannels(rng)[3:]:
        assert monotone_G(probe, sc.apply_superchannel(theta, N)).value <= base + 1e-6
