import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import linprog

from simirs.assoc import (
    auction_associate,
    balanced_associate,
    epsilon_cs_check,
    exact_oracle,
    nearest_associate,
    path_lengths,
    repair_empty,
    rssi_associate,
)
from simirs.channel import ChannelSet, synthesize_channels
from simirs.config import ScenarioConfig
from simirs.numerics import make_rng
from simirs.phases import PhaseVector
from simirs.phy import AssociationMap


def brute_force(R):
    """Independent oracle: best total over surjective maps, plain loops."""
    S, K = R.shape
    best = -math.inf
    for a in itertools.product(range(S), repeat=K):
        if len(set(a)) == S:
            best = max(best, sum(R[s, k] for k, s in enumerate(a)))
    return best


@st.composite
def rate_matrices(draw, integer=True, max_s=3, max_k=7):
    S = draw(st.integers(1, max_s))
    K = draw(st.integers(S, max_k))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    if integer:
        return rng.integers(1, 21, size=(S, K)).astype(float)
    return rng.uniform(0, 20, size=(S, K))


# auction -----------------------------------------------------------------------
def test_auction_two_by_two():
    R = np.array([[10.0, 2.0], [3.0, 8.0]])
    assoc, state = auction_associate(R, 0.2)
    assert assoc.assignment == (0, 1)
    assert assoc.value(R) == 18 == max(10 + 8, 2 + 3)
    assert sorted(state.assignment) == [(0, 0), (1, 1)]


def test_auction_single_bs():
    assoc, _ = auction_associate(np.array([[1.0, 5.0, 2.0]]), 0.2)
    assert assoc.assignment == (0, 0, 0)


def test_auction_single_user():
    assoc, state = auction_associate(np.array([[3.0]]), 0.2)
    assert assoc.assignment == (0,) and np.isfinite(state.prices_user).all()


def test_auction_s2_k4_matches_oracle():
    rng = np.random.default_rng(0)
    for _ in range(50):
        R = rng.integers(1, 21, size=(2, 4)).astype(float)
        assert auction_associate(R, 0.2)[0].value(R) == exact_oracle(R).value(R)


def test_auction_errors():
    with pytest.raises(ValueError):
        auction_associate(np.ones((3, 2)), 0.2)
    with pytest.raises(ValueError):
        auction_associate(np.array([[1.0, np.inf]]), 0.2)
    with pytest.raises(ValueError):
        auction_associate(np.array([[1.0, np.nan], [1.0, 2.0]]), 0.2)
    with pytest.raises(ValueError):
        auction_associate(np.ones((2, 3)), 0.0)


@given(rate_matrices(integer=False, max_s=4, max_k=8))
def test_auction_feasible_and_epsilon_optimal(R):
    S, K = R.shape
    assoc, state = auction_associate(R, 0.2)
    A = assoc.matrix()
    assert np.all(A.sum(axis=0) == 1) and np.all(A.sum(axis=1) >= 1)
    assert assoc.value(R) >= brute_force(R) - K * 0.2 - 1e-9
    assert epsilon_cs_check(assoc, state.prices_bs, state.prices_user, state.mu, R, 0.2)
    assert np.all(state.mu >= state.prices_bs - 1e-12)


@given(rate_matrices(integer=True))
def test_auction_exact_on_integers(R):
    S = R.shape[0]
    eps = 0.2 if S < 5 else 0.9 / S
    assert auction_associate(R, eps)[0].value(R) == brute_force(R)


@given(rate_matrices(integer=False, max_s=4, max_k=8), st.sampled_from([0.01, 0.2, 1.0]))
def test_auction_terminates_within_price_bound(R, eps):
    # every bid lifts some price by >= eps and no price exceeds the spread of R
    S, K = R.shape
    _, state = auction_associate(R, eps)
    spread = float(R.max() - R.min())
    assert state.bids <= S + K * (math.ceil(spread / eps) + 1)
    assert state.displacements <= K * S * (math.ceil((spread + eps) / eps) + 1)


@given(rate_matrices(integer=False, max_s=4, max_k=8))
def test_price_monotonicity(R):
    _, state = auction_associate(R, 0.2, record=True)
    phase1 = [p for phase, p, _ in state.history if phase == 1]
    phase2 = [pi for phase, _, pi in state.history if phase == 2]
    for a, b in zip(phase1, phase1[1:]):
        assert np.all(b >= a)
    for a, b in zip(phase2, phase2[1:]):
        assert np.all(b >= a)


def test_auction_deterministic():
    R = np.random.default_rng(3).uniform(0, 20, (3, 7))
    a1, s1 = auction_associate(R, 0.2)
    a2, s2 = auction_associate(R, 0.2)
    assert a1 == a2 and s1.prices_user.tobytes() == s2.prices_user.tobytes()


# epsilon-CS ----------------------------------------------------------------------
def test_cs_detects_price_violation():
    R = np.array([[10.0, 2.0], [3.0, 8.0]])
    assoc, st_ = auction_associate(R, 0.2)
    pi = st_.prices_bs.copy()
    p = st_.prices_user.copy()
    # lower p_1 so that pi_0 + p_1 = R[0, 1] - 3 eps while keeping (1, 1) tight
    shift = pi[0] + p[1] - (R[0, 1] - 3 * 0.2)
    p[1] -= shift
    pi[1] += shift
    report = epsilon_cs_check(assoc, pi, p, max(pi.max(), st_.mu), R, 0.2)
    assert not report
    assert ("price", 0, 1) in [v[:3] for v in report.violations]


def test_cs_detects_untight_pair():
    R = np.array([[10.0, 2.0], [3.0, 8.0]])
    assoc, st_ = auction_associate(R, 0.2)
    p = st_.prices_user + np.array([1.0, 0.0])
    report = epsilon_cs_check(assoc, st_.prices_bs, p, st_.mu, R, 0.2)
    assert ("tight", 0, 0) in [v[:3] for v in report.violations]


def test_cs_accepts_pair_list_and_vector():
    R = np.array([[5.0, 1.0, 1.0], [1.0, 5.0, 5.0]])
    assoc, st_ = auction_associate(R, 0.2)
    args = (st_.prices_bs, st_.prices_user, st_.mu, R, 0.2)
    assert epsilon_cs_check(st_.assignment, *args)
    assert epsilon_cs_check(list(assoc.assignment), *args)


def _assignment_duals(R):
    """Optimal duals of the S = K assignment LP: min sum(pi) + sum(p)
    subject to pi_s + p_k >= R[s, k]."""
    S, K = R.shape
    A = np.zeros((S * K, S + K))
    for s in range(S):
        for k in range(K):
            A[s * K + k, s] = A[s * K + k, S + k] = -1.0
    res = linprog(np.ones(S + K), A_ub=A, b_ub=-R.ravel(), bounds=[(None, None)] * (S + K))
    assert res.status == 0
    return res.x[:S], res.x[S:]


@pytest.mark.parametrize("eps", [1e-6, 0.2, 5.0])
def test_cs_holds_for_lp_duals(eps):
    rng = np.random.default_rng(4)
    for _ in range(10):
        R = rng.integers(1, 21, size=(3, 3)).astype(float)
        assoc = exact_oracle(R)
        pi, p = _assignment_duals(R)
        assert epsilon_cs_check(assoc, pi, p, pi.max(), R, eps)


# exact oracle --------------------------------------------------------------------
def test_oracle_ties_lexicographic():
    assert exact_oracle(np.ones((2, 3))).assignment == (0, 0, 1)
    assert exact_oracle(np.ones((3, 4))).assignment == (0, 0, 1, 2)


def test_oracle_example():
    R = np.array([[5.0, 1.0, 1.0], [1.0, 5.0, 5.0]])
    a = exact_oracle(R)
    assert a.assignment == (0, 1, 1) and a.value(R) == 15


@given(rate_matrices(integer=False, max_s=4, max_k=7))
def test_oracle_matches_brute_force(R):
    assert exact_oracle(R).value(R) == pytest.approx(brute_force(R), abs=1e-9)


def test_oracle_large_instance_uses_prefix_split():
    R = np.random.default_rng(6).integers(1, 21, size=(2, 10)).astype(float)
    assert exact_oracle(R).value(R) == brute_force(R)


def test_oracle_size_bounds():
    with pytest.raises(ValueError):
        exact_oracle(np.ones((5, 6)))
    with pytest.raises(ValueError):
        exact_oracle(np.ones((2, 13)))
    with pytest.raises(ValueError):
        exact_oracle(np.ones((3, 2)))


# baselines -------------------------------------------------------------------------
def _direct_only(strength0, strength1):
    """Channels whose BS-0 reflected and BS-1 direct powers are given per user."""
    K = len(strength0)
    h_r = np.sqrt(np.asarray(strength0, dtype=float))[:, None].astype(complex)
    G = np.zeros((1, 4), dtype=complex)
    G[0, 0] = 1.0
    h_d = np.zeros((K, 4), dtype=complex)
    h_d[:, 0] = np.sqrt(np.asarray(strength1, dtype=float))
    return ChannelSet(G=G, h_r=h_r, h_d={1: h_d}, user_positions=np.zeros((K, 2)))


def test_rssi_strongest_wins():
    cfg = ScenarioConfig(K=3, M=4)
    ch = _direct_only([1e-9, 1e-9, 1e-12], [1e-12, 1e-12, 1e-6])
    assert rssi_associate(ch, PhaseVector.zeros(1, 1), cfg).assignment == (0, 0, 1)


def test_rssi_tie_lowest_index():
    cfg = ScenarioConfig(K=3, M=4)
    ch = _direct_only([1e-9, 1e-9, 1e-9], [1e-9, 1e-9, 1e-9])
    # everyone ties onto BS 0; repair hands BS 1 the lowest-index user
    assert rssi_associate(ch, PhaseVector.zeros(1, 1), cfg).assignment == (1, 0, 0)


def test_rssi_repair_random():
    cfg = ScenarioConfig(K=10, M=12)
    for seed in range(20):
        ch = synthesize_channels(cfg, make_rng(seed))
        a = rssi_associate(ch, PhaseVector.zeros(cfg.N, cfg.b), cfg)
        assert set(a.assignment) == {0, 1}


def test_nearest_user_at_bs():
    cfg = ScenarioConfig(K=2)
    a = nearest_associate([(400.0, 0.0), (210.0, 28.0)], cfg)
    assert a.assignment == (1, 0)


def test_nearest_equidistant_lowest_index():
    cfg = ScenarioConfig(K=3, irs_position=(0.0, 0.0))  # IRS on top of BS 0
    D = path_lengths([(200.0, 0.0)], cfg)
    assert D[0, 0] == D[1, 0]
    a = nearest_associate([(200.0, 0.0), (200.0, 0.0), (380.0, 0.0)], cfg)
    assert a.assignment == (0, 0, 1)


def test_nearest_repair_moves_one_user():
    cfg = ScenarioConfig(K=4)
    a = nearest_associate([(399.0, 0.0), (401.0, 1.0), (400.0, -2.0), (398.0, 3.0)], cfg)
    assert sorted(a.assignment) == [0, 1, 1, 1]


def test_path_lengths_via_irs():
    cfg = ScenarioConfig()
    D = path_lengths([(200.0, 0.0)], cfg)
    assert D[0, 0] == pytest.approx(np.hypot(200, 30) + 30.0)
    assert D[1, 0] == pytest.approx(200.0)


def test_balanced_split():
    rng = np.random.default_rng(0)
    a = balanced_associate(rng.random((2, 10)))
    assert np.bincount(a.assignment).tolist() == [5, 5]
    a = balanced_associate(rng.random((3, 7)))
    assert np.bincount(a.assignment).tolist() == [3, 2, 2]


def test_balanced_prefers_strength():
    strength = np.array([[9.0, 8.0, 1.0, 0.5], [1.0, 7.0, 6.0, 5.0]])
    assert balanced_associate(strength).assignment == (0, 0, 1, 1)


def test_repair_empty_min_loss():
    score = np.array([[5.0, 4.0, 9.0], [1.0, 3.5, 2.0]])
    a = repair_empty([0, 0, 0], score)
    assert a.assignment == (0, 1, 0)
    with pytest.raises(ValueError):
        repair_empty([0], np.ones((2, 1)))
