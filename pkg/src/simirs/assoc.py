"""User association: two-phase auction over the min-cost-flow form of the
association problem, its epsilon-CS certificate, an exhaustive oracle and
the RSSI / nearest-BS baselines.

The association problem is

    max  sum_{s,k} R[s, k] a[s, k]
    s.t. every user has exactly one BS, every BS has at least one user.

In flow form a virtual source feeds the K - S users beyond the first one of
each BS; its dual price ``mu`` caps the BS prices ``pi``.
"""

import heapq
import itertools
from dataclasses import dataclass, field

import numpy as np

from .channel import bs_user_channels
from .phy import AssociationMap, candidate_rate_matrix

__all__ = [
    "AuctionState",
    "CSReport",
    "auction_associate",
    "epsilon_cs_check",
    "exact_oracle",
    "rssi_associate",
    "nearest_associate",
    "balanced_associate",
    "repair_empty",
]

# absolute slack for the equality / tie conditions of the epsilon-CS check
CS_ATOL = 1e-9


@dataclass
class AuctionState:
    prices_bs: np.ndarray  # pi_s
    prices_user: np.ndarray  # p_k
    mu: float
    assignment: list  # (s, k) pairs
    bids: int = 0
    displacements: int = 0
    history: list = field(default_factory=list)  # (phase, p, pi) snapshots, opt-in


def _best_two(values):
    """Index and value of the maximum (lowest index on ties) and the runner-up
    value, ``-inf`` when there is no other entry."""
    best = int(np.argmax(values))
    if values.size == 1:
        return best, values[best], -np.inf
    rest = np.delete(values, best)
    return best, values[best], rest.max()


def auction_associate(R, epsilon, record=False):
    """Associate users to BSs with the two-phase auction.

    Phase 1 is a forward auction in which every BS wins exactly one user.
    Phase 2 lets each still-unassociated user bid for a BS; a BS price rises
    by ``delta = min(mu - pi_s, zeta - omega + epsilon)`` and a positive rise
    evicts the incumbent, who bids again. Once a BS price reaches ``mu`` it
    takes additional users without eviction.

    Parameters
    ----------
    R : (S, K) array of finite rates, ``S <= K``
    epsilon : float > 0
    record : bool
        Keep a ``(phase, p, pi)`` snapshot after every bid in
        ``state.history``.

    Returns
    -------
    (AssociationMap, AuctionState)
    """
    R = np.asarray(R, dtype=float)
    if R.ndim != 2:
        raise ValueError("rate matrix must be 2-D (S x K)")
    S, K = R.shape
    if S < 1 or S > K:
        raise ValueError(f"need 1 <= S <= K for a feasible association, got S={S}, K={K}")
    if not np.all(np.isfinite(R)):
        raise ValueError("rate matrix has non-finite entries")
    if not epsilon > 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")

    p = np.zeros(K)
    owner = np.full(K, -1)  # user -> BS
    won = np.full(S, -1)  # BS -> its phase-1 user
    bids = 0
    history = []

    # phase 1: each BS acquires one user; lowest-index unassigned BS bids next
    unassigned = list(range(S))
    heapq.heapify(unassigned)
    while unassigned:
        s = heapq.heappop(unassigned)
        k, rho, omega = _best_two(R[s] - p)
        if omega == -np.inf:
            # a lone candidate user: the minimum increment keeps prices finite
            omega = rho
        p[k] = R[s, k] - omega + epsilon
        bids += 1
        if owner[k] >= 0:
            won[owner[k]] = -1
            heapq.heappush(unassigned, int(owner[k]))
        owner[k] = s
        won[s] = k
        if record:
            history.append((1, p.copy(), np.zeros(S)))

    pi = R[np.arange(S), won] - p[won]
    mu = float(pi.max() + epsilon)

    # phase 2: remaining users bid for BSs
    queue = [k for k in range(K) if owner[k] < 0]
    heapq.heapify(queue)
    displacements = 0
    while queue:
        k = heapq.heappop(queue)
        s, zeta, omega = _best_two(R[:, k] - pi)
        headroom = mu - pi[s]
        if headroom <= 0:
            delta = 0.0
        else:
            delta = min(headroom, zeta - omega + epsilon)
        p[k] = zeta - delta
        if delta > 0:
            pi[s] = mu if delta == headroom else pi[s] + delta
            for j in np.flatnonzero(owner == s):
                owner[j] = -1
                heapq.heappush(queue, int(j))
                displacements += 1
        owner[k] = s
        if record:
            history.append((2, p.copy(), pi.copy()))

    assoc = AssociationMap(tuple(int(s) for s in owner), S)
    state = AuctionState(
        prices_bs=pi,
        prices_user=p,
        mu=mu,
        assignment=[(int(owner[k]), k) for k in range(K)],
        bids=bids,
        displacements=displacements,
        history=history,
    )
    return assoc, state


@dataclass
class CSReport:
    """Outcome of :func:`epsilon_cs_check`; truthy when every condition holds.

    ``violations`` lists ``(condition, s, k, excess)`` tuples where condition
    is ``"price"`` (pi_s + p_k >= R - eps), ``"tight"`` (equality on assigned
    pairs), ``"level"`` (loaded BSs sit at the top price) or ``"cap"``
    (mu >= pi_s); ``k`` is None for BS-only conditions.
    """

    ok: bool
    violations: list = field(default_factory=list)

    def __bool__(self):
        return self.ok


def epsilon_cs_check(assignment, prices_bs, prices_user, mu, R, epsilon):
    """Check epsilon-complementary slackness of an assignment and prices.

    ``assignment`` is an :class:`AssociationMap`, a user->BS sequence, or a
    list of ``(s, k)`` pairs covering every user. The top-price condition is
    applied to BSs serving more than one user (the ones fed by the virtual
    source); read literally for every BS it would force all BS prices equal.
    """
    R = np.asarray(R, dtype=float)
    S, K = R.shape
    owner = _as_owner(assignment, K)
    pi = np.asarray(prices_bs, dtype=float)
    p = np.asarray(prices_user, dtype=float)
    violations = []

    slack = pi[:, None] + p[None, :] - (R - epsilon)
    for s, k in zip(*np.nonzero(slack < -CS_ATOL)):
        violations.append(("price", int(s), int(k), float(-slack[s, k])))
    for k in range(K):
        s = owner[k]
        gap = pi[s] + p[k] - R[s, k]
        if abs(gap) > CS_ATOL:
            violations.append(("tight", int(s), k, float(gap)))
    top = pi.max()
    loads = np.bincount(owner, minlength=S)
    for s in range(S):
        if loads[s] > 1 and top - pi[s] > CS_ATOL:
            violations.append(("level", s, None, float(top - pi[s])))
        if pi[s] - mu > CS_ATOL:
            violations.append(("cap", s, None, float(pi[s] - mu)))
    return CSReport(ok=not violations, violations=violations)


def _as_owner(assignment, K):
    if isinstance(assignment, AssociationMap):
        return np.array(assignment.assignment)
    items = list(assignment)
    if items and isinstance(items[0], (tuple, list)):
        owner = np.full(K, -1)
        for s, k in items:
            owner[k] = s
    else:
        owner = np.array(items, dtype=int)
    if owner.shape != (K,) or np.any(owner < 0):
        raise ValueError("assignment must cover every user")
    return owner


def exact_oracle(R):
    """Exhaustive optimum over all surjective user->BS maps.

    Enumerates assignments in lexicographic order and keeps the first one with
    the largest total, so ties go to the lexicographically smallest vector.
    Limited to ``S <= 4`` and ``K <= 12``.
    """
    R = np.asarray(R, dtype=float)
    S, K = R.shape
    if not (1 <= S <= K <= 12 and S <= 4):
        raise ValueError(f"exact_oracle supports S <= K <= 12 and S <= 4, got S={S}, K={K}")
    full = (1 << S) - 1
    tail = min(K, 8)
    head = K - tail
    suffix = np.array(list(itertools.product(range(S), repeat=tail)), dtype=np.int64)
    suffix_val = R[suffix, np.arange(head, K)].sum(axis=1)
    suffix_mask = np.bitwise_or.reduce(1 << suffix, axis=1)

    best_val = -np.inf
    best = None
    for prefix in itertools.product(range(S), repeat=head):
        pre_val = sum(R[s, k] for k, s in enumerate(prefix))
        pre_mask = 0
        for s in prefix:
            pre_mask |= 1 << s
        feasible = (suffix_mask | pre_mask) == full
        if not feasible.any():
            continue
        vals = np.where(feasible, pre_val + suffix_val, -np.inf)
        i = int(np.argmax(vals))
        if vals[i] > best_val:
            best_val = vals[i]
            best = tuple(prefix) + tuple(int(s) for s in suffix[i])
    return AssociationMap(best, S)


def repair_empty(assignment, score):
    """Move users onto empty BSs until every BS serves someone.

    For each empty BS (lowest index first) the user that loses least,
    ``score[current, k] - score[empty, k]``, is moved from a BS that keeps at
    least one user. Ties go to the lowest user index.
    """
    owner = np.array(assignment, dtype=int)
    score = np.asarray(score, dtype=float)
    S = score.shape[0]
    for s in range(S):
        if np.any(owner == s):
            continue
        loads = np.bincount(owner, minlength=S)
        movable = np.flatnonzero(loads[owner] > 1)
        if movable.size == 0:
            raise ValueError("not enough users to load every BS")
        loss = score[owner[movable], movable] - score[s, movable]
        owner[movable[int(np.argmin(loss))]] = s
    return AssociationMap(tuple(owner), S)


def rssi_associate(channels, phi, cfg):
    """Strongest-channel association with empty-BS repair.

    Users pick ``argmax_s ||h_k^s||^2`` (the reflected channel for the
    assisted BS); a BS left empty takes the user whose candidate rate drops
    the least.
    """
    H = bs_user_channels(channels, phi)
    strength = np.sum(np.abs(H) ** 2, axis=2)
    owner = np.argmax(strength, axis=0)
    return repair_empty(owner, candidate_rate_matrix(channels, phi, cfg))


def path_lengths(positions, cfg):
    """S x K distances; the assisted BS is measured along BS -> IRS -> user."""
    positions = np.asarray(positions, dtype=float).reshape(-1, 2)
    irs = np.asarray(cfg.irs_position)
    D = np.empty((cfg.S, positions.shape[0]))
    for s, bs in enumerate(cfg.bs_positions):
        bs = np.asarray(bs)
        if s == cfg.irs_assisted_bs:
            D[s] = np.linalg.norm(irs - bs) + np.linalg.norm(positions - irs, axis=1)
        else:
            D[s] = np.linalg.norm(positions - bs, axis=1)
    return D


def nearest_associate(positions, cfg):
    """Nearest-BS association with empty-BS repair on path length."""
    D = path_lengths(positions, cfg)
    return repair_empty(np.argmin(D, axis=0), -D)


def balanced_associate(strength, K=None):
    """Even split: BS loads differ by at most one, filled greedily by strength.

    (BS, user) pairs are taken in decreasing strength order (ties: lower BS,
    then lower user) while the user is free and the BS has capacity; the
    first ``K mod S`` BSs get the extra slot.
    """
    strength = np.asarray(strength, dtype=float)
    S, K = strength.shape
    cap = np.full(S, K // S)
    cap[: K % S] += 1
    order = sorted(
        ((s, k) for s in range(S) for k in range(K)),
        key=lambda sk: (-strength[sk], sk[0], sk[1]),
    )
    owner = np.full(K, -1)
    for s, k in order:
        if owner[k] < 0 and cap[s] > 0:
            owner[k] = s
            cap[s] -= 1
    return AssociationMap(tuple(owner), S)
