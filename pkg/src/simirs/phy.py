"""Zero-forcing precoding, SINR/rate evaluation and the association rate proxy."""

from dataclasses import dataclass

import numpy as np

from .channel import bs_user_channels
from .numerics import frobenius_norm, pseudo_inverse

__all__ = [
    "AssociationMap",
    "RateReport",
    "zf_precoder",
    "sinr_all",
    "rate_report",
    "candidate_rate_matrix",
]


@dataclass(frozen=True)
class AssociationMap:
    """User -> BS assignment.

    ``assignment[k]`` is the serving BS of user k. Every user has exactly one
    BS by construction; every BS must serve at least one user.
    """

    assignment: tuple
    n_bs: int

    def __post_init__(self):
        assignment = tuple(int(s) for s in self.assignment)
        object.__setattr__(self, "assignment", assignment)
        if any(not 0 <= s < self.n_bs for s in assignment):
            raise ValueError(f"assignment {assignment} refers to a BS outside [0, {self.n_bs})")
        empty = [s for s in range(self.n_bs) if s not in assignment]
        if empty:
            raise ValueError(f"BS {empty[0]} serves no user")

    @classmethod
    def from_served_sets(cls, served_sets):
        assignment = {}
        for s, users in enumerate(served_sets):
            for k in users:
                if k in assignment:
                    raise ValueError(f"user {k} appears in two served sets")
                assignment[k] = s
        K = len(assignment)
        if sorted(assignment) != list(range(K)):
            raise ValueError("served sets must cover users 0..K-1")
        return cls(tuple(assignment[k] for k in range(K)), len(served_sets))

    @property
    def K(self):
        return len(self.assignment)

    @property
    def served_sets(self):
        """Per-BS ascending user lists; column order of the BS precoders."""
        sets = [[] for _ in range(self.n_bs)]
        for k, s in enumerate(self.assignment):
            sets[s].append(k)
        return [tuple(q) for q in sets]

    def matrix(self):
        """Binary S x K association matrix."""
        A = np.zeros((self.n_bs, self.K), dtype=int)
        A[list(self.assignment), np.arange(self.K)] = 1
        return A

    def value(self, R):
        """Sum of ``R[s, k]`` over the assigned pairs."""
        R = np.asarray(R)
        return float(R[list(self.assignment), np.arange(self.K)].sum())


@dataclass(frozen=True)
class RateReport:
    sinr: np.ndarray  # linear
    rate: np.ndarray  # bit/s
    sum_rate: float  # bit/s
    energy_efficiency: float  # bit/s/W


def zf_precoder(H, power):
    """Zero-forcing precoder ``c H^+`` with ``||W||_F^2 = power``.

    Parameters
    ----------
    H : (Q, M) complex array
        Stacked user channels (rows), ``Q <= M`` and full row rank.
    power : float
        Transmit power in watts.

    Returns
    -------
    (M, Q) complex array whose column q serves row q of ``H``.
    """
    if power < 0:
        raise ValueError(f"power must be >= 0, got {power}")
    pinv = pseudo_inverse(H)
    return pinv * (np.sqrt(power) / frobenius_norm(pinv))


def sinr_all(channels, phi, assoc, precoders, sigma2):
    """Per-user SINR with intra-cell interference only.

    Parameters
    ----------
    channels : ChannelSet
    phi : PhaseVector or array of reflection coefficients
        IRS state used for the reflected channels of the assisted BS.
    assoc : AssociationMap
    precoders : sequence of (M, |Q_s|) arrays, one per BS
    sigma2 : float
        Noise power in watts.
    """
    user_channels = bs_user_channels(channels, phi)
    sinr = np.zeros(assoc.K)
    for s, users in enumerate(assoc.served_sets):
        W = precoders[s]
        if W.shape[1] != len(users):
            raise ValueError(f"BS {s} precoder has {W.shape[1]} columns for {len(users)} users")
        gains = np.abs(user_channels[s, list(users)] @ W) ** 2
        signal = np.diag(gains).copy()
        np.fill_diagonal(gains, 0.0)
        interference = gains.sum(axis=1)
        sinr[list(users)] = signal / (interference + sigma2)
    return sinr


def rate_report(sinrs, bandwidth, total_tx_power):
    sinrs = np.asarray(sinrs, dtype=float)
    if total_tx_power <= 0:
        raise ValueError(f"total transmit power must be > 0, got {total_tx_power}")
    if np.any(sinrs < 0):
        raise ValueError("SINR values must be non-negative")
    rate = bandwidth * np.log2(1.0 + sinrs)
    sum_rate = float(rate.sum())
    return RateReport(
        sinr=sinrs, rate=rate, sum_rate=sum_rate, energy_efficiency=sum_rate / total_tx_power
    )


def candidate_rate_matrix(channels, phi, cfg):
    """S x K auction coefficients.

    ``R[s, k] = B log2(1 + (P_s / ceil(K/S)) ||h_k^s||^2 / sigma^2)``: the
    interference-free rate user k would get from BS s under an equal split of
    the BS power over a balanced load. It does not depend on the association.
    """
    H = bs_user_channels(channels, phi)
    strength = np.sum(np.abs(H) ** 2, axis=2)
    per_user_power = cfg.p_watt / -(-cfg.K // cfg.S)
    return cfg.B * np.log2(1.0 + per_user_power * strength / cfg.sigma2)
