"""Discrete IRS phase optimization for a fixed association.

The sum rate of the users served through the IRS is lifted with the
Lagrangian dual transform (auxiliary ``lam``), the resulting sum of ratios
is handled with the quadratic transform (auxiliary ``y``), and for fixed
``(lam, y)`` the phases are improved one element at a time by projecting
onto the b-bit codebook.

Notation: the functions here work on ``x = conj(theta)``, where ``theta`` is
the vector of reflection coefficients. With
``b[m, j] = h_r[m] * (G @ W[:, j])`` this gives
``x^H b[m, j] = h_r[m] diag(theta) G W[:, j]``, the received amplitude of
stream j at user m. :class:`PhaseVector` always stores ``theta``.
"""

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .phases import PhaseVector, codebook

__all__ = [
    "PhaseVector",
    "FpState",
    "compute_b_vectors",
    "stream_gains",
    "sinr_from_gains",
    "update_lambda",
    "update_y",
    "build_quadratic",
    "quadratic_objective",
    "fp_objective",
    "surrogate_objective",
    "refresh",
    "element_update",
    "sweep",
    "fp_solve",
    "optimize_phases",
]


@dataclass
class FpState:
    """Auxiliary variables and the quadratic form of one FP round."""

    lam: np.ndarray
    y: np.ndarray
    U: np.ndarray
    v: np.ndarray
    C: float


def compute_b_vectors(h_r, G, W):
    """``b[m, j, :] = h_r[m] * (G @ W[:, j])`` for the users of the assisted BS.

    Parameters
    ----------
    h_r : (Q, N) IRS-user channels of the served users, in precoder column order
    G : (N, M) BS-IRS channel
    W : (M, Q) precoder of the assisted BS
    """
    h_r = np.atleast_2d(np.asarray(h_r))
    G = np.asarray(G)
    W = np.asarray(W)
    if W.ndim == 1:
        W = W[:, None]
    if h_r.shape[1] != G.shape[0] or G.shape[1] != W.shape[0] or h_r.shape[0] != W.shape[1]:
        raise ValueError(
            f"dimension mismatch: h_r {h_r.shape}, G {G.shape}, W {W.shape}"
        )
    GW = G @ W  # (N, Q)
    return h_r[:, None, :] * GW.T[None, :, :]


def stream_gains(x, b):
    """``g[m, j] = x^H b[m, j]``."""
    return np.einsum("n,mjn->mj", np.conj(x), b)


def sinr_from_gains(g, sigma2):
    power = np.abs(g) ** 2
    signal = np.diag(power).copy()
    np.fill_diagonal(power, 0.0)
    return signal / (power.sum(axis=1) + sigma2)


def update_lambda(sinrs):
    """Optimal dual-transform variable for fixed phases: ``lam = sinr``."""
    lam = np.array(sinrs, dtype=float)
    if np.any(lam < 0):
        raise ValueError("SINR values must be non-negative")
    return lam


def update_y(x, b, lam, sigma2):
    """Stationary point of the quadratic-transform objective in ``y``."""
    g = stream_gains(x, b)
    denom = np.sum(np.abs(g) ** 2, axis=1) + sigma2
    return np.sqrt(1.0 + lam) * np.diag(g) / denom


def build_quadratic(y, lam, b, sigma2):
    """Return ``(U, v, C)`` with ``f6(x, y) = -x^H U x + 2 Re(x^H v) + C``."""
    w = np.abs(y) ** 2
    U = np.einsum("m,mjn,mjk->nk", w, b, np.conj(b))
    Q = b.shape[0]
    diag_b = b[np.arange(Q), np.arange(Q)]  # (Q, N): b[m, m]
    v = np.einsum("m,mn->n", np.sqrt(1.0 + lam) * np.conj(y), diag_b)
    C = -float(np.sum(w)) * sigma2
    return U, v, C


def quadratic_objective(x, U, v, C):
    return float(-np.real(np.conj(x) @ U @ x) + 2.0 * np.real(np.conj(x) @ v) + C)


def fp_objective(x, y, lam, b, sigma2):
    """Quadratic-transform objective ``f6(x, y)`` (dimensionless)."""
    g = stream_gains(x, b)
    first = 2.0 * np.sum(np.sqrt(1.0 + lam) * np.real(np.conj(y) * np.diag(g)))
    second = np.sum(np.abs(y) ** 2 * (np.sum(np.abs(g) ** 2, axis=1) + sigma2))
    return float(first - second)


def surrogate_objective(x, y, lam, b, sigma2):
    """``sum(log(1 + lam) - lam) + f6``: the lifted objective in nats.

    It equals the sum of ``log(1 + sinr)`` right after a (lam, y) refresh and
    no block update decreases it, so it is the quantity tracked for
    convergence.
    """
    return float(np.sum(np.log1p(lam) - lam)) + fp_objective(x, y, lam, b, sigma2)


def refresh(x, b, sigma2):
    """One (lam, y) refresh followed by the (U, v, C) assembly."""
    lam = update_lambda(sinr_from_gains(stream_gains(x, b), sigma2))
    y = update_y(x, b, lam, sigma2)
    U, v, C = build_quadratic(y, lam, b, sigma2)
    return FpState(lam=lam, y=y, U=U, v=v, C=C)


def _project(d, bits, incumbent):
    """Codebook index maximizing ``Re(conj(c) d)``; lower index on ties."""
    if d == 0:
        return incumbent
    levels = 2**bits
    step = 2 * math.pi / levels
    lo = int(math.floor((cmath.phase(d) % (2 * math.pi)) / step)) % levels
    hi = (lo + 1) % levels
    score_lo = (d * cmath.exp(-1j * step * lo)).real
    score_hi = (d * cmath.exp(-1j * step * hi)).real
    if score_lo == score_hi:
        return min(lo, hi)
    return lo if score_lo > score_hi else hi


def element_update(n, x, U, v, bits, incumbent=None):
    """Best codebook index for element ``n`` of ``x`` with the others fixed.

    Maximizes ``-u_nn + 2 Re(conj(x_n) d_n)`` with
    ``d_n = v_n - sum_{j != n} u_nj x_j``, which picks the codebook phase at
    the smallest circular distance from ``angle(d_n)``. When ``d_n = 0``
    every phase is optimal and ``incumbent`` (default: index of the current
    ``x_n``) is kept.
    """
    d = complex(v[n] - U[n] @ x + U[n, n] * x[n])
    if incumbent is None:
        incumbent = _nearest_index(x[n], bits)
    return _project(d, bits, incumbent)


def _nearest_index(c, bits):
    levels = 2**bits
    return int(round((cmath.phase(c) % (2 * math.pi)) / (2 * math.pi / levels))) % levels


def sweep(x_idx, U, v, bits):
    """Update elements 0..N-1 in order; returns the new index array and
    whether anything changed."""
    cb = codebook(bits)
    idx = np.array(x_idx, dtype=np.int64)
    x = cb[idx]
    changed = False
    for n in range(idx.size):
        new = element_update(n, x, U, v, bits, incumbent=int(idx[n]))
        if new != idx[n]:
            idx[n] = new
            x[n] = cb[new]
            changed = True
    return idx, changed


def fp_solve(b, sigma2, x_idx, bits, max_iters=100, tol=1e-6):
    """Run FP rounds from the codebook indices ``x_idx`` (of ``x``).

    Each round refreshes (lam, y), rebuilds (U, v, C) and does one sweep.
    Returns ``(x_idx, trace)``; ``trace`` holds the surrogate objective after
    every refresh and after every sweep and is nondecreasing.
    """
    cb = codebook(bits)
    idx = np.array(x_idx, dtype=np.int64)
    trace = []
    previous = None
    for _ in range(max_iters):
        x = cb[idx]
        state = refresh(x, b, sigma2)
        trace.append(surrogate_objective(x, state.y, state.lam, b, sigma2))
        idx, changed = sweep(idx, state.U, state.v, bits)
        current = surrogate_objective(cb[idx], state.y, state.lam, b, sigma2)
        trace.append(current)
        if not changed:
            break
        if previous is not None and abs(current - previous) <= tol * abs(previous):
            break
        previous = current
    return idx, np.array(trace)


def optimize_phases(channels, W_i, assoc, cfg, init=None):
    """Optimize the IRS phases for the users the assisted BS serves.

    Parameters
    ----------
    channels : ChannelSet
    W_i : (M, |Q_i|) precoder of the assisted BS, columns in served-set order
    assoc : AssociationMap
    cfg : ScenarioConfig
    init : PhaseVector, optional
        Warm start; all-zero phases when omitted.

    Returns
    -------
    (PhaseVector, ndarray)
        Optimized phases and the nondecreasing surrogate trace.
    """
    users = assoc.served_sets[channels.assisted_bs]
    if not users:
        raise ValueError("the IRS-assisted BS serves no user")
    if init is None:
        init = PhaseVector.zeros(channels.N, cfg.b)
    if init.bits != cfg.b or init.n != channels.N:
        raise ValueError("initial phases do not match the IRS size / resolution")
    levels = 2**cfg.b
    b = compute_b_vectors(channels.h_r[list(users)], channels.G, W_i)
    x_idx = (-init.indices) % levels
    x_idx, trace = fp_solve(b, cfg.sigma2, x_idx, cfg.b, cfg.max_fp_iters, cfg.fp_tol)
    return PhaseVector((-x_idx) % levels, cfg.b), trace
