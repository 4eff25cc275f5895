"""Random channel synthesis for the two-tier (BS-IRS-user / BS-user) downlink.

Array orientation is fixed: every BS has its ULA along the y axis (broadside
along x), the IRS has its ULA along the x axis (broadside along y, facing the
user cluster). An angle is the arcsine of the link direction projected on the
array axis, so a target straight along broadside sits at angle 0.

Draw order for one realization, all from the same generator: user positions,
the BS-IRS channel (shadowing, LoS gain, then per NLoS path: AoA, AoD, gain),
then IRS-user links for users 0..K-1, then direct links BS-major over the
non-assisted BSs. None of these draw counts depend on M, N or b, so two
configs that differ only in those sizes see the same random geometry.
"""

from dataclasses import dataclass, field

import numpy as np

from .numerics import complex_gaussian

__all__ = [
    "ChannelSet",
    "BS_ARRAY_AXIS",
    "IRS_ARRAY_AXIS",
    "sample_disk",
    "place_users",
    "pathloss_db",
    "array_angle",
    "ula_response",
    "synth_bs_irs_channel",
    "synth_irs_user_channel",
    "synth_bs_user_channel",
    "synthesize_channels",
    "effective_channel",
    "bs_user_channels",
]

BS_ARRAY_AXIS = (0.0, 1.0)
IRS_ARRAY_AXIS = (1.0, 0.0)


@dataclass(frozen=True, eq=False)
class ChannelSet:
    """One channel realization.

    Attributes
    ----------
    G : (N, M) complex array
        BS-IRS channel of the IRS-assisted BS.
    h_r : (K, N) complex array
        IRS-user channels, one row per user.
    h_d : dict[int, (K, M) complex array]
        Direct BS-user channels of every non-assisted BS.
    user_positions : (K, 2) float array
    assisted_bs : int
    """

    G: np.ndarray
    h_r: np.ndarray
    h_d: dict
    user_positions: np.ndarray
    assisted_bs: int = 0
    irs_enabled: bool = field(default=True)

    @property
    def K(self):
        return self.h_r.shape[0]

    @property
    def N(self):
        return self.G.shape[0]

    @property
    def M(self):
        return self.G.shape[1]

    @property
    def S(self):
        return len(self.h_d) + 1

    def without_irs(self):
        """Same realization with the reflected path switched off (N treated as 0)."""
        return ChannelSet(
            G=self.G,
            h_r=np.zeros_like(self.h_r),
            h_d=self.h_d,
            user_positions=self.user_positions,
            assisted_bs=self.assisted_bs,
            irs_enabled=False,
        )


def sample_disk(center, radius, count, rng):
    """``count`` points uniform over the disk area (sqrt-radius sampling)."""
    u = rng.random((count, 2))
    r = radius * np.sqrt(u[:, 0])
    ang = 2 * np.pi * u[:, 1]
    return np.column_stack([center[0] + r * np.cos(ang), center[1] + r * np.sin(ang)])


def place_users(cfg, rng):
    return sample_disk(cfg.user_center, cfg.user_radius, cfg.K, rng)


def pathloss_db(d, rng, cfg, shadowing=None):
    """Path loss ``kappa_a + 10 kappa_b log10(d) + kappa_c`` in dB.

    ``kappa_c ~ N(0, sigma_c^2)`` is drawn from ``rng`` unless ``shadowing``
    is given, in which case no draw is made.
    """
    if not d > 0:
        raise ValueError(f"distance must be > 0, got {d}")
    if shadowing is None:
        shadowing = cfg.sigma_c * rng.standard_normal()
    return cfg.kappa_a + 10 * cfg.kappa_b * np.log10(d) + shadowing


def array_angle(origin, target, axis):
    """Angle of ``target`` seen from ``origin`` relative to the broadside of an
    array lying along ``axis``."""
    delta = np.asarray(target, dtype=float) - np.asarray(origin, dtype=float)
    dist = np.hypot(*delta)
    if dist == 0:
        raise ValueError("coincident endpoints have no direction")
    return float(np.arcsin(np.clip(np.dot(delta, axis) / dist, -1.0, 1.0)))


def ula_response(n, theta, spacing_ratio=0.5):
    """Row steering vector ``[1, e^{j2pi(d/lambda) sin(theta)}, ...]`` of length n."""
    if n < 1:
        raise ValueError(f"array needs n >= 1 elements, got {n}")
    return np.exp(2j * np.pi * spacing_ratio * np.arange(n) * np.sin(theta))


def _gain_variance(kappa_db):
    return 10.0 ** (-0.1 * kappa_db)


def synth_bs_irs_channel(cfg, rng, gains=None):
    """Geometric N x M channel from the assisted BS to the IRS.

    One LoS path plus ``G_p`` NLoS paths, each a rank-one term
    ``alpha_g xi_t xi_r conj(a_N(AoA))^T a_M(AoD)``. LoS angles come from the
    BS/IRS geometry; NLoS angles are uniform on [-pi/2, pi/2]. Shadowing is
    drawn once for the link and NLoS gains carry an extra
    ``nlos_penalty_db``. Passing ``gains`` (length ``G_p + 1``) fixes the
    path gains and skips the path-loss draws.
    """
    bs = cfg.bs_positions[cfg.irs_assisted_bs]
    irs = cfg.irs_position
    amp = cfg.xi_t_amp * cfg.xi_r_amp
    if gains is None:
        kappa = pathloss_db(np.hypot(irs[0] - bs[0], irs[1] - bs[1]), rng, cfg)
        los_var = _gain_variance(kappa)
        nlos_var = _gain_variance(kappa + cfg.nlos_penalty_db)
    else:
        gains = np.asarray(gains, dtype=complex)
        if gains.shape != (cfg.G_p + 1,):
            raise ValueError(f"expected {cfg.G_p + 1} path gains, got shape {gains.shape}")

    aoa = array_angle(irs, bs, IRS_ARRAY_AXIS)
    aod = array_angle(bs, irs, BS_ARRAY_AXIS)
    alpha = complex_gaussian(rng, los_var) if gains is None else gains[0]
    G = alpha * amp * np.outer(
        ula_response(cfg.N, aoa, cfg.element_spacing_ratio).conj(),
        ula_response(cfg.M, aod, cfg.element_spacing_ratio),
    )
    for g in range(1, cfg.G_p + 1):
        aoa, aod = rng.uniform(-np.pi / 2, np.pi / 2, size=2)
        alpha = complex_gaussian(rng, nlos_var) if gains is None else gains[g]
        G = G + alpha * amp * np.outer(
            ula_response(cfg.N, aoa, cfg.element_spacing_ratio).conj(),
            ula_response(cfg.M, aod, cfg.element_spacing_ratio),
        )
    return G


def _single_path(cfg, origin, target, n, axis, rng, alpha):
    dist = np.hypot(target[0] - origin[0], target[1] - origin[1])
    if dist == 0:
        raise ValueError("user coincides with the transmitter")
    if alpha is None:
        alpha = complex_gaussian(rng, _gain_variance(pathloss_db(dist, rng, cfg)))
    theta = array_angle(origin, target, axis)
    return alpha * cfg.xi_t_amp * cfg.xi_r_amp * ula_response(n, theta, cfg.element_spacing_ratio)


def synth_irs_user_channel(cfg, user_position, rng, alpha=None):
    """Single-path IRS -> user channel ``alpha xi_t xi_r a_N(AoD)``, length N."""
    return _single_path(cfg, cfg.irs_position, user_position, cfg.N, IRS_ARRAY_AXIS, rng, alpha)


def synth_bs_user_channel(cfg, bs_position, user_position, rng, alpha=None):
    """Single-path BS -> user channel with the BS's M-element ULA."""
    return _single_path(cfg, bs_position, user_position, cfg.M, BS_ARRAY_AXIS, rng, alpha)


def synthesize_channels(cfg, rng):
    """Draw one full :class:`ChannelSet` for ``cfg``."""
    users = place_users(cfg, rng)
    G = synth_bs_irs_channel(cfg, rng)
    h_r = np.array([synth_irs_user_channel(cfg, u, rng) for u in users]).reshape(cfg.K, cfg.N)
    h_d = {
        s: np.array(
            [synth_bs_user_channel(cfg, cfg.bs_positions[s], u, rng) for u in users]
        ).reshape(cfg.K, cfg.M)
        for s in cfg.direct_bs
    }
    return ChannelSet(G=G, h_r=h_r, h_d=h_d, user_positions=users, assisted_bs=cfg.irs_assisted_bs)


def _coefficients(phi):
    return np.asarray(getattr(phi, "coefficients", phi))


def effective_channel(h_r, phi, G):
    """Reflected channel ``h_r diag(theta) G`` (length M).

    ``phi`` is a :class:`~simirs.phases.PhaseVector` or an array of
    reflection coefficients. ``h_r`` may also be a (K, N) stack of rows.
    """
    theta = _coefficients(phi)
    h_r = np.asarray(h_r)
    G = np.asarray(G)
    if h_r.shape[-1] != theta.shape[0] or G.shape[0] != theta.shape[0]:
        raise ValueError(
            f"dimension mismatch: h_r {h_r.shape}, phases {theta.shape}, G {G.shape}"
        )
    return (h_r * theta) @ G


def bs_user_channels(channels, phi):
    """(S, K, M) array whose row [s, k] is the channel from BS s to user k."""
    out = np.empty((channels.S, channels.K, channels.M), dtype=complex)
    for s in range(channels.S):
        if s == channels.assisted_bs:
            out[s] = effective_channel(channels.h_r, phi, channels.G)
        else:
            out[s] = channels.h_d[s]
    return out
