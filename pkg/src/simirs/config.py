"""Scenario configuration: geometry, radio constants and algorithm knobs.

Powers are stored in the units people write them in (dBm, dBi, dB) and
converted to linear values through properties, so a JSON config reads the
same as a parameter table.
"""

import dataclasses
import json
import math
import warnings
from dataclasses import dataclass

from .numerics import db_to_linear, dbm_to_watt

__all__ = ["ConfigError", "ScenarioConfig", "desk_profile", "paper_profile", "PROFILES"]


class ConfigError(ValueError):
    """A scenario parameter violates one of the config invariants.

    ``field`` names the offending parameter so the CLI can report it.
    """

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class ScenarioConfig:
    # counts
    S: int = 2
    K: int = 6
    M: int = 8
    N: int = 16
    b: int = 3
    # radio
    B: float = 100e6  # Hz
    noise_power: float = -117.0  # dBm
    P_s: float = 30.0  # dBm, per BS
    carrier_freq: float = 28e9  # Hz
    # geometry (m); BS index irs_assisted_bs reaches users only through the IRS
    bs_positions: tuple = ((0.0, 0.0), (400.0, 0.0))
    irs_position: tuple = (200.0, 30.0)
    irs_assisted_bs: int = 0
    user_center: tuple = (200.0, 0.0)
    user_radius: float = 50.0
    # propagation
    G_p: int = 5
    kappa_a: float = 72.0
    kappa_b: float = 2.92
    sigma_c: float = 8.7  # dB
    xi_t: float = 9.82  # dBi
    xi_r: float = 0.0  # dBi
    element_spacing_ratio: float = 0.5
    nlos_penalty_db: float = 10.0
    # algorithm
    epsilon: float = 0.2
    max_outer_iters: int = 20
    max_fp_iters: int = 100
    fp_tol: float = 1e-6
    outer_tol: float = 1e-3

    def __post_init__(self):
        # JSON gives lists; keep the dataclass hashable and comparable
        object.__setattr__(
            self, "bs_positions", tuple(tuple(float(c) for c in p) for p in self.bs_positions)
        )
        object.__setattr__(self, "irs_position", tuple(float(c) for c in self.irs_position))
        object.__setattr__(self, "user_center", tuple(float(c) for c in self.user_center))

    # linear-unit views -------------------------------------------------
    @property
    def p_watt(self):
        return dbm_to_watt(self.P_s)

    @property
    def sigma2(self):
        return dbm_to_watt(self.noise_power)

    @property
    def xi_t_amp(self):
        return math.sqrt(db_to_linear(self.xi_t))

    @property
    def xi_r_amp(self):
        return math.sqrt(db_to_linear(self.xi_r))

    @property
    def codebook_size(self):
        return 2**self.b

    @property
    def direct_bs(self):
        """Indices of the BSs with direct user links."""
        return tuple(s for s in range(self.S) if s != self.irs_assisted_bs)

    # -------------------------------------------------------------------
    def validate(self):
        """Check the invariants; raise :class:`ConfigError` on the first violation."""
        for name in ("S", "K", "M", "N", "b", "G_p", "max_outer_iters", "max_fp_iters"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool):
                raise ConfigError(name, f"must be an integer, got {value!r}")
        if self.S < 1:
            raise ConfigError("S", "need at least one BS (S >= 1)")
        if self.K < self.S:
            raise ConfigError("K", f"every BS must serve a user, need K >= S ({self.K} < {self.S})")
        if self.M <= self.K:
            raise ConfigError("M", f"need more BS antennas than users, M > K ({self.M} <= {self.K})")
        if self.N < 1:
            raise ConfigError("N", "IRS needs at least one element (N >= 1)")
        if self.b < 1:
            raise ConfigError("b", "phase resolution needs at least one bit (b >= 1)")
        if self.G_p < 0:
            raise ConfigError("G_p", "NLoS path count must be >= 0")
        if len(self.bs_positions) != self.S:
            raise ConfigError(
                "bs_positions", f"expected {self.S} positions, got {len(self.bs_positions)}"
            )
        if not 0 <= self.irs_assisted_bs < self.S:
            raise ConfigError("irs_assisted_bs", f"must index a BS in [0, {self.S})")
        for name in ("irs_position", "user_center"):
            if len(getattr(self, name)) != 2:
                raise ConfigError(name, "must be a 2-D point")
        points = list(self.bs_positions) + [self.irs_position, self.user_center]
        if any(len(p) != 2 or not all(math.isfinite(c) for c in p) for p in points):
            raise ConfigError("bs_positions", "all positions must be finite 2-D points")
        if not (math.isfinite(self.user_radius) and self.user_radius > 0):
            raise ConfigError("user_radius", "must be finite and > 0")
        for name in (
            "B", "noise_power", "P_s", "carrier_freq", "kappa_a", "kappa_b", "sigma_c",
            "xi_t", "xi_r", "element_spacing_ratio", "nlos_penalty_db", "epsilon",
            "fp_tol", "outer_tol",
        ):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(name, "must be finite")
        if self.B <= 0:
            raise ConfigError("B", "bandwidth must be > 0")
        if self.sigma_c < 0:
            raise ConfigError("sigma_c", "shadowing std must be >= 0")
        if self.element_spacing_ratio <= 0:
            raise ConfigError("element_spacing_ratio", "must be > 0")
        if self.epsilon <= 0:
            raise ConfigError("epsilon", "auction epsilon must be > 0")
        if self.epsilon >= 1.0 / self.S:
            warnings.warn(
                f"epsilon={self.epsilon} >= 1/S; auction exactness on integer rates "
                "is no longer guaranteed",
                stacklevel=2,
            )
        if self.fp_tol < 0 or self.outer_tol < 0:
            raise ConfigError("fp_tol", "tolerances must be >= 0")
        return self

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    # serialization -----------------------------------------------------
    def to_dict(self):
        out = dataclasses.asdict(self)
        out["bs_positions"] = [list(p) for p in self.bs_positions]
        out["irs_position"] = list(self.irs_position)
        out["user_center"] = list(self.user_center)
        return out

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(unknown[0], "unknown config field")
        try:
            cfg = cls(**data)
        except (TypeError, ValueError) as exc:
            raise ConfigError("config", str(exc)) from exc
        return cfg.validate()

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def desk_profile():
    """Small default scenario that keeps exhaustive oracles and suites fast."""
    return ScenarioConfig()


def paper_profile():
    """Full-size scenario: 10 users, 30 antennas, 60 elements, 8-bit phases."""
    return ScenarioConfig(K=10, M=30, N=60, b=8)


PROFILES = {"desk": desk_profile, "paper": paper_profile}
