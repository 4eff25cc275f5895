"""Alternating optimization of phases and association, the comparison
baselines, and seeded Monte-Carlo sweeps.

Seeds: one integer seed fixes the channel realization. Baselines that need
random phases draw them from the same generator right after the channels,
so every method sees identical channels for a given seed, and trial ``t``
of a Monte-Carlo run always uses seed ``base_seed + t``.
"""

from dataclasses import dataclass, field

import numpy as np

from .assoc import (
    auction_associate,
    balanced_associate,
    nearest_associate,
    rssi_associate,
)
from .channel import bs_user_channels, synthesize_channels
from .config import ConfigError
from .irs_opt import optimize_phases
from .numerics import RankDeficientError, make_rng
from .phases import PhaseVector
from .phy import AssociationMap, candidate_rate_matrix, rate_report, sinr_all, zf_precoder

__all__ = [
    "METHODS",
    "BASELINES",
    "SWEEP_PARAMS",
    "SystemState",
    "IterationRecord",
    "IterationTrace",
    "MethodStats",
    "SweepResult",
    "evaluate_state",
    "run_alternating",
    "run_baseline",
    "run_method",
    "monte_carlo",
    "sweep",
]

BASELINES = ("rpbf_rssi", "rpbf_nbua", "no_irs")
METHODS = ("proposed",) + BASELINES

# sweep parameter name -> config field
SWEEP_PARAMS = {"M": "M", "N": "N", "Ps": "P_s", "P_s": "P_s", "K": "K", "b": "b"}


@dataclass(frozen=True)
class SystemState:
    """A fully evaluated operating point."""

    phases: PhaseVector
    assoc: AssociationMap
    precoders: tuple  # W_s, (M, |Q_s|) each
    report: object  # RateReport

    @property
    def sum_rate(self):
        return self.report.sum_rate

    def tx_power(self):
        return np.array([float(np.sum(np.abs(W) ** 2)) for W in self.precoders])


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    sum_rate: float  # state reached in this iteration
    best_sum_rate: float  # best state up to and including this iteration
    f6_final: float  # lifted FP objective at the end of the phase step (nan at iteration 0)
    assoc: AssociationMap
    phases: PhaseVector
    tx_power: np.ndarray

    @property
    def phase_digest(self):
        return self.phases.digest()


@dataclass
class IterationTrace:
    """Initial state plus one record per outer iteration (at most
    ``max_outer_iters`` of them); ``best`` is the state returned."""

    initial: IterationRecord
    records: list = field(default_factory=list)
    converged: bool = False
    best: SystemState = None
    channels: object = None

    def __len__(self):
        return len(self.records)

    def all_records(self):
        return [self.initial] + list(self.records)

    @property
    def sum_rates(self):
        """Best-so-far sum rate from the initial state onwards."""
        return np.array([r.best_sum_rate for r in self.all_records()])


def _stream_users(H_s, users):
    """Positions (within ``users``) of users that have a nonzero channel."""
    norms = np.sum(np.abs(H_s[list(users)]) ** 2, axis=1)
    return np.flatnonzero(norms > 0)


def _precoders(H, assoc, power):
    """ZF precoder per BS. A user whose channel is identically zero gets no
    stream (zero column). Raises ``RankDeficientError`` with ``.bs`` set."""
    W = []
    for s, users in enumerate(assoc.served_sets):
        Ws = np.zeros((H.shape[2], len(users)), dtype=complex)
        active = _stream_users(H[s], users)
        if active.size:
            try:
                Ws[:, active] = zf_precoder(H[s][[users[a] for a in active]], power)
            except RankDeficientError as exc:
                exc.bs = s
                raise
        W.append(Ws)
    return tuple(W)


def evaluate_state(channels, phases, assoc, cfg):
    """ZF precoders, SINRs and the rate report of one (phases, assoc) pair."""
    H = bs_user_channels(channels, phases)
    W = _precoders(H, assoc, cfg.p_watt)
    sinr = sinr_all(channels, phases, assoc, W, cfg.sigma2)
    report = rate_report(sinr, cfg.B, cfg.S * cfg.p_watt)
    return SystemState(phases=phases, assoc=assoc, precoders=W, report=report)


def _evaluate_repaired(channels, phases, assoc, cfg):
    """:func:`evaluate_state`, moving users off a BS whose channel stack is
    rank deficient.

    The weakest user of the failing BS moves to its best other BS under the
    candidate rates. Gives up after K moves.
    """
    R = None
    for _ in range(assoc.K + 1):
        try:
            return evaluate_state(channels, phases, assoc, cfg)
        except RankDeficientError as exc:
            s = exc.bs
            users = assoc.served_sets[s]
            if len(users) < 2 or assoc.n_bs < 2:
                raise
            if R is None:
                R = candidate_rate_matrix(channels, phases, cfg)
            H = bs_user_channels(channels, phases)[s]
            weakest = min(users, key=lambda k: (np.sum(np.abs(H[k]) ** 2), k))
            scores = R[:, weakest].copy()
            scores[s] = -np.inf
            owner = list(assoc.assignment)
            owner[weakest] = int(np.argmax(scores))
            assoc = AssociationMap(tuple(owner), assoc.n_bs)
    raise RankDeficientError("association repair did not restore full-rank channels")


def _record(iteration, state, best, f6):
    return IterationRecord(
        iteration=iteration,
        sum_rate=state.sum_rate,
        best_sum_rate=best.sum_rate,
        f6_final=f6,
        assoc=state.assoc,
        phases=state.phases,
        tx_power=state.tx_power(),
    )


def run_alternating(cfg, seed, channels=None):
    """Alternate phase optimization and auction association.

    Starts from zero phases with RSSI association. Each outer iteration runs
    the phase step for the current association (warm-started from the
    current phases), rebuilds the candidate rate matrix, re-associates with
    the auction and re-evaluates under ZF. Iterations stop once the best sum
    rate changes by less than ``outer_tol`` (relative) or after
    ``max_outer_iters``.

    Parameters
    ----------
    cfg : ScenarioConfig
    seed : int
    channels : ChannelSet, optional
        Use this realization instead of synthesizing one from ``seed``.

    Returns
    -------
    (RateReport, IterationTrace)
        Report of the best state seen; ``trace.best`` holds that state.
    """
    cfg.validate()
    if channels is None:
        channels = synthesize_channels(cfg, make_rng(seed))
    phases = PhaseVector.zeros(channels.N, cfg.b)
    state = _evaluate_repaired(channels, phases, rssi_associate(channels, phases, cfg), cfg)
    best = state
    trace = IterationTrace(initial=_record(0, state, best, float("nan")), channels=channels)

    for it in range(1, cfg.max_outer_iters + 1):
        previous = best.sum_rate
        i = channels.assisted_bs
        phases, fp_trace = optimize_phases(
            channels, state.precoders[i], state.assoc, cfg, init=state.phases
        )
        # the new phases with the old association are a valid state as well
        state = _evaluate_repaired(channels, phases, state.assoc, cfg)
        if state.sum_rate > best.sum_rate:
            best = state
        R = candidate_rate_matrix(channels, phases, cfg)
        assoc, _ = auction_associate(R, cfg.epsilon)
        state = _evaluate_repaired(channels, phases, assoc, cfg)
        if state.sum_rate > best.sum_rate:
            best = state
        trace.records.append(_record(it, state, best, float(fp_trace[-1])))
        if abs(best.sum_rate - previous) <= cfg.outer_tol * abs(previous):
            trace.converged = True
            break
    trace.best = best
    return best.report, trace


def run_baseline(cfg, seed, method):
    """One-shot evaluation of a comparison scheme on the channels of ``seed``.

    ``rpbf_rssi`` / ``rpbf_nbua``: codebook-uniform random phases with RSSI or
    nearest-BS association. ``no_irs``: reflected links removed and users
    split evenly over the BSs in channel-strength order.
    """
    state = _baseline_state(cfg, seed, method)
    return state.report


def _baseline_state(cfg, seed, method):
    if method not in BASELINES:
        raise ValueError(f"unknown baseline {method!r}; expected one of {BASELINES}")
    cfg.validate()
    rng = make_rng(seed)
    channels = synthesize_channels(cfg, rng)
    if method == "no_irs":
        channels = channels.without_irs()
        phases = PhaseVector.zeros(channels.N, cfg.b)
        strength = np.sum(np.abs(bs_user_channels(channels, phases)) ** 2, axis=2)
        assoc = balanced_associate(strength)
    else:
        phases = PhaseVector.random(channels.N, cfg.b, rng)
        if method == "rpbf_rssi":
            assoc = rssi_associate(channels, phases, cfg)
        else:
            assoc = nearest_associate(channels.user_positions, cfg)
    return _evaluate_repaired(channels, phases, assoc, cfg)


def run_method(cfg, seed, method):
    """RateReport of ``method`` (``proposed`` or a baseline) on ``seed``."""
    if method == "proposed":
        return run_alternating(cfg, seed)[0]
    return run_baseline(cfg, seed, method)


@dataclass(frozen=True)
class MethodStats:
    mean_sum_rate: float
    std_sum_rate: float  # population std over trials
    mean_ee: float
    sum_rates: np.ndarray
    ees: np.ndarray


@dataclass
class SweepResult:
    """Per-value, per-method statistics over paired seeds.

    ``rows`` is a list of ``(value, {method: MethodStats})``; ``errors`` maps
    a value whose derived config was invalid to the error message.
    """

    param: str
    methods: tuple
    trials: int
    rows: list = field(default_factory=list)
    errors: dict = field(default_factory=dict)

    def curve(self, method, stat="mean_sum_rate"):
        return np.array([getattr(stats[method], stat) for _, stats in self.rows])

    def values(self):
        return [value for value, _ in self.rows]


def monte_carlo(cfg, trials, methods=METHODS, base_seed=0):
    """Mean / std of sum rate and mean EE per method over ``trials`` seeds."""
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    out = {}
    for method in methods:
        reports = [run_method(cfg, base_seed + t, method) for t in range(trials)]
        rates = np.array([r.sum_rate for r in reports])
        ees = np.array([r.energy_efficiency for r in reports])
        out[method] = MethodStats(
            mean_sum_rate=float(rates.mean()),
            std_sum_rate=float(rates.std()),
            mean_ee=float(ees.mean()),
            sum_rates=rates,
            ees=ees,
        )
    return out


def sweep(cfg, param, values, trials, methods=METHODS, base_seed=0):
    """Run :func:`monte_carlo` for each value of ``param`` with the same seeds.

    A value that yields an invalid config is recorded in ``errors`` and
    skipped.
    """
    if param not in SWEEP_PARAMS:
        raise ValueError(f"unknown sweep parameter {param!r}; expected one of {sorted(SWEEP_PARAMS)}")
    values = list(values)
    if not values:
        raise ValueError("sweep needs at least one value")
    name = SWEEP_PARAMS[param]
    result = SweepResult(param=param, methods=tuple(methods), trials=trials)
    for value in values:
        value = float(value) if name == "P_s" else int(value)
        try:
            derived = cfg.replace(**{name: value}).validate()
        except ConfigError as exc:
            result.errors[value] = str(exc)
            continue
        result.rows.append((value, monte_carlo(derived, trials, methods, base_seed)))
    return result
