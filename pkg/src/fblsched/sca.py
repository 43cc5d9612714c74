"""Joint user scheduling and beamforming by penalized successive convex approximation.

The binary "user k is served" indicator is relaxed to ``kappa_k in [0, 1]``
and pushed back towards {0, 1} by a difference-of-convex penalty weighted
by ``mu``. Each iteration solves the convex surrogate built in
:mod:`fblsched.conic.problems` around the previous iterate. After the loop
the relaxed indicators are rounded and the chosen set is re-verified with
the power-minimization SOCP, so every returned schedule is feasible.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .channel import ChannelRealization, sinr_all
from .conic import (OPTIMAL, ScaLayout, build_sca_subproblem, min_power_feasible,
                    solve, surrogate_objective)
from .fbl_rate import FblParams, min_sinr, rate

log = logging.getLogger(__name__)

CONVERGED = "converged"
MAX_ITERS = "max-iters"
DEGENERATE = "degenerate"

MONOTONE_SLACK = 1e-6


@dataclass(frozen=True)
class ScaConfig:
    mu: float = 0.05
    delta: float = 1e-3
    max_iters: int = 100
    round_threshold: float = 0.5
    tuning_enabled: bool = True
    max_tuning_rounds: int | None = None  # None: one round per user
    beam_power_floor: float = 1e-8
    fill_power: bool = True
    backend: str = "clarabel"

    def __post_init__(self) -> None:
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if not 0.0 < self.round_threshold < 1.0:
            raise ValueError("round_threshold must lie in (0, 1)")
        if self.mu < 0.0:
            raise ValueError("mu must be non-negative")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if self.backend not in ("clarabel", "cvxpy"):
            raise ValueError(f"unknown backend {self.backend!r}")


@dataclass
class ScaState:
    """Iterate of the SCA loop over the candidate users only."""

    tau: int
    kappa: np.ndarray
    weights: np.ndarray
    phi: np.ndarray
    objective_varsigma: float


@dataclass
class SchedulingSolution:
    scheduled_set: tuple
    weights: np.ndarray
    per_user_sinr: np.ndarray
    per_user_rate_nats: np.ndarray
    total_power: float
    iterations_used: int
    tuning_rounds_used: int
    status: str
    kappa: np.ndarray | None = None
    trace: list = field(default_factory=list, repr=False)

    @property
    def cardinality(self) -> int:
        return len(self.scheduled_set)


def prefilter(realization: ChannelRealization, gamma_tilde, power_budget: float) -> list[int]:
    """Users that could be served alone with MRT at full power."""
    gains = realization.gains()
    gt = np.broadcast_to(np.asarray(gamma_tilde, dtype=float), gains.shape)
    return [k for k in range(gains.size) if power_budget * gains[k] >= gt[k] and gains[k] > 0]


def user_thresholds(params: FblParams, num_users: int, rate_targets=None) -> np.ndarray:
    """Per-user minimum SINR; all users share ``params`` unless ``rate_targets`` is given."""
    if rate_targets is None:
        return np.full(num_users, min_sinr(params))
    return np.array([min_sinr(params, r) for r in np.broadcast_to(rate_targets, (num_users,))])


def initialize(hbar: np.ndarray, gamma_tilde, power_budget: float, mu: float,
               zeroed: Sequence[int] = ()) -> ScaState:
    """MRT beams with equal power; kappa set so ``kappa * gamma_tilde <= gamma`` holds.

    ``hbar`` holds the candidate users only. Users in ``zeroed`` start with a
    zero beam and their share of the power goes to the others.
    """
    K, Nt = hbar.shape
    gt = np.broadcast_to(np.asarray(gamma_tilde, dtype=float), (K,))
    on = np.ones(K, dtype=bool)
    on[list(zeroed)] = False
    weights = np.zeros((K, Nt), dtype=complex)
    if on.any():
        per_user = power_budget / on.sum()
        norms = np.linalg.norm(hbar[on], axis=1, keepdims=True)
        weights[on] = np.sqrt(per_user) * hbar[on] / norms
    g = np.abs(hbar.conj() @ weights.T) ** 2
    signal = np.diag(g).copy()
    phi = g.sum(axis=1) - signal + 1.0
    kappa = np.minimum(1.0, signal / phi / gt)
    varsigma = surrogate_objective(kappa, kappa, mu)
    return ScaState(0, kappa, weights, phi, varsigma)


def iterate(state: ScaState, hbar: np.ndarray, gamma_tilde, power_budget: float,
            mu: float, backend: str = "clarabel") -> ScaState | None:
    """Solve the surrogate at ``state``; ``None`` if the solver fails."""
    prog = build_sca_subproblem(hbar, gamma_tilde, state, mu, power_budget)
    sol = solve(prog, backend=backend)
    if sol.status != OPTIMAL:
        log.debug("surrogate solve failed at tau=%d: %s", state.tau, sol.status)
        return None
    lay = ScaLayout(*hbar.shape)
    w, kappa, phi = lay.unpack(sol.primal)
    return ScaState(state.tau + 1, np.clip(kappa, 0.0, 1.0), w, phi, sol.objective_value)


def _relative_change(new: float, old: float, delta: float) -> bool:
    if abs(old) < 1e-12:
        return abs(new - old) <= delta * 1e-3
    return abs((new - old) / old) <= delta


@dataclass
class _LoopResult:
    state: ScaState
    status: str
    trace: list


def _sca_loop(hbar, gamma_tilde, power_budget, config: ScaConfig,
              zeroed: Sequence[int] = ()) -> _LoopResult:
    state = initialize(hbar, gamma_tilde, power_budget, config.mu, zeroed)
    trace = [_trace_row(state)]
    for _ in range(config.max_iters):
        nxt = iterate(state, hbar, gamma_tilde, power_budget, config.mu, config.backend)
        if nxt is None or nxt.objective_varsigma > state.objective_varsigma + MONOTONE_SLACK:
            # keep the last accepted iterate
            return _LoopResult(state, DEGENERATE, trace)
        done = _relative_change(nxt.objective_varsigma, state.objective_varsigma, config.delta)
        state = nxt
        trace.append(_trace_row(state))
        if done:
            return _LoopResult(state, CONVERGED, trace)
    return _LoopResult(state, MAX_ITERS, trace)


def _trace_row(state: ScaState) -> dict:
    return {
        "tau": state.tau,
        "objective": state.objective_varsigma,
        "sum_kappa": float(np.sum(state.kappa)),
        "power": float(np.sum(np.abs(state.weights) ** 2)),
    }


def finalize(realization: ChannelRealization, params: FblParams, gamma_tilde, power_budget: float,
             chosen: Sequence[int], priority=None, fill_power: bool = True,
             rate_targets=None, backend: str = "clarabel") -> tuple[tuple, np.ndarray]:
    """Feasible beams for ``chosen``, dropping the lowest-priority user until feasible.

    Returns the final set and (K, Nt) weights. With ``fill_power`` the
    min-power beams are scaled up to spend the whole budget, which can only
    raise every scheduled SINR.
    """
    K, Nt = realization.channels.shape
    hbar = realization.normalized_channels
    users = list(chosen)
    prio = {} if priority is None else dict(priority)
    users.sort(key=lambda k: (-prio.get(k, 0.0), k))
    while users:
        res = min_power_feasible(hbar, users, gamma_tilde, power_budget, backend=backend)
        if res.feasible:
            w = res.weights
            if fill_power and res.power > 0:
                w = w * np.sqrt(power_budget / res.power)
            return tuple(sorted(users)), w
        users.pop()
    return (), np.zeros((K, Nt), dtype=complex)


def evaluate(realization: ChannelRealization, params: FblParams, users: Sequence[int],
             weights: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """Verified per-user SINR and FBL rate (zero for unserved users) and total power."""
    K = realization.num_users
    sinrs = np.zeros(K)
    rates = np.zeros(K)
    users = list(users)
    if users:
        s = sinr_all(weights[users], realization.normalized_channels[users])
        sinrs[users] = s
        rates[users] = [rate(g, params) for g in s]
    return sinrs, rates, float(np.sum(np.abs(weights[users]) ** 2)) if users else 0.0


def _solution_from_loop(realization, params, gamma_tilde, power_budget, config, candidates,
                        loop: _LoopResult, tuning_rounds: int = 0) -> SchedulingSolution:
    K = realization.num_users
    kappa_full = np.zeros(K)
    kappa_full[candidates] = loop.state.kappa
    chosen = [k for k in candidates if kappa_full[k] >= config.round_threshold]
    users, w = finalize(realization, params, gamma_tilde, power_budget, chosen,
                        priority={k: kappa_full[k] for k in chosen},
                        fill_power=config.fill_power, backend=config.backend)
    sinrs, rates, power = evaluate(realization, params, users, w)
    return SchedulingSolution(users, w, sinrs, rates, power, loop.state.tau, tuning_rounds,
                              loop.status, kappa_full, loop.trace)


def _empty_solution(realization: ChannelRealization) -> SchedulingSolution:
    K, Nt = realization.channels.shape
    return SchedulingSolution((), np.zeros((K, Nt), dtype=complex), np.zeros(K), np.zeros(K),
                              0.0, 0, 0, DEGENERATE, np.zeros(K))


def _better(a: SchedulingSolution, b: SchedulingSolution) -> bool:
    if a.cardinality != b.cardinality:
        return a.cardinality > b.cardinality
    return a.total_power < b.total_power - 1e-9


def _setup(realization, params, power_budget, gamma_tilde, rate_targets):
    P = realization.power_budget if power_budget is None else float(power_budget)
    if gamma_tilde is None:
        gamma_tilde = user_thresholds(params, realization.num_users, rate_targets)
    gt = np.broadcast_to(np.asarray(gamma_tilde, dtype=float), (realization.num_users,)).copy()
    return P, gt, prefilter(realization, gt, P)


def run(realization: ChannelRealization, params: FblParams, config: ScaConfig = ScaConfig(),
        *, power_budget: float | None = None, gamma_tilde=None,
        rate_targets=None) -> SchedulingSolution:
    """One SCA pass (no tuning) followed by rounding and SOCP re-verification.

    ``gamma_tilde`` overrides the SINR thresholds derived from ``params``
    (the Shannon baseline uses this); rates are always verified against
    ``params``.
    """
    return run_plain_and_tuned(realization, params, replace(config, tuning_enabled=False),
                               power_budget=power_budget, gamma_tilde=gamma_tilde,
                               rate_targets=rate_targets)[0]


def run_with_tuning(realization: ChannelRealization, params: FblParams,
                    config: ScaConfig = ScaConfig(), **kwargs) -> SchedulingSolution:
    """SCA pass plus restarts that switch off users stuck at low kappa but holding power."""
    return run_plain_and_tuned(realization, params, replace(config, tuning_enabled=True),
                               **kwargs)[1]


def run_plain_and_tuned(realization: ChannelRealization, params: FblParams,
                        config: ScaConfig = ScaConfig(), *, power_budget: float | None = None,
                        gamma_tilde=None, rate_targets=None
                        ) -> tuple[SchedulingSolution, SchedulingSolution]:
    """Untuned result and best-of tuned result; they share the first pass."""
    P, gt, candidates = _setup(realization, params, power_budget, gamma_tilde, rate_targets)
    if not candidates:
        empty = _empty_solution(realization)
        return empty, empty
    hbar = realization.normalized_channels[candidates]
    gt_c = gt[candidates]

    loop = _sca_loop(hbar, gt_c, P, config)
    plain = _solution_from_loop(realization, params, gt, P, config, candidates, loop)
    if not config.tuning_enabled:
        return plain, plain

    max_rounds = len(candidates) if config.max_tuning_rounds is None else config.max_tuning_rounds
    best = plain
    zeroed: list[int] = []
    total_iters = loop.state.tau
    rounds = 0
    while rounds < max_rounds:
        st = loop.state
        beam_power = np.sum(np.abs(st.weights) ** 2, axis=1)
        stuck = [i for i in range(len(candidates))
                 if st.kappa[i] < config.round_threshold
                 and beam_power[i] > config.beam_power_floor and i not in zeroed]
        if not stuck:
            break
        zeroed.append(min(stuck, key=lambda i: (st.kappa[i], i)))
        rounds += 1
        loop = _sca_loop(hbar, gt_c, P, config, zeroed=zeroed)
        total_iters += loop.state.tau
        cand = _solution_from_loop(realization, params, gt, P, config, candidates, loop, rounds)
        if _better(cand, best):
            best = cand
    best = replace(best, iterations_used=total_iters, tuning_rounds_used=rounds)
    return plain, best
