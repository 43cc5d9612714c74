"""Comparison schedulers: exhaustive search and the Shannon-threshold variant."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, replace

import numpy as np

from .channel import ChannelRealization
from .conic import min_power_feasible
from .fbl_rate import FblParams, shannon_min_sinr
from .sca import ScaConfig, SchedulingSolution, run_plain_and_tuned, evaluate

log = logging.getLogger(__name__)

ES_MAX_USERS = 10


@dataclass
class EsResult:
    best_set: tuple
    weights: np.ndarray
    min_power: float
    subsets_checked: int

    @property
    def cardinality(self) -> int:
        return len(self.best_set)


def exhaustive_search(realization: ChannelRealization, gamma_tilde, power_budget: float | None = None,
                      max_users: int = ES_MAX_USERS, backend: str = "clarabel") -> EsResult:
    """Largest user set that meets its SINR thresholds within the power budget.

    Users that cannot be served even alone are dropped first (a set is only
    feasible if each member is). The rest are enumerated by decreasing set
    size and the search stops at the first feasible set, which therefore has
    the maximum cardinality.
    """
    K, Nt = realization.channels.shape
    if K > max_users:
        raise ValueError(f"exhaustive search is capped at {max_users} users (got {K}); "
                         "lower the number of users or raise max_users")
    P = realization.power_budget if power_budget is None else float(power_budget)
    hbar = realization.normalized_channels
    gt = np.broadcast_to(np.asarray(gamma_tilde, dtype=float), (K,))
    gains = realization.gains()
    # single-user minimum power is gamma / ||h||^2 in closed form
    singles = [k for k in range(K) if gains[k] > 0 and gt[k] / gains[k] <= P]
    checked = 0
    for size in range(len(singles), 1, -1):
        for subset in itertools.combinations(singles, size):
            checked += 1
            res = min_power_feasible(hbar, subset, gt, P, backend=backend)
            if res.feasible:
                return EsResult(tuple(subset), res.weights, res.power, checked)
    if singles:
        k = min(singles, key=lambda u: gt[u] / gains[u])
        w = np.zeros((K, Nt), dtype=complex)
        p = gt[k] / gains[k]
        w[k] = np.sqrt(p) * hbar[k] / np.sqrt(gains[k])
        return EsResult((k,), w, float(p), checked + len(singles))
    return EsResult((), np.zeros((K, Nt), dtype=complex), 0.0, checked)


@dataclass
class ShannonResult:
    raw: SchedulingSolution
    verified: SchedulingSolution

    @property
    def raw_cardinality(self) -> int:
        return self.raw.cardinality

    @property
    def verified_cardinality(self) -> int:
        return self.verified.cardinality


def verify_fbl(realization: ChannelRealization, params: FblParams,
               sol: SchedulingSolution) -> SchedulingSolution:
    """Drop scheduled users whose finite-blocklength rate misses the target."""
    r = params.rate_target_nats
    keep = tuple(k for k in sol.scheduled_set if sol.per_user_rate_nats[k] >= r)
    w = np.zeros_like(sol.weights)
    w[list(keep)] = sol.weights[list(keep)]
    sinrs, rates, power = evaluate(realization, params, keep, w)
    return replace(sol, scheduled_set=keep, weights=w, per_user_sinr=sinrs,
                   per_user_rate_nats=rates, total_power=power)


def shannon_schedule(realization: ChannelRealization, params: FblParams,
                     config: ScaConfig = ScaConfig(), *, power_budget: float | None = None,
                     tuned: bool = True) -> ShannonResult:
    """Run the SCA scheduler with the Shannon threshold, then keep only users that
    actually meet the finite-blocklength rate."""
    gt = shannon_min_sinr(params)
    plain, best = run_plain_and_tuned(realization, params, replace(config, tuning_enabled=tuned),
                                      power_budget=power_budget, gamma_tilde=gt)
    raw = best if tuned else plain
    return ShannonResult(raw, verify_fbl(realization, params, raw))
