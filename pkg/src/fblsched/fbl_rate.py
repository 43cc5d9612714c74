"""Finite-blocklength rate math.

Normal-approximation rate ``R(g) = ln(1 + g) - theta * sqrt(V(g))`` with
``theta = Qinv(eps) / sqrt(n)`` and its inversion to the minimum SINR that
meets a per-user rate target. Payload sizes are given in bits; every rate
returned here is in nats per channel use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from scipy.optimize import brentq

LN2 = math.log(2.0)
_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

# Acklam's rational approximation to the standard normal quantile.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def q_func(x: float) -> float:
    """Gaussian upper-tail probability Q(x)."""
    return 0.5 * math.erfc(x / _SQRT2)


def _acklam_lower(p: float) -> float:
    # Quantile x with Phi(x) = p, relative error ~1e-9.
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        return ((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
                / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    if p <= 1.0 - _P_LOW:
        q = p - 0.5
        r = q * q
        return ((((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
                / (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0))
    return -_acklam_lower(1.0 - p)


def q_inv(p: float) -> float:
    """Inverse of the Gaussian Q-function: the x with Q(x) = p.

    A rational initial guess is polished with Halley steps on
    ``Q(x) - p``; relative accuracy of ``Q(q_inv(p))`` is better than 1e-12
    across ``[1e-300, 1 - 1e-16]``.
    """
    p = float(p)
    if not 0.0 < p < 1.0:
        raise ValueError(f"q_inv requires 0 < p < 1, got {p!r}")
    if p == 0.5:
        return 0.0
    if p > 0.5:
        return -q_inv(1.0 - p)
    # Upper-tail side only from here on, so Q(x) - p is well conditioned.
    x = -_acklam_lower(p)
    for _ in range(3):
        err = q_func(x) - p
        pdf = _INV_SQRT_2PI * math.exp(-0.5 * x * x)
        if pdf == 0.0:
            break
        u = err / pdf
        step = u / (1.0 - 0.5 * x * u)
        x += step
        if abs(step) <= 1e-16 * max(1.0, abs(x)):
            break
    return x


@dataclass(frozen=True)
class FblParams:
    """Reliability/latency requirement of a user.

    ``theta`` and ``rate_target_nats`` are derived on construction.
    """

    epsilon: float
    blocklength_n: int
    data_bits_D: float
    theta: float = field(init=False)
    rate_target_nats: float = field(init=False)

    def __post_init__(self) -> None:
        if not 0.0 < self.epsilon <= 0.5:
            raise ValueError(f"epsilon must lie in (0, 0.5], got {self.epsilon!r}")
        if int(self.blocklength_n) != self.blocklength_n or self.blocklength_n <= 0:
            raise ValueError(f"blocklength_n must be a positive integer, got {self.blocklength_n!r}")
        if self.data_bits_D < 0:
            raise ValueError(f"data_bits_D must be non-negative, got {self.data_bits_D!r}")
        object.__setattr__(self, "theta", compute_theta(self.epsilon, self.blocklength_n))
        object.__setattr__(self, "rate_target_nats", self.data_bits_D / self.blocklength_n * LN2)

    @property
    def rate_target_bits(self) -> float:
        return self.data_bits_D / self.blocklength_n


def compute_theta(epsilon: float, blocklength_n: int) -> float:
    return q_inv(epsilon) / math.sqrt(blocklength_n)


def v_of(gamma: float) -> float:
    """Channel dispersion ``1 - (1 + gamma)^-2``."""
    if gamma < 0:
        raise ValueError(f"SINR must be non-negative, got {gamma!r}")
    return 1.0 - 1.0 / (1.0 + gamma) ** 2


def rate(gamma: float, params: FblParams) -> float:
    """Finite-blocklength achievable rate in nats per channel use.

    Can be negative for small ``gamma`` when ``theta > 0``.
    """
    return math.log1p(gamma) - params.theta * math.sqrt(v_of(gamma))


def shannon_min_sinr(params: FblParams) -> float:
    """SINR threshold ``2^(D/n) - 1`` that ignores the dispersion penalty."""
    return 2.0 ** params.rate_target_bits - 1.0


def min_sinr(params: FblParams, rate_target: float | None = None) -> float:
    """Smallest SINR above the Shannon threshold whose rate meets the target.

    ``rate_target`` overrides ``params.rate_target_nats`` for per-user
    targets. The returned root satisfies the target to 1e-9 nats or better.
    """
    r = params.rate_target_nats if rate_target is None else float(rate_target)
    if r <= 0:
        raise ValueError(f"rate target must be positive, got {r!r}")
    lo = math.expm1(r)
    f = lambda g: rate(g, params) - r  # noqa: E731
    if f(lo) >= 0.0:
        # theta == 0: the Shannon threshold is already exact.
        return lo
    hi = max(2.0 * lo, 1.0)
    while f(hi) < 0.0:
        lo, hi = hi, 2.0 * hi
    root = brentq(f, lo, hi, xtol=1e-15, maxiter=500)
    # Round up onto the feasible side so rate(root) >= r holds exactly.
    while f(root) < 0.0:
        root = math.nextafter(root, math.inf)
    return root
