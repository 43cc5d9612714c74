"""Builders for the two convex programs the schedulers need.

* the penalized SCA surrogate over (beams, kappa, phi), solved once per
  iteration of the scheduler;
* the power-minimization SOCP that decides whether a user set can meet its
  SINR thresholds within the power budget.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .embedding import hermitian_rows, unembed
from .program import (INFEASIBLE, OPTIMAL, ConicProgram, LinearEq, LinearLeq,
                      QuadLeqAffine, SocLeq, solve)

log = logging.getLogger(__name__)

FEASIBILITY_SLACK = 1e-9


# -- penalty objective ------------------------------------------------------

def penalty_g(kappa, mu: float) -> float:
    s = float(np.sum(kappa))
    return mu * s + mu * s * s


def penalty_h(kappa, mu: float) -> float:
    kappa = np.asarray(kappa, dtype=float)
    s = float(np.sum(kappa))
    return mu * float(kappa @ kappa) + mu * s * s


def penalty_h_grad(kappa, mu: float) -> np.ndarray:
    kappa = np.asarray(kappa, dtype=float)
    return 2.0 * mu * (kappa + np.sum(kappa))


def penalized_objective(kappa, mu: float) -> float:
    """``-sum(kappa) + g(kappa) - h(kappa)``: the exact DC-penalized objective."""
    return -float(np.sum(kappa)) + penalty_g(kappa, mu) - penalty_h(kappa, mu)


def surrogate_objective(kappa, kappa_ref, mu: float) -> float:
    """Penalized objective with ``h`` replaced by its tangent at ``kappa_ref``."""
    kappa = np.asarray(kappa, dtype=float)
    kappa_ref = np.asarray(kappa_ref, dtype=float)
    phi_lin = penalty_h(kappa_ref, mu) + penalty_h_grad(kappa_ref, mu) @ (kappa - kappa_ref)
    return -float(np.sum(kappa)) + penalty_g(kappa, mu) - float(phi_lin)


def sca_lower_bound(hbar_k, w_ref, phi_ref: float, w, phi: float) -> float:
    """Tangent lower bound of ``|h^H w|^2 / phi`` taken at ``(w_ref, phi_ref)``."""
    c = np.vdot(hbar_k, w_ref)
    z = np.vdot(hbar_k, w)
    return 2.0 * float(np.real(np.conj(c) * z)) / phi_ref - (abs(c) / phi_ref) ** 2 * phi


# -- SCA surrogate ----------------------------------------------------------

@dataclass(frozen=True)
class ScaLayout:
    num_users: int
    num_antennas: int

    @property
    def beam_len(self) -> int:
        return 2 * self.num_antennas

    @property
    def num_vars(self) -> int:
        return self.num_users * (self.beam_len + 2)

    def beam(self, k: int) -> slice:
        return slice(k * self.beam_len, (k + 1) * self.beam_len)

    @property
    def beams(self) -> slice:
        return slice(0, self.num_users * self.beam_len)

    @property
    def kappa(self) -> slice:
        start = self.num_users * self.beam_len
        return slice(start, start + self.num_users)

    @property
    def phi(self) -> slice:
        start = self.num_users * (self.beam_len + 1)
        return slice(start, start + self.num_users)

    def unpack(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        w = unembed(x[self.beams].reshape(self.num_users, self.beam_len))
        return w, x[self.kappa].copy(), x[self.phi].copy()


def build_sca_subproblem(hbar: np.ndarray, gamma_tilde, prev, mu: float,
                         power_budget: float) -> ConicProgram:
    """Convex surrogate linearized at ``prev`` (needs ``kappa``, ``weights``, ``phi``).

    Variables are the embedded beams, ``kappa`` and ``phi`` (see
    :class:`ScaLayout`). A zero reference beam makes the SINR bound row read
    ``kappa_k * gamma_k <= 0``, so that user is forced off for this step.
    """
    hbar = np.atleast_2d(np.asarray(hbar, dtype=complex))
    K, Nt = hbar.shape
    gamma_tilde = np.broadcast_to(np.asarray(gamma_tilde, dtype=float), (K,))
    w_ref = np.asarray(prev.weights, dtype=complex)
    phi_ref = np.asarray(prev.phi, dtype=float)
    kappa_ref = np.asarray(prev.kappa, dtype=float)
    if np.any(phi_ref <= 0):
        raise ValueError("linearization point needs strictly positive phi")

    lay = ScaLayout(K, Nt)
    n = lay.num_vars
    rows = [hermitian_rows(h) for h in hbar]

    Q = np.zeros((n, n))
    Q[lay.kappa, lay.kappa] = mu
    grad = penalty_h_grad(kappa_ref, mu)
    q = np.zeros(n)
    q[lay.kappa] = -1.0 + mu - grad
    r = -penalty_h(kappa_ref, mu) + float(grad @ kappa_ref)

    cons = []
    box = np.zeros((2 * K, n))
    box[:K, lay.kappa] = np.eye(K)
    box[K:, lay.kappa] = -np.eye(K)
    cons.append(LinearLeq(box, np.concatenate([np.ones(K), np.zeros(K)]), "kappa_box"))

    # interference + 1 <= phi_k
    for k in range(K):
        a_k, b_k = rows[k]
        others = [l for l in range(K) if l != k]
        c = np.zeros(n)
        c[lay.phi.start + k] = 1.0
        if not others:
            cons.append(LinearLeq(-c[None, :], np.array([-1.0]), f"interference_{k}"))
            continue
        F = np.zeros((2 * len(others), n))
        for i, l in enumerate(others):
            F[2 * i, lay.beam(l)] = a_k
            F[2 * i + 1, lay.beam(l)] = b_k
        cons.append(QuadLeqAffine(F, np.zeros(F.shape[0]), c, -1.0, f"interference_{k}"))

    F = np.zeros((lay.num_users * lay.beam_len, n))
    F[:, lay.beams] = np.eye(lay.num_users * lay.beam_len)
    cons.append(SocLeq(F, np.zeros(F.shape[0]), np.zeros(n), float(np.sqrt(power_budget)), "power"))

    # kappa_k * gamma_k - tangent bound <= 0
    A = np.zeros((K, n))
    for k in range(K):
        a_k, b_k = rows[k]
        c_k = np.vdot(hbar[k], w_ref[k])
        A[k, lay.kappa.start + k] = gamma_tilde[k]
        A[k, lay.beam(k)] = -2.0 * (c_k.real * a_k + c_k.imag * b_k) / phi_ref[k]
        A[k, lay.phi.start + k] = (abs(c_k) / phi_ref[k]) ** 2
    cons.append(LinearLeq(A, np.zeros(K), "sinr_bound"))

    blocks = {"w": lay.beams, "kappa": lay.kappa, "phi": lay.phi}
    return ConicProgram(n, Q, q, r, cons, blocks)


# -- power minimization -----------------------------------------------------

@dataclass
class MinPowerResult:
    feasible: bool
    power: float
    weights: np.ndarray
    status: str


def min_power_feasible(hbar: np.ndarray, subset: Sequence[int], gamma_tilde,
                       power_budget: float, backend: str = "clarabel") -> MinPowerResult:
    """Least total power meeting ``gamma_k >= gamma_tilde_k`` for every user in ``subset``.

    ``hbar`` holds all users' noise-normalized channels (K, Nt);
    ``gamma_tilde`` is a scalar or a length-K array. Returned weights are
    (K, Nt) with zero rows outside ``subset``. ``status`` is ``optimal``,
    ``infeasible`` (no power level works) or ``indeterminate``.
    """
    hbar = np.atleast_2d(np.asarray(hbar, dtype=complex))
    K, Nt = hbar.shape
    users = [int(u) for u in subset]
    if not users:
        raise ValueError("subset must be nonempty")
    gt = np.broadcast_to(np.asarray(gamma_tilde, dtype=float), (K,))
    S = len(users)
    m = 2 * Nt
    n = S * m

    cons = []
    for i, k in enumerate(users):
        a_k, b_k = hermitian_rows(hbar[k])
        root = np.sqrt(gt[k])
        # phase of h_k^H w_k fixed real
        E = np.zeros((1, n))
        E[0, i * m:(i + 1) * m] = b_k
        cons.append(LinearEq(E, np.zeros(1), f"phase_{k}"))
        F = np.zeros((2 * (S - 1) + 1, n))
        row = 0
        for j, l in enumerate(users):
            if l == k:
                continue
            F[row, j * m:(j + 1) * m] = root * a_k
            F[row + 1, j * m:(j + 1) * m] = root * b_k
            row += 2
        g = np.zeros(F.shape[0])
        g[-1] = root
        c = np.zeros(n)
        c[i * m:(i + 1) * m] = a_k
        cons.append(SocLeq(F, g, c, 0.0, f"sinr_{k}"))

    prog = ConicProgram(n, np.eye(n), np.zeros(n), 0.0, cons)
    sol = solve(prog, backend=backend)
    weights = np.zeros((K, Nt), dtype=complex)
    if sol.status == INFEASIBLE:
        return MinPowerResult(False, np.inf, weights, INFEASIBLE)
    if sol.status != OPTIMAL:
        log.warning("power minimization indeterminate for subset %s", users)
        return MinPowerResult(False, np.nan, weights, "indeterminate")
    w = unembed(sol.primal.reshape(S, m))
    weights[users] = w
    power = float(np.sum(np.abs(w) ** 2))
    return MinPowerResult(power <= power_budget + FEASIBILITY_SLACK, power, weights, OPTIMAL)
