"""Explicit real conic programs and their solution.

A :class:`ConicProgram` is ``minimize x'Qx + q'x + r`` over a flat real
vector subject to affine, second-order-cone and quadratic-over-affine
constraints. Any backend that can take that form can solve it; Clarabel
is called directly by default and cvxpy is available for cross-checks.
"""

from __future__ import annotations

import json
import logging
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np
import scipy.sparse as sp

log = logging.getLogger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
NUMERICAL_FAILURE = "numerical-failure"


@dataclass
class LinearLeq:
    """``A x <= b``."""
    A: np.ndarray
    b: np.ndarray
    name: str = ""

    def residual(self, x: np.ndarray) -> float:
        return float(np.max(self.A @ x - self.b, initial=-np.inf))


@dataclass
class LinearEq:
    """``A x == b``."""
    A: np.ndarray
    b: np.ndarray
    name: str = ""

    def residual(self, x: np.ndarray) -> float:
        return float(np.max(np.abs(self.A @ x - self.b), initial=0.0))


@dataclass
class SocLeq:
    """``||F x + g|| <= c'x + d``."""
    F: np.ndarray
    g: np.ndarray
    c: np.ndarray
    d: float
    name: str = ""

    def residual(self, x: np.ndarray) -> float:
        return float(np.linalg.norm(self.F @ x + self.g) - (self.c @ x + self.d))


@dataclass
class QuadLeqAffine:
    """``||F x + g||^2 <= c'x + d``."""
    F: np.ndarray
    g: np.ndarray
    c: np.ndarray
    d: float
    name: str = ""

    def residual(self, x: np.ndarray) -> float:
        u = self.F @ x + self.g
        return float(u @ u - (self.c @ x + self.d))


Constraint = Union[LinearLeq, LinearEq, SocLeq, QuadLeqAffine]


@dataclass
class ConicProgram:
    num_vars: int
    Q: np.ndarray
    q: np.ndarray
    r: float = 0.0
    constraints: list = field(default_factory=list)
    blocks: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.Q = np.asarray(self.Q, dtype=float)
        self.q = np.asarray(self.q, dtype=float)
        if self.Q.shape != (self.num_vars, self.num_vars) or self.q.shape != (self.num_vars,):
            raise ValueError("objective dimensions do not match num_vars")
        for con in self.constraints:
            width = (con.A if isinstance(con, (LinearLeq, LinearEq)) else con.F).shape[1]
            if width != self.num_vars:
                raise ValueError(f"constraint {con.name!r} references {width} variables, "
                                 f"program has {self.num_vars}")

    def objective(self, x: np.ndarray) -> float:
        return float(x @ self.Q @ x + self.q @ x + self.r)

    def max_violation(self, x: np.ndarray) -> float:
        return max((c.residual(x) for c in self.constraints), default=-np.inf)

    def block(self, x: np.ndarray, name: str) -> np.ndarray:
        return x[self.blocks[name]]

    def dump(self, path: str | Path) -> None:
        """Write the program as JSON for offline inspection."""
        def arr(a):
            return np.asarray(a).tolist()
        cons = []
        for c in self.constraints:
            rec = {"kind": type(c).__name__, "name": c.name}
            rec.update({k: arr(v) for k, v in vars(c).items() if k != "name"})
            cons.append(rec)
        data = {
            "num_vars": self.num_vars,
            "blocks": {k: [s.start, s.stop] for k, s in self.blocks.items()},
            "Q": arr(self.Q), "q": arr(self.q), "r": self.r,
            "constraints": cons,
        }
        Path(path).write_text(json.dumps(data))


@dataclass
class ConicSolution:
    status: str
    primal: np.ndarray
    objective_value: float
    solve_tolerance: float
    max_violation: float = np.nan
    iterations: int = 0


def _clarabel_form(prog: ConicProgram):
    import clarabel

    eq_rows, eq_b = [], []
    nn_rows, nn_b = [], []
    soc_blocks = []
    for c in prog.constraints:
        if isinstance(c, LinearEq):
            eq_rows.append(np.atleast_2d(c.A))
            eq_b.append(np.atleast_1d(c.b))
        elif isinstance(c, LinearLeq):
            nn_rows.append(np.atleast_2d(c.A))
            nn_b.append(np.atleast_1d(c.b))
        elif isinstance(c, SocLeq):
            A = -np.vstack([c.c, c.F])
            b = np.concatenate([[c.d], c.g])
            soc_blocks.append((A, b))
        elif isinstance(c, QuadLeqAffine):
            # ||u||^2 <= t  <=>  ||(2u, t - 1)|| <= t + 1
            A = -np.vstack([c.c, 2.0 * c.F, c.c])
            b = np.concatenate([[c.d + 1.0], 2.0 * c.g, [c.d - 1.0]])
            soc_blocks.append((A, b))
        else:
            raise TypeError(f"unknown constraint type {type(c).__name__}")

    mats, rhs, cones = [], [], []
    if eq_rows:
        mats.append(np.vstack(eq_rows))
        rhs.append(np.concatenate(eq_b))
        cones.append(clarabel.ZeroConeT(mats[-1].shape[0]))
    if nn_rows:
        mats.append(np.vstack(nn_rows))
        rhs.append(np.concatenate(nn_b))
        cones.append(clarabel.NonnegativeConeT(mats[-1].shape[0]))
    for A, b in soc_blocks:
        mats.append(A)
        rhs.append(b)
        cones.append(clarabel.SecondOrderConeT(A.shape[0]))
    if mats:
        A = sp.csc_matrix(np.vstack(mats))
        b = np.concatenate(rhs)
    else:
        A = sp.csc_matrix((0, prog.num_vars))
        b = np.zeros(0)
    # Clarabel minimizes (1/2) x'Px + q'x.
    P = sp.triu(sp.csc_matrix(2.0 * prog.Q)).tocsc()
    return P, A, b, cones


def _solve_clarabel(prog: ConicProgram, tol: float) -> ConicSolution:
    import clarabel

    P, A, b, cones = _clarabel_form(prog)
    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.tol_gap_abs = tol * 1e-1
    settings.tol_gap_rel = tol * 1e-1
    settings.tol_feas = tol * 1e-1
    settings.max_iter = 200
    res = clarabel.DefaultSolver(P, prog.q, A, b, cones, settings).solve()
    status = str(res.status)
    x = np.asarray(res.x, dtype=float)
    if status in ("PrimalInfeasible", "AlmostPrimalInfeasible"):
        return ConicSolution(INFEASIBLE, x, np.inf, tol, iterations=res.iterations)
    ok = status == "Solved" or (status == "AlmostSolved" and np.all(np.isfinite(x)))
    if not ok or not np.all(np.isfinite(x)):
        log.debug("clarabel returned %s", status)
        return ConicSolution(NUMERICAL_FAILURE, x, np.nan, tol, iterations=res.iterations)
    viol = prog.max_violation(x)
    if status == "AlmostSolved" and viol > 100 * tol:
        return ConicSolution(NUMERICAL_FAILURE, x, np.nan, tol, viol, res.iterations)
    return ConicSolution(OPTIMAL, x, prog.objective(x), tol, viol, res.iterations)


def _solve_cvxpy(prog: ConicProgram, tol: float) -> ConicSolution:
    import cvxpy as cp

    x = cp.Variable(prog.num_vars)
    cons = []
    for c in prog.constraints:
        if isinstance(c, LinearEq):
            cons.append(c.A @ x == c.b)
        elif isinstance(c, LinearLeq):
            cons.append(c.A @ x <= c.b)
        elif isinstance(c, SocLeq):
            cons.append(cp.norm(c.F @ x + c.g, 2) <= c.c @ x + c.d)
        else:
            cons.append(cp.sum_squares(c.F @ x + c.g) <= c.c @ x + c.d)
    obj = cp.quad_form(x, cp.psd_wrap(prog.Q)) + prog.q @ x + prog.r
    problem = cp.Problem(cp.Minimize(obj), cons)
    try:
        with warnings.catch_warnings():
            # inaccurate solves are screened by the violation check below
            warnings.simplefilter("ignore", UserWarning)
            problem.solve(solver=cp.CLARABEL)
    except cp.SolverError:
        return ConicSolution(NUMERICAL_FAILURE, np.full(prog.num_vars, np.nan), np.nan, tol)
    if problem.status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
        return ConicSolution(INFEASIBLE, np.full(prog.num_vars, np.nan), np.inf, tol)
    if problem.status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE) or x.value is None:
        return ConicSolution(NUMERICAL_FAILURE, np.full(prog.num_vars, np.nan), np.nan, tol)
    xv = np.asarray(x.value, dtype=float)
    viol = prog.max_violation(xv)
    if problem.status == cp.OPTIMAL_INACCURATE and viol > 100 * tol:
        return ConicSolution(NUMERICAL_FAILURE, xv, np.nan, tol, viol)
    return ConicSolution(OPTIMAL, xv, prog.objective(xv), tol, viol)


BACKENDS = {"clarabel": _solve_clarabel, "cvxpy": _solve_cvxpy}


def solve(prog: ConicProgram, backend: str = "clarabel", tol: float = 1e-7) -> ConicSolution:
    """Solve ``prog``; never raises on solver trouble, check ``status``."""
    try:
        fn = BACKENDS[backend]
    except KeyError:
        raise ValueError(f"unknown backend {backend!r}; choose from {sorted(BACKENDS)}") from None
    return fn(prog, tol)
