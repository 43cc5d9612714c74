"""Acceptance criteria; each test appends one PASS/FAIL line to the terminal summary."""

import time

import numpy as np
import pytest
from scipy.stats import spearmanr

from fblsched.baselines import exhaustive_search, shannon_schedule
from fblsched.channel import NetworkConfig, draw_channels
from fblsched.cli import main as cli_main
from fblsched.conic import (build_sca_subproblem, min_power_feasible, penalized_objective,
                            solve)
from fblsched.conic.problems import ScaLayout
from fblsched.fbl_rate import FblParams, min_sinr, q_inv, rate, shannon_min_sinr
from fblsched.harness import SweepConfig, run_sweep
from fblsched.sca import (ScaState, _relative_change, initialize, iterate, prefilter,
                          run_plain_and_tuned)
from conftest import ACCEPTANCE_LINES, POWER_SLACK, RATE_SLACK, random_channels
from oracles import min_sinr_bisect, q_inv_bisect, two_user_min_power_grid

PARAMS = FblParams(1e-6, 128, 256)
BASE_NET = NetworkConfig(num_antennas_Nt=4, num_users_K=8, snr_db=10.0)


def record(num, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num}: {title} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def nonempty_instances(cfg, params, count):
    """The first ``count`` draws in which at least one user survives the prefilter."""
    gt = min_sinr(params)
    out, seed = [], 0
    while len(out) < count:
        real = draw_channels(cfg, seed)
        if prefilter(real, gt, real.power_budget):
            out.append(real)
        seed += 1
    return out, seed


@pytest.fixture(scope="module")
def k8_batch():
    return nonempty_instances(BASE_NET, PARAMS, 100)


def test_c1_rate_goldens():
    t0 = time.perf_counter()
    checks = {
        "shannon threshold == 3": shannon_min_sinr(PARAMS) == 3.0,
        "q_inv(1e-6) vs bisection": abs(q_inv(1e-6) - q_inv_bisect(1e-6)) <= 1e-5
                                    and abs(q_inv(1e-6) - 4.753424) <= 1e-5,
        "min SINR in [5, 5.1]": 5.0 <= min_sinr(PARAMS) <= 5.1,
        "round trip 1e-9": abs(rate(min_sinr(PARAMS), PARAMS) - PARAMS.rate_target_nats) <= 1e-9,
        "min SINR vs bisection": abs(min_sinr(PARAMS) - min_sinr_bisect(1e-6, 128, 256)) <= 1e-9,
    }
    elapsed = time.perf_counter() - t0
    failed = [k for k, v in checks.items() if not v]
    record(1, "rate-math goldens", not failed and elapsed < 1.0,
           f"min SINR={min_sinr(PARAMS):.6f}, {elapsed:.2f}s" + (f", failed: {failed}" if failed else ""))


def test_c2_subproblem_soundness():
    rng = np.random.default_rng(2024)
    worst_slack, worst_gap, failures = np.inf, 0.0, 0
    for _ in range(200):
        K, Nt = int(rng.integers(1, 7)), int(rng.integers(1, 5))
        P = float(10 ** rng.uniform(0, 2))
        hbar = random_channels(rng, K, Nt, scale=float(10 ** rng.uniform(-0.5, 0.5)))
        gt = rng.uniform(0.5, 8.0, K)
        mu = float(rng.choice([0.0, 0.01, 0.05, 0.2]))
        w = random_channels(rng, K, Nt)
        w *= np.sqrt(P * rng.uniform(0.1, 1.0) / np.sum(np.abs(w) ** 2))
        g = np.abs(hbar.conj() @ w.T) ** 2
        phi = g.sum(axis=1) - np.diag(g) + 1.0 + rng.uniform(0.0, 1.0, K)
        kappa = rng.uniform(0, 1, K)
        st = ScaState(0, kappa, w, phi, 0.0)
        prog = build_sca_subproblem(hbar, gt, st, mu, P)

        lay = ScaLayout(K, Nt)
        x_ref = np.zeros(prog.num_vars)
        x_ref[lay.kappa] = kappa
        worst_gap = max(worst_gap, abs(prog.objective(x_ref) - penalized_objective(kappa, mu)))

        sol = solve(prog)
        if sol.status != "optimal":
            failures += 1
            continue
        ws, ks, ps = lay.unpack(sol.primal)
        for k in range(K):
            slack = abs(np.vdot(hbar[k], ws[k])) ** 2 / ps[k] - ks[k] * gt[k]
            worst_slack = min(worst_slack, slack)
    ok = failures == 0 and worst_slack >= -1e-7 and worst_gap <= 1e-9
    record(2, "subproblem soundness", ok,
           f"200 states, min slack={worst_slack:.2e}, max expansion gap={worst_gap:.1e}, "
           f"solver failures={failures}")


def test_c3_monotone_convergence(k8_batch):
    instances, seeds_used = k8_batch
    gt = min_sinr(PARAMS)
    violations, converged, worst, iters = 0, 0, -np.inf, []
    for real in instances:
        cand = prefilter(real, gt, real.power_budget)
        hbar = real.normalized_channels[cand]
        st = initialize(hbar, gt, real.power_budget, 0.05)
        stopped = False
        for _ in range(100):
            nxt = iterate(st, hbar, gt, real.power_budget, 0.05)
            assert nxt is not None
            step = nxt.objective_varsigma - st.objective_varsigma
            worst = max(worst, step)
            violations += step > 1e-6
            stopped = _relative_change(nxt.objective_varsigma, st.objective_varsigma, 1e-3)
            st = nxt
            if stopped:
                break
        converged += stopped
        iters.append(st.tau)
    ok = violations == 0 and converged >= 95
    record(3, "monotone convergence", ok,
           f"100 non-empty instances from {seeds_used} draws, max increase={worst:.1e}, "
           f"converged={converged}/100, mean iters={np.mean(iters):.2f}")


def _violations(sol, params, P):
    bad = 0
    r = params.rate_target_nats
    for k in sol.scheduled_set:
        bad += sol.per_user_rate_nats[k] < r - RATE_SLACK
        bad += rate(float(sol.per_user_sinr[k]), params) < r - RATE_SLACK
    bad += sol.total_power > P + POWER_SLACK
    unscheduled = [k for k in range(sol.weights.shape[0]) if k not in sol.scheduled_set]
    bad += bool(np.any(sol.weights[unscheduled] != 0))
    return bad


def test_c4_output_feasibility(k8_batch):
    dense = [draw_channels(NetworkConfig(num_antennas_Nt=4, num_users_K=8, snr_db=30.0), s)
             for s in range(30)]
    small = [draw_channels(NetworkConfig(num_antennas_Nt=2, num_users_K=6, snr_db=35.0), s)
             for s in range(30)]
    eps_sweep = [(draw_channels(BASE_NET, s), FblParams(e, 128, 256))
                 for s in range(20) for e in (1e-9, 1e-3)]
    cases = [(real, PARAMS) for real in k8_batch[0] + dense + small] + eps_sweep
    checked, bad, nonempty = 0, 0, 0
    for real, params in cases:
        plain, tuned = run_plain_and_tuned(real, params)
        sh = shannon_schedule(real, params)
        for sol in (plain, tuned, sh.verified):
            checked += 1
            nonempty += sol.cardinality > 0
            bad += _violations(sol, params, real.power_budget)
    record(4, "output feasibility", bad == 0,
           f"{checked} solutions ({nonempty} non-empty), violations={bad}")


def test_c5_oracle_gap():
    net = NetworkConfig(num_antennas_Nt=2, num_users_K=6, snr_db=10.0)
    gt = min_sinr(PARAMS)
    sca, es = [], []
    for s in range(50):
        real = draw_channels(net, s)
        sca.append(run_plain_and_tuned(real, PARAMS)[1].cardinality)
        es.append(exhaustive_search(real, gt).cardinality)
    above = sum(a > b for a, b in zip(sca, es))
    ratio = np.mean(sca) / np.mean(es) if np.mean(es) > 0 else float("nan")
    ok = above == 0 and ratio >= 0.85
    record(5, "oracle gap", ok,
           f"mean SCA={np.mean(sca):.3f}, mean ES={np.mean(es):.3f}, ratio={ratio:.3f}, "
           f"instances above ES={above}")


@pytest.fixture(scope="module")
def sweeps():
    out = {}
    for axis in ("num_users", "blocklength", "epsilon"):
        cfg = SweepConfig(axis=axis, network=BASE_NET, trials=100, master_seed=0,
                          methods=("sca_tuned", "sca_plain", "shannon"))
        out[axis] = run_sweep(cfg)
    return out


def test_c6_trends(sweeps):
    problems, summary = [], []
    for axis, res in sweeps.items():
        xs, ys = res.series("sca_tuned")
        rho = spearmanr(xs, ys).statistic
        summary.append(f"{axis} rho={rho:.2f} [{ys[0]:.2f}..{ys[-1]:.2f}]")
        if not rho > 0:
            problems.append(f"{axis}: rho={rho}")
        for x in xs:
            tuned = res.row(x, "sca_tuned").mean_cardinality
            if tuned < res.row(x, "sca_plain").mean_cardinality:
                problems.append(f"{axis}={x}: tuned < plain")
            if axis != "epsilon" and res.row(x, "shannon_verified").mean_cardinality > tuned:
                problems.append(f"{axis}={x}: shannon_verified > tuned")
    record(6, "trend reproduction", not problems,
           "; ".join(summary) + (f"; problems: {problems}" if problems else ""))


def test_c7_engine_oracles():
    rng = np.random.default_rng(77)
    single_err = 0.0
    for _ in range(100):
        Nt = int(rng.integers(1, 6))
        h = random_channels(rng, 1, Nt)
        g = float(rng.uniform(0.5, 10.0))
        res = min_power_feasible(h, [0], g, 1e9)
        single_err = max(single_err, abs(res.power - g / np.sum(np.abs(h) ** 2)))

    orth_err = 0.0
    for _ in range(20):
        Nt = int(rng.integers(2, 5))
        q, _ = np.linalg.qr(random_channels(rng, Nt, Nt))
        h = q[:2].conj() * rng.uniform(0.5, 2.0, (2, 1))
        g = rng.uniform(0.5, 5.0, 2)
        res = min_power_feasible(h, [0, 1], g, 1e9)
        expect = sum(g[k] / np.sum(np.abs(h[k]) ** 2) for k in range(2))
        orth_err = max(orth_err, abs(res.power - expect))

    grid_rel = 0.0
    for _ in range(20):
        h = random_channels(rng, 2, 2)
        g = rng.uniform(0.5, 4.0, 2)
        res = min_power_feasible(h, [0, 1], g, 1e9)
        oracle = two_user_min_power_grid(h, g)
        grid_rel = max(grid_rel, abs(res.power - oracle) / oracle)

    ok = single_err <= 1e-6 and orth_err <= 1e-6 and grid_rel <= 0.01
    record(7, "engine oracles", ok,
           f"single max err={single_err:.1e}, orthogonal max err={orth_err:.1e}, "
           f"grid max rel gap={grid_rel:.1e}")


def test_c8_determinism(tmp_path):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    argv = ["sweep", "--axis", "num_users", "--trials", "30", "--seed", "5", "--snr-db", "20"]
    codes = [cli_main(argv + ["--out", str(p)]) for p in paths]
    same_cli = paths[0].read_bytes() == paths[1].read_bytes()
    cfg = dict(axis="blocklength", network=BASE_NET, trials=30, master_seed=9)
    same_api = run_sweep(SweepConfig(**cfg)).to_csv() == run_sweep(SweepConfig(**cfg, jobs=2)).to_csv()
    ok = codes == [0, 0] and same_cli and same_api
    record(8, "determinism", ok,
           f"CLI files identical={same_cli}, serial vs 2 workers identical={same_api}")
