import numpy as np
import pytest

from fblsched.channel import NetworkConfig, draw_channels
from fblsched.fbl_rate import FblParams

ACCEPTANCE_LINES: list[str] = []

RATE_SLACK = 1e-6
POWER_SLACK = 1e-6


def check_solution(sol, params, power_budget, candidates=None):
    """Feasibility contract every returned schedule must satisfy."""
    r = params.rate_target_nats
    for k in sol.scheduled_set:
        assert sol.per_user_rate_nats[k] >= r - RATE_SLACK, (k, sol.per_user_rate_nats[k], r)
    assert sol.total_power <= power_budget + POWER_SLACK
    unscheduled = [k for k in range(sol.weights.shape[0]) if k not in sol.scheduled_set]
    assert np.all(sol.weights[unscheduled] == 0)
    if candidates is not None:
        assert set(sol.scheduled_set) <= set(candidates)


def random_channels(rng, K, Nt, scale=1.0):
    return scale * (rng.standard_normal((K, Nt)) + 1j * rng.standard_normal((K, Nt))) / np.sqrt(2)


@pytest.fixture
def ref_params():
    return FblParams(1e-6, 128, 256)


@pytest.fixture
def dense_instances():
    """High-SNR draws where several users compete (at 10 dB most draws schedule nobody)."""
    cfg = NetworkConfig(num_antennas_Nt=4, num_users_K=8, snr_db=30.0)
    return [draw_channels(cfg, s) for s in range(6)]


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
