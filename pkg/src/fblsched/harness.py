"""Monte Carlo sweeps over number of users, blocklength or error probability."""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .baselines import ES_MAX_USERS, exhaustive_search, shannon_schedule
from .channel import NetworkConfig, draw_channels
from .fbl_rate import FblParams, min_sinr
from .sca import ScaConfig, run_plain_and_tuned

AXES = ("num_users", "blocklength", "epsilon")
METHODS = ("sca_tuned", "sca_plain", "es", "shannon")
# rows written per requested method
METHOD_ROWS = {
    "sca_tuned": ("sca_tuned",),
    "sca_plain": ("sca_plain",),
    "es": ("es",),
    "shannon": ("shannon_verified", "shannon_raw"),
}
DEFAULT_GRIDS = {
    "num_users": [4, 6, 8, 10, 12],
    "blocklength": [64, 128, 256, 512],
    "epsilon": [1e-9, 1e-7, 1e-6, 1e-5, 1e-3],
}
CSV_COLUMNS = ["axis_value", "method", "mean_cardinality", "stderr", "mean_iters", "infeasible_trials"]
TIMING_COLUMN = "mean_wall_s"


@dataclass
class SweepConfig:
    axis: str = "num_users"
    axis_values: list = field(default_factory=list)
    network: NetworkConfig = field(default_factory=NetworkConfig)
    epsilon: float = 1e-6
    blocklength: int = 128
    data_bits: float = 256
    trials: int = 100
    master_seed: int = 0
    methods: tuple = ("sca_tuned", "sca_plain", "shannon")
    sca: ScaConfig = field(default_factory=ScaConfig)
    jobs: int = 1

    def __post_init__(self) -> None:
        if self.axis not in AXES:
            raise ValueError(f"axis must be one of {AXES}, got {self.axis!r}")
        if not self.axis_values:
            self.axis_values = list(DEFAULT_GRIDS[self.axis])
        cast = float if self.axis == "epsilon" else int
        vals = sorted(cast(v) for v in self.axis_values)
        if len(set(vals)) != len(vals):
            raise ValueError("axis values must be distinct")
        self.axis_values = vals
        self.methods = tuple(self.methods)
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise ValueError(f"unknown methods {bad}; choose from {METHODS}")
        if self.trials < 1:
            raise ValueError("trials must be positive")
        if "es" in self.methods:
            ks = self.axis_values if self.axis == "num_users" else [self.network.num_users_K]
            if max(ks) > ES_MAX_USERS:
                raise ValueError(f"exhaustive search needs K <= {ES_MAX_USERS}; drop 'es' or lower K")
        # builds and validates every point's parameters before anything is solved
        for i in range(len(self.axis_values)):
            self.point(i)

    def point(self, index: int) -> tuple[NetworkConfig, FblParams]:
        v = self.axis_values[index]
        net, eps, n = self.network, self.epsilon, self.blocklength
        if self.axis == "num_users":
            net = replace(net, num_users_K=int(v))
        elif self.axis == "blocklength":
            n = int(v)
        else:
            eps = float(v)
        return net, FblParams(eps, n, self.data_bits)


def trial_seed(master_seed: int, axis_index: int, trial: int) -> int:
    """Seed of one trial.

    Deliberately independent of ``axis_index``: every point of a sweep sees
    the same channel draws (common random numbers), and because users are
    drawn from per-user streams a larger K extends a smaller one.
    """
    return (int(master_seed) + int(trial)) % 2**64


@dataclass
class TrialRecord:
    axis_index: int
    trial: int
    method: str
    cardinality: int
    iterations: int
    wall_s: float


def run_trial(cfg: SweepConfig, axis_index: int, trial: int) -> list[TrialRecord]:
    net, params = cfg.point(axis_index)
    real = draw_channels(net, trial_seed(cfg.master_seed, axis_index, trial))
    out = []

    def add(method, card, iters, t0):
        out.append(TrialRecord(axis_index, trial, method, int(card), int(iters), time.perf_counter() - t0))

    if "sca_tuned" in cfg.methods or "sca_plain" in cfg.methods:
        t0 = time.perf_counter()
        want_tuning = "sca_tuned" in cfg.methods
        plain, tuned = run_plain_and_tuned(real, params, replace(cfg.sca, tuning_enabled=want_tuning))
        if "sca_plain" in cfg.methods:
            add("sca_plain", plain.cardinality, plain.iterations_used, t0)
        if want_tuning:
            add("sca_tuned", tuned.cardinality, tuned.iterations_used, t0)
    if "es" in cfg.methods:
        t0 = time.perf_counter()
        es = exhaustive_search(real, min_sinr(params))
        add("es", es.cardinality, es.subsets_checked, t0)
    if "shannon" in cfg.methods:
        t0 = time.perf_counter()
        sh = shannon_schedule(real, params, cfg.sca, tuned=cfg.sca.tuning_enabled)
        add("shannon_verified", sh.verified_cardinality, sh.raw.iterations_used, t0)
        add("shannon_raw", sh.raw_cardinality, sh.raw.iterations_used, t0)
    return out


def _run_trial_args(args):
    return run_trial(*args)


@dataclass
class SweepRow:
    axis_value: float
    method: str
    mean_cardinality: float
    stderr: float
    mean_iters: float
    infeasible_trials: int
    mean_wall_s: float = math.nan


@dataclass
class SweepResult:
    axis: str
    rows: list
    records: list = field(default_factory=list, repr=False)

    def series(self, method: str) -> tuple[list, list]:
        rows = [r for r in self.rows if r.method == method]
        return [r.axis_value for r in rows], [r.mean_cardinality for r in rows]

    def row(self, axis_value, method: str) -> SweepRow:
        for r in self.rows:
            if r.method == method and r.axis_value == axis_value:
                return r
        raise KeyError((axis_value, method))

    def to_csv(self, timing: bool = False) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS + ([TIMING_COLUMN] if timing else []))
        for r in self.rows:
            rec = [_fmt(r.axis_value), r.method, repr(r.mean_cardinality), repr(r.stderr),
                   repr(r.mean_iters), r.infeasible_trials]
            if timing:
                rec.append(f"{r.mean_wall_s:.6f}")
            w.writerow(rec)
        return buf.getvalue()

    def write_csv(self, path: str | Path, timing: bool = False) -> None:
        Path(path).write_text(self.to_csv(timing))

    @classmethod
    def from_csv(cls, text: str, axis: str = "") -> "SweepResult":
        rows = []
        for rec in csv.DictReader(io.StringIO(text)):
            v = float(rec["axis_value"])
            rows.append(SweepRow(
                axis_value=int(v) if rec["axis_value"].lstrip("-").isdigit() else v,
                method=rec["method"],
                mean_cardinality=float(rec["mean_cardinality"]),
                stderr=float(rec["stderr"]),
                mean_iters=float(rec["mean_iters"]),
                infeasible_trials=int(rec["infeasible_trials"]),
                mean_wall_s=float(rec.get(TIMING_COLUMN) or math.nan),
            ))
        return cls(axis, rows)


def _fmt(v) -> str:
    return str(v) if isinstance(v, (int, np.integer)) else repr(float(v))


def aggregate(cfg: SweepConfig, records: list[TrialRecord]) -> SweepResult:
    records = sorted(records, key=lambda r: (r.axis_index, r.trial, r.method))
    rows = []
    methods = [m for meth in METHODS if meth in cfg.methods for m in METHOD_ROWS[meth]]
    for i, v in enumerate(cfg.axis_values):
        for m in methods:
            sel = [r for r in records if r.axis_index == i and r.method == m]
            card = np.array([r.cardinality for r in sel], dtype=float)
            se = float(card.std(ddof=1) / math.sqrt(card.size)) if card.size > 1 else 0.0
            rows.append(SweepRow(
                axis_value=v,
                method=m,
                mean_cardinality=float(card.mean()),
                stderr=se,
                mean_iters=float(np.mean([r.iterations for r in sel])),
                infeasible_trials=int(np.sum(card == 0)),
                mean_wall_s=float(np.mean([r.wall_s for r in sel])),
            ))
    return SweepResult(cfg.axis, rows, records)


def run_sweep(cfg: SweepConfig, progress=None) -> SweepResult:
    """Run every (axis value, trial) and aggregate.

    Output does not depend on ``cfg.jobs`` or completion order.
    """
    tasks = [(cfg, i, t) for i in range(len(cfg.axis_values)) for t in range(cfg.trials)]
    records: list[TrialRecord] = []
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            for recs in pool.map(_run_trial_args, tasks, chunksize=4):
                records.extend(recs)
                if progress:
                    progress()
    else:
        for task in tasks:
            records.extend(run_trial(*task))
            if progress:
                progress()
    return aggregate(cfg, records)


def sweep_config_from_dict(data: dict) -> SweepConfig:
    """Build a :class:`SweepConfig` from parsed JSON (keys mirror the dataclass fields)."""
    data = dict(data)
    if "network" in data:
        data["network"] = NetworkConfig(**data["network"])
    if "sca" in data:
        data["sca"] = ScaConfig(**data["sca"])
    return SweepConfig(**data)
