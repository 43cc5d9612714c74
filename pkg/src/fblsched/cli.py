"""Command-line entry point: ``fblsched {solve,sweep,compare,rate-tools}``.

Exit codes: 0 ok, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from .baselines import exhaustive_search, shannon_schedule
from .channel import ChannelRealization, NetworkConfig, draw_channels
from .fbl_rate import FblParams, min_sinr, rate, shannon_min_sinr, v_of
from .harness import AXES, METHODS, SweepConfig, run_sweep, sweep_config_from_dict
from .sca import ScaConfig, run_plain_and_tuned

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser, users: int = 8) -> None:
    g = p.add_argument_group("scenario")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--users", type=int, default=users)
    g.add_argument("--antennas", type=int, default=4)
    g.add_argument("--snr-db", type=float, default=10.0)
    g.add_argument("--blocklength", type=int, default=128)
    g.add_argument("--epsilon", type=float, default=1e-6)
    g.add_argument("--data-bits", type=float, default=256)
    a = p.add_argument_group("algorithm")
    a.add_argument("--mu", type=float, default=0.05)
    a.add_argument("--delta", type=float, default=1e-3)
    a.add_argument("--max-iters", type=int, default=100)
    a.add_argument("--no-tuning", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fblsched", description="User scheduling and beamforming under finite-blocklength rate constraints.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="schedule one instance")
    _common(p)
    p.add_argument("--instance", help="instance JSON (overrides --seed and scenario geometry)")
    p.add_argument("--save-instance", help="write the drawn instance to this JSON file")
    p.add_argument("--trace", help="write the SCA convergence trace to this CSV file")

    p = sub.add_parser("sweep", help="Monte Carlo sweep, CSV output")
    _common(p)
    p.add_argument("--config", help="sweep JSON file; scenario and algorithm flags are then ignored")
    p.add_argument("--axis", choices=AXES, default="num_users")
    p.add_argument("--values", help="comma-separated axis values (default: built-in grid)")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--methods", default="sca_tuned,sca_plain,shannon",
                   help=f"comma-separated subset of {','.join(METHODS)}")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--timing", action="store_true", help="append a mean wall-time column")
    p.add_argument("--out", help="CSV path (default: stdout)")

    p = sub.add_parser("compare", help="SCA vs exhaustive search on small instances")
    _common(p, users=6)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--out", help="per-instance CSV path")

    p = sub.add_parser("rate-tools", help="finite-blocklength rate calculator")
    p.add_argument("--epsilon", type=float, default=1e-6)
    p.add_argument("--blocklength", type=int, default=128)
    p.add_argument("--data-bits", type=float, default=256)
    p.add_argument("--gamma", type=float, action="append", default=[],
                   help="SINR at which to print R and V (repeatable)")
    return parser


def _params(args) -> FblParams:
    try:
        return FblParams(args.epsilon, args.blocklength, args.data_bits)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _network(args) -> NetworkConfig:
    try:
        return NetworkConfig(num_antennas_Nt=args.antennas, num_users_K=args.users, snr_db=args.snr_db)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _sca(args) -> ScaConfig:
    try:
        return ScaConfig(mu=args.mu, delta=args.delta, max_iters=args.max_iters,
                         tuning_enabled=not args.no_tuning)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_rate_tools(args) -> int:
    params = _params(args)
    print(f"epsilon={params.epsilon:g} n={params.blocklength_n} D={params.data_bits_D:g} bits")
    print(f"theta              = {params.theta:.10g}")
    print(f"rate target        = {params.rate_target_nats:.10g} nats/use "
          f"({params.rate_target_bits:.10g} bits/use)")
    if params.rate_target_nats > 0:
        print(f"min SINR (FBL)     = {min_sinr(params):.10g}")
    print(f"min SINR (Shannon) = {shannon_min_sinr(params):.10g}")
    for g in args.gamma:
        if g < 0:
            raise UsageError("--gamma must be non-negative")
        print(f"gamma={g:g}: R={rate(g, params):.10g} nats  V={v_of(g):.10g}")
    return EXIT_OK


def cmd_solve(args) -> int:
    params, cfg = _params(args), _sca(args)
    if args.instance:
        real = ChannelRealization.load(args.instance)
        if real.config is None:
            real.config = _network(args)
    else:
        real = draw_channels(_network(args), args.seed)
    if args.save_instance:
        real.save(args.save_instance)
    plain, tuned = run_plain_and_tuned(real, params, cfg)
    sol = tuned if cfg.tuning_enabled else plain
    P = real.power_budget
    print(f"users={real.num_users} antennas={real.num_antennas} P={P:g} "
          f"min SINR={min_sinr(params):.6g} target={params.rate_target_nats:.6g} nats")
    print(f"status={sol.status} iterations={sol.iterations_used} tuning_rounds={sol.tuning_rounds_used}")
    print(f"scheduled ({sol.cardinality}): {list(sol.scheduled_set)}")
    print(f"total power = {sol.total_power:.6g} (budget {P:g})")
    for k in sol.scheduled_set:
        print(f"  user {k}: SINR={sol.per_user_sinr[k]:.6g} rate={sol.per_user_rate_nats[k]:.6g} nats "
              f"d={real.distances_m[k]:.1f} m")
    if args.trace:
        with open(args.trace, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=["tau", "objective", "sum_kappa", "power"],
                               lineterminator="\n")
            w.writeheader()
            w.writerows(plain.trace)
    return EXIT_OK


def cmd_sweep(args) -> int:
    if args.config:
        with open(args.config) as fh:
            data = json.load(fh)
        try:
            cfg = sweep_config_from_dict(data)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad sweep config: {exc}") from None
    else:
        methods = [m.strip() for m in args.methods.split(",") if m.strip()]
        if args.no_tuning:
            methods = [m for m in methods if m != "sca_tuned"]
        try:
            values = [] if not args.values else [float(v) for v in args.values.split(",")]
            cfg = SweepConfig(
                axis=args.axis, axis_values=values, network=_network(args),
                epsilon=args.epsilon, blocklength=args.blocklength, data_bits=args.data_bits,
                trials=args.trials, master_seed=args.seed, methods=tuple(methods),
                sca=_sca(args), jobs=args.jobs,
            )
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    res = run_sweep(cfg)
    text = res.to_csv(timing=args.timing)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_compare(args) -> int:
    params, cfg = _params(args), _sca(args)
    net = _network(args)
    if args.trials < 1:
        raise UsageError("--trials must be positive")
    gt = min_sinr(params)
    rows = []
    print(f"{'seed':>6} {'ES':>3} {'SCA':>4} {'plain':>5} {'Sh.raw':>6} {'Sh.ver':>6}")
    for t in range(args.trials):
        seed = args.seed + t
        real = draw_channels(net, seed)
        es = exhaustive_search(real, gt)
        plain, tuned = run_plain_and_tuned(real, params, cfg)
        sh = shannon_schedule(real, params, cfg, tuned=cfg.tuning_enabled)
        row = dict(seed=seed, es=es.cardinality, sca_tuned=tuned.cardinality,
                   sca_plain=plain.cardinality, shannon_raw=sh.raw_cardinality,
                   shannon_verified=sh.verified_cardinality)
        rows.append(row)
        print(f"{seed:>6} {row['es']:>3} {row['sca_tuned']:>4} {row['sca_plain']:>5} "
              f"{row['shannon_raw']:>6} {row['shannon_verified']:>6}")
    means = {k: float(np.mean([r[k] for r in rows])) for k in rows[0] if k != "seed"}
    print("mean   " + " ".join(f"{k}={v:.3f}" for k, v in means.items()))
    if means["es"] > 0:
        print(f"SCA/ES = {means['sca_tuned'] / means['es']:.3f}")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
    return EXIT_OK


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "rate-tools":
            return cmd_rate_tools(args)
        if args.command == "solve":
            return cmd_solve(args)
        if args.command == "sweep":
            return cmd_sweep(args)
        return cmd_compare(args)
    except UsageError as exc:
        print(f"fblsched: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"fblsched: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
