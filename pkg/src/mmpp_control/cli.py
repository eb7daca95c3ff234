"""Command-line front end.

Exit codes: 0 on success, 1 for unreadable or invalid configuration files,
2 when a computation fails (non-convergence, singular systems, instability).
"""

from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path
from typing import List, Optional

from .config import load_config
from .errors import NUMERIC_ERRORS, ConfigError, StabilityWarning
from .experiments import NhppExperiment, compare_nhpp, mmpp_for, reproduce, write_rows
from .heuristics import COMPARISON_HEADER, arm_policy, compare_heuristics, fixed_rate_policy, prm_policy
from .model import stability_check
from .nhpp import evaluate_nhpp_policy, solve_nhpp_average, write_nhpp_policy_csv
from .solver import Policy, evaluate_policy, fmt, solve_average, solve_discounted, write_policy_csv, write_value_csv
from .structure import check_generator_monotone, verify_monotone_in_n, verify_monotone_in_s


def _out(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _summary(out: Path, pairs) -> None:
    rows = [["key", "value"]] + [[k, v if isinstance(v, str) else fmt(v)] for k, v in pairs]
    write_rows(out / "summary.csv", rows)
    for k, v in rows[1:]:
        print(f"{k}: {v}")


def cmd_solve(args) -> int:
    sc = load_config(args.config).scenario()
    criterion = args.criterion or ("discounted" if sc.alpha > 0 else "average")
    if criterion == "discounted":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", StabilityWarning)
            res = solve_discounted(sc)
    else:
        res = solve_average(sc)
    out = _out(args.out)
    write_policy_csv(out / "policy.csv", res.policy)
    write_value_csv(out / "value.csv", res.value)
    pairs = [("criterion", criterion)]
    if res.gain is not None:
        pairs.append(("gain", res.gain))
    pairs += [("residual", res.residual), ("iterations", str(res.iterations))]
    for w in res.warnings:
        print(f"warning: {w}", file=sys.stderr)
    _summary(out, pairs)
    return 0


def cmd_heuristic(args) -> int:
    sc = load_config(args.config).scenario()
    out = _out(args.out)
    if args.method == "fixed":
        fr = fixed_rate_policy(sc)
        policy = Policy.constant(fr.mu_star, sc.truncation_N, sc.phase.L)
        pairs = [("method", "fixed"), ("mu_star", fr.mu_star), ("gain", fr.gain)]
    else:
        policy = arm_policy(sc) if args.method == "arm" else prm_policy(sc)
        pairs = [("method", args.method), ("gain", evaluate_policy(sc, policy))]
    write_policy_csv(out / "policy.csv", policy)
    _summary(out, pairs)
    return 0


def cmd_compare(args) -> int:
    sc = load_config(args.config).scenario()
    case = args.case or Path(args.config).stem
    row = compare_heuristics(sc, label=case)
    rows = [COMPARISON_HEADER, row.csv_fields(case, args.c if args.c is not None else "")]
    write_rows(_out(args.out) / "comparison.csv", rows)
    for k, v in zip(*rows):
        print(f"{k}: {v}")
    return 0


def cmd_check(args) -> int:
    sc = load_config(args.config).scenario()
    report = stability_check(sc)
    print(f"stable: {'yes' if report.stable else 'no'} (u_max={fmt(report.u_max)}, mean arrival rate={fmt(report.mean_rate)})")
    print(f"phase generator stochastically monotone: {'yes' if check_generator_monotone(sc.phase) else 'no'}")
    if sc.alpha > 0:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", StabilityWarning)
            res = solve_discounted(sc)
        print(f"policy: discounted (alpha={fmt(sc.alpha)})")
    elif report.stable:
        res = solve_average(sc)
        print(f"policy: average cost (gain={fmt(res.gain)})")
    else:
        print("policy: not solved (average-cost problem is unstable)")
        return 0
    for rep in (verify_monotone_in_n(res.policy), verify_monotone_in_s(res.policy)):
        print(rep.summary())
        for v in rep.violations:
            print(f"  violation n={v.n} s={v.s}: mu_low={fmt(v.value_low)} mu_high={fmt(v.value_high)}")
        if args.out:
            rep.write_csv(_out(args.out) / f"monotone_{rep.direction}.csv")
    return 0


def _nhpp_experiment(args) -> NhppExperiment:
    cfg = load_config(args.config)
    sc = cfg.nhpp_scenario()
    cut = tuple(cfg.nhpp.cut_points) if cfg.nhpp.cut_points is not None else None
    return NhppExperiment(sc, cfg.nhpp.partitions, cut)


def cmd_nhpp(args) -> int:
    exp = _nhpp_experiment(args)
    out = _out(args.out)
    if args.action == "solve":
        res = solve_nhpp_average(exp.scenario)
        write_nhpp_policy_csv(out / "nhpp_policy.csv", res.policy)
        _summary(out, [("gain", res.gain), ("residual", res.residual), ("iterations", str(res.iterations))])
    elif args.action == "approx":
        res, lifted = mmpp_for(exp.scenario, exp.partitions, exp.cut_points)
        write_policy_csv(out / "mmpp_policy.csv", res.policy)
        write_nhpp_policy_csv(out / "lifted_policy.csv", lifted)
        lifted_gain = evaluate_nhpp_policy(exp.scenario, lifted)
        _summary(out, [("partitions", str(exp.partitions)), ("mmpp_gain", res.gain), ("lifted_gain", lifted_gain)])
    else:
        cmp = compare_nhpp(exp)
        write_nhpp_policy_csv(out / "nhpp_policy.csv", cmp.optimal.policy)
        write_nhpp_policy_csv(out / "lifted_policy.csv", cmp.lifted_policy)
        rows = [["optimal", "approx", "pct"], [fmt(cmp.optimal.gain), fmt(cmp.lifted_gain), fmt(cmp.pct)]]
        write_rows(out / "comparison.csv", rows)
        for k, v in zip(*rows):
            print(f"{k}: {v}")
    return 0


def cmd_reproduce(args) -> int:
    path = reproduce(args.table, args.out, workers=args.workers)
    print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mmpp-control", description="Service-rate control for MMPP/M/1 and periodic NHPP queues")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="optimal policy for a scenario")
    s.add_argument("--config", required=True)
    s.add_argument("--criterion", choices=["discounted", "average"])
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("heuristic", help="ARM, PRM or fixed-rate policy")
    s.add_argument("--config", required=True)
    s.add_argument("--method", choices=["arm", "prm", "fixed"], required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_heuristic)

    s = sub.add_parser("compare", help="optimal gain against all heuristics")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--case", help="value of the 'case' column (default: config file name)")
    s.add_argument("--c", help="value of the 'c' column (default: empty)")
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("check", help="stability and structural checks")
    s.add_argument("--config", required=True)
    s.add_argument("--out", help="also write violation CSVs here")
    s.set_defaults(func=cmd_check)

    s = sub.add_parser("nhpp", help="periodic NHPP control")
    s.add_argument("action", choices=["solve", "approx", "compare"])
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_nhpp)

    s = sub.add_parser("reproduce", help="regenerate a built-in results table")
    s.add_argument("--table", type=int, choices=[2, 3, 4, 5], required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_reproduce)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"ConfigError: {exc}", file=sys.stderr)
        return 1
    except NUMERIC_ERRORS as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
