"""Command-line front end: simulate, preset, validate, summarize.

Exit codes: 0 success, 1 runtime or infeasibility error, 2 usage error
(malformed flags, unknown preset, bad config file).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path
from types import SimpleNamespace
from typing import Optional

from codedlb.harness import (
    STRATEGIES,
    TOPOLOGIES,
    ExperimentConfig,
    run_experiment,
    run_preset,
)
from codedlb.metrics import aggregate
from codedlb.placement import InfeasibleError
from codedlb.validation import run_validation


class UsageError(Exception):
    pass


def _int_or_list(text: str):
    vals = [int(v) for v in text.split(",") if v.strip()]
    if not vals:
        raise argparse.ArgumentTypeError(f"empty value {text!r}")
    return vals[0] if len(vals) == 1 else tuple(vals)


def _float_or_list(text: str):
    vals = [float(v) for v in text.split(",") if v.strip()]
    if not vals:
        raise argparse.ArgumentTypeError(f"empty value {text!r}")
    return vals[0] if len(vals) == 1 else tuple(vals)


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {text!r}")


_SIMULATE_DEFAULTS = {
    "topology": "torus",
    "n": 2025,
    "k": 100,
    "m": 1,
    "ell": 1,
    "gamma": 0.0,
    "strategy": "nearest",
    "q": 65537,
    "ensure_coverage": False,
    "m_requests": None,
    "trials": 100,
    "seed": 42,
    "out": "results.csv",
    "summary": None,
    "workers": None,
}

_CONFIG_PARSERS = {
    "topology": str,
    "n": _int_or_list,
    "k": int,
    "m": _int_or_list,
    "ell": _int_or_list,
    "gamma": _float_or_list,
    "strategy": str,
    "q": int,
    "ensure_coverage": _parse_bool,
    "m_requests": int,
    "trials": int,
    "seed": int,
    "out": str,
    "summary": str,
    "workers": int,
}


def _read_config_file(path: str) -> dict:
    """Flat `key = value` lines; # comments and blank lines ignored."""
    values = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _CONFIG_PARSERS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            values[key] = _CONFIG_PARSERS[key](value.strip())
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise UsageError(f"{path}:{lineno}: {exc}") from exc
    return values


def _merged(args: argparse.Namespace) -> dict:
    file_values = _read_config_file(args.config) if args.config else {}
    merged = {}
    for key, default in _SIMULATE_DEFAULTS.items():
        flag = getattr(args, key)
        merged[key] = flag if flag is not None else file_values.get(key, default)
    return merged


def cmd_simulate(args: argparse.Namespace) -> int:
    v = _merged(args)
    cfg = ExperimentConfig(
        strategy=v["strategy"],
        topology=v["topology"],
        n=v["n"],
        k=v["k"],
        m_cache=v["m"],
        ell=v["ell"],
        gamma=v["gamma"],
        q=v["q"],
        ensure_coverage=v["ensure_coverage"],
        m_requests=v["m_requests"],
        trials=v["trials"],
        master_seed=v["seed"],
    )
    run_experiment(cfg, v["out"], v["summary"], v["workers"])
    wrote = v["out"] if v["summary"] is None else f"{v['out']} and {v['summary']}"
    print(f"wrote {wrote}")
    return 0


def cmd_preset(args: argparse.Namespace) -> int:
    csv_path, json_path = run_preset(
        args.name, args.out_dir, scale=args.scale,
        master_seed=args.seed, workers=args.workers,
    )
    print(f"wrote {csv_path} and {json_path}")
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    return 1 if run_validation() else 0


def cmd_summarize(args: argparse.Namespace) -> int:
    try:
        text = Path(args.csv).read_text()
    except OSError as exc:
        raise ValueError(f"cannot read {args.csv}: {exc}") from exc
    groups: dict[tuple, list] = {}
    for row in csv.DictReader(text.splitlines()):
        key = tuple(row[c] for c in ("topology", "n", "k", "m", "ell", "gamma", "strategy", "q"))
        groups.setdefault(key, []).append(
            SimpleNamespace(
                comm_cost=float(row["comm_cost"]),
                max_load=float(row["max_load"]),
                failures=int(row["failures"]),
                served_requests=int(row["served"]),
            )
        )
    if not groups:
        raise ValueError(f"no data rows in {args.csv}")
    out = []
    for key, rows in groups.items():
        agg = aggregate(rows)
        topology, n, k, m, ell, gamma, strategy, q = key
        out.append(
            {
                "topology": topology,
                "n": int(n),
                "k": int(k),
                "m": int(m),
                "ell": int(ell),
                "gamma": float(gamma),
                "strategy": strategy,
                "q": int(q),
                "trials": agg.trials,
                "comm_cost": {
                    "mean": agg.comm_cost_mean,
                    "std": agg.comm_cost_std,
                    "ci95": agg.comm_cost_ci95,
                },
                "max_load": {
                    "mean": agg.max_load_mean,
                    "std": agg.max_load_std,
                    "ci95": agg.max_load_ci95,
                },
                "failure_rate": agg.failure_rate,
            }
        )
    text_out = json.dumps(out, indent=2)
    if args.out:
        Path(args.out).write_text(text_out + "\n")
        print(f"wrote {args.out}")
    else:
        print(text_out)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="codedlb",
        description="Monte Carlo simulator for cache networks on a grid",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one experiment (one swept dimension at most)")
    sim.add_argument("--topology", choices=TOPOLOGIES)
    sim.add_argument("--n", type=_int_or_list, help="node count (perfect square), or comma list")
    sim.add_argument("--k", type=int, help="library size")
    sim.add_argument("--m", type=_int_or_list, help="cache size in files, or comma list")
    sim.add_argument("--ell", type=_int_or_list, help="chunks per file, or comma list")
    sim.add_argument("--gamma", type=_float_or_list, help="popularity skew, or comma list")
    sim.add_argument("--strategy", choices=STRATEGIES)
    sim.add_argument("--q", type=int, help="field order for coded chunks")
    sim.add_argument("--ensure-coverage", action="store_true", default=None,
                     dest="ensure_coverage")
    sim.add_argument("--m-requests", type=int, dest="m_requests")
    sim.add_argument("--trials", type=int)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--out", help="CSV output path")
    sim.add_argument("--summary", help="JSON summary output path")
    sim.add_argument("--workers", type=int)
    sim.add_argument("--config", help="key = value file; flags override")
    sim.set_defaults(func=cmd_simulate)

    pre = sub.add_parser("preset", help="run a bundled figure-style sweep")
    pre.add_argument("name", choices=("fig1", "fig2", "fig3", "fig4"))
    pre.add_argument("--scale", type=float, default=1.0,
                     help="multiply trial counts (e.g. 0.05 for a quick pass)")
    pre.add_argument("--seed", type=int, default=42)
    pre.add_argument("--out-dir", default="results", dest="out_dir")
    pre.add_argument("--workers", type=int, default=None)
    pre.set_defaults(func=cmd_preset)

    val = sub.add_parser("validate", help="run the built-in self-check suite")
    val.set_defaults(func=cmd_validate)

    summ = sub.add_parser("summarize", help="aggregate a results CSV into JSON")
    summ.add_argument("csv")
    summ.add_argument("--out", help="write JSON here instead of stdout")
    summ.set_defaults(func=cmd_summarize)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed usage
        return 0 if exc.code in (0, None) else int(exc.code)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, InfeasibleError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
