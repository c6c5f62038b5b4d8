"""Command-line entry points: run experiments, verify networks, sweep configs."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import load_config
from .engine import run_trials
from .matchmaking import ConfigurationError
from .sorting_networks import SortingNetwork, verify_network


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--domain", help="numbers-coo | numbers-coa | sorting")
    p.add_argument("--matchmaker")
    p.add_argument("--seed", type=int)
    p.add_argument("--eval-budget", type=int, dest="eval_budget")
    p.add_argument("--trials", type=int, dest="trial_count")
    p.add_argument("--n-parents", type=int, dest="n_parents")
    p.add_argument("--n-children", type=int, dest="n_children")
    p.add_argument("--cohort-size", type=int, dest="cohort_size")
    p.add_argument("--k-nearest", type=int, dest="k_nearest")
    p.add_argument("--horizon", type=int)
    p.add_argument("--probe-count", type=int, dest="probe_count")
    p.add_argument("--probe-mode", dest="probe_mode")
    p.add_argument("--p-all", type=float, dest="p_all")
    p.add_argument("--child-matchups", type=int, dest="child_matchups")
    p.add_argument("--workers", type=int)
    p.add_argument("--label")
    p.add_argument(
        "--export-phylogeny", action="store_const", const=True, dest="export_phylogeny"
    )
    p.add_argument("--out", dest="output_path")


_CONFIG_KEYS = (
    "domain", "matchmaker", "seed", "eval_budget", "trial_count", "n_parents",
    "n_children", "cohort_size", "k_nearest", "horizon", "probe_count",
    "probe_mode", "p_all", "child_matchups", "workers", "label",
    "export_phylogeny", "output_path",
)


def _cmd_run(args: argparse.Namespace) -> int:
    overrides = {k: getattr(args, k) for k in _CONFIG_KEYS}
    cfg = load_config(args.config, overrides)
    out = run_trials(cfg)
    print(f"wrote {cfg.trial_count} trial file(s) to {out}")
    return 0


def _cmd_verify(args: argparse.Namespace) -> int:
    net = SortingNetwork.from_text(Path(args.file).read_text())
    perfect = verify_network(net)
    print(f"swaps={len(net)} perfect={'true' if perfect else 'false'}")
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    config_dir = Path(args.configs)
    files = sorted(config_dir.glob("*.cfg"))
    if not files:
        print(f"no .cfg files under {config_dir}", file=sys.stderr)
        return 2
    for path in files:
        overrides = {"workers": args.workers} if args.workers else {}
        if args.out:
            overrides["output_path"] = str(Path(args.out) / path.stem)
        cfg = load_config(path, overrides)
        out = run_trials(cfg)
        print(f"{path.name}: wrote {cfg.trial_count} trial file(s) to {out}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="phylocoev",
        description="Co-evolutionary runs with phylogeny-informed interaction estimation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one experiment treatment")
    _add_run_flags(run_p)
    run_p.set_defaults(func=_cmd_run)

    verify_p = sub.add_parser("verify-network", help="check a serialized network")
    verify_p.add_argument("--file", required=True, help="whitespace-separated lo:hi pairs")
    verify_p.set_defaults(func=_cmd_verify)

    sweep_p = sub.add_parser("sweep", help="run every .cfg file in a directory")
    sweep_p.add_argument("--configs", required=True)
    sweep_p.add_argument("--out", help="root for per-config output directories")
    sweep_p.add_argument("--workers", type=int)
    sweep_p.set_defaults(func=_cmd_sweep)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, FileNotFoundError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
