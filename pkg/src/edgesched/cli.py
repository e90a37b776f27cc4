"""Command-line runner: ``run``, ``sweep`` and ``validate``.

Precedence: command-line flags override values in the config file, which
override built-in defaults.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from .config import ExperimentConfig, load_config
from .errors import AuditError, ConfigError
from .report import audit_outcomes_csv, sweep_csv, sweep_summary, sweep_table
from .sim import run

log = logging.getLogger("edgesched")


def _seeds(cfg: ExperimentConfig, seed_flag: Optional[int]) -> List[int]:
    if seed_flag is not None:
        return [seed_flag]
    return list(cfg.seeds) if cfg.seeds else [cfg.seed]


def _run_one(cfg: ExperimentConfig, out_dir: Path, quiet: bool):
    report = run(cfg)
    report.write(out_dir, cfg.formats)
    audit_outcomes_csv(report, report.outcomes_csv())
    if not quiet:
        sys.stdout.write(report.summary())
    return report


def cmd_run(args) -> int:
    cfg = load_config(args.config).with_overrides(policy=args.policy, output_dir=args.out)
    seeds = _seeds(cfg, args.seed)
    for s in seeds:
        out = Path(cfg.output_dir)
        if len(seeds) > 1:
            out = out / f"seed_{s}"
        _run_one(cfg.for_seed(s), out, args.quiet)
        log.info("wrote %s", out)
    return 0


def cmd_sweep(args) -> int:
    paths = sorted(Path(args.config_dir).glob("*.json"))
    if not paths:
        raise ConfigError("sweep", f"no *.json configs in {args.config_dir}")
    results = {}
    out_root = None
    for p in paths:
        cfg = load_config(p).with_overrides(policy=args.policy, output_dir=args.out)
        out_root = Path(cfg.output_dir)
        key = f"{cfg.policy.value}" if cfg.policy.value not in results else f"{cfg.policy.value}:{p.stem}"
        reps = []
        for s in _seeds(cfg, args.seed):
            rep = run(cfg.for_seed(s))
            rep.write(out_root / p.stem / f"seed_{s}", cfg.formats)
            reps.append(rep)
        results[key] = reps
    rows = sweep_table(results)
    out_root.mkdir(parents=True, exist_ok=True)
    with open(out_root / "sweep.csv", "w", encoding="utf-8", newline="\n") as f:
        f.write(sweep_csv(rows))
    text = sweep_summary(rows)
    with open(out_root / "sweep.txt", "w", encoding="utf-8", newline="\n") as f:
        f.write(text)
    if not args.quiet:
        sys.stdout.write(text)
    return 0


def cmd_validate(args) -> int:
    cfg = load_config(args.config).with_overrides(policy=args.policy, seed=args.seed,
                                                  output_dir=args.out)
    w = cfg.workload
    print(f"ok: {cfg.name} policy={cfg.policy.value} workload={w.label} "
          f"tasks/edge={w.expected_count} edges={cfg.edges}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="edgesched", description="Deadline-driven edge/cloud DNN inference scheduling simulator.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, help="override the config seed(s)")
        p.add_argument("--out", help="override the output directory")
        p.add_argument("--policy", help="override the policy name")
        p.add_argument("-q", "--quiet", action="store_true", help="do not print summaries")

    p = sub.add_parser("run", help="simulate one config")
    p.add_argument("config")
    common(p)
    p.set_defaults(func=cmd_run)
    p = sub.add_parser("sweep", help="simulate every config in a directory and compare")
    p.add_argument("config_dir")
    common(p)
    p.set_defaults(func=cmd_sweep)
    p = sub.add_parser("validate", help="parse and check a config without running it")
    p.add_argument("config")
    common(p)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except AuditError as e:
        print(f"audit failed: {e}", file=sys.stderr)
        return 3
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
