"""Command line entry point: one verb per pipeline stage plus end-to-end ``compare``."""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

from ..dataset import ConfigMismatch
from . import experiment as ex
from .config import AGENTS, ConfigError, load_config, to_ini
from .metrics import load_metrics
from .report import emit_report

log = logging.getLogger("expertrec")

EXIT_OK, EXIT_CONFIG, EXIT_MISSING, EXIT_RUNTIME = 0, 2, 3, 4


def _overrides(pairs):
    out = {}
    for p in pairs or ():
        key, sep, value = p.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"--set expects KEY=VALUE, got {p!r}")
        out[key.strip()] = value.strip()
    return out


def cmd_gen_catalog(config, out, args):
    print(ex.stage_catalog(config, out))


def cmd_gen_trajectories(config, out, args):
    print(ex.stage_trajectories(config, out))


def cmd_train_irl(config, out, args):
    result = ex.stage_train(config, out)
    last = result.trace[-1] if result.trace else None
    print(f"{out / ex.MODEL}  residual_inf={result.residual_inf:.4g}"
          + (f" grad_norm={last[1]:.4g}" if last else ""))


def cmd_build_dataset(config, out, args):
    print(ex.stage_dataset(config, out))


def cmd_simulate(config, out, args):
    artifacts = ex.load_artifacts(config, out)
    result = ex.simulate_arm(config, args.agent, artifacts)
    ex.save_arm(result, out)
    print(out / f"metrics_{args.agent}.csv")


def _report(config, out, results):
    files = emit_report(results, out, to_ini(config))
    print((out / "summary.txt").read_text(encoding="utf-8").split("\n# configuration")[0].rstrip())
    return files


def cmd_compare(config, out, args):
    results = ex.run_pipeline(config, out)
    _report(config, out, {a: r.rows for a, r in results.items()})


def cmd_report(config, out, args):
    results = {}
    for agent in config.agents:
        p = out / f"metrics_{agent}.csv"
        if p.exists():
            results[agent] = load_metrics(p)
    if not results:
        raise ex.MissingArtifact(out / "metrics_<agent>.csv", "simulate --agent <name>")
    _report(config, out, results)


COMMANDS = {
    "gen-catalog": (cmd_gen_catalog, "sample the video catalog"),
    "gen-trajectories": (cmd_gen_trajectories, "run expert sessions and record demonstrations"),
    "train-irl": (cmd_train_irl, "learn the expert policy with maximum-entropy IRL"),
    "build-dataset": (cmd_build_dataset, "write the expert-state dataset used for matching"),
    "simulate": (cmd_simulate, "simulate user sessions for one agent"),
    "compare": (cmd_compare, "run every stage and all agents, then write the report"),
    "report": (cmd_report, "rebuild report files from saved per-agent metrics"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="INI file with [section] key = value constants")
    common.add_argument("--profile", default="desk", choices=("desk", "paper"),
                        help="base constants before the config file (default: desk)")
    common.add_argument("--seed", type=int, help="master seed (overrides the config file)")
    common.add_argument("--out-dir", type=Path, default=Path("out"), help="artifact directory (default: out)")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one constant")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="expertrec", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text)
        if name == "simulate":
            p.add_argument("--agent", required=True, choices=AGENTS)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(message)s")
    try:
        overrides = _overrides(args.set)
        if args.seed is not None:
            overrides["seed"] = args.seed
        config = load_config(args.config, args.profile, overrides)
        t0 = time.perf_counter()
        COMMANDS[args.command][0](config, args.out_dir, args)
        log.info("%s finished in %.1f s", args.command, time.perf_counter() - t0)
    except (ConfigError, ConfigMismatch) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ex.MissingArtifact as exc:
        print(f"missing artifact: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except Exception as exc:  # noqa: BLE001
        log.debug("failure", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
