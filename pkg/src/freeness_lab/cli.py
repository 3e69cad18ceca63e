"""Command line entry point ``freeness-lab``.

    freeness-lab <couple|band|freeness|concentration|esd> [--config PATH] [flags]
    freeness-lab summarize RUN_DIR [RUN_DIR ...] [--out DIR]

Flags override config values.  Without ``--config`` the kind's defaults are
used and ``--n`` must be given.  Exit codes: 0 success, 2 an acceptance gate
failed, 1 error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import ConfigError, ExperimentConfig, load_config
from .linalg import NumericalFailure
from .parallel import resolve_threads
from .runner import run, summarize

__all__ = ["main", "build_parser"]

EXIT_OK, EXIT_ERROR, EXIT_GATE = 0, 1, 2


def _ints(text: str) -> tuple:
    return tuple(int(t) for t in text.split(",") if t.strip())


def _floats(text: str) -> tuple:
    return tuple(float(t) for t in text.split(",") if t.strip())


def _words(text: str) -> tuple:
    # "1,2,1,2" or several words separated by ";"
    return tuple(_ints(w) for w in text.split(";") if w.strip())


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="experiment config file")
    p.add_argument("--seed", type=int, help="base seed (decimal u64)")
    p.add_argument("--threads", type=int, help="worker threads (default $FREENESS_LAB_THREADS or 1)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--n", type=_ints, dest="n_grid", help="dimension grid, e.g. 64,128")
    p.add_argument("--reps", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="freeness-lab", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("couple", help="coupled Haar families and diagonal residuals")
    _common(p)
    p.add_argument("--m", type=int)
    p.add_argument("--k", type=_ints)

    p = sub.add_parser("band", help="band projection bound on random instances")
    _common(p)
    p.add_argument("--epsilon", type=float)

    p = sub.add_parser("freeness", help="alternating-word moments against adversaries")
    _common(p)
    p.add_argument("--n-grid", type=_ints, dest="n_grid")
    p.add_argument("--word", type=_words)
    p.add_argument("--strategy")
    p.add_argument("--restarts", type=int)
    p.add_argument("--epsilon", type=float)

    p = sub.add_parser("concentration", help="empirical tails against the Herbst bound")
    _common(p)
    p.add_argument("--stat")
    p.add_argument("--deltas", type=_floats)

    p = sub.add_parser("esd", help="empirical spectral distributions")
    _common(p)
    p.add_argument("--k", type=_ints)

    p = sub.add_parser("summarize", help="pool finished runs")
    p.add_argument("runs", nargs="+", help="run directories")
    p.add_argument("--out", help="write pooled summary here")
    return parser


_OVERRIDES = ("seed", "n_grid", "reps", "m", "k", "epsilon", "word", "strategy", "restarts", "stat", "deltas", "out")


def _config_from_args(args) -> ExperimentConfig:
    if args.config:
        config = load_config(args.config)
        if config.kind != args.command:
            raise ConfigError(f"config is for {config.kind!r}, not {args.command!r}", "kind")
    else:
        if not args.n_grid:
            raise ConfigError("--n is required without --config", "n_grid")
        config = ExperimentConfig(kind=args.command, n_grid=args.n_grid)
    overrides = {name: getattr(args, name, None) for name in _OVERRIDES}
    return config.with_overrides(**overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "summarize":
            result = summarize(args.runs, args.out)
            gates = result["gates"]
        else:
            config = _config_from_args(args)
            manifest = run(config, args.out or config.out, resolve_threads(args.threads))
            gates = manifest.gates
    except (ConfigError, NumericalFailure, OSError, ValueError, KeyError) as exc:
        print(f"freeness-lab: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    print(json.dumps(gates, indent=2, sort_keys=True))
    return EXIT_OK if all(gates.values()) else EXIT_GATE


if __name__ == "__main__":
    sys.exit(main())
