"""Command line: ``cylwig run|validate --config FILE`` and ``cylwig bose``.

Exit status: 0 when every check passes, 2 when a check fails, 1 on input errors.
Numerical libraries are imported only after the thread count is fixed.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

EXIT_OK, EXIT_INPUT, EXIT_CHECK = 0, 1, 2
_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


def _set_threads(n: int | None) -> None:
    if n is None:
        env = os.environ.get("CYLWIG_THREADS")
        n = int(env) if env and env.isdigit() else 0
    if n > 0:
        for var in _THREAD_VARS:
            os.environ[var] = str(n)


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cylwig", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("run", "validate"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, type=Path)
        sp.add_argument("--out", type=Path, default=Path("."))
        sp.add_argument("--threads", type=int, default=None, help="0 = library default")
        sp.add_argument("--seed", type=int, default=0)
    b = sub.add_parser("bose", help="trapped Bose gas scan without a config file")
    b.add_argument("--dim", type=int, required=True)
    b.add_argument("--omega", default="1")
    b.add_argument("--beta-min", required=True)
    b.add_argument("--beta-max", required=True)
    b.add_argument("--beta-steps", type=int, default=16)
    b.add_argument("--h-list", required=True, help="comma-separated h values")
    b.add_argument("--f0-threshold", default="0.01")
    b.add_argument("--beta-scaling", choices=("fixed", "scaled"), default="fixed")
    b.add_argument("--out", type=Path, default=Path("."))
    b.add_argument("--threads", type=int, default=None)
    return p


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    if args.threads is not None and args.threads < 0:
        print("error: --threads must be >= 0", file=sys.stderr)
        return EXIT_INPUT
    _set_threads(args.threads)

    from . import config as cf
    from . import experiments as ex

    try:
        if args.command == "bose":
            cfg = cf.ExperimentConfig("1", "bose", {
                "d": args.dim, "omega": args.omega, "beta_min": args.beta_min,
                "beta_max": args.beta_max, "beta_steps": args.beta_steps,
                "h_list": [s for s in args.h_list.split(",") if s],
                "f0_threshold": args.f0_threshold, "beta_scaling": args.beta_scaling,
            }, "bose")
            seed = 0
        else:
            if args.seed < 0 or args.seed >= 2**64:
                raise cf.ConfigError("--seed", "seed must be an unsigned 64-bit integer")
            cfg = cf.load(args.config)
            seed = args.seed
        plan = ex.plan(cfg, seed)
    except cf.ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    if args.command == "validate":
        print("ok")
        return EXIT_OK

    outcome = plan.run()
    outcome.summary["seed"] = seed
    outcome.summary["config_version"] = cfg.version
    paths = ex.write_outcome(outcome, args.out, cfg.output)
    for path in paths:
        print(path)
    print("pass" if outcome.passed else "fail")
    return EXIT_OK if outcome.passed else EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
