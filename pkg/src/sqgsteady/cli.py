"""Command line: ``sqgsteady {steady,evolve,stability,decay,verify,sweep}``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 I/O error.
"""

from __future__ import annotations

import argparse
import sys

from .config import SCENARIOS, build_config, parse_config
from .errors import ConfigError
from .harness import output_root, run_scenario
from .spectral import set_fft_workers


def _u64(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError(f"seed must fit in u64, got {v}")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sqgsteady",
                                description="Steady states of forced SQG on a periodic box.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in SCENARIOS:
        sp = sub.add_parser(name, help=f"run the {name} scenario")
        sp.add_argument("--config", metavar="PATH", help="TOML run configuration")
        sp.add_argument("--output", metavar="DIR", help="output root (default $SQGSTEADY_OUTPUT or ./runs)")
        sp.add_argument("--threads", type=_positive_int, metavar="N", help="FFT worker threads")
        sp.add_argument("--seed-override", type=_u64, metavar="U64", help="replace force.seed")
    return p


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        if args.config:
            cfg = parse_config(args.config if args.config.endswith(".toml")
                               else open(args.config).read())
        else:
            cfg = build_config({"scenario": args.command})
        if cfg.scenario != args.command:
            cfg = cfg.replace(scenario=args.command)
        if args.seed_override is not None:
            cfg = cfg.with_override("force.seed", args.seed_override)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"config error: cannot read {args.config}: {exc}", file=sys.stderr)
        return 2
    if args.threads:
        set_fft_workers(args.threads)
    rep = run_scenario(cfg, output_root(args.output, cfg), args.threads)
    for r in rep.reports:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.check_id}  "
              f"constant={r.constant_observed:.6g}  slack={r.slack_min:.3g}")
    if rep.error:
        print(f"error: {rep.error}", file=sys.stderr)
    print(f"output: {rep.out_dir}")
    return rep.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
