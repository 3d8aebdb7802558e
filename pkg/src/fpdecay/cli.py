"""Command-line entry point.

One subcommand per scenario kind; each takes --config, --out, --seed and
--quiet.  The exit status is zero exactly when every pass/fail flag of the
scenario report is true.
"""

from __future__ import annotations

import argparse
import sys

from .exceptions import FpdecayError
from .scenarios import KINDS, ScenarioConfig, run_scenario


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fpdecay",
        description="Entropy decay experiments for degenerate linear "
        "Fokker-Planck systems",
    )
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in KINDS:
        p = sub.add_parser(kind, help=f"run a {kind} scenario")
        p.add_argument("--config", required=True, help="TOML scenario config")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--quiet", action="store_true", help="suppress stdout summary")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = ScenarioConfig.from_toml(args.config, kind=args.kind, seed=args.seed)
        report = run_scenario(cfg, out_dir=args.out)
    except FpdecayError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if not args.quiet:
        print(f"{args.kind}: {'PASS' if report.passed else 'FAIL'}")
        for name, ok in report.flags.items():
            print(f"  {name}: {'pass' if ok else 'fail'}")
        if report.fit is not None:
            print(
                f"  rate_hat = {report.fit.rate_hat:.4f} "
                f"(+/- {report.fit.rate_ci:.4f}), "
                f"poly_order_hat = {report.fit.poly_order_hat:.4f} "
                f"(+/- {report.fit.poly_ci:.4f})"
            )
        print(f"  outputs in {args.out}/")
    return 0 if report.passed else 1


if __name__ == "__main__":
    raise SystemExit(main())
