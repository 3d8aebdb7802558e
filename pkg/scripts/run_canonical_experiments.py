#!/usr/bin/env python3
"""Run the bundled scenario configs and print one summary line per run.

Outputs (series.csv + report.json per scenario) land under results/.
"""

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "src"))

from fpdecay import ScenarioConfig, run_scenario

ROOT = pathlib.Path(__file__).resolve().parent.parent
CONFIGS = [
    "kinetic_validate.toml",
    "kinetic_decay.toml",
    "kinetic_subspace.toml",
    "scalar_hyper.toml",
    "kinetic_fisher.toml",
]


def main() -> int:
    failures = 0
    for name in CONFIGS:
        cfg = ScenarioConfig.from_toml(ROOT / "configs" / name)
        out = ROOT / "results" / name.removesuffix(".toml")
        report = run_scenario(cfg, out_dir=out)
        line = f"{name:28s} {'PASS' if report.passed else 'FAIL'}"
        if report.fit is not None:
            line += (
                f"  rate_hat={report.fit.rate_hat:6.3f}"
                f"  poly_order_hat={report.fit.poly_order_hat:6.3f}"
            )
        print(line)
        failures += 0 if report.passed else 1
    print(f"outputs under {ROOT / 'results'}")
    return failures


if __name__ == "__main__":
    raise SystemExit(main())
