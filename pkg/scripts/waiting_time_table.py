#!/usr/bin/env python3
"""Tabulate hypercontractivity waiting times for the canonical systems.

For each system the envelope constants are fitted on [0, 20] and the
waiting times printed over a range of entropy exponents.
"""

import pathlib
import sys

import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "src"))

from fpdecay import (
    fitted_params,
    make_normalized,
    waiting_time_T0,
    waiting_time_t0bar,
    waiting_time_t1,
)

SYSTEMS = {
    "scalar": (np.array([[1.0]]), np.array([[1.0]])),
    "rotating": (np.eye(2), np.array([[1.0, -3.5], [3.5, 1.0]])),
    "kinetic": (np.diag([0.0, 2.0]), np.array([[0.0, -1.0], [1.0, 2.0]])),
}


def main() -> None:
    for name, (D, C) in SYSTEMS.items():
        sys_n = make_normalized(D, C)
        params = fitted_params(sys_n)
        print(f"\n{name}: mu={params.mu:.3f} n={params.n} "
              f"c={params.c:.3f} c2={params.c2:.3f}")
        print(f"  t1(0.1)   = {waiting_time_t1(0.1, params):7.3f}")
        for q in (1.5, 2.0, 3.0):
            print(f"  t0bar({q}) = {waiting_time_t0bar(q, params):7.3f}")
        for p in (1.2, 1.5, 1.8):
            print(f"  T0({p})   = {waiting_time_T0(p, params):7.3f}")


if __name__ == "__main__":
    main()
