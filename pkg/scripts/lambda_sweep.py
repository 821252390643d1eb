"""Redfield-to-Lindblad distance for amplitude damping as the bath bandwidth grows.

Prints one row per lambda and the fitted log-log slope; omega0 follows lambda at a fixed ratio.
"""

import argparse
import time

import numpy as np

from micromodel.model import SIGMA_MINUS, BathSpec, Constant, simple_model
from micromodel.redfield import compare_to_lindblad


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--lambdas", type=float, nargs="+", default=[10.0, 100.0, 1000.0])
    p.add_argument("--omega0-ratio", type=float, default=100.0)
    p.add_argument("--horizon", type=float, default=5.0)
    p.add_argument("--grid-points", type=int, default=501)
    p.add_argument("--correlation", default=None, help="closed, numeric, closed-minus-remainder or delta")
    args = p.parse_args()

    grid = np.linspace(0, args.horizon, args.grid_points)
    sups = []
    print(f"{'lambda':>10} {'omega0':>10} {'sup distance':>14} {'seconds':>8}")
    for lam in args.lambdas:
        spec = simple_model(2, [(SIGMA_MINUS, Constant(1.0))],
                            BathSpec(lam=lam, omega0=args.omega0_ratio * lam), horizon=args.horizon)
        t0 = time.perf_counter()
        sup = compare_to_lindblad(spec, grid, mode=args.correlation).sup
        sups.append(sup)
        print(f"{lam:10.4g} {spec.bath.omega0:10.4g} {sup:14.6e} {time.perf_counter() - t0:8.2f}")
    if len(sups) >= 2:
        slope = np.polyfit(np.log(args.lambdas), np.log(sups), 1)[0]
        print(f"log-log slope {slope:.3f}")


if __name__ == "__main__":
    main()
