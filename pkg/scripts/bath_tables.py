"""Correlation, negative-frequency remainder and its long-lag asymptote for a Lorentzian bath."""

import argparse
import math

import numpy as np

from micromodel.bath import (correlation_closed_form, correlation_numeric, delta_diagnostics,
                             khalfin_asymptotic, remainder_numeric)
from micromodel.model import FAMILIES, BathSpec


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--family", choices=FAMILIES, default="lorentzian")
    p.add_argument("--lam", type=float, default=10.0)
    p.add_argument("--omega0-ratio", type=float, default=100.0)
    p.add_argument("--taus", type=float, nargs="+", default=[0.1, 1, 2, 5, 10, 20], help="in units of 1/lambda")
    args = p.parse_args()

    b = BathSpec(family=args.family, lam=args.lam, omega0=args.omega0_ratio * args.lam)
    d = delta_diagnostics(b)
    print(f"{args.family}: weight {d.weight:.12g}, correlation time {d.correlation_time:.4g}, "
          f"support {d.sup_width:.4g}")
    print(f"{'tau lambda':>10} {'|closed|':>12} {'|numeric|':>12} {'|remainder|':>12} {'|asymptote|':>12}")
    for tl in args.taus:
        tau = tl / b.lam
        closed = abs(correlation_closed_form(b, tau))
        num = abs(correlation_numeric(b, tau))
        rem = abs(remainder_numeric(b, tau))
        kh = (abs(khalfin_asymptotic(b, tau)) if b.family == "lorentzian" and tau * math.hypot(b.omega0, b.lam) >= 10
              else np.nan)
        print(f"{tl:10.3g} {closed:12.4e} {num:12.4e} {rem:12.4e} {kh:12.4e}")


if __name__ == "__main__":
    main()
