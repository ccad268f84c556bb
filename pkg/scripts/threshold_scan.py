#!/usr/bin/env python3
"""Scan the initial purity rate of the standard Brownian equation over the
squeezing of a pure Gaussian state and locate the sign change.

The rate is positive (purity grows past 1, an unphysical direction) for
position variance below hbar^2/4mkT and negative above it.

Usage: python scripts/threshold_scan.py [n_points] > scan.csv
"""
import sys

import numpy as np

from qbrownian import (FockBasis, Operator, PhysParams, build_fock_operators,
                       gaussian_state, purity_rate, standard_qbe_generator)


def main(n_points: int = 23):
    pp = PhysParams(C=0.1)
    basis = FockBasis(params=pp, n=48)
    ops = build_fock_operators(basis)
    q, p = ops["q"], ops["p"]
    H = Operator(basis, p.mat @ p.mat / (2 * pp.m))
    G = standard_qbe_generator(pp, q, p, H)

    print("var_q,purity_rate")
    scan = np.linspace(0.05, 0.6, n_points)
    rates = []
    for v in scan:
        r = purity_rate(G, gaussian_state(q, p, pp, var_q=v))
        rates.append(r)
        print(f"{v:.6f},{r:+.9e}")

    rates = np.array(rates)
    flips = np.nonzero(np.diff(np.sign(rates)))[0]
    for i in flips:
        x = scan[i] - rates[i] * (scan[i + 1] - scan[i]) / (rates[i + 1] - rates[i])
        print(f"# sign change at var_q = {x:.6f} "
              f"(threshold hbar^2/4mkT = {pp.hbar**2 / (4 * pp.m * pp.kT):.6f})",
              file=sys.stderr)


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 23)
