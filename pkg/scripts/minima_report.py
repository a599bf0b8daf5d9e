#!/usr/bin/env python3
"""Curvature and weighted-loss report for the two toy basins.

Prints the located minima with their dominant Hessian eigenvalues, the
radius-scaled curvature sharpness 0.5 * rho^2 * lambda_max at several radii,
and the gamma value at which the weighted objective starts preferring the
flat basin over the sharp one. (The first-order ascent proxy is useless at a
critical point, where the gradient it normalizes vanishes, so the report
uses the quadratic form instead.)

Usage:
    python3 scripts/minima_report.py
    python3 scripts/minima_report.py --rhos 0.5,1,2,4
"""
import argparse

import numpy as np

from sharpopt.analysis import dense_hessian, power_iteration, toy_minima
from sharpopt.objectives import ToyLandscape


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rhos", default="0.5,1.0,2.0",
                    help="perturbation radii for the sharpness table")
    args = ap.parse_args()
    rhos = [float(r) for r in args.rhos.split(",") if r.strip()]

    obj = ToyLandscape()
    minima = toy_minima()
    basins = [("sharp", minima.sharp_w, minima.sharp_loss),
              ("flat", minima.flat_w, minima.flat_loss)]

    lams = {}
    print("basin  location                    loss      lambda_max    oracle eigs")
    for name, w, loss in basins:
        lams[name] = power_iteration(obj, w, seed=0).lambda_max
        eigs = np.linalg.eigvalsh(dense_hessian(obj, w))
        print(f"{name:<5}  ({w[0]:>10.5f}, {w[1]:>9.5f})  {loss:.6f}  "
              f"{lams[name]:.6e}  {np.array2string(eigs, precision=3)}")
    print()

    print("worst loss increase within a rho-ball, 0.5 * rho^2 * lambda_max:")
    print("basin  " + "  ".join(f"rho={r:<8g}" for r in rhos))
    for name, _, _ in basins:
        vals = "  ".join(f"{0.5 * r * r * lams[name]:12.6f}" for r in rhos)
        print(f"{name:<5}  {vals}")
    print()

    # the weighted objective is loss + gamma/(1-gamma) * sharpness; equate the
    # two basins and solve for the coefficient at which the flat one wins
    rho = rhos[-1]
    gap_loss = minima.flat_loss - minima.sharp_loss
    gap_sharp = 0.5 * rho * rho * (lams["sharp"] - lams["flat"])
    coeff = gap_loss / gap_sharp
    gamma_star = coeff / (1.0 + coeff)
    print(f"at rho={rho:g} the flat basin has the lower weighted loss "
          f"once gamma/(1-gamma) > {coeff:.3f}, i.e. gamma > {gamma_star:.3f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
