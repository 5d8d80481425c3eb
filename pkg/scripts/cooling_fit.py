#!/usr/bin/env python3
"""Relaxation of the ensemble kinetic energy: the fitted rate is mu/2 no
matter how strong the pair collisions are."""

import argparse
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from kaclab.core import Params
from kaclab.simulator import ProductGaussian, fit_cooling_rate, run


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=100)
    ap.add_argument("--mu", type=float, default=1.0)
    ap.add_argument("--beta", type=float, default=1.0)
    ap.add_argument("--replicas", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--lambdas", type=str, default="0,1,10")
    args = ap.parse_args()

    horizon = 4.4 / args.mu
    times = np.linspace(0.0, horizon, 23)
    t0_temp = 2.0 / args.beta  # start at twice the bath temperature
    print(f"N={args.n}  M={args.replicas}  mu={args.mu}  target rate mu/2 = {args.mu / 2}")
    for lam in (float(x) for x in args.lambdas.split(",")):
        p = Params(n_particles=args.n, lam=lam, mu=args.mu, beta=args.beta)
        series = run(p, n_replicas=args.replicas, horizon=horizon,
                     sample_times=times, seed=args.seed,
                     initial=ProductGaussian(temperature=t0_temp))
        rate = fit_cooling_rate(series, p)
        print(f"  lambda={lam:6.2f}: fitted rate = {rate:.5f} "
              f"({100 * (rate - args.mu / 2) / (args.mu / 2):+.2f}%)")


if __name__ == "__main__":
    main()
