"""Pilot runs over candidate tilts for one tail; prints the variance table."""

import argparse

from gilbert_rare.estimators_nd import mu_estimate
from gilbert_rare.geometry import Window
from gilbert_rare.importance import pilot_tune_gamma


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--lambda", dest="lam", type=float, default=2.0)
    p.add_argument("--side", type=float, default=20.0)
    p.add_argument("--a", type=float, default=0.2)
    p.add_argument("--tail", choices=("lower", "upper"), default="upper")
    p.add_argument("--gammas", default="1.0,1.005,1.01,1.02")
    p.add_argument("--n", type=int, default=5000)
    p.add_argument("--mu", type=float, help="mean edge count; simulated when omitted")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    args = p.parse_args()

    win = Window.box(args.side, args.side)
    mu = args.mu if args.mu is not None else mu_estimate(args.lam, win, 20_000, seed=20_000).mean
    gammas = [float(g) for g in args.gammas.split(",")]
    best, rows = pilot_tune_gamma(args.lam, win, args.a, mu, args.tail, gammas, args.n,
                                  seed=args.seed, workers=args.workers)
    print(f"mu={mu:.2f} tail={args.tail}")
    for r in rows:
        gain = r.estimate * (1 - r.estimate) / r.variance if r.variance > 0 else float("inf")
        mark = " *" if r.gamma == best else ""
        print(f"  gamma={r.gamma:<8g} estimate={r.estimate:.4e} variance={r.variance:.3e} "
              f"gain={gain:.1f}{mark}")


if __name__ == "__main__":
    main()
