"""Calibrate the lower-tail thinning strength from a simulated edge intensity."""

import argparse

from gilbert_rare.analytic import calibrate_gamma, pair_correlation_ps
from gilbert_rare.estimators_nd import mu_estimate
from gilbert_rare.geometry import Window


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--lambda", dest="lam", type=float, default=2.0)
    p.add_argument("--a", type=float, default=0.2)
    p.add_argument("--side", type=float, default=20.0)
    p.add_argument("--n", type=int, default=20_000, help="samples for the intensity")
    p.add_argument("--seed", type=int, default=20_000)
    args = p.parse_args()

    m = mu_estimate(args.lam, Window.box(args.side, args.side), args.n, seed=args.seed)
    print(f"mean edges {m.mean:.2f} +- {m.std_error:.2f}, "
          f"intensity {m.intensity:.5f} +- {m.intensity_se:.5f}")
    c = calibrate_gamma(args.lam, args.a, m.intensity)
    print(f"gamma {c.gamma:.6f}  beta {c.beta:.6f}  interaction {c.interaction:.6f}  "
          f"lambda_ps {c.lambda_ps:.6f}")
    for r in (0.0, 0.25, 0.5, 0.75, 1.0):
        print(f"  rho_ps({r:.2f}) = {pair_correlation_ps(r, c):.6f}")


if __name__ == "__main__":
    main()
