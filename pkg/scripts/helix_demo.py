"""Integrate the invariant equation for a few values of mu and print Frenet diagnostics."""

import argparse

from varprolong import GeometryParams, MetricConfig, frenet, helix_diagnostics, integrate, momentum_drift


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--mu", type=float, nargs="+", default=[0.3, 0.7, 1.3, 2.0])
    ap.add_argument("--t-end", type=float, default=20.0)
    ap.add_argument("--tol", type=float, default=1e-10)
    args = ap.parse_args()
    print(f"{'mu':>6} {'kappa1':>12} {'std kappa1':>12} {'kappa2':>12} {'max dev':>10} {'drift':>10} steps")
    for mu in args.mu:
        tr = integrate([0.0, 0.0], [0.1, 0.0], [0.0, 0.2], (0.0, args.t_end), args.tol, MetricConfig(),
                       GeometryParams(mu))
        d = helix_diagnostics(frenet(tr), tr.params)
        print(f"{mu:6.2f} {d['kappa1_mean']:12.8f} {d['kappa1_std']:12.2e} {d['kappa2_mean']:12.8f} "
              f"{d['kappa2_max_dev']:10.1e} {momentum_drift(tr):10.1e} {tr.stats.accepted}")


if __name__ == "__main__":
    main()
