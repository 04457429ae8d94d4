"""Zero-constants Kerr motion bouncing between the two roots of Delta.

For every spin the half-period comes out as pi*m: the radial equation is a
Kepler problem with energy -1/2 and semimajor axis m.

    python scripts/kerr_oscillation.py --turns 4
"""
import argparse
import math

from ksgeo import IntegrationConfig, SpacetimeParams, integrate_zero_constants


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--turns", type=int, default=2)
    ap.add_argument("--spins", type=float, nargs="+", default=[0.1, 0.3, 0.6, 0.9, 0.99])
    args = ap.parse_args()

    print(f"{'a':>6} {'r-':>10} {'r+':>10} {'tau/turn':>18} {'drift':>10}")
    for a in args.spins:
        params = SpacetimeParams(1.0, a)
        inner, outer = params.horizons()
        traj = integrate_zero_constants(params, outer, IntegrationConfig(max_turns=args.turns))
        per_turn = traj.tau_span / args.turns
        print(f"{a:6.3f} {inner:10.6f} {outer:10.6f} {per_turn:18.14f} {traj.max_normalization_drift:10.2e}")
    print(f"pi = {math.pi:.14f}")


if __name__ == "__main__":
    main()
