"""Map random on-shell Kepler states to the 4D oscillator and report the worst residuals.

    python scripts/ks_shell_transport.py --samples 100000 --seed 3
"""
import argparse
import json

from ksgeo.acceptance import ks_identity_residuals, random_ks_samples, shell_transport_residuals


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    s, sdot = random_ks_samples(args.samples, args.seed)
    out = ks_identity_residuals(s, sdot)
    out.update(shell_transport_residuals(args.samples, args.seed))
    print(json.dumps(out, indent=1, sort_keys=True))


if __name__ == "__main__":
    main()
