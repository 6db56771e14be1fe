"""Monobit and byte-histogram checks over a long honest run's beacon values.

    python scripts/beacon_uniformity.py --rounds 10000
"""

import argparse
import math

from caucus.config import SimConfig
from caucus.simulator import run_full
from caucus.stats import byte_histogram_chi2, monobit


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--rounds", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=3)
    args = ap.parse_args()

    sim = run_full(SimConfig(n=10, rounds=args.rounds, seed=args.seed, ceremony=False))
    values = [e.R for e in sim.state.beacon.history[1:]]
    ones, bits = monobit(values)
    z = (ones - bits / 2) / math.sqrt(bits / 4)
    chi2, p = byte_histogram_chi2(values)
    print(f"{len(values)} beacon values, {bits} bits")
    print(f"monobit: {ones} ones, z = {z:+.3f}")
    print(f"byte histogram: chi2 = {chi2:.1f} (df 255), p = {p:.4f}")


if __name__ == "__main__":
    main()
