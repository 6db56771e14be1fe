"""Win frequencies of n honest participants, with the chi-square fit.

    python scripts/fairness.py --n 10 --rounds 5000 --seed 1
"""

import argparse
import math

from caucus.config import SimConfig
from caucus.simulator import run_simulation


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=10)
    ap.add_argument("--rounds", type=int, default=5000)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--group", default="strong")
    args = ap.parse_args()

    m = run_simulation(SimConfig(n=args.n, rounds=args.rounds, seed=args.seed, group=args.group))
    p = 1 / args.n
    tol = 3 * math.sqrt(p * (1 - p) / args.rounds)
    print(f"{m.total_wins} rounds with a winner, {m.skips} skipped")
    for i in range(args.n):
        f = m.win_share(i)
        print(f"  participant {i}: {m.wins[i]:5d} wins  freq {f:.4f}  {'ok' if abs(f - p) <= tol else 'OUT'}")
    print(f"tolerance +/- {tol:.4f}; chi2 = {m.chi2:.2f}, p = {m.p_value:.4f}")


if __name__ == "__main__":
    main()
