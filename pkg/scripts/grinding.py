"""Seed grinding: straw-man mode falls to it, the full protocol does not.

Part one grinds straw-man seeds (rnd_max=32, p=1/4) and compares the number
of seeds with M > k against the binomial tail. Part two runs the same
grinder inside both election modes on identical seeds.

    python scripts/grinding.py --runs 20 --trials 2000
"""

import argparse
import math
from fractions import Fraction

from caucus.config import SimConfig
from caucus.hashing import seed_from_int
from caucus.simulator import grind_analysis, grind_seeds, run_simulation


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--runs", type=int, default=20)
    ap.add_argument("--trials", type=int, default=2000)
    ap.add_argument("--rnd-max", type=int, default=32)
    ap.add_argument("--k", type=int, default=11)
    ap.add_argument("--rounds", type=int, default=400)
    args = ap.parse_args()

    p = Fraction(1, 4)
    an = grind_analysis(args.rnd_max, p, args.k)
    print(f"Pr[M > {args.k}] = {an.alpha:.5f}; expected trials {an.expected_trials:.1f}, "
          f"hashes {an.expected_hashes:.0f}")
    succ = 0
    for r in range(args.runs):
        res = grind_seeds(args.rnd_max, args.trials, p, seed_from_int(r))
        s = sum(m > args.k for m in res.scores)
        succ += s
        print(f"  run {r:2d}: M_best = {res.m_best:2d}, seeds with M > {args.k}: {s}")
    total = args.runs * args.trials
    sd = math.sqrt(total * an.alpha * (1 - an.alpha))
    print(f"pooled successes {succ} vs {total * an.alpha:.1f} +/- {3 * sd:.1f}")

    print("\nsame grinder, both modes (n=6, one grinder):")
    for mode in ("strawman", "caucus"):
        m = run_simulation(SimConfig(n=6, adversaries=1, strategy="grinder", grind_trials=500,
                                     grind_horizon=64, rounds=args.rounds, ceremony=False, mode=mode))
        print(f"  {mode:8s}: predicted {m.grinder_m_best}, realized {m.grinder_eligible} eligible rounds "
              f"vs fair {m.grinder_m_expected:.1f}; win share {m.grinder_share:.3f} (fair {1 / 6:.3f})")


if __name__ == "__main__":
    main()
