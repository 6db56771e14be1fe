"""How well can someone guess a participant's eligibility in advance?

Compares an outside observer in full mode with a participant predicting its
own eligibility, in both modes.

    python scripts/prediction.py --probes 2000
"""

import argparse

from caucus.config import SimConfig
from caucus.simulator import prediction_advantage


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--probes", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=11)
    args = ap.parse_args()

    cases = [
        ("caucus, outside observer", SimConfig(n=10, seed=args.seed), "public"),
        ("caucus, never-eligible guess", SimConfig(n=10, seed=args.seed), "never"),
        ("caucus, self, x rounds ahead", SimConfig(n=10, seed=args.seed, adversaries=1), "self"),
        ("strawman, self", SimConfig(n=10, seed=args.seed, mode="strawman", adversaries=1), "self"),
    ]
    for label, cfg, strategy in cases:
        r = prediction_advantage(cfg, args.probes, strategy=strategy)
        print(f"{label:30s} accuracy {r.accuracy:.4f}  base {r.base_rate:.4f}  "
              f"advantage {r.advantage:.4f}  (2 sigma {2 * r.sigma:.4f}, {r.rounds} probes)")


if __name__ == "__main__":
    main()
