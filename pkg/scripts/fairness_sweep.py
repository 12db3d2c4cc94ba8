#!/usr/bin/env python3
"""Fairness sweep: expected revenue versus report share across rosters.

For each roster the first publisher's mean revenue is compared with its
closed-form share of the total payout. Columns:
roster,share,expected,mean,std_error,z.
"""

import argparse
import csv
import sys

from prrr.game import GameConfig, honest_profile, simulate_epochs
from prrr.protocol import EpochConfig
from prrr.rvalue import LogarithmicSpec, rallpub_closed_form

ROSTERS = [(1, 1), (1, 3), (2, 2), (3, 3), (1, 5), (4, 2)]


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--trials", type=int, default=50_000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default=None)
    args = parser.parse_args()

    spec = LogarithmicSpec(lam=1.0, r_min=2.0)
    sink = open(args.out, "w", newline="") if args.out else sys.stdout
    writer = csv.writer(sink)
    writer.writerow(["roster", "share", "expected", "mean", "std_error", "z"])
    for k, rest in ROSTERS:
        cfg = GameConfig(
            epoch=EpochConfig(t_total=3, t_pub=1, spec=spec),
            publishers=((0, k), (1, rest)),
            seed=args.seed,
        )
        total = k + rest
        summary = simulate_epochs(cfg, honest_profile(cfg), trials=args.trials, seed=args.seed)
        est = summary.publisher[0]
        expected = (k / total) * rallpub_closed_form(spec, total)
        z = (est.mean - expected) / est.std_error if est.std_error else 0.0
        writer.writerow(
            [f"{k}+{rest}", f"{k/total:.4f}", f"{expected:.6f}", f"{est.mean:.6f}", f"{est.std_error:.6f}", f"{z:.2f}"]
        )
    if args.out:
        sink.close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
