#!/usr/bin/env python3
"""Run the full robustness battery and drop JSON reports into a directory.

Equilibrium sweep on the canonical instance and on a skipping-broken one,
the publisher+validator collusion check, both Sybil splits, and the
symmetric-baseline bribery construction.
"""

import argparse
import json
import sys
from pathlib import Path

from prrr.analysis.collusion import check_pub_val_collusion, check_sybil_proofness
from prrr.analysis.impossibility import FixedBountyBaseline, impossibility_demo
from prrr.analysis.spne import verify_spne
from prrr.game import GameConfig
from prrr.protocol import EpochConfig
from prrr.rvalue import LogarithmicSpec


def desk(lam, publishers=((0, 2), (1, 2)), seed=0):
    return GameConfig(
        epoch=EpochConfig(t_total=2, t_pub=1, spec=LogarithmicSpec(lam, 2.0)),
        publishers=publishers,
        seed=seed,
    )


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results")
    parser.add_argument("--trials", type=int, default=20_000)
    parser.add_argument("--seed", type=int, default=4)
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    def dump(name, obj):
        (out / name).write_text(json.dumps(obj, indent=2) + "\n")
        print(f"wrote {out / name}")

    clean = verify_spne(desk(1.0), trials=args.trials, seed=args.seed)
    dump("spne_canonical.json", clean.to_obj())
    print("  canonical verdict:", clean.verdict)

    broken = verify_spne(desk(0.4), trials=args.trials, seed=args.seed)
    dump("spne_weak_lambda.json", broken.to_obj())
    print("  weak-lambda verdict:", broken.verdict)

    pubval = check_pub_val_collusion(desk(1.0), (0, 1), trials=2_000, seed=args.seed)
    dump("collusion.json", pubval.to_obj())

    sybil_cfg = desk(1.0, publishers=((0, 4), (1, 2)))
    for split in ((2, 2), (1, 1, 1, 1)):
        report = check_sybil_proofness(sybil_cfg, 0, split, trials=args.trials // 4, seed=args.seed)
        dump(f"sybil_{'_'.join(map(str, split))}.json", report.to_obj())

    demo = impossibility_demo(2, FixedBountyBaseline(r_fix=10.0, v=1.0), 4)
    dump("impossibility.json", demo.to_obj())
    return 0


if __name__ == "__main__":
    sys.exit(main())
