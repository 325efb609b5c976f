"""Constrained vs. reparametrized sampling of the three toy posteriors.

Prints ESS, ESS/s and the Monte Carlo spread of discrete (D) and
time-integrated (C) estimates for every parameter. The full protocol
(10 trajectories of T=10000) takes roughly a quarter of an hour on one core.

    python scripts/toy_table.py --chains 10 --T 10000
"""

import argparse
import csv
import sys

from ngrhmc.demos import TOY_MODELS, toy_table


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--chains", type=int, default=10)
    ap.add_argument("--T", type=float, default=10_000.0)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--models", nargs="+", default=list(TOY_MODELS), choices=TOY_MODELS)
    ap.add_argument("--workers", type=int, default=None)
    ap.add_argument("--csv", default=None, help="write the rows to this file")
    args = ap.parse_args(argv)

    tab = toy_table(chains=args.chains, T=args.T, seed=args.seed, models=args.models, workers=args.workers)
    head = f"{'model':8s} {'method':12s} {'param':6s} {'ESS':>8s} {'ESS/s':>8s} {'MCSD-D':>9s} {'MCSD-C':>9s} D~C"
    print(head)
    for r in tab.rows:
        print(
            f"{r.model:8s} {r.method:12s} {r.parameter:6s} {r.ess:8.0f} {r.ess_per_sec:8.1f} "
            f"{r.mcsd_d:9.2e} {r.mcsd_c:9.2e} {'yes' if r.d_vs_c() else 'NO'}"
        )
    for m in args.models:
        print(f"{m}: methods agree = {tab.methods_agree(m)}")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(tab.rows[0].as_dict()))
            w.writeheader()
            w.writerows(r.as_dict() for r in tab.rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
