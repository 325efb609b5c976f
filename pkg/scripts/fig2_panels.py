"""Bivariate Gaussian under the four constraint panels, checked against rejection sampling.

    python scripts/fig2_panels.py --T 10000 --out results/fig2
"""

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from ngrhmc.catalog import build_example
from ngrhmc.cli import write_samples
from ngrhmc.demos import FIG2_PANELS, fig2_demo
from ngrhmc.oracles import rejection_sample


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--T", type=float, default=10_000.0)
    ap.add_argument("--chains", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--proposals", type=int, default=10**6)
    ap.add_argument("--out", default=None, help="write fig2_<panel>.csv here")
    args = ap.parse_args(argv)

    runs = fig2_demo(T=args.T, chains=args.chains, seed=args.seed)
    rng = np.random.default_rng(args.seed)
    for panel in FIG2_PANELS:
        ex = build_example(f"fig2-{panel}")
        outs = runs[panel]
        oracle = rejection_sample(ex.exact_sampler, ex.constraints, args.proposals, rng)
        mean = np.mean([o.time_mean for o in outs], axis=0)
        se = np.sqrt(np.sum([o.time_mean_se**2 for o in outs], axis=0)) / len(outs)
        z = (mean - oracle.mean) / np.hypot(se, oracle.mean_se)
        worst = min(float(c.evaluate(q)) for c in ex.constraints for o in outs for q in o.samples)
        print(
            f"{panel:9s} mean {np.array2string(mean, precision=4)} oracle "
            f"{np.array2string(oracle.mean, precision=4)} z {np.array2string(z, precision=2)} "
            f"min c {worst:.2e} acceptance {oracle.acceptance:.3f}"
        )
        if args.out:
            Path(args.out).mkdir(parents=True, exist_ok=True)
            write_samples(Path(args.out) / f"fig2_{panel}.csv", outs, 2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
