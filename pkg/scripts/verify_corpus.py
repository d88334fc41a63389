#!/usr/bin/env python3
"""Check all counting identities on a corpus of seeded random clouds.

Usage: python scripts/verify_corpus.py [--dimension N] [--sizes 5 10 20] [--clouds C] [--seed S]
"""
import argparse
import sys
import time

from cechmorse.cli import verify_cloud
from cechmorse.stochastic import DensitySpec, sample_general_position


def run(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--dimension", type=int, default=2)
    p.add_argument("--sizes", type=int, nargs="+", default=[5, 10, 20])
    p.add_argument("--clouds", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    density = DensitySpec("uniform_cube", args.dimension)
    q_max = args.dimension - 1
    started = time.perf_counter()
    failures, redraws = [], 0
    for i in range(args.clouds):
        n = args.sizes[i % len(args.sizes)]
        cloud, extra = sample_general_position(density, n, args.seed, trial=i)
        redraws += extra
        report, _ = verify_cloud(cloud, q_max)
        if not report.passed:
            failures.append((i, n, [(c.name, c.q) for c in report.failures()]))
    took = time.perf_counter() - started
    print(f"N={args.dimension} clouds={args.clouds} sizes={args.sizes} q_max={q_max}: "
          f"failures={len(failures)} redraws={redraws} ({took:.1f}s)")
    for f in failures[:20]:
        print("  failed:", f)
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(run())
