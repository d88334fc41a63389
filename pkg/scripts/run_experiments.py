#!/usr/bin/env python3
"""Run every JSON config under configs/ through the CLI and print a short digest.

Usage: python scripts/run_experiments.py [--configs DIR] [--out DIR] [--threads M] [NAME ...]
"""
import argparse
import csv
import json
import sys
import time
from pathlib import Path

from cechmorse.cli import main as cli_main

ROOT = Path(__file__).resolve().parent.parent


def digest(kind, out: Path) -> str:
    if kind == "gamma":
        est = json.loads((out / "gamma.json").read_text())
        est = est if isinstance(est, list) else [est]
        return "; ".join(f"gamma({e['N']},{e['k']}) = {e['estimate']:.5f} +- {e['standard_error']:.5f}"
                         f" (exact {e['exact']:.5f})" for e in est)
    if kind == "slln":
        rows = list(csv.DictReader((out / "summary.csv").open()))
        return "; ".join(f"n={r['n']} k={r['k']}: N_k/n = {float(r['mean']):.4f}" for r in rows)
    if kind == "pd_mass":
        rows = list(csv.DictReader((out / "summary.csv").open()))
        return "; ".join(f"n={r['n']}: mass/n = {float(r['mean_mass']):.4f} (limit {r['limit_mass']})"
                         for r in rows)
    meta = json.loads((out / "experiment.json").read_text())
    if kind == "lifetime":
        return "; ".join(f"n={h['n']}: total {h['total_mass']:.4f}, first bin {h['first_bin_mass']:.4f}"
                         for h in meta["histograms"])
    if kind == "concentration":
        return f"fitted slope {meta['fitted_slope']:.3f}"
    return ""


def run(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("names", nargs="*", help="config stems to run (default: all)")
    p.add_argument("--configs", default=str(ROOT / "configs"))
    p.add_argument("--out", default=str(ROOT / "results"))
    p.add_argument("--threads", type=int, default=1)
    args = p.parse_args(argv)

    configs = sorted(Path(args.configs).glob("*.json"))
    if args.names:
        configs = [c for c in configs if c.stem in args.names]
    status = 0
    for cfg in configs:
        kind = json.loads(cfg.read_text())["kind"]
        out = Path(args.out) / cfg.stem
        started = time.perf_counter()
        code = cli_main(["experiment", "--config", str(cfg), "--out", str(out), "--threads", str(args.threads)])
        took = time.perf_counter() - started
        line = digest(kind, out) if code == 0 else f"exit code {code}"
        print(f"[{cfg.stem}] {took:.1f}s  {line}", flush=True)
        status = status or code
    return status


if __name__ == "__main__":
    sys.exit(run())
