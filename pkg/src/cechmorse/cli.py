"""Command line entry point: ``cechmorse {filtration,verify,experiment}``.

Exit codes: 0 success, 1 verification failure, 2 degenerate or tied input,
3 usage, parse or config error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from pathlib import Path

from . import __version__
from .errors import CrossCheckMismatch, DegenerateInput, TieAmbiguity
from .filtration import build_cech_filtration, critical_census
from .geometry import PointCloud, general_position_check
from .identities import check_critical_correspondence, check_morse_identities, check_pd_count_identity
from .persistence import compute_persistence, summarize
from .stochastic import (
    GAMMA_EXACT,
    GENERATOR_NAME,
    ExperimentConfig,
    concentration_diagnostic,
    gamma_mc_integral,
    lifetime_histogram,
    limit_pd_mass,
    pd_mass_experiment,
    pd_trials,
    slln_critical_experiment,
)

EXIT_OK, EXIT_FAIL, EXIT_DEGENERATE, EXIT_USAGE = 0, 1, 2, 3
EXPERIMENT_KINDS = ("slln", "gamma", "pd_mass", "lifetime", "concentration")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


class Outputs:
    """Collects named outputs; writes them under --out or prints the primary one."""

    def __init__(self, out_dir):
        self.out_dir = Path(out_dir) if out_dir else None
        self.files = {}
        self.primary = None

    def add(self, name, text, primary=False):
        self.files[name] = text
        if primary:
            self.primary = name

    def flush(self, manifest):
        if self.out_dir is None:
            if self.primary is not None:
                sys.stdout.write(self.files[self.primary])
            return
        self.out_dir.mkdir(parents=True, exist_ok=True)
        for name, text in self.files.items():
            (self.out_dir / name).write_text(text)
        (self.out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _manifest(args, config, inputs, seed, started):
    return {
        "command": args.command,
        "argv": args.argv,
        "config": config,
        "inputs": {str(p): _sha256(p) for p in inputs},
        "seed": seed,
        "version": __version__,
        "wall_seconds": round(time.perf_counter() - started, 3),
    }


def _load_cloud(path) -> PointCloud:
    try:
        return PointCloud.from_csv(path)
    except (OSError, ValueError) as exc:
        raise UsageError(str(exc)) from exc


def cmd_filtration(args) -> int:
    started = time.perf_counter()
    cloud = _load_cloud(args.input)
    if not 1 <= args.max_dim <= cloud.dimension:
        raise UsageError(f"--max-dim must lie in [1, {cloud.dimension}]")
    filt = build_cech_filtration(cloud, args.max_dim, args.t_max)
    steps = {
        "simplices": len(filt),
        "groups": len(filt.steps),
        "singletons": sum(g.is_singleton for g in filt.steps),
        "intervals": [{"value": g.value, "tau": list(g.tau), "sigma": list(g.sigma),
                       "members": [list(filt.simplices[m]) for m in g.members]}
                      for g in filt.interval_groups()],
    }
    out = Outputs(args.out)
    out.add("filtration.csv", filt.to_csv(), primary=True)
    out.add("steps.json", json.dumps(steps, indent=2) + "\n")
    config = {"max_dim": args.max_dim, "t_max": args.t_max}
    out.flush(_manifest(args, config, [args.input], None, started))
    return EXIT_OK


def verify_cloud(cloud: PointCloud, q_max: int):
    """Full pipeline on one cloud; returns ``(report, diagram)``."""
    filt = build_cech_filtration(cloud, q_max + 1)
    census = critical_census(filt, cloud)
    diagram = compute_persistence(filt)
    summary = summarize(diagram, q_max)
    report = check_morse_identities(census, summary, q_max=q_max)
    report.extend(check_pd_count_identity(len(cloud), census, summary, q_max))
    report.extend(check_critical_correspondence(filt, diagram, q_max))
    return report, diagram


def cmd_verify(args) -> int:
    started = time.perf_counter()
    cloud = _load_cloud(args.input)
    q_max = args.q_max if args.q_max is not None else cloud.dimension - 1
    if not 0 <= q_max <= cloud.dimension - 1:
        raise UsageError(f"--q-max must lie in [0, {cloud.dimension - 1}]")
    out = Outputs(args.out)
    config = {"q_max": q_max}
    gp = general_position_check(cloud)
    if not gp.ok:
        payload = {"passed": False, "error": "not in general position",
                   "violations": [list(map(lambda x: list(x) if isinstance(x, tuple) else x, v))
                                  for v in gp.violations]}
        out.add("report.json", json.dumps(payload, indent=2) + "\n", primary=True)
        out.flush(_manifest(args, config, [args.input], None, started))
        return EXIT_DEGENERATE
    report, diagram = verify_cloud(cloud, q_max)
    out.add("report.json", report.to_json() + "\n", primary=True)
    out.add("diagram.json", diagram.to_json(q_max) + "\n")
    out.flush(_manifest(args, config, [args.input], None, started))
    return EXIT_OK if report.passed else EXIT_FAIL


def _run_experiment(config: ExperimentConfig, out: Outputs) -> dict:
    kind = config.kind
    N = config.density.dimension
    extra = {}
    if kind == "slln":
        summary, trials = slln_critical_experiment(config)
        out.add("summary.csv", summary.to_csv(), primary=True)
        out.add("trials.csv", trials.to_csv())
        extra["limits"] = {str(k): GAMMA_EXACT.get((N, k)) for k in config.k_values}
    elif kind == "gamma":
        N = config.N or N
        ks = [config.k] if config.k is not None else list(config.k_values)
        est = [gamma_mc_integral(N, k, config.samples, config.seed).to_dict() for k in ks]
        for e in est:
            e["exact"] = GAMMA_EXACT.get((N, e["k"]))
        text = json.dumps(est[0] if len(est) == 1 else est, indent=2) + "\n"
        out.add("gamma.json", text, primary=True)
    elif kind == "pd_mass":
        summary, trials, _ = pd_mass_experiment(config)
        out.add("summary.csv", summary.to_csv(), primary=True)
        out.add("trials.csv", trials.to_csv())
    elif kind == "lifetime":
        results = pd_trials(config)
        ref = limit_pd_mass(N, config.q) if (N, config.q) in GAMMA_EXACT else math.nan
        parts = []
        for n in config.n_values:
            diags = [r["points"] for r in results if r["n"] == n]
            h = lifetime_histogram(diags, config.q, n, config.bins, ref)
            out.add(f"histogram_n{n}.csv", h.to_table().to_csv(), primary=(n == config.n_values[-1]))
            parts.append({"n": n, "total_mass": h.total_mass, "reference_mass": ref,
                          "first_bin_mass": h.small_lifetime_mass, "diagrams": h.diagrams})
        extra["histograms"] = parts
    elif kind == "concentration":
        k = config.k if config.k is not None else config.k_values[0]
        table, slope = concentration_diagnostic(config, k)
        out.add("variance.csv", table.to_csv(), primary=True)
        extra["fitted_slope"] = slope
    return extra


def cmd_experiment(args) -> int:
    started = time.perf_counter()
    try:
        with open(args.config) as fh:
            raw = json.load(fh)
        if raw.get("kind") not in EXPERIMENT_KINDS:
            raise UsageError(f"unknown experiment kind {raw.get('kind')!r}; expected one of {EXPERIMENT_KINDS}")
        if args.seed is not None:
            raw["seed"] = args.seed
        if args.threads is not None:
            raw["threads"] = args.threads
        config = ExperimentConfig.from_dict(raw)
    except (OSError, ValueError, TypeError) as exc:
        raise UsageError(f"bad config: {exc}") from exc
    out = Outputs(args.out)
    extra = _run_experiment(config, out)
    echo = config.to_dict()
    meta = {"config": echo, "generator": GENERATOR_NAME, "version": __version__, **extra}
    out.add("experiment.json", json.dumps(meta, indent=2, sort_keys=True) + "\n")
    manifest = _manifest(args, echo, [args.config], config.seed, started)
    manifest["generator"] = GENERATOR_NAME
    out.flush(manifest)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cechmorse", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    f = sub.add_parser("filtration", help="export the Čech filtration of a point CSV")
    f.add_argument("--input", required=True)
    f.add_argument("--max-dim", type=int, required=True)
    f.add_argument("--t-max", type=float)
    f.add_argument("--out")
    f.set_defaults(func=cmd_filtration)

    v = sub.add_parser("verify", help="check the counting identities on a point CSV")
    v.add_argument("--input", required=True)
    v.add_argument("--q-max", type=int)
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("experiment", help="run a stochastic experiment from a JSON config")
    e.add_argument("--config", required=True)
    e.add_argument("--seed", type=int)
    e.add_argument("--threads", type=int)
    e.add_argument("--out")
    e.set_defaults(func=cmd_experiment)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(argv)
    args.argv = argv
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"cechmorse: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TieAmbiguity, DegenerateInput, CrossCheckMismatch) as exc:
        print(f"cechmorse: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE


if __name__ == "__main__":
    sys.exit(main())
