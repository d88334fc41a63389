"""Random point clouds and the limit experiments built on them.

All randomness flows from ``numpy.random.PCG64`` streams keyed by
``SeedSequence([seed, n, trial, attempt])`` so any single trial can be
replayed in isolation.
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DegenerateInput, TieAmbiguity, UnsupportedDimension
from .geometry import INTERIOR_TOL, PointCloud, circumspheres, general_position_check

GENERATOR_NAME = "numpy.random.PCG64 via SeedSequence([seed, n, trial, attempt])"
MAX_RETRIES = 20

# reported limits of N_k(X_n)/n
GAMMA_EXACT = {
    (2, 1): 2.0,
    (2, 2): 1.0,
    (3, 1): 4.0,
    (3, 2): 3 * (1 + math.pi ** 2 / 16),
    (3, 3): 3 * math.pi ** 2 / 16,
}


def unit_ball_volume(N: int) -> float:
    return math.pi ** (N / 2) / math.gamma(N / 2 + 1)


def limit_pd_mass(N: int, q: int, gammas=GAMMA_EXACT) -> float:
    """M_{N,q} = gamma_{N,q} - gamma_{N,q-1} + ... + (-1)^(q-1) gamma_{N,1} + (-1)^q."""
    return sum((-1) ** (q - i) * gammas[(N, i)] for i in range(1, q + 1)) + (-1) ** q


@dataclass(frozen=True)
class DensitySpec:
    kind: str = "uniform_cube"
    dimension: int = 2
    side: float = 1.0
    radius: float = 1.0

    def __post_init__(self):
        if self.kind not in ("uniform_cube", "uniform_ball"):
            raise ValueError(f"unknown density kind {self.kind!r}")
        if self.dimension < 1:
            raise ValueError("dimension must be positive")
        if self.side <= 0 or self.radius <= 0:
            raise ValueError("support size must be positive")

    @property
    def volume(self) -> float:
        if self.kind == "uniform_cube":
            return self.side ** self.dimension
        return unit_ball_volume(self.dimension) * self.radius ** self.dimension

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        N = self.dimension
        if self.kind == "uniform_cube":
            return rng.random((n, N)) * self.side
        g = rng.standard_normal((n, N))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        return g * (self.radius * rng.random(n) ** (1.0 / N))[:, None]


def trial_rng(seed: int, n: int = 0, trial: int = 0, attempt: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, n, trial, attempt])))


def sample_binomial(density: DensitySpec, n: int, seed: int, trial: int = 0, attempt: int = 0) -> PointCloud:
    if n < 1:
        raise ValueError("n must be at least 1")
    return PointCloud(density.sample(n, trial_rng(seed, n, trial, attempt)))


def sample_general_position(density: DensitySpec, n: int, seed: int, trial: int = 0):
    """Binomial sample redrawn until it passes ``general_position_check``.

    Returns ``(cloud, attempts)``.
    """
    for attempt in range(MAX_RETRIES):
        cloud = sample_binomial(density, n, seed, trial, attempt)
        if general_position_check(cloud).ok:
            return cloud, attempt
    raise DegenerateInput(f"no general-position sample after {MAX_RETRIES} draws")


@dataclass
class ExperimentConfig:
    kind: str = "slln"
    density: DensitySpec = field(default_factory=DensitySpec)
    n_values: list = field(default_factory=lambda: [500])
    trials: int = 10
    seed: int = 0
    k_values: list = field(default_factory=lambda: [1, 2])
    q: int = 1
    r_cut: object = "auto"  # "auto", None, or a radius in unscaled units
    samples: int = 1_000_000
    windows: list = field(default_factory=lambda: [[0.5, 0.6], [0.5, 1.0], [1.0, 1.5]])
    bins: list = field(default_factory=lambda: [0.0, 0.05, 0.1, 0.2, 0.3, 0.5, 0.75, 1.0, 1.5, math.inf])
    threads: int = 1
    # gamma runs only; default to density.dimension and k_values
    N: Optional[int] = None
    k: Optional[int] = None

    def __post_init__(self):
        if isinstance(self.density, dict):
            self.density = DensitySpec(**self.density)
        if self.trials < 1:
            raise ValueError("trials must be positive")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        d = dict(d)
        if "bins" in d:
            d["bins"] = [math.inf if b in ("inf", "Infinity") else float(b) for b in d["bins"]]
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["bins"] = ["inf" if math.isinf(b) else b for b in self.bins]
        return d


@dataclass
class Table:
    columns: list
    rows: list = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([_fmt(r[c]) for c in self.columns])
        return buf.getvalue()

    def column(self, name) -> list:
        return [r[name] for r in self.rows]


def _fmt(x):
    if isinstance(x, float):
        if math.isinf(x):
            return "inf"
        return repr(x)
    return x


def _map(fn, jobs, threads: int):
    if threads and threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(fn, jobs))
    return [fn(j) for j in jobs]


def _auto_r_cut(config: ExperimentConfig, n: int) -> Optional[float]:
    from .filtration import pruning_radius

    if config.r_cut is None:
        return None
    if config.r_cut == "auto":
        return pruning_radius(n, config.density.dimension, config.density.volume)
    return float(config.r_cut)


# ---------------------------------------------------------------------------
# strong law for critical simplices


def _slln_trial(job):
    from .filtration import detect_critical_geometric

    config, n, trial = job
    r_cut = _auto_r_cut(config, n)
    for attempt in range(MAX_RETRIES):
        cloud = sample_binomial(config.density, n, config.seed, trial, attempt)
        try:
            counts = {k: len(detect_critical_geometric(cloud, k, r_cut)) if n > k else 0
                      for k in config.k_values}
        except DegenerateInput:
            continue
        return {"n": n, "trial": trial, "retries": attempt, "counts": counts}
    raise DegenerateInput(f"n={n} trial={trial}: degenerate after {MAX_RETRIES} draws")


def slln_critical_experiment(config: ExperimentConfig):
    """Mean and spread of N_k(X_n)/n across trials, per n and k.

    Counts are taken on the unscaled cloud; criticality does not depend on
    scale.  Returns ``(summary, per_trial)`` tables.
    """
    for k in config.k_values:
        if not 1 <= k <= config.density.dimension:
            raise ValueError(f"k={k} outside 1..{config.density.dimension}")
    jobs = [(config, n, t) for n in config.n_values for t in range(config.trials)]
    results = _map(_slln_trial, jobs, config.threads)
    per_trial = Table(["n", "trial", "k", "count", "ratio", "retries"])
    summary = Table(["n", "k", "mean", "std", "trials", "retries"])
    for n in config.n_values:
        res = [r for r in results if r["n"] == n]
        for k in config.k_values:
            ratios = np.array([r["counts"][k] / n for r in res])
            for r in res:
                per_trial.rows.append({"n": n, "trial": r["trial"], "k": k, "count": r["counts"][k],
                                       "ratio": r["counts"][k] / n, "retries": r["retries"]})
            summary.rows.append({
                "n": n, "k": k, "mean": float(ratios.mean()),
                "std": float(ratios.std(ddof=1)) if len(ratios) > 1 else 0.0,
                "trials": len(ratios), "retries": sum(r["retries"] for r in res),
            })
    return summary, per_trial


# ---------------------------------------------------------------------------
# Monte Carlo value of gamma_{N,k}


@dataclass(frozen=True)
class GammaEstimate:
    N: int
    k: int
    estimate: float
    standard_error: float
    samples: int

    def to_dict(self) -> dict:
        return asdict(self)


def gamma_mc_integral(N: int, k: int, samples: int, seed: int, chunk: int = 500_000) -> GammaEstimate:
    """Importance-sampled estimate of

        gamma_{N,k} = 1/(k+1)! * int h_k({0,y_1..y_k}) exp(-omega_N R^N) dy_1..dy_k

    Each y_i is drawn with density a*exp(-a*omega_N*|y|^N), a = 1/(k 2^N).
    Since R >= |y_i|/2 for every i, the importance weight is bounded by
    (k 2^N)^k, so the estimator is unbiased with bounded variance and needs no
    truncation of the domain.
    """
    if not (1 <= k <= N <= 3):
        raise UnsupportedDimension(f"need 1 <= k <= N <= 3, got N={N}, k={k}")
    if samples < 2:
        raise ValueError("need at least two samples")
    omega = unit_ball_volume(N)
    a = 1.0 / (k * 2 ** N)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, N, k])))
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        vol = rng.exponential(1.0 / a, size=(m, k))  # omega*|y|^N ~ Exp(a)
        direction = rng.standard_normal((m, k, N))
        direction /= np.linalg.norm(direction, axis=2, keepdims=True)
        Y = direction * ((vol / omega) ** (1.0 / N))[:, :, None]
        P = np.concatenate([np.zeros((m, 1, N)), Y], axis=1)
        _, R, bary, ok = circumspheres(P)
        h = ok & (bary > INTERIOR_TOL).all(axis=1)
        expo = -omega * np.where(h, R, 0.0) ** N + a * vol.sum(axis=1)
        w = np.where(h, np.exp(np.minimum(expo, 0.0)), 0.0) / a ** k
        total += float(w.sum())
        total_sq += float(np.dot(w, w))
        done += m
    fact = math.factorial(k + 1)
    mean = total / samples
    var = max(total_sq / samples - mean ** 2, 0.0) * samples / (samples - 1)
    return GammaEstimate(N, k, mean / fact, math.sqrt(var / samples) / fact, samples)


# ---------------------------------------------------------------------------
# persistence diagrams of rescaled clouds


def diagram_of_rescaled(cloud: PointCloud, q: int, verify: bool = True):
    """Diagram of the Čech filtration of n^(1/N) X, exact for dimensions <= q.

    The filtration is cut at the largest critical value among simplices of
    dimension <= q+1; past that point no class of dimension <= q is born or
    dies, so the diagrams up to q are complete and all finite for q >= 1.
    Returns ``(filtration, diagram, report)``.
    """
    from .filtration import build_cech_filtration, critical_census, detect_critical_geometric
    from .identities import check_critical_correspondence, check_morse_identities, check_pd_count_identity
    from .persistence import compute_persistence, summarize

    n, N = cloud.points.shape
    scaled = cloud.scaled(n ** (1.0 / N))
    top = q + 1
    t_cap = 0.0
    for k in range(1, min(top, n - 1) + 1):
        crit = detect_critical_geometric(scaled, k)
        if crit:
            t_cap = max(t_cap, max(v for _, v in crit))
    filt = build_cech_filtration(scaled, top, t_cap)
    diagram = compute_persistence(filt)
    report = None
    if verify:
        census = critical_census(filt, scaled)
        summary = summarize(diagram, q)
        report = check_morse_identities(census, summary, q_max=q)
        report.extend(check_pd_count_identity(n, census, summary, q))
        report.extend(check_critical_correspondence(filt, diagram, q))
    return filt, diagram, report


def _pd_trial(job):
    config, n, trial = job
    q = config.q
    for attempt in range(MAX_RETRIES):
        cloud = sample_binomial(config.density, n, config.seed, trial, attempt)
        try:
            _, diagram, report = diagram_of_rescaled(cloud, q)
        except (TieAmbiguity, DegenerateInput):
            continue
        pts = diagram.finite_points(q)
        return {"n": n, "trial": trial, "retries": attempt, "points": pts.tolist(),
                "identities_passed": bool(report.passed)}
    raise TieAmbiguity(f"n={n} trial={trial}: no usable sample after {MAX_RETRIES} draws")


def pd_trials(config: ExperimentConfig):
    if not 1 <= config.q <= config.density.dimension - 1:
        raise ValueError(f"q must lie in 1..{config.density.dimension - 1}")
    jobs = [(config, n, t) for n in config.n_values for t in range(config.trials)]
    return _map(_pd_trial, jobs, config.threads)


def pd_mass_experiment(config: ExperimentConfig, trials=None):
    """Normalised diagram mass xi_{q,n}(Delta)/n and window masses per n.

    Windows ``[r, s]`` count finite points with birth <= r and death > s.
    Returns ``(summary, per_trial, trial_results)``.
    """
    if trials is None:
        trials = pd_trials(config)
    wcols = [f"window_{r:g}_{s:g}" for r, s in config.windows]
    per_trial = Table(["n", "trial", "mass", *wcols, "retries", "identities_passed"])
    summary = Table(["n", "mean_mass", "std_mass", *[f"mean_{c}" for c in wcols], "trials",
                     "identity_failures", "limit_mass"])
    limit = limit_pd_mass(config.density.dimension, config.q) \
        if (config.density.dimension, config.q) in GAMMA_EXACT else math.nan
    for n in config.n_values:
        res = [r for r in trials if r["n"] == n]
        masses, wins = [], []
        for r in res:
            P = np.array(r["points"], dtype=float).reshape(-1, 2)
            row = {"n": n, "trial": r["trial"], "mass": len(P) / n, "retries": r["retries"],
                   "identities_passed": r["identities_passed"]}
            wv = []
            for (lo, hi), c in zip(config.windows, wcols):
                row[c] = int(np.count_nonzero((P[:, 0] <= lo) & (P[:, 1] > hi))) / n
                wv.append(row[c])
            per_trial.rows.append(row)
            masses.append(row["mass"])
            wins.append(wv)
        masses = np.array(masses)
        wins = np.array(wins).reshape(len(res), len(wcols))
        srow = {"n": n, "mean_mass": float(masses.mean()),
                "std_mass": float(masses.std(ddof=1)) if len(masses) > 1 else 0.0,
                "trials": len(res), "identity_failures": sum(not r["identities_passed"] for r in res),
                "limit_mass": limit}
        for j, c in enumerate(wcols):
            srow[f"mean_{c}"] = float(wins[:, j].mean())
        summary.rows.append(srow)
    return summary, per_trial, trials


# ---------------------------------------------------------------------------
# lifetimes


@dataclass
class LifetimeHistogram:
    edges: np.ndarray
    mass: np.ndarray
    total_mass: float
    reference_mass: float = math.nan
    n: int = 0
    diagrams: int = 0
    standard_error: np.ndarray = None

    @property
    def small_lifetime_mass(self) -> float:
        """Mass in the first bin; the finite-n stand-in for the atom at zero."""
        return float(self.mass[0]) if len(self.mass) else 0.0

    def to_table(self) -> Table:
        t = Table(["bin_left", "bin_right", "mass"])
        for lo, hi, m in zip(self.edges[:-1].tolist(), self.edges[1:].tolist(), self.mass.tolist()):
            t.rows.append({"bin_left": float(lo), "bin_right": float(hi), "mass": float(m)})
        return t


def _lifetimes(diagram, q) -> np.ndarray:
    if hasattr(diagram, "finite_points"):
        P = diagram.finite_points(q)
    else:
        P = np.asarray(diagram, dtype=float).reshape(-1, 2)
        P = P[np.isfinite(P[:, 1])]
    return P[:, 1] - P[:, 0]


def lifetime_histogram(diagrams, q: int, n: int, bins, reference_mass: float = math.nan) -> LifetimeHistogram:
    """Histogram of finite lifetimes d - b, averaged over diagrams and divided by n.

    ``diagrams`` may hold PersistenceDiagram objects or raw (k, 2) point arrays.
    """
    edges = np.asarray(bins, dtype=float)
    if len(edges) < 2 or np.any(np.diff(edges) <= 0):
        raise ValueError("bin edges must be strictly increasing")
    per = []
    for dg in diagrams:
        life = _lifetimes(dg, q)
        counts, _ = np.histogram(life, bins=edges)
        per.append(counts / n)
    if not per:
        z = np.zeros(len(edges) - 1)
        return LifetimeHistogram(edges, z, 0.0, reference_mass, n, 0, z.copy())
    per = np.array(per)
    mass = per.mean(axis=0)
    se = per.std(axis=0, ddof=1) / math.sqrt(len(per)) if len(per) > 1 else np.zeros_like(mass)
    return LifetimeHistogram(edges, mass, float(mass.sum()), reference_mass, n, len(per), se)


# ---------------------------------------------------------------------------
# concentration


def _concentration_trial(job):
    config, n, trial, k, functional = job
    cloud = sample_binomial(config.density, n, config.seed, trial)
    if functional is not None:
        return float(functional(cloud))
    from .filtration import detect_critical_geometric

    r_cut = _auto_r_cut(config, n)
    return len(detect_critical_geometric(cloud, k, r_cut)) if n > k else 0


def concentration_diagnostic(config: ExperimentConfig, k: int = 1,
                             functional: Callable[[PointCloud], float] | None = None):
    """Variance of H(X_n)/n over trials for each n, and the fitted log-log slope.

    ``functional`` defaults to the number of critical k-simplices.  Returns
    ``(table, slope)``; the slope is NaN when any variance is zero.
    """
    jobs = [(config, n, t, k, functional) for n in config.n_values for t in range(config.trials)]
    threads = config.threads if functional is None else 1
    values = _map(_concentration_trial, jobs, threads)
    table = Table(["n", "mean", "variance", "trials"])
    it = iter(values)
    for n in config.n_values:
        v = np.array([next(it) for _ in range(config.trials)]) / n
        table.rows.append({"n": n, "mean": float(v.mean()),
                           "variance": float(v.var(ddof=1)) if len(v) > 1 else 0.0,
                           "trials": len(v)})
    var = np.array(table.column("variance"))
    ns = np.array(table.column("n"), dtype=float)
    if len(ns) >= 2 and np.all(var > 0):
        slope = float(np.polyfit(np.log(ns), np.log(var), 1)[0])
    else:
        slope = math.nan
    return table, slope
