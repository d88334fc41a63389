"""Čech filtrations, their step partition, and critical simplices.

A simplex is a sorted tuple of point indices.  Its filtration value is the
radius of the smallest ball enclosing its points.  Within the filtration,
simplices that enter at the same value must form an interval ``[tau, sigma]``
(all simplices between ``tau`` and ``sigma``); a simplex entering alone is
critical.
"""
from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.spatial import cKDTree

from .errors import CrossCheckMismatch, DegenerateInput, TieAmbiguity
from .geometry import INTERIOR_TOL, PointCloud, circumspheres, enclosing_balls, min_enclosing_ball

TIE_TOL = 1e-12
BALL_TOL = 1e-9
_CHUNK = 1 << 14


def _as_cloud(cloud) -> PointCloud:
    return cloud if isinstance(cloud, PointCloud) else PointCloud(cloud)


def simplex(vertices) -> tuple:
    s = tuple(sorted(int(v) for v in vertices))
    if len(set(s)) != len(s) or not s:
        raise ValueError(f"not a simplex: {vertices!r}")
    return s


@dataclass(frozen=True)
class StepGroup:
    kind: str  # "singleton" or "interval"
    value: float
    members: tuple  # positions in the filtration
    tau: tuple
    sigma: tuple

    @property
    def is_singleton(self) -> bool:
        return self.kind == "singleton"

    def tag(self) -> str:
        if self.is_singleton:
            return "singleton"
        fmt = lambda s: ";".join(map(str, s))
        return f"interval[{fmt(self.tau)}|{fmt(self.sigma)}]"


@dataclass
class CechFiltration:
    simplices: list
    values: np.ndarray
    max_dim: int
    t_max: float | None = None
    steps: list = field(default_factory=list)

    def __len__(self):
        return len(self.simplices)

    @property
    def entries(self):
        return list(zip(self.simplices, self.values.tolist()))

    @cached_property
    def dims(self) -> np.ndarray:
        return np.array([len(s) - 1 for s in self.simplices], dtype=int)

    @cached_property
    def index(self) -> dict:
        return {s: i for i, s in enumerate(self.simplices)}

    @cached_property
    def group_of(self) -> np.ndarray:
        g = np.full(len(self.simplices), -1, dtype=int)
        for gi, grp in enumerate(self.steps):
            g[list(grp.members)] = gi
        return g

    def interval_groups(self):
        return [g for g in self.steps if not g.is_singleton]

    def to_csv(self, fh=None) -> str:
        """Rows ``value,dim,v0;v1;...,step_tag`` in filtration order."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        tags = [""] * len(self.simplices)
        for grp in self.steps:
            t = grp.tag()
            for m in grp.members:
                tags[m] = t
        for s, v, t in zip(self.simplices, self.values.tolist(), tags):
            w.writerow([repr(float(v)), len(s) - 1, ";".join(map(str, s)), t])
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text

    def without_group(self, group_index: int) -> "CechFiltration":
        """Copy of the filtration with one step group removed (used to check collapses)."""
        drop = set(self.steps[group_index].members)
        keep = [i for i in range(len(self.simplices)) if i not in drop]
        remap = {old: new for new, old in enumerate(keep)}
        steps = []
        for gi, g in enumerate(self.steps):
            if gi == group_index:
                continue
            steps.append(StepGroup(g.kind, g.value, tuple(remap[m] for m in g.members), g.tau, g.sigma))
        return CechFiltration([self.simplices[i] for i in keep], self.values[keep],
                              self.max_dim, self.t_max, steps)


@dataclass
class CriticalCensus:
    counts: dict
    critical_list: dict  # k -> list of (simplex, value)

    def __getitem__(self, k):
        return self.counts.get(k, 0)


# ---------------------------------------------------------------------------
# enumeration


def _grow_cliques(adj: np.ndarray, cliques: np.ndarray) -> np.ndarray:
    """All (k+2)-cliques extending the given sorted (k+1)-cliques by a larger vertex."""
    n = adj.shape[0]
    out = []
    later = np.arange(n)
    for start in range(0, len(cliques), _CHUNK // 4 or 1):
        C = cliques[start:start + _CHUNK // 4]
        common = adj[C].all(axis=1) & (later[None, :] > C[:, -1:])
        rows, cols = np.nonzero(common)
        if len(rows):
            out.append(np.concatenate([C[rows], cols[:, None]], axis=1))
    if not out:
        return np.empty((0, cliques.shape[1] + 1), dtype=np.intp)
    return np.concatenate(out).astype(np.intp)


def candidate_simplices(X: np.ndarray, max_dim: int, diameter: float | None = None):
    """Vertex-index arrays, one per dimension 0..max_dim, in lexicographic order.

    With ``diameter`` given, only vertex sets whose pairwise distances are all
    at most ``diameter`` are produced.
    """
    n = len(X)
    if diameter is None:
        adj = np.ones((n, n), dtype=bool)
    else:
        adj = np.zeros((n, n), dtype=bool)
        pairs = cKDTree(X).query_pairs(diameter, output_type="ndarray")
        adj[pairs[:, 0], pairs[:, 1]] = True
        adj[pairs[:, 1], pairs[:, 0]] = True
    layers = [np.arange(n, dtype=np.intp)[:, None]]
    for _ in range(max_dim):
        layers.append(_grow_cliques(adj, layers[-1]))
    return layers


def _balls(X, S):
    """Batched enclosing balls for an index array ``S`` of shape (M, k+1)."""
    M, m = S.shape
    C = np.empty((M, X.shape[1]))
    R = np.empty(M)
    sup = np.empty((M, m), dtype=bool)
    for a in range(0, M, _CHUNK):
        c, r, s = enclosing_balls(X[S[a:a + _CHUNK]])
        C[a:a + _CHUNK], R[a:a + _CHUNK], sup[a:a + _CHUNK] = c, r, s
    return C, R, sup


def _count_in_balls(X, C, R, tol=BALL_TOL) -> np.ndarray:
    tree = cKDTree(X)
    return tree.query_ball_point(C, R * (1 + tol), return_length=True).astype(int)


# ---------------------------------------------------------------------------
# public operations


def cech_value(s, cloud) -> float:
    cloud = _as_cloud(cloud)
    s = simplex(s)
    if len(s) == 1:
        return 0.0
    return min_enclosing_ball(cloud.points[list(s)]).radius


def build_cech_filtration(cloud, max_dim: int, t_max: float | None = None) -> CechFiltration:
    cloud = _as_cloud(cloud)
    X = cloud.points
    if not 1 <= max_dim <= cloud.dimension:
        raise ValueError(f"max_dim must lie in [1, {cloud.dimension}], got {max_dim}")
    layers = candidate_simplices(X, max_dim, None if t_max is None else 2 * t_max * (1 + 1e-12))

    simplices, values, dims, lex = [], [], [], []
    balls = []
    for k, S in enumerate(layers):
        if k == 0:
            C, R, sup = X.copy(), np.zeros(len(X)), np.ones((len(X), 1), dtype=bool)
        else:
            C, R, sup = _balls(X, S)
        if t_max is not None:
            keep = R <= t_max
            S, C, R, sup = S[keep], C[keep], R[keep], sup[keep]
        simplices.extend(map(tuple, S.tolist()))
        values.append(R)
        dims.append(np.full(len(S), k))
        lex.append(np.arange(len(S)))
        balls.append((C, R, sup))
    values = np.concatenate(values)
    order = np.lexsort((np.concatenate(lex), np.concatenate(dims), values))
    simplices = [simplices[i] for i in order]
    values = values[order]

    centers = np.concatenate([b[0] for b in balls])[order]
    self_supported = np.concatenate([b[2].all(axis=1) for b in balls])[order]
    filt = CechFiltration(simplices, values, max_dim, t_max)
    filt.steps = group_steps(filt.entries, cloud, max_dim, precomputed=(centers, self_supported))
    return filt


def _value_groups(values: np.ndarray, dims: np.ndarray):
    groups = []
    cur = []
    for i, (v, d) in enumerate(zip(values.tolist(), dims.tolist())):
        if d == 0:
            groups.append([i])
            continue
        if cur and abs(v - values[cur[-1]]) <= TIE_TOL * max(abs(v), abs(values[cur[-1]])):
            cur.append(i)
        else:
            if cur:
                groups.append(cur)
            cur = [i]
    if cur:
        groups.append(cur)
    return groups


def group_steps(entries, cloud, max_dim: int | None = None, precomputed=None) -> list:
    """Partition sorted filtration entries into Singleton and Interval steps.

    Every group of equal values must be the interval between its first member
    ``tau`` (whose enclosing ball is its own circumball) and the set of all
    cloud points in that closed ball, clipped to ``max_dim``.  Anything else
    raises TieAmbiguity.  Vertices are each their own singleton step at 0.
    """
    cloud = _as_cloud(cloud)
    X = cloud.points
    simplices = [e[0] for e in entries]
    values = np.array([e[1] for e in entries], dtype=float)
    dims = np.array([len(s) - 1 for s in simplices], dtype=int)
    if max_dim is None:
        max_dim = int(dims.max()) if len(dims) else 0
    if precomputed is None:
        centers = np.empty((len(simplices), X.shape[1]))
        self_supported = np.ones(len(simplices), dtype=bool)
        for k in range(1, max_dim + 1):
            pos = np.flatnonzero(dims == k)
            if len(pos):
                S = np.array([simplices[i] for i in pos], dtype=np.intp)
                C, _, sup = _balls(X, S)
                centers[pos] = C
                self_supported[pos] = sup.all(axis=1)
        pos0 = np.flatnonzero(dims == 0)
        centers[pos0] = X[[simplices[i][0] for i in pos0]]
    else:
        centers, self_supported = precomputed

    inside = np.zeros(len(simplices), dtype=int)
    nz = np.flatnonzero(dims > 0)
    if len(nz):
        inside[nz] = _count_in_balls(X, centers[nz], values[nz])

    steps = []
    for grp in _value_groups(values, dims):
        first = grp[0]
        tau = simplices[first]
        v = float(values[first])
        if dims[first] == 0:
            if len(grp) != 1:
                raise TieAmbiguity("vertex grouped with other simplices", [simplices[i] for i in grp])
            steps.append(StepGroup("singleton", v, (first,), tau, tau))
            continue
        if len(grp) == 1 and self_supported[first] and inside[first] == len(tau):
            steps.append(StepGroup("singleton", v, (first,), tau, tau))
            continue
        if not self_supported[first]:
            raise TieAmbiguity(f"value group at {v!r} does not start at a self-supported simplex",
                               [simplices[i] for i in grp])
        d = np.linalg.norm(X - centers[first], axis=1)
        sigma = tuple(np.flatnonzero(d <= v * (1 + BALL_TOL)).tolist())
        if not set(tau) <= set(sigma):
            raise TieAmbiguity(f"degenerate ball at {v!r}", [simplices[i] for i in grp])
        extra = [p for p in sigma if p not in tau]
        room = max_dim + 1 - len(tau)
        expected = set()
        for r in range(0, min(room, len(extra)) + 1):
            for add in itertools.combinations(extra, r):
                expected.add(tuple(sorted(tau + add)))
        got = {simplices[i] for i in grp}
        if got != expected:
            raise TieAmbiguity(
                f"value group at {v!r} is not the interval [{tau}, {sigma}]",
                sorted(got, key=lambda s: (len(s), s)),
            )
        kind = "singleton" if sigma == tau else "interval"
        steps.append(StepGroup(kind, v, tuple(grp), tau, sigma))
    return steps


def detect_critical_geometric(cloud, k: int, r_cut: float | None = None) -> list:
    """Critical k-simplices found from circumspheres alone.

    A k-simplex is critical when its circumcenter lies strictly inside its
    convex hull and no other point sits in its closed circumball.  With
    ``r_cut`` only simplices of circumradius at most ``r_cut`` are examined,
    which lets the search stay local.
    """
    cloud = _as_cloud(cloud)
    X = cloud.points
    if not 1 <= k <= cloud.dimension:
        raise ValueError(f"k must lie in [1, {cloud.dimension}], got {k}")
    if len(X) < k + 1:
        return []
    diameter = None if r_cut is None else 2 * r_cut * (1 + 1e-12)
    S = candidate_simplices(X, k, diameter)[k]
    found = []
    tree = cKDTree(X)
    for a in range(0, len(S), _CHUNK):
        block = S[a:a + _CHUNK]
        c, r, bary, ok = circumspheres(X[block])
        if not ok.all():
            bad = block[np.flatnonzero(~ok)[0]]
            raise DegenerateInput(f"affinely dependent vertex set {tuple(bad.tolist())}")
        keep = (bary > INTERIOR_TOL).all(axis=1)
        if r_cut is not None:
            keep &= r <= r_cut
        idx = np.flatnonzero(keep)
        if not len(idx):
            continue
        cnt = tree.query_ball_point(c[idx], r[idx] * (1 + BALL_TOL), return_length=True)
        for i in idx[cnt == k + 1]:
            found.append((tuple(block[i].tolist()), float(r[i])))
    return found


def count_critical(cloud, k: int, r_cut: float | None = None) -> int:
    return len(detect_critical_geometric(cloud, k, r_cut))


def pruning_radius(n: int, dimension: int, volume: float = 1.0, target: float = 15.0) -> float:
    """Radius r with n * omega_N * r**N / volume >= target (empty-ball probability below e^-target)."""
    from .stochastic import unit_ball_volume

    return (target * volume / (n * unit_ball_volume(dimension))) ** (1.0 / dimension)


def critical_census(filtration: CechFiltration, cloud, cross_check: bool = True) -> CriticalCensus:
    cloud = _as_cloud(cloud)
    dims = filtration.dims
    counts = {0: len(cloud)}
    crit = {0: [((i,), 0.0) for i in range(len(cloud))]}
    for k in range(1, filtration.max_dim + 1):
        crit[k] = []
    for g in filtration.steps:
        if g.is_singleton:
            m = g.members[0]
            k = int(dims[m])
            if k > 0:
                crit[k].append((filtration.simplices[m], float(filtration.values[m])))
    for k in range(1, filtration.max_dim + 1):
        counts[k] = len(crit[k])
    census = CriticalCensus(counts, crit)
    if cross_check:
        for k in range(1, filtration.max_dim + 1):
            geo = dict(detect_critical_geometric(cloud, k, filtration.t_max))
            comb = dict(crit[k])
            if geo.keys() != comb.keys():
                diff = sorted(set(geo) ^ set(comb))
                raise CrossCheckMismatch(f"critical {k}-simplices disagree on {diff[:5]}")
            bad = [s for s in geo if abs(geo[s] - comb[s]) > 1e-9 * (1 + geo[s])]
            if bad:
                raise CrossCheckMismatch(f"critical values disagree on {bad[:5]}")
    return census
