import itertools
import math
from types import SimpleNamespace

import numpy as np
import pytest

from cechmorse.errors import MalformedFiltration
from cechmorse.filtration import CechFiltration, build_cech_filtration
from cechmorse.geometry import PointCloud
from cechmorse.persistence import (
    StepEffect,
    betti_at,
    compute_persistence,
    gf2_rank,
    persistent_betti,
    single_simplex_step_effect,
    summarize,
)
from cechmorse.stochastic import DensitySpec, sample_general_position

from conftest import gf2_rank_dense, oracle_betti


def _diagram(X, max_dim=None):
    X = np.asarray(X, dtype=float)
    f = build_cech_filtration(PointCloud(X), max_dim or X.shape[1])
    return f, compute_persistence(f)


def test_two_points(two_points):
    _, d = _diagram(two_points, 1)
    assert d.points(0).tolist() == [[0, 1], [0, math.inf]]
    assert persistent_betti(d, 0, 0.5, 0.5) == 2
    assert persistent_betti(d, 0, 1, 1) == 1


def test_scalene(scalene):
    _, d = _diagram(scalene)
    assert np.allclose(d.points(1), [[1.5, 1.581139]], atol=1e-6)
    assert np.allclose(d.points(0), [[0, 1.118034], [0, 1.414214], [0, math.inf]], atol=1e-6)
    assert d.simplex_pairs(1) == [((0, 1), (0, 1, 2))]
    assert persistent_betti(d, 1, 1.5, 1.55) == 1
    assert betti_at(d, 1, 1.52) == 1
    assert betti_at(d, 1, 1.6) == 0
    assert betti_at(d, 0, 0) == 3
    s = summarize(d, 1)
    assert (s.finite, s.essential) == ({0: 2, 1: 1}, {0: 1, 1: 0})


def test_obtuse(obtuse):
    f, d = _diagram(obtuse)
    assert len(d.points(1)) == 0
    assert d.zero_pairs[1] == [(f.index[(0, 1)], f.index[(0, 1, 2)])]
    assert d.count(0) == 3


def test_persistent_betti_rejects_r_above_s(scalene):
    _, d = _diagram(scalene)
    with pytest.raises(ValueError):
        persistent_betti(d, 0, 2, 1)


def test_json_export(two_points):
    import json

    _, d = _diagram(two_points, 1)
    (row,) = json.loads(d.to_json())
    assert row == {"q": 0, "points": [[0.0, 1.0], [0.0, "inf"]], "pairs": [[[1], [0, 1]], [[0], None]]}


def test_malformed_filtration():
    missing = SimpleNamespace(simplices=[(0,), (0, 1)], values=[0, 1])
    with pytest.raises(MalformedFiltration):
        compute_persistence(missing)
    late = SimpleNamespace(simplices=[(0,), (0, 1), (1,)], values=[0, 1, 1])
    with pytest.raises(MalformedFiltration):
        compute_persistence(late)


def test_step_effect_examples():
    assert single_simplex_step_effect([(0,), (1,)], (0, 1)) is StepEffect.KILLS_BOUNDARY
    path = [(0,), (1,), (2,), (0, 1), (1, 2)]
    assert single_simplex_step_effect(path, (0, 2)) is StepEffect.CREATES_CYCLE
    assert single_simplex_step_effect(path + [(0, 2)], (0, 1, 2)) is StepEffect.KILLS_BOUNDARY
    assert single_simplex_step_effect([], (0,)) is StepEffect.CREATES_CYCLE
    with pytest.raises(MalformedFiltration):
        single_simplex_step_effect([(0,)], (0, 1))


def test_gf2_rank_matches_dense():
    rng = np.random.default_rng(0)
    for _ in range(200):
        M = rng.integers(0, 2, size=(int(rng.integers(1, 9)), int(rng.integers(1, 9))))
        rows = [int("".join(map(str, r[::-1])), 2) for r in M]
        assert gf2_rank(rows) == gf2_rank_dense(M)


def test_betti_matches_bruteforce_rank():
    rng = np.random.default_rng(77)
    for trial in range(60):
        n = int(rng.integers(3, 13))
        cloud, _ = sample_general_position(DensitySpec("uniform_cube", 2), n, seed=500 + trial)
        f, d = _diagram(cloud.points)
        for t in rng.uniform(0, f.values.max() * 1.05, size=10):
            K = [s for s, v in zip(f.simplices, f.values) if v <= t]
            for q in (0, 1):
                assert betti_at(d, q, t) == oracle_betti(K, q)


def test_essential_count_is_final_betti():
    for seed in range(30):
        cloud, _ = sample_general_position(DensitySpec("uniform_cube", 3), 9, seed=seed)
        f, d = _diagram(cloud.points)
        assert d.essential_count(0) == 1
        for q in (0, 1, 2):
            assert d.essential_count(q) == oracle_betti(f.simplices, q)


def test_points_have_positive_persistence():
    cloud, _ = sample_general_position(DensitySpec("uniform_cube", 2), 15, seed=3)
    _, d = _diagram(cloud.points)
    for q in (0, 1):
        P = d.points(q)
        assert np.all(P[:, 0] < P[:, 1])


def _closure(simplices):
    out = set()
    for s in simplices:
        for r in range(1, len(s) + 1):
            out.update(itertools.combinations(s, r))
    return out


def test_adding_an_interval_pair_is_homology_silent():
    """Adding alpha (a free facet) together with beta leaves every Betti number unchanged."""
    rng = np.random.default_rng(21)
    done = 0
    while done < 150:
        nv = int(rng.integers(4, 8))
        tops = [tuple(sorted(rng.choice(nv, size=int(rng.integers(2, 4)), replace=False).tolist()))
                for _ in range(int(rng.integers(2, 7)))]
        K = _closure(tops)
        beta = tuple(sorted(rng.choice(nv, size=int(rng.integers(2, 5)), replace=False).tolist()))
        alpha = beta[:-1] if rng.random() < 0.5 else beta[1:]
        if alpha in K or beta in K:
            continue
        base = (_closure([beta]) | K) - {alpha, beta}
        for q in range(4):
            assert oracle_betti(base, q) == oracle_betti(base | {alpha, beta}, q)
        done += 1


def _prefix(f, gi):
    end = max(f.steps[gi].members) + 1
    return CechFiltration(f.simplices[:end], f.values[:end], f.max_dim, f.t_max, f.steps[:gi + 1])


def _proper(d, qs):
    return {q: sorted(map(tuple, d.points(q).tolist())) for q in qs}


def test_deleting_an_interval_group_keeps_the_diagram():
    checked = 0
    for seed in range(40):
        N = 2 + seed % 2
        cloud, _ = sample_general_position(DensitySpec("uniform_cube", N), 8 if N == 2 else 7, seed=seed)
        f = build_cech_filtration(cloud, N)
        for gi, g in enumerate(f.steps):
            if g.is_singleton or len(g.sigma) > f.max_dim + 1:
                continue
            pre = _prefix(f, gi)
            qs = range(f.max_dim)
            assert _proper(compute_persistence(pre), qs) == _proper(compute_persistence(pre.without_group(gi)), qs)
            checked += 1
    assert checked > 30
