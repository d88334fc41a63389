import itertools
import math

import numpy as np
import pytest

SCALENE = np.array([(0.0, 0.0), (3.0, 0.0), (1.0, 2.0)])
OBTUSE = np.array([(0.0, 0.0), (4.0, 0.0), (1.0, 1.0)])
TWO_POINTS = np.array([(0.0, 0.0), (2.0, 0.0)])
EQUILATERAL = np.array([(0.0, 0.0), (2.0, 0.0), (1.0, math.sqrt(3.0))])


@pytest.fixture
def scalene():
    return SCALENE.copy()


@pytest.fixture
def obtuse():
    return OBTUSE.copy()


@pytest.fixture
def two_points():
    return TWO_POINTS.copy()


# ---------------------------------------------------------------------------
# independent oracles; deliberately share no code with the package


def oracle_circumcenter(V):
    """Circumcenter in the affine hull via least squares on the ambient equations."""
    V = np.asarray(V, dtype=float)
    if len(V) == 1:
        return V[0], 0.0
    p0 = V[0]
    E = V[1:] - p0
    # center = p0 + E^T mu, with 2 E (E^T mu) = |E|^2
    G = E @ E.T
    mu = np.linalg.lstsq(2 * G, (E * E).sum(axis=1), rcond=None)[0]
    c = p0 + E.T @ mu
    return c, float(np.linalg.norm(c - p0))


def oracle_meb(V):
    """Smallest enclosing ball by brute force over boundary-support subsets."""
    V = np.asarray(V, dtype=float)
    best = (None, math.inf)
    for size in range(1, len(V) + 1):
        for sub in itertools.combinations(range(len(V)), size):
            W = V[list(sub)]
            if size > 1 and np.linalg.matrix_rank(W[1:] - W[0], tol=1e-12) < size - 1:
                continue
            c, r = oracle_circumcenter(W)
            if np.all(np.linalg.norm(V - c, axis=1) <= r * (1 + 1e-10) + 1e-14) and r < best[1]:
                best = (c, r)
    return best


def gf2_rank_dense(M):
    M = (np.array(M, dtype=np.uint8) & 1).copy()
    rows, cols = M.shape
    r = 0
    for c in range(cols):
        piv = None
        for i in range(r, rows):
            if M[i, c]:
                piv = i
                break
        if piv is None:
            continue
        M[[r, piv]] = M[[piv, r]]
        for i in range(rows):
            if i != r and M[i, c]:
                M[i] ^= M[r]
        r += 1
        if r == rows:
            break
    return r


def oracle_betti(simplices, q):
    """beta_q of a simplicial complex from ranks of dense Z/2 boundary matrices."""
    by_dim = {}
    for s in simplices:
        by_dim.setdefault(len(s) - 1, []).append(tuple(s))

    def boundary_rank(p):
        hi, lo = by_dim.get(p, []), by_dim.get(p - 1, [])
        if p == 0 or not hi or not lo:
            return 0
        idx = {s: i for i, s in enumerate(lo)}
        M = np.zeros((len(lo), len(hi)), dtype=np.uint8)
        for j, s in enumerate(hi):
            for f in itertools.combinations(s, p):
                M[idx[f], j] = 1
        return gf2_rank_dense(M)

    nq = len(by_dim.get(q, []))
    return nq - boundary_rank(q) - boundary_rank(q + 1)


def random_cloud(seed, n, N):
    return np.random.default_rng(seed).random((n, N))
