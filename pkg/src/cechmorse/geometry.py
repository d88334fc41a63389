"""Geometric predicates on small point tuples.

Everything here works on plain numpy arrays. The scalar entry points
(``circumsphere``, ``min_enclosing_ball``, ...) wrap batched kernels that the
filtration and the stochastic experiments call directly on thousands of
simplices at once.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DegenerateInput

PIVOT_TOL = 1e-10
INTERIOR_TOL = 1e-9
COCIRCULAR_TOL = 1e-7
# containment slack for candidate enclosing balls
ENCLOSE_TOL = 1e-12


@dataclass(frozen=True)
class PointCloud:
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[1] < 1:
            raise ValueError(f"expected an (n, N) array of points, got shape {pts.shape}")
        pts = np.ascontiguousarray(pts)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]

    def scaled(self, factor: float) -> "PointCloud":
        return PointCloud(self.points * factor)

    @classmethod
    def from_csv(cls, path) -> "PointCloud":
        """Read one point per row, comma separated; lines starting with '#' are skipped."""
        rows = []
        width = None
        text = Path(path).read_text()
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                row = [float(tok) for tok in line.split(",")]
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: cannot parse {raw!r}") from exc
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ValueError(f"{path}:{lineno}: expected {width} coordinates, got {len(row)}")
            if not all(np.isfinite(row)):
                raise ValueError(f"{path}:{lineno}: non-finite coordinate")
            rows.append(row)
        if not rows:
            raise ValueError(f"{path}: no points")
        return cls(np.array(rows))

    def to_csv(self, path) -> None:
        np.savetxt(path, self.points, delimiter=",", fmt="%.17g")


@dataclass(frozen=True)
class BallDescriptor:
    center: np.ndarray
    radius: float
    # indices (into the input vertex list) of the points that determine the ball
    support: tuple = ()

    def contains(self, point, tol: float = 1e-9) -> bool:
        return float(np.linalg.norm(np.asarray(point) - self.center)) <= self.radius + tol


@dataclass(frozen=True)
class BarycentricReport:
    coordinates: np.ndarray
    strictly_interior: bool


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok


# ---------------------------------------------------------------------------
# batched kernels


def solve_pivoted(A: np.ndarray, b: np.ndarray):
    """Gaussian elimination with partial pivoting over a batch of small systems.

    ``A`` has shape (B, k, k), ``b`` shape (B, k).  Returns ``(x, ratio)`` where
    ``ratio`` is the smallest |pivot| divided by the largest |entry| of each
    system; callers treat ``ratio < PIVOT_TOL`` as singular.  Rows flagged
    singular get a NaN solution.
    """
    A = np.array(A, dtype=float, copy=True)
    b = np.array(b, dtype=float, copy=True)
    B, k, _ = A.shape
    if k == 0:
        return np.zeros((B, 0)), np.ones(B)
    scale = np.abs(A).reshape(B, -1).max(axis=1)
    scale[scale == 0] = 1.0
    ratio = np.full(B, np.inf)
    rows = np.arange(B)
    for j in range(k):
        p = j + np.argmax(np.abs(A[:, j:, j]), axis=1)
        swap = p != j
        if swap.any():
            r = rows[swap]
            pj = p[swap]
            A[r, j], A[r, pj] = A[r, pj].copy(), A[r, j].copy()
            b[r, j], b[r, pj] = b[r, pj].copy(), b[r, j].copy()
        piv = A[:, j, j]
        ratio = np.minimum(ratio, np.abs(piv) / scale)
        safe = np.where(piv == 0, 1.0, piv)
        if j + 1 < k:
            f = A[:, j + 1:, j] / safe[:, None]
            A[:, j + 1:, j:] -= f[:, :, None] * A[:, j, None, j:]
            b[:, j + 1:] -= f * b[:, j, None]
    x = np.zeros((B, k))
    for j in range(k - 1, -1, -1):
        piv = A[:, j, j]
        safe = np.where(piv == 0, 1.0, piv)
        x[:, j] = (b[:, j] - np.einsum("bi,bi->b", A[:, j, j + 1:], x[:, j + 1:])) / safe
    x[ratio < PIVOT_TOL] = np.nan
    return x, ratio


def circumspheres(P: np.ndarray):
    """Circumspheres of a batch of simplices, restricted to each affine hull.

    ``P`` has shape (B, k+1, N).  Returns ``(center, radius, bary, ok)`` with
    ``bary`` the affine coordinates of the center w.r.t. the vertices and
    ``ok`` false for affinely dependent vertex sets.

    The edge vectors ``a_i = p_i - p_0`` are factored as ``A^T = QR``; the
    center offset ``Qy`` solves ``2 a_i . (c - p_0) = |a_i|^2``, i.e.
    ``2 R^T y = diag(A A^T)``.  Pivots of ``R`` scale linearly with the
    simplex's thickness, which is what the dependence threshold is tested on.
    """
    P = np.asarray(P, dtype=float)
    B, m, N = P.shape
    p0 = P[:, 0, :]
    if m == 1:
        return p0.copy(), np.zeros(B), np.ones((B, 1)), np.ones(B, dtype=bool)
    if m - 1 > N:
        nan = np.full((B, N), np.nan)
        return nan, np.full(B, np.nan), np.full((B, m), np.nan), np.zeros(B, dtype=bool)
    A = P[:, 1:, :] - p0[:, None, :]
    Q, R = np.linalg.qr(np.swapaxes(A, 1, 2))
    rhs = 0.5 * np.einsum("bin,bin->bi", A, A)
    y, ratio = solve_pivoted(np.swapaxes(R, 1, 2), rhs)
    lam, ratio2 = solve_pivoted(R, y)
    ok = (ratio >= PIVOT_TOL) & (ratio2 >= PIVOT_TOL)
    lam = np.where(ok[:, None], lam, np.nan)
    offset = np.einsum("bnk,bk->bn", Q, np.where(ok[:, None], y, np.nan))
    center = p0 + offset
    radius = np.sqrt(np.einsum("bn,bn->b", offset, offset))
    bary = np.concatenate([1.0 - lam.sum(axis=1, keepdims=True), lam], axis=1)
    return center, radius, bary, ok


def _subsets(m: int):
    for size in range(1, m + 1):
        yield from itertools.combinations(range(m), size)


def enclosing_balls(P: np.ndarray):
    """Minimal enclosing balls of a batch of point tuples by support enumeration.

    ``P`` has shape (B, m, N) with m <= N+1.  Every nonempty subset is tried as
    the boundary support; the smallest circumball that contains all m points
    wins.  Returns ``(center, radius, support)`` where ``support`` is a (B, m)
    boolean mask of the winning subset.
    """
    P = np.asarray(P, dtype=float)
    B, m, N = P.shape
    best_r = np.full(B, np.inf)
    best_c = np.zeros((B, N))
    best_s = np.zeros((B, m), dtype=bool)
    for sub in _subsets(m):
        c, r, _, ok = circumspheres(P[:, list(sub), :])
        rest = [i for i in range(m) if i not in sub]
        d = np.linalg.norm(P[:, rest, :] - c[:, None, :], axis=2)
        inside = (d <= r[:, None] * (1 + ENCLOSE_TOL)).all(axis=1)
        better = ok & inside & (r < best_r)
        if better.any():
            best_r[better] = r[better]
            best_c[better] = c[better]
            mask = np.zeros(m, dtype=bool)
            mask[list(sub)] = True
            best_s[better] = mask
    return best_c, best_r, best_s


# ---------------------------------------------------------------------------
# scalar entry points


def _as_vertices(vertices) -> np.ndarray:
    V = np.asarray(vertices, dtype=float)
    if V.ndim == 1:
        V = V[None, :]
    if V.shape[0] == 0:
        raise ValueError("empty vertex list")
    return V


def circumsphere(vertices) -> BallDescriptor:
    V = _as_vertices(vertices)
    c, r, _, ok = circumspheres(V[None])
    if not ok[0]:
        raise DegenerateInput(f"affinely dependent vertices: {V.tolist()}")
    return BallDescriptor(c[0], float(r[0]), tuple(range(len(V))))


def min_enclosing_ball(vertices) -> BallDescriptor:
    V = _as_vertices(vertices)
    if len(V) > V.shape[1] + 1:
        raise ValueError(f"at most N+1={V.shape[1] + 1} points supported, got {len(V)}")
    c, r, s = enclosing_balls(V[None])
    return BallDescriptor(c[0], float(r[0]), tuple(np.flatnonzero(s[0]).tolist()))


def circumcenter_in_open_hull(vertices) -> BarycentricReport:
    V = _as_vertices(vertices)
    _, _, bary, ok = circumspheres(V[None])
    if not ok[0]:
        raise DegenerateInput(f"affinely dependent vertices: {V.tolist()}")
    coords = bary[0]
    return BarycentricReport(coords, bool((coords > INTERIOR_TOL).all()))


def general_position_check(cloud) -> ValidationReport:
    """List every way ``cloud`` fails to be in general position.

    Violations are tuples ``("affinely_dependent", subset)`` or
    ``("cospherical", subset, point)``.
    """
    if not isinstance(cloud, PointCloud):
        cloud = PointCloud(cloud)
    X = cloud.points
    n, N = X.shape
    report = ValidationReport()
    for size in range(2, min(n, N + 1) + 1):
        subsets = np.array(list(itertools.combinations(range(n), size)), dtype=np.intp)
        c, r, _, ok = circumspheres(X[subsets])
        for idx in np.flatnonzero(~ok):
            report.violations.append(("affinely_dependent", tuple(subsets[idx].tolist())))
        if not ok.any() or size == n:
            continue
        d = np.linalg.norm(X[None, :, :] - c[ok][:, None, :], axis=2)
        near = np.abs(d - r[ok][:, None]) < COCIRCULAR_TOL * (1 + r[ok][:, None])
        good = subsets[ok]
        for row, col in zip(*np.nonzero(near)):
            if col in good[row]:
                continue
            report.violations.append(("cospherical", tuple(good[row].tolist()), int(col)))
    return report
