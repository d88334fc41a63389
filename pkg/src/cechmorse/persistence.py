"""Persistent homology over Z/2 by left-to-right column reduction."""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import MalformedFiltration


@dataclass
class PersistenceDiagram:
    """Diagrams of one filtration, with the simplex pairing behind every point.

    ``pairs[q]`` holds ``(birth_position, death_position)`` for diagram points
    (birth < death); essential classes have ``death_position = None``.
    ``zero_pairs[q]`` holds pairs whose birth and death values coincide.
    Dimensions ``q >= max_dim`` are only partially known when the filtration
    is truncated at ``max_dim``.
    """

    simplices: list
    values: np.ndarray
    max_dim: int
    pairs: dict = field(default_factory=dict)
    zero_pairs: dict = field(default_factory=dict)

    def points(self, q: int) -> np.ndarray:
        out = [(self.values[b], math.inf if d is None else self.values[d]) for b, d in self.pairs.get(q, [])]
        return np.array(out, dtype=float).reshape(-1, 2)

    def finite_points(self, q: int) -> np.ndarray:
        P = self.points(q)
        return P[np.isfinite(P[:, 1])]

    def essential_count(self, q: int) -> int:
        return sum(d is None for _, d in self.pairs.get(q, []))

    def count(self, q: int) -> int:
        return len(self.pairs.get(q, []))

    def simplex_pairs(self, q: int):
        s = self.simplices
        return [(s[b], None if d is None else s[d]) for b, d in self.pairs.get(q, [])]

    def to_json(self, q_max: int | None = None) -> str:
        if q_max is None:
            q_max = self.max_dim - 1
        out = []
        for q in range(q_max + 1):
            pts = [[float(b), "inf" if math.isinf(d) else float(d)] for b, d in self.points(q).tolist()]
            prs = [[list(b), None if d is None else list(d)] for b, d in self.simplex_pairs(q)]
            out.append({"q": q, "points": pts, "pairs": prs})
        return json.dumps(out)


@dataclass(frozen=True)
class DiagramSummary:
    finite: dict  # q -> M_q
    essential: dict

    def total(self, q: int) -> int:
        return self.finite[q] + self.essential[q]

    @classmethod
    def of(cls, diagram: PersistenceDiagram, q_max: int | None = None) -> "DiagramSummary":
        if q_max is None:
            q_max = diagram.max_dim - 1
        finite = {q: diagram.count(q) - diagram.essential_count(q) for q in range(q_max + 1)}
        essential = {q: diagram.essential_count(q) for q in range(q_max + 1)}
        return cls(finite, essential)


def boundary_columns(simplices, index=None):
    """Face positions of every simplex; raises if a face is missing or comes later."""
    if index is None:
        index = {s: i for i, s in enumerate(simplices)}
    cols = []
    for j, s in enumerate(simplices):
        if len(s) == 1:
            cols.append([])
            continue
        col = []
        for face in combinations(s, len(s) - 1):
            i = index.get(face)
            if i is None:
                raise MalformedFiltration(f"face {face} of {s} is missing")
            if i >= j:
                raise MalformedFiltration(f"face {face} appears after {s}")
            col.append(i)
        cols.append(col)
    return cols


def compute_persistence(filtration) -> PersistenceDiagram:
    simplices = filtration.simplices
    values = np.asarray(filtration.values, dtype=float)
    index = getattr(filtration, "index", None)
    cols = boundary_columns(simplices, index)
    dims = [len(s) - 1 for s in simplices]
    max_dim = getattr(filtration, "max_dim", max(dims, default=0))

    low_to_col = {}
    reduced = {}
    # positive simplices not yet killed, per dimension
    open_cycles = [0] * (max(dims, default=0) + 2)
    paired = set()
    for j, col in enumerate(cols):
        d = dims[j]
        if d == 0 or open_cycles[d - 1] == 0:
            # no unpaired (d-1)-cycle exists yet, so this column must reduce to zero
            open_cycles[d] += 1
            continue
        c = set(col)
        while c:
            low = max(c)
            k = low_to_col.get(low)
            if k is None:
                break
            c ^= reduced[k]
        if c:
            low = max(c)
            low_to_col[low] = j
            reduced[j] = c
            paired.add(low)
            paired.add(j)
            open_cycles[d - 1] -= 1
        else:
            open_cycles[d] += 1

    # pairs inside one step group have equal values by construction
    group_of = filtration.group_of if getattr(filtration, "steps", None) else None
    pairs = {q: [] for q in range(max_dim + 1)}
    zero = {q: [] for q in range(max_dim + 1)}
    for low, j in sorted(low_to_col.items()):
        q = dims[low]
        same = group_of[low] == group_of[j] if group_of is not None else values[low] == values[j]
        if same:
            zero[q].append((low, j))
        else:
            pairs[q].append((low, j))
    for i in range(len(simplices)):
        if i not in paired:
            pairs[dims[i]].append((i, None))
    for q in pairs:
        pairs[q].sort(key=lambda p: (values[p[0]], math.inf if p[1] is None else values[p[1]], p[0]))
    return PersistenceDiagram(list(simplices), values, max_dim, pairs, zero)


def persistent_betti(diagram: PersistenceDiagram, q: int, r: float, s: float) -> int:
    if r > s:
        raise ValueError("persistent Betti numbers need r <= s")
    P = diagram.points(q)
    if not len(P):
        return 0
    return int(np.count_nonzero((P[:, 0] <= r) & (P[:, 1] > s)))


def betti_at(diagram: PersistenceDiagram, q: int, t: float) -> int:
    return persistent_betti(diagram, q, t, t)


def summarize(diagram: PersistenceDiagram, q_max: int | None = None) -> DiagramSummary:
    return DiagramSummary.of(diagram, q_max)


# ---------------------------------------------------------------------------
# rank tests over Z/2


def gf2_rank(rows) -> int:
    """Rank of a set of Z/2 vectors given as Python int bitmasks."""
    basis = {}
    rank = 0
    for v in rows:
        while v:
            top = v.bit_length() - 1
            if top in basis:
                v ^= basis[top]
            else:
                basis[top] = v
                rank += 1
                break
    return rank


def _chain(faces, index) -> int:
    mask = 0
    for f in faces:
        mask |= 1 << index[f]
    return mask


class StepEffect(enum.Enum):
    CREATES_CYCLE = "CreatesCycle"
    KILLS_BOUNDARY = "KillsBoundary"


def single_simplex_step_effect(complex_simplices, new_simplex) -> StepEffect:
    """Which way adding one p-simplex changes the chain groups.

    CreatesCycle when the new boundary already bounds in the old complex
    (Z_p grows), KillsBoundary otherwise (B_{p-1} grows).
    """
    K = {tuple(sorted(s)) for s in complex_simplices}
    new = tuple(sorted(new_simplex))
    p = len(new) - 1
    if new in K:
        raise MalformedFiltration(f"{new} already in the complex")
    if p == 0:
        return StepEffect.CREATES_CYCLE
    faces = list(combinations(new, p))
    missing = [f for f in faces if f not in K]
    if missing:
        raise MalformedFiltration(f"faces {missing} of {new} are missing")
    lower = sorted(s for s in K if len(s) == p)
    index = {s: i for i, s in enumerate(lower)}
    D = [_chain(combinations(s, p), index) for s in K if len(s) == p + 1]
    target = _chain(faces, index)
    before = gf2_rank(D)
    after = gf2_rank(D + [target])
    return StepEffect.CREATES_CYCLE if after == before else StepEffect.KILLS_BOUNDARY
