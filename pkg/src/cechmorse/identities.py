"""Exact counting identities between critical simplices and persistence diagrams."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

from .filtration import CechFiltration, CriticalCensus
from .persistence import DiagramSummary, PersistenceDiagram


@dataclass
class Check:
    name: str
    q: int
    lhs: int
    rhs: int
    offenders: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.lhs == self.rhs and not self.offenders


@dataclass
class IdentityReport:
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self):
        return [c for c in self.checks if not c.passed]

    def extend(self, other: "IdentityReport") -> "IdentityReport":
        self.checks.extend(other.checks)
        return self

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checks": [dict(asdict(c), passed=c.passed) for c in self.checks],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, default=list)


def _alternating(seq, q):
    """sum_{i<=q} (-1)^(q-i) seq[i]"""
    return sum((-1) ** (q - i) * seq[i] for i in range(q + 1))


def check_morse_identities(census: CriticalCensus, summary: DiagramSummary, final_betti=None,
                           q_max: int | None = None) -> IdentityReport:
    """N_q = M_{q-1} + M_q + beta_q, and the alternating form solved for M_q."""
    if q_max is None:
        q_max = max(summary.finite)
    if final_betti is None:
        final_betti = summary.essential
    N = [census[q] for q in range(q_max + 1)]
    M = [summary.finite[q] for q in range(q_max + 1)]
    b = [final_betti[q] for q in range(q_max + 1)]
    report = IdentityReport()
    for q in range(q_max + 1):
        prev = M[q - 1] if q > 0 else 0
        report.checks.append(Check("morse", q, N[q], prev + M[q] + b[q]))
        report.checks.append(Check("morse_alternating", q, M[q], _alternating(N, q) - _alternating(b, q)))
    return report


def check_pd_count_identity(n: int, census: CriticalCensus, summary: DiagramSummary, q_max: int) -> IdentityReport:
    """#PD_0 = n and #PD_q = N_q - N_{q-1} + ... + (-1)^q (n - 1) for the full filtration."""
    report = IdentityReport([Check("pd_count", 0, summary.total(0), n)])
    for q in range(1, q_max + 1):
        rhs = sum((-1) ** (q - i) * census[i] for i in range(1, q + 1)) + (-1) ** q * (n - 1)
        report.checks.append(Check("pd_count", q, summary.total(q), rhs))
    return report


def check_critical_correspondence(filtration: CechFiltration, diagram: PersistenceDiagram,
                                  q_max: int | None = None) -> IdentityReport:
    """Simplex-level matching of critical simplices to diagram points.

    Diagram points are checked for q <= q_max (default max_dim - 1), the range
    in which a truncated filtration has the same diagrams as the full one.
    Top-dimensional interval members may stay unpaired: their partners lie
    above the dimension cap.
    """
    top = filtration.max_dim
    if q_max is None:
        q_max = top - 1
    group_of = filtration.group_of
    steps = filtration.steps
    S = filtration.simplices
    dims = filtration.dims

    def critical(pos):
        return steps[group_of[pos]].is_singleton

    role = {}  # position -> list of roles in diagram points
    for q, prs in diagram.pairs.items():
        for b, d in prs:
            role.setdefault(b, []).append(("birth", q))
            if d is not None:
                role.setdefault(d, []).append(("death", q))
    in_zero = set()
    for prs in diagram.zero_pairs.values():
        for b, d in prs:
            in_zero.update((b, d))

    report = IdentityReport()
    for q in range(q_max + 1):
        bad = []
        for b, d in diagram.pairs.get(q, []):
            if not critical(b) or (d is not None and not critical(d)):
                bad.append([S[b], None if d is None else S[d]])
        report.checks.append(Check("points_from_critical", q, len(bad), 0, bad))

    for p in range(q_max + 2):
        if p > top:
            break
        bad = []
        crit_pos = [g.members[0] for g in steps if g.is_singleton and dims[g.members[0]] == p]
        for pos in crit_pos:
            roles = role.get(pos, [])
            ok = len(roles) == 1 and roles[0] in (("birth", p), ("death", p - 1))
            if not ok:
                bad.append([S[pos], roles])
        report.checks.append(Check("critical_to_point", p, len(bad), 0, bad))

    bad = []
    for g in steps:
        if g.is_singleton:
            continue
        for pos in g.members:
            if pos in in_zero:
                continue
            if pos in role and dims[pos] == top and role[pos] == [("birth", top)]:
                continue
            bad.append([S[pos], role.get(pos, "unpaired")])
    report.checks.append(Check("interval_silent", -1, len(bad), 0, bad))
    return report
