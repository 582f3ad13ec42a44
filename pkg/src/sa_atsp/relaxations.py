"""Constraint systems for the three tour relaxations and exact level-0 LP
solving.

A system couples explicit rows (degree / balance / endpoint / bound
constraints, equalities stored as >= pairs so the lifting rule is uniform)
with two implicit cut families.  In ``enumerated`` mode the cut rows are
materialized on demand for every nonempty proper vertex subset; in
``separated`` mode they are served through exact min-cut computations.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterator, Optional, Sequence

from .graphs import Digraph, GraphError, is_strongly_connected, min_directed_cut, reachable
from . import simplex


class RelaxationError(Exception):
    pass


class TooLargeToEnumerate(RelaxationError):
    pass


class SupportViolation(RelaxationError):
    pass


ENUM_BOUND_ENV = "SA_ATSP_MAX_ENUM_N"
DEFAULT_ENUM_BOUND = 22


def enumeration_bound() -> int:
    raw = os.environ.get(ENUM_BOUND_ENV)
    return int(raw) if raw else DEFAULT_ENUM_BOUND


@dataclass(frozen=True)
class LinearConstraint:
    """One >= row: sum of coeffs . x >= rhs."""

    coeffs: tuple[tuple[int, Fraction], ...]
    rhs: Fraction
    family: str
    key: object

    @property
    def positive(self) -> bool:
        return self.rhs > 0

    def support(self) -> frozenset[int]:
        return frozenset(e for e, a in self.coeffs if a != 0)

    def evaluate(self, x: Sequence[Fraction]) -> Fraction:
        return sum((a * x[e] for e, a in self.coeffs), Fraction(0))


@dataclass(frozen=True)
class CutFamily:
    """All constraints  x(boundary(U)) >= rhs  over nonempty proper U,
    optionally restricted to subsets avoiding one vertex."""

    family: str  # 'cut-in' | 'cut-out'
    avoid: Optional[int] = None
    rhs: Fraction = Fraction(1)


class ConstraintSystem:
    __slots__ = ("kind", "graph", "cut_mode", "base_constraints", "cut_families",
                 "p", "q", "enum_bound")

    def __init__(self, kind: str, graph: Digraph, cut_mode: str,
                 base_constraints: tuple[LinearConstraint, ...],
                 cut_families: tuple[CutFamily, ...],
                 p: Optional[int] = None, q: Optional[int] = None,
                 enum_bound: Optional[int] = None):
        if cut_mode not in ("enumerated", "separated"):
            raise RelaxationError(f"unknown cut mode {cut_mode!r}")
        bound = enumeration_bound() if enum_bound is None else enum_bound
        if cut_mode == "enumerated" and graph.n > bound:
            raise TooLargeToEnumerate(
                f"n = {graph.n} exceeds the enumeration bound {bound}")
        self.kind = kind
        self.graph = graph
        self.cut_mode = cut_mode
        self.base_constraints = base_constraints
        self.cut_families = cut_families
        self.p = p
        self.q = q
        self.enum_bound = bound

    def iter_family_cuts(self, fam: CutFamily) -> Iterator[tuple[tuple[int, ...], frozenset[int]]]:
        """(edge ids crossing, U) for every valid subset U of the family."""
        g = self.graph
        if g.n > self.enum_bound:
            raise TooLargeToEnumerate(
                f"n = {g.n} exceeds the enumeration bound {self.enum_bound}")
        verts = range(g.n)
        for r in range(1, g.n):
            for combo in combinations(verts, r):
                u = set(combo)
                if fam.avoid is not None and fam.avoid in u:
                    continue
                if fam.family == "cut-in":
                    ids = tuple(e for e, ed in enumerate(g.edges)
                                if ed.head in u and ed.tail not in u)
                else:
                    ids = tuple(e for e, ed in enumerate(g.edges)
                                if ed.tail in u and ed.head not in u)
                yield ids, frozenset(u)

    def iter_constraints(self) -> Iterator[LinearConstraint]:
        """Every row of the system; cut rows are generated lazily and only
        in enumerated mode."""
        yield from self.base_constraints
        if self.cut_mode == "enumerated":
            one = Fraction(1)
            for fam in self.cut_families:
                for ids, u in self.iter_family_cuts(fam):
                    yield LinearConstraint(tuple((e, one) for e in ids),
                                           fam.rhs, fam.family, u)

    def __repr__(self) -> str:
        return (f"ConstraintSystem(kind={self.kind!r}, n={self.graph.n}, "
                f"m={self.graph.m}, cut_mode={self.cut_mode!r})")


def _bound_rows(g: Digraph) -> list[LinearConstraint]:
    one = Fraction(1)
    zero = Fraction(0)
    rows = []
    for e in range(g.m):
        rows.append(LinearConstraint(((e, one),), zero, "lower-bound", e))
        rows.append(LinearConstraint(((e, -one),), -one, "upper-bound", e))
    return rows


def _degree_pair(g: Digraph, v: int, direction: str, value: Fraction) -> list[LinearConstraint]:
    ids = g.in_edges(v) if direction == "in" else g.out_edges(v)
    one = Fraction(1)
    fam = f"degree-{direction}"
    fwd = tuple((e, one) for e in ids)
    bwd = tuple((e, -one) for e in ids)
    return [LinearConstraint(fwd, value, fam, v),
            LinearConstraint(bwd, -value, fam, v)]


def build_dfj(g: Digraph, cut_mode: str = "separated",
              enum_bound: Optional[int] = None) -> ConstraintSystem:
    """Standard relaxation: unit in/out degree at every vertex, both cut
    families over every nonempty proper subset, variables in [0, 1]."""
    if g.n < 2:
        raise RelaxationError("need at least two vertices")
    one = Fraction(1)
    rows: list[LinearConstraint] = []
    for v in range(g.n):
        rows.extend(_degree_pair(g, v, "in", one))
        rows.extend(_degree_pair(g, v, "out", one))
    rows.extend(_bound_rows(g))
    fams = (CutFamily("cut-in"), CutFamily("cut-out"))
    return ConstraintSystem("dfj", g, cut_mode, tuple(rows), fams,
                            enum_bound=enum_bound)


def build_balanced(g: Digraph, cut_mode: str = "separated",
                   enum_bound: Optional[int] = None) -> ConstraintSystem:
    """As the standard relaxation but with per-vertex in=out balance
    equalities instead of unit degrees."""
    if g.n < 2:
        raise RelaxationError("need at least two vertices")
    one = Fraction(1)
    zero = Fraction(0)
    rows: list[LinearConstraint] = []
    for v in range(g.n):
        out_ids = g.out_edges(v)
        in_ids = g.in_edges(v)
        fwd = tuple((e, one) for e in out_ids) + tuple((e, -one) for e in in_ids)
        bwd = tuple((e, -one) for e in out_ids) + tuple((e, one) for e in in_ids)
        rows.append(LinearConstraint(fwd, zero, "balance", v))
        rows.append(LinearConstraint(bwd, zero, "balance", v))
    rows.extend(_bound_rows(g))
    fams = (CutFamily("cut-in"), CutFamily("cut-out"))
    return ConstraintSystem("balanced", g, cut_mode, tuple(rows), fams,
                            enum_bound=enum_bound)


def build_path(g: Digraph, p: int, q: int, cut_mode: str = "separated",
               enum_bound: Optional[int] = None) -> ConstraintSystem:
    """Source-sink dipath relaxation: no flow into the source or out of the
    sink, unit degrees elsewhere, in-cuts avoiding the source and out-cuts
    avoiding the sink."""
    if p == q:
        raise RelaxationError("source and sink must differ")
    one = Fraction(1)
    zero = Fraction(0)
    rows: list[LinearConstraint] = []
    for v in range(g.n):
        rows.extend(_degree_pair(g, v, "in", zero if v == p else one))
        rows.extend(_degree_pair(g, v, "out", zero if v == q else one))
    rows.extend(_bound_rows(g))
    fams = (CutFamily("cut-in", avoid=p), CutFamily("cut-out", avoid=q))
    return ConstraintSystem("path", g, cut_mode, tuple(rows), fams,
                            p=p, q=q, enum_bound=enum_bound)


# ---------------------------------------------------------------------------
# exact level-0 solving
# ---------------------------------------------------------------------------

def _merged_solver_rows(cs: ConstraintSystem):
    """Fold >=-pairs that encode equalities back into single equality rows
    for the solver; keep genuine inequalities.  Bound rows are handled
    separately (x >= 0 is implicit, x <= 1 activates lazily)."""
    eqs: list[tuple[dict[int, Fraction], Fraction]] = []
    ges: list[tuple[dict[int, Fraction], Fraction]] = []
    by_key: dict[tuple, list[LinearConstraint]] = {}
    for row in cs.base_constraints:
        if row.family in ("lower-bound", "upper-bound"):
            continue
        by_key.setdefault((row.family, row.key), []).append(row)
    for rows in by_key.values():
        if len(rows) == 2:
            a, b = rows
            neg = {e: -c for e, c in b.coeffs}
            if dict(a.coeffs) == neg and a.rhs == -b.rhs:
                eqs.append((dict(a.coeffs), a.rhs))
                continue
        for r in rows:
            ges.append((dict(r.coeffs), r.rhs))
    return eqs, ges


def solve_lp_exact(cs: ConstraintSystem, objective: Sequence[Fraction],
                   max_rounds: int = 10000) -> tuple[Fraction, list[Fraction]]:
    """Exact optimum of  min objective . x  over the full system.

    Works on enumerated-mode systems (the full matrix is available); upper
    bounds and cut rows are activated lazily, and the returned point is
    verified against every family before returning, so the value is the
    optimum of the complete system.
    """
    if cs.cut_mode != "enumerated":
        raise RelaxationError("exact solving expects an enumerated-mode system")
    g = cs.graph
    c = [Fraction(v) for v in objective]
    if len(c) != g.m:
        raise RelaxationError("objective length must match the edge count")
    eqs, ges = _merged_solver_rows(cs)
    one = Fraction(1)
    active_ub: set[int] = set()
    active_cuts: set[tuple[str, frozenset[int]]] = set()

    for _ in range(max_rounds):
        x, value = simplex.solve(c, eqs, ges, g.m)
        dirty = False
        for e in range(g.m):
            if e not in active_ub and x[e] > 1:
                ges.append(({e: -one}, -one))
                active_ub.add(e)
                dirty = True
        for fam in cs.cut_families:
            if fam.family == "cut-in":
                val, side = min_directed_cut(g, x, must_contain=fam.avoid)
                u = frozenset(range(g.n)) - side
                ids = [e for e, ed in enumerate(g.edges)
                       if ed.head in u and ed.tail not in u]
            else:
                val, side = min_directed_cut(g, x, must_avoid=fam.avoid)
                u = side
                ids = [e for e, ed in enumerate(g.edges)
                       if ed.tail in u and ed.head not in u]
            if val < fam.rhs and (fam.family, u) not in active_cuts:
                ges.append(({e: one for e in ids}, fam.rhs))
                active_cuts.add((fam.family, u))
                dirty = True
        if not dirty:
            return value, x
    raise RelaxationError("row generation did not settle")


def to_lp_format(cs: ConstraintSystem, objective: Sequence[Fraction]) -> str:
    """CPLEX-style LP text for external cross-checks.  The body is decimal
    (lossy); exact fractions ride along in comments."""
    g = cs.graph
    lines = ["\\ exported constraint system; decimal body is lossy,",
             "\\ exact rationals are given in the trailing comments",
             "Minimize", " obj:"]
    terms = []
    for e in range(g.m):
        coef = Fraction(objective[e])
        terms.append(f" {float(coef):+g} x{e}")
    lines.append("  " + "".join(terms))
    lines.append("Subject To")
    idx = 0
    for row in cs.iter_constraints():
        body = " ".join(f"{float(a):+g} x{e}" for e, a in row.coeffs)
        exact = " ".join(f"{a.numerator}/{a.denominator} x{e}" for e, a in row.coeffs)
        lines.append(f" c{idx}: {body} >= {float(row.rhs):g}  "
                     f"\\ {row.family}: {exact} >= {row.rhs}")
        idx += 1
    lines.append("Bounds")
    for e in range(g.m):
        lines.append(f" 0 <= x{e} <= 1")
    lines.append("End")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# extension by zeros
# ---------------------------------------------------------------------------

def _pair_map(sub: Digraph, host: Digraph) -> dict[int, int]:
    host_pairs = host.pair_edge_ids()
    seen: set[tuple[int, int]] = set()
    out: dict[int, int] = {}
    for i, e in enumerate(sub.edges):
        key = (e.tail, e.head)
        if key in seen:
            raise GraphError(f"embedded graph repeats the pair {key}")
        seen.add(key)
        if key not in host_pairs:
            raise GraphError(f"host graph has no edge for pair {key}")
        out[i] = host_pairs[key]
    return out


def extend_by_zeros(y, sub: Digraph, host_cs: ConstraintSystem,
                    edge_map: Optional[dict[int, int]] = None):
    """Extend a feasible vector on an embedded edge set to the host system
    by fixing every variable outside the image to zero.

    Valid whenever the removed index set contains no positive constraint's
    full support; that condition is verified here and SupportViolation is
    raised otherwise.
    """
    from .lift import MomentVector  # deferred; lift imports this module

    host = host_cs.graph
    if edge_map is None:
        edge_map = _pair_map(sub, host)
    image = frozenset(edge_map.values())
    if len(image) != len(edge_map):
        raise GraphError("edge map is not injective")
    removed = frozenset(range(host.m)) - image

    for row in host_cs.base_constraints:
        if row.positive and row.support() and row.support() <= removed:
            raise SupportViolation(
                f"{row.family}({row.key}) is supported inside the removed set")
    for fam in host_cs.cut_families:
        if fam.rhs <= 0:
            continue
        if fam.avoid is None:
            ok = is_strongly_connected(host, skip_edges=removed)
        elif fam.family == "cut-in":
            ok = len(reachable(host, fam.avoid, skip_edges=removed)) == host.n
        else:
            ok = len(reachable(host, fam.avoid, reverse=True, skip_edges=removed)) == host.n
        if not ok:
            raise SupportViolation(
                f"some {fam.family} constraint is supported inside the removed set")

    entries = {}
    for key, v in y.entries.items():
        entries[tuple(sorted(edge_map[e] for e in key))] = v
    entries.setdefault((), y.get(()))
    return MomentVector(y.level, host.m, entries, sparse=True)
