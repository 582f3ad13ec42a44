"""Level-t lift machinery: moment vectors, the shift operator, and the two
feasibility checkers.

A level-t moment vector assigns a rational to every edge subset of size at
most t+1 (the empty set included).  Feasibility of such a vector for the
lifted constraint system can be certified two independent ways:

* ``check_direct`` evaluates the lifted inequality of every constraint for
  every disjoint pair (S, Q) with |S|+|Q| <= t.  Cut families are either
  enumerated explicitly or, in separated mode, reduced to one exact min-cut
  computation per (S, Q) pair (valid whenever the lifted weights are
  nonnegative; a negative weight is itself a recorded bound violation and
  triggers the enumeration fallback for that pair).
* ``check_recursive`` uses the shift-operator characterization of cone
  membership: a vector lies in the level-t cone iff for every edge e both
  the shifted vector and the difference lie in the level-(t-1) cone, with
  the homogenized base polytope at level 0.  Sub-vectors repeat heavily for
  the closed-form certificates, so results are memoized by content.

Both checkers agree on every input; the test suite enforces this.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Optional

from .graphs import NegativeWeight, edge_key, min_cut_by_enumeration, min_directed_cut
from .relaxations import ConstraintSystem, CutFamily, TooLargeToEnumerate


class LiftError(Exception):
    pass


class OutOfLevel(LiftError):
    pass


class ZeroLevel(LiftError):
    pass


class LevelMismatch(LiftError):
    pass


class MomentVector:
    """Map from canonical edge-id tuples (|S| <= level+1) to rationals.

    Dense vectors materialize every key; sparse vectors treat missing keys
    as zero.  The empty-set entry is always explicit.
    """

    __slots__ = ("level", "m", "entries", "sparse")

    def __init__(self, level: int, m: int, entries: dict[tuple[int, ...], Fraction],
                 *, sparse: bool = False):
        if level < 0:
            raise LiftError("level must be nonnegative")
        if () not in entries:
            raise LiftError("the empty-set entry is required")
        for key in entries:
            if len(key) > level + 1:
                raise OutOfLevel(f"entry {key} exceeds level {level}")
            if key and (key[-1] >= m or key[0] < 0):
                raise LiftError(f"entry {key} outside the ground set")
        self.level = level
        self.m = m
        self.entries = entries
        self.sparse = sparse

    def root(self) -> Fraction:
        return self.entries[()]

    def get(self, s: Iterable[int]) -> Fraction:
        key = s if isinstance(s, tuple) else edge_key(s)
        try:
            return self.entries[key]
        except KeyError:
            if self.sparse:
                return Fraction(0)
            if len(key) > self.level + 1:
                raise OutOfLevel(f"{key} beyond level {self.level}")
            raise

    def with_entry(self, s: Iterable[int], value: Fraction) -> "MomentVector":
        new = dict(self.entries)
        new[edge_key(s)] = Fraction(value)
        return MomentVector(self.level, self.m, new, sparse=self.sparse)

    def content_key(self, up_to_level: Optional[int] = None) -> tuple:
        """Canonical hashable content up to a level (used by the recursive
        memo); scale invariant when the empty-set entry is positive."""
        budget = (self.level if up_to_level is None else up_to_level) + 1
        root = self.entries[()]
        items = []
        for key in sorted(k for k, v in self.entries.items()
                          if v != 0 and len(k) <= budget):
            v = self.entries[key]
            if root > 0:
                v = v / root
            items.append((key, v.numerator, v.denominator))
        return (root > 0, tuple(items))

    def to_json(self) -> str:
        payload = {
            "level": self.level,
            "ground_size": self.m,
            "sparse": self.sparse,
            "entries": [
                {"set": list(k), "value": f"{v.numerator}/{v.denominator}"}
                for k, v in sorted(self.entries.items())
            ],
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "MomentVector":
        payload = json.loads(text)
        entries = {
            tuple(item["set"]): Fraction(item["value"])
            for item in payload["entries"]
        }
        return cls(payload["level"], payload["ground_size"], entries,
                   sparse=payload["sparse"])

    def equals(self, other: "MomentVector") -> bool:
        if self.level != other.level or self.m != other.m:
            return False
        keys = set(self.entries) | set(other.entries)
        return all(self.get(k) == other.get(k) for k in keys)

    def __repr__(self) -> str:
        return f"MomentVector(level={self.level}, m={self.m}, entries={len(self.entries)})"


def ones_vector(support: Iterable[int], level: int, m: int) -> MomentVector:
    """Indicator moments of an edge set: 1 on subsets of the support, else 0."""
    supp = edge_key(support)
    one = Fraction(1)
    entries: dict[tuple[int, ...], Fraction] = {(): one}
    for r in range(1, min(level + 1, len(supp)) + 1):
        for combo in combinations(supp, r):
            entries[combo] = one
    return MomentVector(level, m, entries, sparse=True)


def lift_point(x: Iterable[Fraction], level: int) -> MomentVector:
    """Monomial lift of a 0/1 point: the entry of S is the product of x_e."""
    xs = [Fraction(v) for v in x]
    if any(v not in (0, 1) for v in xs):
        raise LiftError("only 0/1 points lift to indicator moments")
    support = [e for e, v in enumerate(xs) if v == 1]
    return ones_vector(support, level, len(xs))


def mv_scale(a: Fraction, y: MomentVector) -> MomentVector:
    entries = {k: a * v for k, v in y.entries.items()}
    if () not in entries:
        entries[()] = Fraction(0)
    return MomentVector(y.level, y.m, entries, sparse=y.sparse)


def mv_add(y1: MomentVector, y2: MomentVector) -> MomentVector:
    if y1.m != y2.m:
        raise LiftError("ground sets differ")
    level = min(y1.level, y2.level)
    keys = {k for k in y1.entries if len(k) <= level + 1}
    keys.update(k for k in y2.entries if len(k) <= level + 1)
    entries = {k: y1.get(k) + y2.get(k) for k in keys}
    entries.setdefault((), Fraction(0))
    return MomentVector(level, y1.m, entries, sparse=y1.sparse and y2.sparse)


def z_value(y: MomentVector, s: Iterable[int], q: Iterable[int]) -> Fraction:
    """Inclusion-exclusion transform: sum over T <= Q of (-1)^|T| y_{S u T}."""
    S = edge_key(s)
    Q = edge_key(q)
    if set(S) & set(Q):
        raise LiftError("S and Q must be disjoint")
    if len(S) + len(Q) > y.level + 1:
        raise OutOfLevel(f"|S|+|Q| = {len(S) + len(Q)} exceeds level {y.level} + 1")
    total = Fraction(0)
    for r in range(len(Q) + 1):
        for t_sub in combinations(Q, r):
            term = y.get(edge_key(S + t_sub))
            total += term if r % 2 == 0 else -term
    return total


def shift(e: int, y: MomentVector) -> MomentVector:
    """The shift operator: entry of S in the result is y_{S + e}."""
    if y.level == 0:
        raise ZeroLevel("cannot shift a level-0 vector")
    level = y.level - 1
    entries: dict[tuple[int, ...], Fraction] = {}
    if y.sparse:
        for key, v in y.entries.items():
            if e in key:
                stripped = tuple(i for i in key if i != e)
                entries[stripped] = v
                if len(key) <= level + 1:
                    entries[key] = v
        entries.setdefault((), y.get((e,)))
    else:
        for key, v in y.entries.items():
            if len(key) <= level + 1:
                entries[key] = y.get(edge_key(key + (e,)))
    return MomentVector(level, y.m, entries, sparse=y.sparse)


def mv_sub_shift(y: MomentVector, e: int) -> MomentVector:
    """y - e*y at one level down: entry of S is y_S - y_{S+e}."""
    if y.level == 0:
        raise ZeroLevel("cannot shift a level-0 vector")
    level = y.level - 1
    entries: dict[tuple[int, ...], Fraction] = {}
    if y.sparse:
        for key, v in y.entries.items():
            if len(key) <= level + 1:
                entries[key] = v - y.get(edge_key(key + (e,)))
            if e in key:
                stripped = tuple(i for i in key if i != e)
                if stripped not in y.entries:
                    entries[stripped] = -v  # y_stripped is an implicit zero
        entries.setdefault((), y.get(()) - y.get((e,)))
    else:
        for key, v in y.entries.items():
            if len(key) <= level + 1:
                entries[key] = v - y.get(edge_key(key + (e,)))
    return MomentVector(level, y.m, entries, sparse=y.sparse)


# ---------------------------------------------------------------------------
# verdicts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    family: str
    s: tuple[int, ...]
    q: tuple[int, ...]
    lhs: Fraction
    rhs: Fraction
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "S": list(self.s),
            "Q": list(self.q),
            "lhs": f"{self.lhs.numerator}/{self.lhs.denominator}",
            "rhs": f"{self.rhs.numerator}/{self.rhs.denominator}",
            "note": self.note,
        }


@dataclass
class SaVerdict:
    feasible: bool
    violations: list[Violation]
    method: str
    checked: dict[str, int] = field(default_factory=dict)

    def to_json(self, max_violations: int = 20) -> str:
        payload = {
            "feasible": self.feasible,
            "method": self.method,
            "checked": dict(sorted(self.checked.items())),
            "violations": [v.to_dict() for v in self.violations[:max_violations]],
            "violation_count": len(self.violations),
        }
        return json.dumps(payload, indent=2, sort_keys=True)


def _pairs_up_to(m: int, budget: int):
    """All disjoint (S, Q) with |S|+|Q| <= budget, lexicographic order."""
    ids = range(m)
    for s_size in range(budget + 1):
        for s_combo in combinations(ids, s_size):
            s_set = set(s_combo)
            rest = [e for e in ids if e not in s_set]
            for q_size in range(budget - s_size + 1):
                for q_combo in combinations(rest, q_size):
                    yield s_combo, q_combo


def _enumerated_cut_violations(cs: ConstraintSystem, fam: CutFamily,
                               weights: list[Fraction], rhs: Fraction,
                               s: tuple, q: tuple) -> list[Violation]:
    out = []
    for coeffs, cut_set in cs.iter_family_cuts(fam):
        lhs = sum((weights[e] for e in coeffs), Fraction(0))
        if lhs < rhs:
            out.append(Violation(fam.family, s, q, lhs, rhs,
                                 note=f"U={sorted(cut_set)}"))
    return out


def _separated_family_cut(g, fam: CutFamily, weights: list[Fraction],
                          cache: dict) -> tuple[Fraction, frozenset[int]]:
    """Min lifted cut for one family.  An in-cut over sets avoiding a vertex
    equals an out-cut over complements containing it, so both families run
    on the same engine.  Results are cached by weight vector: the closed-form
    certificates generate few distinct lifted weight vectors."""
    key = (fam.family, fam.avoid, tuple(weights))
    hit = cache.get(key)
    if hit is not None:
        return hit
    if fam.family == "cut-in":
        value, side = min_directed_cut(g, weights, must_contain=fam.avoid)
        result = (value, frozenset(range(g.n)) - side)
    else:
        value, side = min_directed_cut(g, weights, must_avoid=fam.avoid)
        result = (value, side)
    cache[key] = result
    return result


def _check_pair(y: MomentVector, cs: ConstraintSystem, s: tuple, q: tuple,
                counts: dict[str, int], cache: dict) -> list[Violation]:
    g = cs.graph
    q_set = set(q)
    z_sq = z_value(y, s, q)
    zero = Fraction(0)
    weights = [zero if e in q_set else z_value(y, edge_key(s + (e,)), q)
               for e in range(g.m)]
    violations: list[Violation] = []

    for row in cs.base_constraints:
        lhs = sum((a * weights[e] for e, a in row.coeffs), zero)
        rhs = row.rhs * z_sq
        counts[row.family] = counts.get(row.family, 0) + 1
        if lhs < rhs:
            violations.append(Violation(row.family, s, q, lhs, rhs, note=str(row.key)))

    negative = any(w < 0 for w in weights)
    for fam in cs.cut_families:
        rhs = fam.rhs * z_sq
        counts[fam.family] = counts.get(fam.family, 0) + 1
        if cs.cut_mode == "enumerated":
            violations.extend(_enumerated_cut_violations(cs, fam, weights, rhs, s, q))
            continue
        if negative:
            # the separation reduction needs nonnegative weights; the bound
            # family has already flagged the vector, fall back if we can
            if g.n <= cs.enum_bound:
                violations.extend(_enumerated_cut_violations(cs, fam, weights, rhs, s, q))
            else:
                violations.append(Violation(
                    fam.family, s, q, zero, rhs,
                    note="skipped: negative lifted weights, graph too large to enumerate"))
            continue
        if rhs <= 0:
            continue  # nonnegative weights satisfy the family trivially
        value, cut_set = _separated_family_cut(g, fam, weights, cache)
        if value < rhs:
            violations.append(Violation(fam.family, s, q, value, rhs,
                                        note=f"U={sorted(cut_set)}"))
    return violations


def check_direct(y: MomentVector, cs: ConstraintSystem, t: int, *,
                 threads: int = 1) -> SaVerdict:
    """Evaluate every lifted constraint for every disjoint (S, Q) with
    |S|+|Q| <= t.  The vector must be normalized (empty-set entry 1)."""
    if y.m != cs.graph.m:
        raise LevelMismatch("vector ground set does not match the system")
    if y.level < t:
        raise LevelMismatch(f"vector level {y.level} below requested level {t}")
    if y.root() != 1:
        raise LevelMismatch("direct check expects a normalized vector (empty entry 1)")
    counts: dict[str, int] = {}
    violations: list[Violation] = []
    pairs = list(_pairs_up_to(cs.graph.m, t))
    method = "direct-" + cs.cut_mode
    cache: dict = {}
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        def work(chunk):
            local: dict[str, int] = {}
            out = [(_check_pair(y, cs, s, q, local, cache)) for s, q in chunk]
            return out, local

        size = max(1, len(pairs) // (threads * 8))
        chunks = [pairs[i:i + size] for i in range(0, len(pairs), size)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for outs, local in pool.map(work, chunks):
                for vs in outs:
                    violations.extend(vs)
                for k, v in local.items():
                    counts[k] = counts.get(k, 0) + v
    else:
        for s, q in pairs:
            violations.extend(_check_pair(y, cs, s, q, counts, cache))
    return SaVerdict(feasible=not violations, violations=violations,
                     method=method, checked=counts)


# ---------------------------------------------------------------------------
# recursive cone membership
# ---------------------------------------------------------------------------

def _base_cone_check(v: MomentVector, cs: ConstraintSystem) -> Optional[Violation]:
    """Level-0 membership in the homogenized cone: every base row with its
    right side scaled by the empty-set entry, plus cut families."""
    root = v.root()
    zero = Fraction(0)
    if root < 0:
        return Violation("cone-root", (), (), root, zero, note="empty-set entry negative")
    g = cs.graph
    w = [v.get((e,)) for e in range(g.m)]
    for row in cs.base_constraints:
        lhs = sum((a * w[e] for e, a in row.coeffs), zero)
        if lhs < row.rhs * root:
            return Violation(row.family, (), (), lhs, row.rhs * root, note=str(row.key))
    if any(x < 0 for x in w):
        e_bad = next(e for e in range(g.m) if w[e] < 0)
        return Violation("lower-bound", (), (), w[e_bad], zero, note=str(e_bad))
    for fam in cs.cut_families:
        rhs = fam.rhs * root
        if rhs <= 0:
            continue
        if cs.cut_mode == "enumerated":
            for coeffs, cut_set in cs.iter_family_cuts(fam):
                lhs = sum((w[e] for e in coeffs), zero)
                if lhs < rhs:
                    return Violation(fam.family, (), (), lhs, rhs,
                                     note=f"U={sorted(cut_set)}")
        else:
            if fam.family == "cut-in":
                value, side = min_directed_cut(g, w, must_contain=fam.avoid)
                cut_set = frozenset(range(g.n)) - side
            else:
                value, side = min_directed_cut(g, w, must_avoid=fam.avoid)
                cut_set = side
            if value < rhs:
                return Violation(fam.family, (), (), value, rhs,
                                 note=f"U={sorted(cut_set)}")
    return None


def check_recursive(y: MomentVector, cs: ConstraintSystem, t: int, *,
                    memo: Optional[dict] = None) -> SaVerdict:
    """Shift-operator cone membership: recurse on e*y and y - e*y down to a
    homogenized level-0 check.  Memoized on canonical (scaled) content."""
    if y.m != cs.graph.m:
        raise LevelMismatch("vector ground set does not match the system")
    if y.level < t:
        raise LevelMismatch(f"vector level {y.level} below requested level {t}")
    if memo is None:
        memo = {}
    counts = {"base-checks": 0, "memo-hits": 0}

    def visit(v: MomentVector, level: int, trail: tuple[str, ...]) -> Optional[Violation]:
        key = (level,) + v.content_key(up_to_level=level)
        if key in memo:
            counts["memo-hits"] += 1
            cached = memo[key]
            return cached
        if v.root() < 0:
            result: Optional[Violation] = Violation(
                "cone-root", (), (), v.root(), Fraction(0),
                note="->".join(trail) or "root")
        elif level == 0:
            counts["base-checks"] += 1
            result = _base_cone_check(v, cs)
            if result is not None and trail:
                result = Violation(result.family, result.s, result.q,
                                   result.lhs, result.rhs,
                                   note=f"{result.note} via {'->'.join(trail)}")
        else:
            result = None
            for e in range(v.m):
                hit = visit(shift(e, v), level - 1, trail + (f"*{e}",))
                if hit is not None:
                    result = hit
                    break
                hit = visit(mv_sub_shift(v, e), level - 1, trail + (f"-{e}",))
                if hit is not None:
                    result = hit
                    break
        memo[key] = result
        return result

    bad = visit(y, t, ())
    return SaVerdict(feasible=bad is None,
                     violations=[] if bad is None else [bad],
                     method="recursive", checked=counts)
