"""Closed-form feasible moment vectors for decomposed instances.

Both certificate families are driven by one counting quantity: for an edge
subset S, the number of *fractional* cycles (witness cycles not promoted to
integral value) whose edges meet S.  Writing t for the level and f for that
count,

* the balanced certificate assigns (t+2-f)/(t+2) to every subset of the
  original edge set;
* the standard-relaxation certificate on a split instance assigns
  (t+2-f)/(t+2) to dashed-free subsets, 1/(t+2) to dashed-carrying subsets
  that fit inside the closed tour of some fractional cycle, and 0 to
  everything else.  Each dashed edge belongs to exactly one cycle, so the
  containing tour, when it exists, is unique, and the vector is stored
  sparsely (the zero case dominates).

The path-variant certificate is the restriction of the standard one to the
subgraph left after deleting the interior of a unit-value return dipath.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations
from typing import Iterable, Optional, Sequence

from .graphs import Digraph, edge_key
from .instances import Decomposition, NotFractional, SplitInstance, tour, is_hamiltonian_dicycle
from .lift import MomentVector


class CertificateError(Exception):
    pass


class WitnessTooSmall(CertificateError):
    pass


class NoGoodTours(CertificateError):
    pass


class NotUnitPath(CertificateError):
    pass


def _check_promoted(witness: frozenset[int], promoted: Iterable[int]) -> frozenset[int]:
    promo = frozenset(promoted)
    if not promo <= witness:
        raise CertificateError("promoted cycles must come from the witness set")
    return promo


def fractional_hits(s: Iterable[int], cycle_of: dict[int, int],
                    fractional: frozenset[int]) -> int:
    """Number of fractional cycles whose edge set meets S."""
    return len({cycle_of[e] for e in s if cycle_of[e] in fractional})


def balanced_certificate(g: Digraph, d: Decomposition, t: int,
                         promoted: Iterable[int] = ()) -> MomentVector:
    """Dense moment vector (t+2-f)/(t+2) over all subsets of size <= t+1."""
    if t < 0:
        raise CertificateError("level must be nonnegative")
    promo = _check_promoted(d.witness, promoted)
    fractional = d.witness - promo
    cyc_of = d.cycle_of_edge()
    denom = t + 2
    values = [Fraction(denom - f, denom) for f in range(denom + 1)]
    entries: dict[tuple[int, ...], Fraction] = {(): values[0]}
    ids = range(g.m)
    for r in range(1, t + 2):
        for combo in combinations(ids, r):
            f = fractional_hits(combo, cyc_of, fractional)
            entries[combo] = values[f]
    return MomentVector(t, g.m, entries, sparse=False)


def dfj_certificate(s: SplitInstance, t: int,
                    promoted: Iterable[int] = ()) -> MomentVector:
    """Sparse moment vector for the standard relaxation on a split instance.

    Requires at least t+2 fractional cycles and the closed tour of every
    fractional cycle to be a Hamiltonian dicycle of the split graph.
    """
    if t < 0:
        raise CertificateError("level must be nonnegative")
    promo = _check_promoted(s.witness, promoted)
    fractional = s.witness - promo
    if len(fractional) < t + 2:
        raise WitnessTooSmall(
            f"{len(fractional)} fractional cycles < t + 2 = {t + 2}")
    for j in sorted(fractional):
        if not is_hamiltonian_dicycle(s.graph, tour(s, j)):
            raise NoGoodTours(f"tour of cycle {j} is not Hamiltonian")

    cyc_of = s.cycle_of_edge()
    denom = t + 2
    values = [Fraction(denom - f, denom) for f in range(denom + 1)]
    in_tour_value = Fraction(1, denom)
    entries: dict[tuple[int, ...], Fraction] = {}

    solids = s.solid
    for r in range(0, t + 2):
        for combo in combinations(solids, r):
            f = fractional_hits(combo, cyc_of, fractional)
            entries[edge_key(combo)] = values[f]

    for j in sorted(fractional):
        dash = s.cycles[j][1]
        rest = sorted(tour(s, j) - set(dash))
        for d_cnt in range(1, min(len(dash), t + 1) + 1):
            for d_combo in combinations(dash, d_cnt):
                for r_cnt in range(0, t + 2 - d_cnt):
                    for r_combo in combinations(rest, r_cnt):
                        entries[edge_key(d_combo + r_combo)] = in_tour_value
    return MomentVector(t, s.graph.m, entries, sparse=True)


def restrict_to_path(z: MomentVector, s: SplitInstance,
                     path_edges: Sequence[int]) -> tuple[MomentVector, Digraph, int, int]:
    """Restrict a feasible vector along a unit-value return dipath.

    ``path_edges`` must trace a dipath (from the designated sink back to the
    designated source) on which every singleton entry equals one.  The
    interior vertices are removed; the restricted vector, the induced
    subgraph, and the (source, sink) pair are returned, source first.
    """
    g = s.graph
    if not path_edges:
        raise NotUnitPath("empty path")
    for a, b in zip(path_edges, path_edges[1:]):
        if g.edge(a).head != g.edge(b).tail:
            raise NotUnitPath("edges do not trace a dipath")
    verts = [g.edge(path_edges[0]).tail] + [g.edge(e).head for e in path_edges]
    if len(set(verts)) != len(verts):
        raise NotUnitPath("path repeats a vertex")
    one = Fraction(1)
    for e in path_edges:
        if z.get((e,)) != one:
            raise NotUnitPath(f"edge {e} has value {z.get((e,))} != 1")

    interior = set(verts[1:-1])
    keep = [v for v in range(g.n) if v not in interior]
    sub, vmap, emap = g.induced_subgraph(keep)
    entries: dict[tuple[int, ...], Fraction] = {}
    for key, v in z.entries.items():
        if all(e in emap for e in key):
            entries[tuple(sorted(emap[e] for e in key))] = v
    entries.setdefault((), z.get(()))
    restricted = MomentVector(z.level, sub.m, entries, sparse=z.sparse)
    source = vmap[verts[-1]]   # the path returns sink -> source
    sink = vmap[verts[0]]
    return restricted, sub, source, sink


def objective_value(y: MomentVector, costs: Sequence[Fraction]) -> Fraction:
    """Cost of the singleton entries; the vector must be normalized."""
    if y.root() != 1:
        raise CertificateError("objective needs a normalized vector")
    if len(costs) != y.m:
        raise CertificateError("one cost per edge required")
    total = Fraction(0)
    for e, c in enumerate(costs):
        if c:
            total += Fraction(c) * y.get((e,))
    return total
