"""Exact-rational digraph substrate.

Everything downstream (relaxations, lift checks, oracles) manipulates one
graph type: an immutable digraph with nonnegative `fractions.Fraction` edge
costs, where an edge id is the position of the edge in the emission order.
All algorithms here are exact; no floats anywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Optional, Sequence


class GraphError(Exception):
    pass


class NotStronglyConnected(GraphError):
    pass


class NegativeWeight(GraphError):
    pass


@dataclass(frozen=True)
class Edge:
    tail: int
    head: int
    cost: Fraction


def edge_key(edges: Iterable[int]) -> tuple[int, ...]:
    """Canonical (sorted, duplicate-free) form of an edge-id set."""
    return tuple(sorted(set(edges)))


class Digraph:
    """Immutable digraph; EdgeId = position in the edge list.

    Self-loops are rejected.  Anti-parallel pairs are fine; true duplicate
    (tail, head) pairs are permitted by the type but the instance generators
    never emit them.
    """

    __slots__ = ("n", "edges", "_out", "_in")

    def __init__(self, n: int, edges: Iterable[tuple[int, int, Fraction]]):
        if n < 0:
            raise GraphError("vertex count must be nonnegative")
        es = []
        out: list[list[int]] = [[] for _ in range(n)]
        inn: list[list[int]] = [[] for _ in range(n)]
        for idx, (t, h, c) in enumerate(edges):
            if not (0 <= t < n and 0 <= h < n):
                raise GraphError(f"edge {idx}: endpoint out of range")
            if t == h:
                raise GraphError(f"edge {idx}: self-loop at {t}")
            c = Fraction(c)
            if c < 0:
                raise GraphError(f"edge {idx}: negative cost {c}")
            es.append(Edge(t, h, c))
            out[t].append(idx)
            inn[h].append(idx)
        self.n = n
        self.edges = tuple(es)
        self._out = tuple(tuple(v) for v in out)
        self._in = tuple(tuple(v) for v in inn)

    @property
    def m(self) -> int:
        return len(self.edges)

    def edge(self, e: int) -> Edge:
        return self.edges[e]

    def out_edges(self, v: int) -> tuple[int, ...]:
        return self._out[v]

    def in_edges(self, v: int) -> tuple[int, ...]:
        return self._in[v]

    def costs(self) -> tuple[Fraction, ...]:
        return tuple(e.cost for e in self.edges)

    def total_cost(self) -> Fraction:
        return sum((e.cost for e in self.edges), Fraction(0))

    def is_complete(self) -> bool:
        if self.m != self.n * (self.n - 1):
            return False
        return len({(e.tail, e.head) for e in self.edges}) == self.m

    def pair_edge_ids(self) -> dict[tuple[int, int], int]:
        """(tail, head) -> edge id; raises if some ordered pair repeats."""
        out: dict[tuple[int, int], int] = {}
        for i, e in enumerate(self.edges):
            if (e.tail, e.head) in out:
                raise GraphError(f"duplicate edge for pair {(e.tail, e.head)}")
            out[(e.tail, e.head)] = i
        return out

    def induced_subgraph(self, keep: Iterable[int]) -> tuple["Digraph", dict[int, int], dict[int, int]]:
        """Subgraph induced on `keep`; returns (graph, vertex_map, edge_map).

        Vertex and edge ids are renumbered in increasing original order, so
        the result is deterministic.
        """
        kept = sorted(set(keep))
        vmap = {v: i for i, v in enumerate(kept)}
        emap: dict[int, int] = {}
        new_edges = []
        for i, e in enumerate(self.edges):
            if e.tail in vmap and e.head in vmap:
                emap[i] = len(new_edges)
                new_edges.append((vmap[e.tail], vmap[e.head], e.cost))
        return Digraph(len(kept), new_edges), vmap, emap

    # -- text serialization: "n m" header, then "tail head num/den" lines --

    def to_text(self) -> str:
        lines = [f"{self.n} {self.m}"]
        for e in self.edges:
            lines.append(f"{e.tail} {e.head} {e.cost.numerator}/{e.cost.denominator}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Digraph":
        rows = [ln for ln in (s.strip() for s in text.splitlines()) if ln]
        if not rows:
            raise GraphError("empty digraph text")
        n, m = (int(x) for x in rows[0].split())
        if len(rows) - 1 != m:
            raise GraphError(f"expected {m} edge lines, got {len(rows) - 1}")
        edges = []
        for ln in rows[1:]:
            t, h, c = ln.split()
            edges.append((int(t), int(h), Fraction(c)))
        return cls(n, edges)

    def __repr__(self) -> str:
        return f"Digraph(n={self.n}, m={self.m})"


def reachable(g: Digraph, source: int, *, reverse: bool = False,
              skip_edges: frozenset[int] = frozenset()) -> set[int]:
    """Vertices reachable from `source`, optionally against edge direction
    and ignoring `skip_edges`."""
    seen = {source}
    stack = [source]
    while stack:
        v = stack.pop()
        ids = g.in_edges(v) if reverse else g.out_edges(v)
        for e in ids:
            if e in skip_edges:
                continue
            w = g.edge(e).tail if reverse else g.edge(e).head
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return seen


def is_strongly_connected(g: Digraph, *, skip_edges: frozenset[int] = frozenset()) -> bool:
    if g.n == 0:
        raise GraphError("empty graph")
    if g.n == 1:
        return True
    fwd = reachable(g, 0, skip_edges=skip_edges)
    if len(fwd) != g.n:
        return False
    return len(reachable(g, 0, reverse=True, skip_edges=skip_edges)) == g.n


def strongly_connected_components(g: Digraph, *, skip_edges: frozenset[int] = frozenset()) -> list[set[int]]:
    """Kosaraju, iterative.  Components in deterministic discovery order."""
    order: list[int] = []
    seen = [False] * g.n
    for root in range(g.n):
        if seen[root]:
            continue
        stack: list[tuple[int, int]] = [(root, 0)]
        seen[root] = True
        while stack:
            v, i = stack.pop()
            ids = g.out_edges(v)
            while i < len(ids):
                e = ids[i]
                i += 1
                if e in skip_edges:
                    continue
                w = g.edge(e).head
                if not seen[w]:
                    stack.append((v, i))
                    stack.append((w, 0))
                    seen[w] = True
                    break
            else:
                order.append(v)
    comps: list[set[int]] = []
    assigned = [False] * g.n
    for v in reversed(order):
        if assigned[v]:
            continue
        comp = {v}
        assigned[v] = True
        stack2 = [v]
        while stack2:
            u = stack2.pop()
            for e in g.in_edges(u):
                if e in skip_edges:
                    continue
                w = g.edge(e).tail
                if not assigned[w]:
                    assigned[w] = True
                    comp.add(w)
                    stack2.append(w)
        comps.append(comp)
    return comps


def metric_completion(g: Digraph) -> Digraph:
    """Complete digraph on V(g) with exact shortest-dipath costs.

    Raises NotStronglyConnected when some ordered pair has no dipath.
    Edge emission order: (u, v) for u in 0..n-1, v in 0..n-1, v != u.
    """
    n = g.n
    if n == 0:
        raise GraphError("empty graph")
    dist: list[list[Optional[Fraction]]] = [[None] * n for _ in range(n)]
    for v in range(n):
        dist[v][v] = Fraction(0)
    for e in g.edges:
        d = dist[e.tail][e.head]
        if d is None or e.cost < d:
            dist[e.tail][e.head] = e.cost
    for k in range(n):
        dk = dist[k]
        for i in range(n):
            dik = dist[i][k]
            if dik is None:
                continue
            di = dist[i]
            for j in range(n):
                dkj = dk[j]
                if dkj is None:
                    continue
                alt = dik + dkj
                if di[j] is None or alt < di[j]:
                    di[j] = alt
    edges = []
    for u in range(n):
        for v in range(n):
            if u == v:
                continue
            if dist[u][v] is None:
                raise NotStronglyConnected(f"no dipath {u} -> {v}")
            edges.append((u, v, dist[u][v]))
    return Digraph(n, edges)


# ---------------------------------------------------------------------------
# Min directed cut (exact).  Weights are Fractions; internally everything is
# scaled to integers so the Dinic inner loop runs on machine/big ints.
# ---------------------------------------------------------------------------

class _Dinic:
    __slots__ = ("n", "to", "cap", "first", "nxt")

    def __init__(self, n: int):
        self.n = n
        self.to: list[int] = []
        self.cap: list[int] = []
        self.first = [-1] * n
        self.nxt: list[int] = []

    def add(self, u: int, v: int, c: int) -> None:
        for (a, b, w) in ((u, v, c), (v, u, 0)):
            self.to.append(b)
            self.cap.append(w)
            self.nxt.append(self.first[a])
            self.first[a] = len(self.to) - 1

    def maxflow(self, s: int, t: int, limit: Optional[int] = None) -> int:
        """Max flow value; stops early once `limit` is reached (the return
        value is then only a lower bound >= limit)."""
        flow = 0
        INF = float("inf")
        while True:
            if limit is not None and flow >= limit:
                return flow
            level = [-1] * self.n
            level[s] = 0
            q = [s]
            for v in q:
                i = self.first[v]
                while i != -1:
                    if self.cap[i] > 0 and level[self.to[i]] < 0:
                        level[self.to[i]] = level[v] + 1
                        q.append(self.to[i])
                    i = self.nxt[i]
            if level[t] < 0:
                return flow
            it = list(self.first)
            # blocking flow by iterative DFS
            while True:
                path: list[int] = []
                v = s
                while v != t:
                    i = it[v]
                    advanced = False
                    while i != -1:
                        if self.cap[i] > 0 and level[self.to[i]] == level[v] + 1:
                            advanced = True
                            break
                        i = self.nxt[i]
                    it[v] = i
                    if not advanced:
                        if not path:
                            break
                        level[v] = -1
                        v = self.to[path.pop() ^ 1]
                        continue
                    path.append(i)
                    v = self.to[i]
                if v != t:
                    break
                aug = min(self.cap[i] for i in path)
                for i in path:
                    self.cap[i] -= aug
                    self.cap[i ^ 1] += aug
                flow += aug
                if limit is not None and flow >= limit:
                    return flow

    def residual_side(self, s: int) -> set[int]:
        seen = {s}
        stack = [s]
        while stack:
            v = stack.pop()
            i = self.first[v]
            while i != -1:
                if self.cap[i] > 0 and self.to[i] not in seen:
                    seen.add(self.to[i])
                    stack.append(self.to[i])
                i = self.nxt[i]
        return seen


def _scale_to_int(weights: Sequence[Fraction]) -> tuple[list[int], int]:
    denom = 1
    for w in weights:
        denom = denom * w.denominator // math.gcd(denom, w.denominator)
    return [int(w * denom) for w in weights], denom


def min_directed_cut(g: Digraph, weights: Sequence[Fraction], *,
                     must_contain: Optional[int] = None,
                     must_avoid: Optional[int] = None) -> tuple[Fraction, frozenset[int]]:
    """Minimum of sum(w_e, e in delta_out(U)) over nonempty proper U.

    Optional side constraints restrict U to contain / avoid a vertex.
    Returns (value, attaining U).  Raises NegativeWeight on any w_e < 0.
    """
    if g.n < 2:
        raise GraphError("need at least two vertices for a cut")
    weights = [Fraction(w) for w in weights]
    if len(weights) != g.m:
        raise GraphError("one weight per edge required")
    for w in weights:
        if w < 0:
            raise NegativeWeight(str(w))
    iweights, denom = _scale_to_int(weights)

    def flow_between(s: int, t: int, limit: Optional[int]) -> tuple[int, set[int]]:
        d = _Dinic(g.n)
        for i, e in enumerate(g.edges):
            d.add(e.tail, e.head, iweights[i])
        val = d.maxflow(s, t, limit)
        return val, d.residual_side(s)

    if must_contain is not None and must_avoid is not None:
        if must_contain == must_avoid:
            raise GraphError("side constraint names the same vertex twice")
        pairs = [(must_contain, must_avoid)]
    elif must_contain is not None:
        pairs = [(must_contain, t) for t in range(g.n) if t != must_contain]
    elif must_avoid is not None:
        pairs = [(s, must_avoid) for s in range(g.n) if s != must_avoid]
    else:
        pairs = [(0, t) for t in range(1, g.n)] + [(t, 0) for t in range(1, g.n)]

    best: Optional[int] = None
    best_side: Optional[set[int]] = None
    for (s, t) in pairs:
        limit = best if best is not None else None
        val, side = flow_between(s, t, limit)
        if best is None or val < best:
            best, best_side = val, side
    assert best is not None and best_side is not None
    return Fraction(best, denom), frozenset(best_side)


def min_cut_by_enumeration(g: Digraph, weights: Sequence[Fraction], *,
                           must_contain: Optional[int] = None,
                           must_avoid: Optional[int] = None) -> tuple[Fraction, frozenset[int]]:
    """Exhaustive 2^n sweep; independent cross-check for min_directed_cut
    and the fallback when lifted weights go negative."""
    if g.n < 2:
        raise GraphError("need at least two vertices for a cut")
    verts = list(range(g.n))
    best: Optional[Fraction] = None
    best_set: Optional[frozenset[int]] = None
    for r in range(1, g.n):
        for combo in combinations(verts, r):
            u = set(combo)
            if must_contain is not None and must_contain not in u:
                continue
            if must_avoid is not None and must_avoid in u:
                continue
            val = Fraction(0)
            for i, e in enumerate(g.edges):
                if e.tail in u and e.head not in u:
                    val += weights[i]
            if best is None or val < best:
                best, best_set = val, frozenset(u)
    if best is None:
        raise GraphError("side constraints exclude every cut")
    return best, best_set
