"""Hard-instance generators and their dicycle decompositions.

Three families, each produced together with the decomposition that makes it
useful:

* ``ladder(l)`` - the three-row digraph whose outer dicycle carries cost-1
  "thick" edges and whose middle row carries ``l`` anti-parallel "thin"
  2-cycles.  The thin cycles form the witness set: removing any one of them
  leaves the graph strongly connected.
* ``split(g, d)`` - the vertex-splitting image of a degree-<=2 digraph: every
  in/out-degree-2 vertex becomes a pair joined by two zero-cost "dashed"
  edges, and each dashed edge is assigned to one of the two cycles through
  the original vertex by matching heads.
* ``cgk_graph(k, r)`` / ``cgk_loop(k, r)`` - the recursive
  Charikar-Goemans-Karloff digraphs G_k and L_k, with their source/sink
  decomposition (G_k) and all-witness decomposition (L_k) assembled
  constructively level by level.

Vertex and edge numbering is deterministic everywhere so that serialized
instances and downstream reports are reproducible bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional

from .graphs import (
    Digraph,
    GraphError,
    is_strongly_connected,
    strongly_connected_components,
)


class InstanceError(Exception):
    pass


class BadParams(InstanceError):
    pass


class BadDecomposition(InstanceError):
    pass


class DegreeTooHigh(InstanceError):
    pass


class AmbiguousCycles(InstanceError):
    pass


class NotFractional(InstanceError):
    pass


@dataclass(frozen=True)
class Decomposition:
    """Edge-disjoint dicycle partition plus the witness subset of cycles
    whose individual removal keeps the graph strongly connected."""

    cycles: tuple[tuple[int, ...], ...]  # each: edge ids tracing the dicycle
    witness: frozenset[int]

    @property
    def indices(self) -> range:
        return range(len(self.cycles))

    def cycle_of_edge(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for j, cyc in enumerate(self.cycles):
            for e in cyc:
                out[e] = j
        return out


@dataclass(frozen=True)
class PqDecomposition:
    """Dicycle partition of a two-terminal digraph.  External cycles split
    the graph into a source side and a sink side when removed; internal
    cycles leave it strongly connected."""

    cycles: tuple[tuple[int, ...], ...]
    tags: tuple[str, ...]  # 'external-splitting' | 'internal-connected'
    p: int
    q: int


@dataclass(frozen=True)
class SplitInstance:
    graph: Digraph
    solid: tuple[int, ...]
    dashed: tuple[int, ...]
    # per original cycle: (image edge ids, dashed edge ids)
    cycles: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]
    witness: frozenset[int]
    origin: tuple[int, ...]  # origin[i] = original edge id of solid edge solid[i]
    # per original vertex: (upper, lower) images, or (v, v) when unsplit
    vertex_images: tuple[tuple[int, int], ...]

    def cycle_of_edge(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for j, (solids, dash) in enumerate(self.cycles):
            for e in solids:
                out[e] = j
            for e in dash:
                out[e] = j
        return out

    def solid_set(self) -> frozenset[int]:
        return frozenset(self.solid)

    def dashed_set(self) -> frozenset[int]:
        return frozenset(self.dashed)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

def _walk_is_dicycle(g: Digraph, cycle: tuple[int, ...]) -> bool:
    if not cycle:
        return False
    for a, b in zip(cycle, cycle[1:] + cycle[:1]):
        if g.edge(a).head != g.edge(b).tail:
            return False
    verts = [g.edge(e).tail for e in cycle]
    return len(set(verts)) == len(verts)


def validate_decomposition(g: Digraph, d: Decomposition, *, check_witness: bool = True) -> None:
    seen: set[int] = set()
    for cyc in d.cycles:
        if not _walk_is_dicycle(g, cyc):
            raise BadDecomposition(f"not a dicycle: {cyc}")
        if seen.intersection(cyc):
            raise BadDecomposition("cycles are not edge-disjoint")
        seen.update(cyc)
    if seen != set(range(g.m)):
        raise BadDecomposition("cycles do not cover the edge set")
    if not d.witness:
        raise BadDecomposition("witness set is empty")
    if not d.witness <= set(d.indices):
        raise BadDecomposition("witness indexes a missing cycle")
    if check_witness:
        for j in sorted(d.witness):
            if not is_strongly_connected(g, skip_edges=frozenset(d.cycles[j])):
                raise BadDecomposition(f"removing cycle {j} disconnects the graph")


def validate_pq_decomposition(g: Digraph, d: PqDecomposition) -> None:
    seen: set[int] = set()
    for cyc in d.cycles:
        if not _walk_is_dicycle(g, cyc):
            raise BadDecomposition(f"not a dicycle: {cyc}")
        if seen.intersection(cyc):
            raise BadDecomposition("cycles are not edge-disjoint")
        seen.update(cyc)
    if seen != set(range(g.m)):
        raise BadDecomposition("cycles do not cover the edge set")
    if len(d.tags) != len(d.cycles):
        raise BadDecomposition("one tag per cycle required")
    for j, (cyc, tag) in enumerate(zip(d.cycles, d.tags)):
        skip = frozenset(cyc)
        if tag == "internal-connected":
            if not is_strongly_connected(g, skip_edges=skip):
                raise BadDecomposition(f"internal cycle {j} disconnects the graph")
        elif tag == "external-splitting":
            comps = strongly_connected_components(g, skip_edges=skip)
            if len(comps) != 2:
                raise BadDecomposition(f"external cycle {j}: {len(comps)} components")
            side_p = next(c for c in comps if d.p in c)
            if d.q in side_p:
                raise BadDecomposition(f"external cycle {j}: terminals not separated")
        else:
            raise BadDecomposition(f"unknown tag {tag!r}")


def order_cycle(g: Digraph, edge_ids: Iterable[int]) -> tuple[int, ...]:
    """Arrange an edge set into dicycle traversal order (must be one)."""
    ids = sorted(set(edge_ids))
    if not ids:
        raise BadDecomposition("empty cycle")
    nxt = {}
    for e in ids:
        t = g.edge(e).tail
        if t in nxt:
            raise BadDecomposition("vertex repeated in cycle")
        nxt[t] = e
    walk = [ids[0]]
    while True:
        cur = g.edge(walk[-1]).head
        if cur == g.edge(walk[0]).tail:
            break
        if cur not in nxt:
            raise BadDecomposition("edge set is not a closed diwalk")
        walk.append(nxt[cur])
    if len(walk) != len(ids):
        raise BadDecomposition("edge set is not a single dicycle")
    return tuple(walk)


# ---------------------------------------------------------------------------
# ladder family
# ---------------------------------------------------------------------------

def ladder(ell: int) -> tuple[Digraph, Decomposition]:
    """Three rows of ell+1 vertices; one thick outer dicycle (2*ell+4 edges)
    plus ell thin anti-parallel 2-cycles along the middle row, unit costs.

    Vertex ids: bottom row 0..ell, middle row ell+1..2*ell+1, top row
    2*ell+2..3*ell+2, each left to right.  Edges: thick cycle first (bottom
    row rightward, right column upward, top row leftward, left column
    downward), then the thin pairs left to right (rightward edge before
    leftward edge).  Cycle 0 is the thick cycle; cycles 1..ell are the thin
    pairs; the witness set is {1..ell}.
    """
    if ell < 1:
        raise BadParams("ladder needs ell >= 1")
    one = Fraction(1)
    bot = lambda x: x
    mid = lambda x: ell + 1 + x
    top = lambda x: 2 * ell + 2 + x
    edges: list[tuple[int, int, Fraction]] = []
    thick: list[int] = []
    for x in range(ell):
        thick.append(len(edges))
        edges.append((bot(x), bot(x + 1), one))
    thick.append(len(edges))
    edges.append((bot(ell), mid(ell), one))
    thick.append(len(edges))
    edges.append((mid(ell), top(ell), one))
    for x in range(ell, 0, -1):
        thick.append(len(edges))
        edges.append((top(x), top(x - 1), one))
    thick.append(len(edges))
    edges.append((top(0), mid(0), one))
    thick.append(len(edges))
    edges.append((mid(0), bot(0), one))
    cycles: list[tuple[int, ...]] = [tuple(thick)]
    for x in range(ell):
        right = len(edges)
        edges.append((mid(x), mid(x + 1), one))
        left = len(edges)
        edges.append((mid(x + 1), mid(x), one))
        cycles.append((right, left))
    g = Digraph(3 * (ell + 1), edges)
    d = Decomposition(tuple(cycles), frozenset(range(1, ell + 1)))
    validate_decomposition(g, d)
    return g, d


# ---------------------------------------------------------------------------
# splitting operation
# ---------------------------------------------------------------------------

def split(g: Digraph, d: Decomposition) -> SplitInstance:
    """Split every in/out-degree-2 vertex into an upper/lower pair joined by
    two zero-cost dashed edges, redirecting the four incident edges.

    At a split vertex the two cycles through it are separated: the cycle of
    the lowest-id incoming edge keeps its head at the upper image and its
    tail at the lower image; the other cycle gets the opposite pair.  Each
    dashed edge joins the cycle whose incoming image shares its head.
    """
    validate_decomposition(g, d, check_witness=False)
    cyc_of = d.cycle_of_edge()
    for v in range(g.n):
        if len(g.in_edges(v)) > 2 or len(g.out_edges(v)) > 2:
            raise DegreeTooHigh(f"vertex {v} exceeds in/out degree 2")

    split_verts: list[int] = []
    for v in range(g.n):
        if len(g.in_edges(v)) == 2:
            around = {cyc_of[e] for e in g.in_edges(v) + g.out_edges(v)}
            if len(around) != 2:
                raise AmbiguousCycles(f"vertex {v} is not on exactly two cycles")
            split_verts.append(v)

    images: list[tuple[int, int]] = []
    counter = 0
    is_split = set(split_verts)
    for v in range(g.n):
        if v in is_split:
            images.append((counter, counter + 1))
            counter += 2
        else:
            images.append((counter, counter))
            counter += 1

    # cycle owning the upper image at each split vertex
    upper_cycle: dict[int, int] = {}
    for v in split_verts:
        e_in = min(g.in_edges(v))
        upper_cycle[v] = cyc_of[e_in]

    new_edges: list[tuple[int, int, Fraction]] = []
    for e_id, e in enumerate(g.edges):
        t_u, t_b = images[e.tail]
        h_u, h_b = images[e.head]
        # the upper cycle enters at the upper image and leaves from the lower
        tail = t_b if cyc_of[e_id] == upper_cycle.get(e.tail) else t_u
        head = h_b if cyc_of[e_id] != upper_cycle.get(e.head, cyc_of[e_id]) else h_u
        new_edges.append((tail, head, e.cost))

    n_orig = g.m
    dashed_ids: list[int] = []
    dash_cycle: list[int] = []  # owning cycle per dashed edge
    zero = Fraction(0)
    for v in split_verts:
        u_img, b_img = images[v]
        other = next(c for c in (cyc_of[e] for e in g.in_edges(v)) if c != upper_cycle[v])
        dashed_ids.append(len(new_edges))
        dash_cycle.append(upper_cycle[v])
        new_edges.append((b_img, u_img, zero))  # head matches upper cycle's incoming image
        dashed_ids.append(len(new_edges))
        dash_cycle.append(other)
        new_edges.append((u_img, b_img, zero))

    g_new = Digraph(counter, new_edges)
    cycles_new = []
    for j, cyc in enumerate(d.cycles):
        dash = tuple(e for e, c in zip(dashed_ids, dash_cycle) if c == j)
        cycles_new.append((tuple(cyc), dash))
    return SplitInstance(
        graph=g_new,
        solid=tuple(range(n_orig)),
        dashed=tuple(dashed_ids),
        cycles=tuple(cycles_new),
        witness=d.witness,
        origin=tuple(range(n_orig)),
        vertex_images=tuple(images),
    )


def tour(s: SplitInstance, j: int) -> frozenset[int]:
    """Dashed edges of cycle j plus the solid edges of every other cycle."""
    if j not in s.witness:
        raise NotFractional(f"cycle {j} is not in the witness set")
    out = set(s.cycles[j][1])
    for i, (solids, _) in enumerate(s.cycles):
        if i != j:
            out.update(solids)
    return frozenset(out)


def is_hamiltonian_dicycle(g: Digraph, edge_set: frozenset[int]) -> bool:
    nxt: dict[int, int] = {}
    indeg = dict.fromkeys(range(g.n), 0)
    for e in edge_set:
        ed = g.edge(e)
        if ed.tail in nxt:
            return False
        nxt[ed.tail] = ed.head
        indeg[ed.head] += 1
    if len(nxt) != g.n or any(c != 1 for c in indeg.values()):
        return False
    seen = 1
    v = nxt[0]
    while v != 0:
        if v not in nxt:
            return False
        seen += 1
        if seen > g.n:
            return False
        v = nxt[v]
    return seen == g.n


def has_good_tours(s: SplitInstance, indices: Optional[Iterable[int]] = None) -> bool:
    todo = s.witness if indices is None else indices
    return all(is_hamiltonian_dicycle(s.graph, tour(s, j)) for j in todo)


def ladder_split_return_path(s: SplitInstance) -> tuple[tuple[int, ...], int, int]:
    """The unit-value return dipath used by the path variant on a split
    ladder: the thick-cycle image path whose interior is the original top
    row.  Returns (edge ids in walk order, start vertex, end vertex)."""
    n_orig = len(s.vertex_images)
    if n_orig % 3:
        raise InstanceError("not a split ladder")
    ell = n_orig // 3 - 1
    top_orig = set(range(2 * ell + 2, 3 * ell + 3))
    top_new = {s.vertex_images[v][0] for v in top_orig}
    solids = s.cycles[0][0]
    g = s.graph
    nxt = {g.edge(e).tail: e for e in solids}
    heads = {g.edge(e).head for e in solids}
    starts = [g.edge(e).tail for e in solids if g.edge(e).tail not in heads]
    for start in starts:
        walk = []
        v = start
        while v in nxt:
            walk.append(nxt[v])
            v = g.edge(nxt[v]).head
        interior = {g.edge(e).tail for e in walk[1:]}
        if interior <= top_new:
            return tuple(walk), start, v
    raise InstanceError("no thick return path through the top row")


# ---------------------------------------------------------------------------
# CGK family
# ---------------------------------------------------------------------------

@dataclass
class _CgkNode:
    k: int
    p: int
    q: int
    fwd: tuple[int, ...] = ()
    bwd: tuple[int, ...] = ()
    children: tuple["_CgkNode", ...] = field(default=())


def _build_cgk(k: int, r: int, edges: list, counter: list[int]) -> _CgkNode:
    if k == 0:
        v = counter[0]
        counter[0] += 1
        return _CgkNode(k=0, p=v, q=v)
    children = tuple(_build_cgk(k - 1, r, edges, counter) for _ in range(r))
    p = counter[0]
    q = counter[0] + 1
    counter[0] += 2
    cost = Fraction(r) ** (k - 1)
    fwd_stops = [p] + [c.p for c in children] + [q]
    fwd = []
    for a, b in zip(fwd_stops, fwd_stops[1:]):
        fwd.append(len(edges))
        edges.append((a, b, cost))
    bwd_stops = [q] + [c.q for c in reversed(children)] + [p]
    bwd = []
    for a, b in zip(bwd_stops, bwd_stops[1:]):
        bwd.append(len(edges))
        edges.append((a, b, cost))
    return _CgkNode(k=k, p=p, q=q, fwd=tuple(fwd), bwd=tuple(bwd), children=children)


def _external_cycle_sets(node: _CgkNode, r: int) -> list[set[int]]:
    """The r+1 cycles partitioning the top two levels of new edges."""
    ch = node.children
    out = [set(node.fwd[0:1]) | set(node.bwd[r : r + 1]) | set(ch[0].fwd)]
    for i in range(1, r):
        out.append({node.fwd[i], node.bwd[r - i]} | set(ch[i - 1].bwd) | set(ch[i].fwd))
    out.append({node.fwd[r], node.bwd[0]} | set(ch[r - 1].bwd))
    return out


def _pq_cycle_sets(node: _CgkNode, r: int) -> list[tuple[set[int], str]]:
    if node.k == 0:
        return []
    if node.k == 1:
        return [
            ({node.fwd[i], node.bwd[r - i]}, "external-splitting")
            for i in range(r + 1)
        ]
    out = [(c, "external-splitting") for c in _external_cycle_sets(node, r)]
    if node.k >= 3:
        for child in node.children:
            for grand in child.children:
                out.extend((c, "internal-connected") for c, _ in _pq_cycle_sets(grand, r))
    return out


def _check_cgk_params(k: int, r: int) -> None:
    if r < 3:
        raise BadParams("r >= 3 required")
    if k < 0:
        raise BadParams("k >= 0 required")


def cgk_graph(k: int, r: int) -> tuple[Digraph, PqDecomposition]:
    """Two-terminal member G_k of the recursive family: r copies of the
    previous level strung between a fresh source and sink by two cost
    r^(k-1) dipaths.  Copies are emitted before the level's new edges."""
    _check_cgk_params(k, r)
    edges: list[tuple[int, int, Fraction]] = []
    counter = [0]
    node = _build_cgk(k, r, edges, counter)
    g = Digraph(counter[0], edges)
    cyc_sets = _pq_cycle_sets(node, r)
    cycles = tuple(order_cycle(g, c) for c, _ in cyc_sets)
    tags = tuple(tag for _, tag in cyc_sets)
    d = PqDecomposition(cycles=cycles, tags=tags, p=node.p, q=node.q)
    if k >= 1:
        validate_pq_decomposition(g, d)
    return g, d


def cgk_loop(k: int, r: int) -> tuple[Digraph, Decomposition]:
    """Closed member L_k: G_k with the terminals removed and the copy chain
    closed by (u_r, u_1) and (v_1, v_r).  Every cycle of the resulting
    decomposition is a witness cycle."""
    _check_cgk_params(k, r)
    if k < 2:
        raise BadParams("the closed family needs k >= 2")
    edges: list[tuple[int, int, Fraction]] = []
    counter = [0]
    node = _build_cgk(k, r, edges, counter)
    p, q = node.p, node.q
    drop = {node.fwd[0], node.fwd[r], node.bwd[0], node.bwd[r]}
    remap: dict[int, int] = {}
    new_edges = []
    for i, (t, h, c) in enumerate(edges):
        if i in drop:
            continue
        remap[i] = len(new_edges)
        new_edges.append((t, h, c))
    cost = Fraction(r) ** (k - 1)
    u1, ur = node.children[0].p, node.children[r - 1].p
    v1, vr = node.children[0].q, node.children[r - 1].q
    closing_u = len(new_edges)
    new_edges.append((ur, u1, cost))
    closing_v = len(new_edges)
    new_edges.append((v1, vr, cost))
    # p and q are the two highest vertex ids; dropping them keeps ids stable
    assert {p, q} == {counter[0] - 2, counter[0] - 1}
    g = Digraph(counter[0] - 2, new_edges)

    ext = _external_cycle_sets(node, r)
    cyc_sets = []
    for i in range(1, r):
        cyc_sets.append({remap[e] for e in ext[i]})
    last = {closing_u, closing_v}
    last.update(remap[e] for e in node.children[r - 1].bwd)
    last.update(remap[e] for e in node.children[0].fwd)
    cyc_sets.append(last)
    if k >= 3:
        for child in node.children:
            for grand in child.children:
                for cset, _ in _pq_cycle_sets(grand, r):
                    cyc_sets.append({remap[e] for e in cset})
    cycles = tuple(order_cycle(g, c) for c in cyc_sets)
    d = Decomposition(cycles=cycles, witness=frozenset(range(len(cycles))))
    validate_decomposition(g, d)
    return g, d
