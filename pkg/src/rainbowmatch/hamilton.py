"""Rainbow Hamilton cycles: exact search plus the two constructions that
produce candidates for it.

The even-n construction splits a colored graph into eight edge classes via a
random (color, label) partition, finds a rainbow perfect matching inside each
class under the pair recoloring, and unions the matchings into an 8-regular
multigraph in which every original color appears exactly four times; that
multigraph is then searched for a rainbow Hamilton cycle directly.  The odd-n
route contracts one edge (deleting its color class), solves the resulting
even-order multigraph, and lifts the cycle back when its two contracted-vertex
edges came from different original endpoints.

Search is exhaustive backtracking with color-bitmask, degree-2, color-supply,
and connectivity pruning; "None" therefore means "no rainbow Hamilton cycle",
while budget exhaustion raises.  Parallel edges are distinct traversable
objects throughout.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Sequence

from .count import BudgetExceededError, DEFAULT_NODE_BUDGET, find_rainbow_pm
from .model import GRAPH, ColoredEdge, ColoredHypergraph, Matching

__all__ = [
    "DEFAULT_HC_BUDGET",
    "STAGE_CLASS_TOO_SMALL",
    "STAGE_MATCHING_NOT_FOUND",
    "STAGE_MATCHING_BUDGET",
    "STAGE_HC_NOT_FOUND",
    "STAGE_HC_BUDGET",
    "STAGE_SUCCESS",
    "ColoredMultigraph",
    "HamiltonCycle",
    "ContractionMap",
    "AssemblyPlan",
    "is_rainbow_hamilton_cycle",
    "find_rainbow_hc",
    "assemble_even",
    "contract_color_delete",
    "lift_cycle",
]

DEFAULT_HC_BUDGET = 10**7

STAGE_CLASS_TOO_SMALL = "edge-class-too-small"
STAGE_MATCHING_NOT_FOUND = "matching-not-found"
STAGE_MATCHING_BUDGET = "matching-budget"
STAGE_HC_NOT_FOUND = "hc-not-found"
STAGE_HC_BUDGET = "hc-budget"
STAGE_SUCCESS = "success"


@dataclass(frozen=True)
class ColoredMultigraph:
    """A colored multigraph on [1..n]: parallel edges allowed, each stored as
    its own ColoredEdge occurrence (sorted endpoint pair plus color).  No
    self-loops."""

    n: int
    kappa: int
    edges: tuple[ColoredEdge, ...]

    def __post_init__(self):
        if self.n < 1 or self.kappa < 1:
            raise ValueError("need n >= 1, kappa >= 1")
        edges = tuple(sorted(ColoredEdge(tuple(e[0]), int(e[1])) for e in self.edges))
        for e in edges:
            u, v = e.verts
            if not (1 <= u < v <= self.n):
                raise ValueError(f"bad edge {e}")
            if not 1 <= e.color <= self.kappa:
                raise ValueError(f"bad color in {e}")
        object.__setattr__(self, "edges", edges)

    def degree_sequence(self) -> dict[int, int]:
        deg = {v: 0 for v in range(1, self.n + 1)}
        for e in self.edges:
            deg[e.verts[0]] += 1
            deg[e.verts[1]] += 1
        return deg

    def color_multiplicities(self) -> Counter:
        return Counter(e.color for e in self.edges)


@dataclass(frozen=True)
class HamiltonCycle:
    """vertices is the cyclic order (each vertex once, starting at vertex 1);
    edges[i] joins vertices[i] and vertices[(i+1) % n]."""

    vertices: tuple[int, ...]
    edges: tuple[ColoredEdge, ...]

    def colors(self) -> tuple[int, ...]:
        return tuple(e.color for e in self.edges)


def _host_view(G) -> tuple[int, tuple[ColoredEdge, ...]]:
    if isinstance(G, ColoredMultigraph):
        return G.n, G.edges
    if isinstance(G, ColoredHypergraph):
        if G.mode != GRAPH:
            raise ValueError("Hamilton cycle search needs a graph-mode instance")
        if G.absent:
            raise ValueError("Hamilton cycle search needs all vertices active")
        return G.n, G.edges
    raise TypeError(f"unsupported host {type(G).__name__}")


def is_rainbow_hamilton_cycle(G, cycle: HamiltonCycle) -> bool:
    """Independent validator: full vertex coverage, consecutive adjacency, the
    edge multiset really available in G (parallel edges counted), and all
    colors distinct.  Shares no code with the searcher."""
    n, host_edges = _host_view(G)
    if sorted(cycle.vertices) != list(range(1, n + 1)):
        return False
    if len(cycle.edges) != n:
        return False
    for i, e in enumerate(cycle.edges):
        u, v = cycle.vertices[i], cycle.vertices[(i + 1) % n]
        if tuple(sorted((u, v))) != e.verts:
            return False
    if Counter(cycle.edges) - Counter(host_edges):
        return False
    colors = [e.color for e in cycle.edges]
    return len(colors) == len(set(colors))


def _canonical_cycle(path: list[int], edges: list[ColoredEdge]) -> HamiltonCycle:
    # path starts at vertex 1 by construction; fix the direction so the
    # second vertex is the smaller neighbor of 1, making output orientation
    # independent of search details.
    if len(path) > 2 and path[1] > path[-1]:
        path = [path[0]] + path[:0:-1]
        edges = edges[::-1]
    return HamiltonCycle(tuple(path), tuple(edges))


def find_rainbow_hc(G, budget: int = DEFAULT_HC_BUDGET) -> HamiltonCycle | None:
    """First rainbow Hamilton cycle found by exhaustive backtracking, or None
    when the search space is exhausted.  Raises BudgetExceededError when the
    node budget runs out (never a silent absence)."""
    n, host_edges = _host_view(G)
    if n < 3:
        raise ValueError("Hamilton cycles need n >= 3")
    adj: list[list[tuple[int, int, int]]] = [[] for _ in range(n + 1)]
    for idx, e in enumerate(host_edges):
        u, v = e.verts
        adj[u].append((v, e.color, idx))
        adj[v].append((u, e.color, idx))

    start = 1
    visited = 1 << (start - 1)
    path = [start]
    path_edges: list[ColoredEdge] = []
    nodes = 0

    def live_scan(head: int, visited: int, colors: int):
        """Pruning data: per-vertex live-neighbor sets and the live color set.

        An edge is live when its color is unused and neither endpoint is an
        interior visited vertex (head and start stay usable: the remaining
        cycle segment leaves head and eventually re-enters start).
        """
        head_bit = 1 << (head - 1)
        start_bit = 1 << (start - 1)
        interior = visited & ~head_bit & ~start_bit
        nbrs: dict[int, set[int]] = {}
        live_colors = 0
        for idx_e, e in enumerate(host_edges):
            u, v = e.verts
            if colors >> (e.color - 1) & 1:
                continue
            if interior & (1 << (u - 1)) or interior & (1 << (v - 1)):
                continue
            nbrs.setdefault(u, set()).add(v)
            nbrs.setdefault(v, set()).add(u)
            live_colors |= 1 << (e.color - 1)
        return nbrs, live_colors

    def prune(head: int, visited: int, colors: int, depth: int) -> bool:
        """True when the branch is provably dead."""
        nbrs, live_colors = live_scan(head, visited, colors)
        remaining_edges = n - depth + 1
        if bin(live_colors).count("1") < remaining_edges:
            return True
        # Every unvisited vertex still needs two distinct cycle neighbors;
        # start still needs its closing edge.
        for v in range(1, n + 1):
            if visited >> (v - 1) & 1:
                continue
            if len(nbrs.get(v, ())) < 2:
                return True
        if not nbrs.get(start):
            return True
        # The remaining segment is a path head -> (all unvisited) -> start,
        # so everything must be reachable from head through live edges.
        seen = {head}
        frontier = [head]
        while frontier:
            x = frontier.pop()
            for y in nbrs.get(x, ()):
                if y not in seen:
                    seen.add(y)
                    frontier.append(y)
        for v in range(1, n + 1):
            if not (visited >> (v - 1) & 1) and v not in seen:
                return True
        if start not in seen:
            return True
        return False

    def rec(head: int, visited: int, colors: int, depth: int):
        nonlocal nodes
        nodes += 1
        if nodes > budget:
            raise BudgetExceededError(f"node budget {budget} exceeded", nodes)
        if depth == n:
            for v, c, idx in adj[head]:
                if v == start and not (colors >> (c - 1) & 1):
                    path_edges.append(host_edges[idx])
                    return True
            return False
        if prune(head, visited, colors, depth):
            return False
        for v, c, idx in adj[head]:
            if visited >> (v - 1) & 1 or colors >> (c - 1) & 1:
                continue
            path.append(v)
            path_edges.append(host_edges[idx])
            if rec(v, visited | 1 << (v - 1), colors | 1 << (c - 1), depth + 1):
                return True
            path.pop()
            path_edges.pop()
        return False

    if rec(start, visited, 0, 1):
        return _canonical_cycle(path, path_edges)
    return None


# -- even-n assembly ----------------------------------------------------------


@dataclass(frozen=True)
class AssemblyPlan:
    """Everything the eight-matching construction decided and found.

    labels        edge -> label in 1..4
    blocks        the 8 disjoint (color, label) sets, each of size n/2
    edge_classes  E_i = edges whose (color, label) pair lies in blocks[i]
    matchings     per class, the found matching in *original* colors, or None
    union_graph   the multigraph union of all matchings (None unless all found)
    failure_stage one of the STAGE_* names, or None when the HC search ran
                  and succeeded
    """

    labels: Mapping[ColoredEdge, int]
    blocks: tuple[frozenset, ...]
    edge_classes: tuple[tuple[ColoredEdge, ...], ...]
    matchings: tuple[Matching | None, ...]
    union_graph: ColoredMultigraph | None
    failure_stage: str | None

    @property
    def class_sizes(self) -> tuple[int, ...]:
        return tuple(len(cls) for cls in self.edge_classes)

    @property
    def stage_reached(self) -> str:
        return self.failure_stage or STAGE_SUCCESS


def assemble_even(
    G: ColoredHypergraph,
    rnd: random.Random,
    matching_budget: int = DEFAULT_NODE_BUDGET,
    hc_budget: int = DEFAULT_HC_BUDGET,
) -> tuple[AssemblyPlan, HamiltonCycle | None]:
    """Run the full even-n pipeline on a colored graph with kappa == n.

    Labels every edge with 1..4, partitions [1..n] x [1..4] into 8 blocks of
    size n/2, splits edges into classes by their (color, label) pair, gates on
    every class holding at least a tenth of the edges, finds one rainbow
    perfect matching per class under the pair recoloring (pairs indexed by
    sorted position within their block), unions the matchings into a
    multigraph, and searches it for a rainbow Hamilton cycle under the
    original colors.  Each way to fall short is a named failure stage.
    """
    if G.mode != GRAPH:
        raise ValueError("assembly needs a graph-mode instance")
    if G.absent:
        raise ValueError("assembly needs all vertices active")
    if G.n % 2 != 0 or G.n < 4:
        raise ValueError("assembly needs even n >= 4")
    if G.kappa != G.n:
        raise ValueError("assembly needs exactly n colors")

    labels = {e: rnd.randint(1, 4) for e in G.edges}
    pairs = [(c, l) for c in range(1, G.n + 1) for l in range(1, 5)]
    rnd.shuffle(pairs)
    nu = G.n // 2
    blocks = tuple(frozenset(pairs[i * nu : (i + 1) * nu]) for i in range(8))

    pair_to_block: dict[tuple[int, int], int] = {}
    for bi, block in enumerate(blocks):
        for pair in block:
            pair_to_block[pair] = bi
    classes: list[list[ColoredEdge]] = [[] for _ in range(8)]
    for e in G.edges:
        classes[pair_to_block[(e.color, labels[e])]].append(e)
    edge_classes = tuple(tuple(cls) for cls in classes)

    def plan(matchings, union, stage):
        return AssemblyPlan(labels, blocks, edge_classes, tuple(matchings), union, stage)

    m = len(G.edges)
    if any(len(cls) * 10 < m for cls in edge_classes):
        return plan([None] * 8, None, STAGE_CLASS_TOO_SMALL), None

    matchings: list[Matching | None] = [None] * 8
    for bi in range(8):
        index_of = {pair: i + 1 for i, pair in enumerate(sorted(blocks[bi]))}
        recolored = ColoredHypergraph(
            GRAPH,
            G.n,
            2,
            nu,
            tuple(
                ColoredEdge(e.verts, index_of[(e.color, labels[e])])
                for e in edge_classes[bi]
            ),
        )
        try:
            M = find_rainbow_pm(recolored, budget=matching_budget)
        except BudgetExceededError:
            return plan(matchings, None, STAGE_MATCHING_BUDGET), None
        if M is None:
            return plan(matchings, None, STAGE_MATCHING_NOT_FOUND), None
        original = {e.verts: e for e in edge_classes[bi]}
        matchings[bi] = Matching(tuple(sorted(original[f.verts] for f in M.edges)))

    union = ColoredMultigraph(
        G.n, G.kappa, tuple(e for M in matchings for e in M.edges)
    )
    try:
        hc = find_rainbow_hc(union, budget=hc_budget)
    except BudgetExceededError:
        return plan(matchings, union, STAGE_HC_BUDGET), None
    if hc is None:
        return plan(matchings, union, STAGE_HC_NOT_FOUND), None
    return plan(matchings, union, None), hc


# -- odd-n contract and lift -----------------------------------------------------


@dataclass(frozen=True)
class ContractionMap:
    """Bookkeeping from contract_color_delete.

    xi            the new vertex standing in for both removed endpoints
    merged        (x, y), the contracted edge's endpoints in the original graph
    new_to_old    new vertex id -> original vertex id (xi excluded)
    origins       (new verts, color) -> tuple of original endpoint pairs; a
                  xi-edge may have several origins when parallel copies with
                  equal color came from both x and y
    """

    xi: int
    merged: tuple[int, int]
    new_to_old: Mapping[int, int]
    origins: Mapping[tuple[tuple[int, int], int], tuple[tuple[int, int], ...]]


def contract_color_delete(
    G: ColoredHypergraph, e: ColoredEdge
) -> tuple[ColoredMultigraph, ContractionMap]:
    """Contract e = {x, y} into a fresh vertex and drop color class c(e).

    Survivor vertices are renumbered 1..n-2 in increasing order and the new
    vertex takes id n-1, so the result lives on [1..n-1].  Edges formerly at
    x or y become parallel edges at the new vertex, each remembering its
    original endpoint pair.  The color multiset of the result is the original
    one minus the whole c(e) class.
    """
    if G.mode != GRAPH:
        raise ValueError("contraction needs a graph-mode instance")
    if G.absent:
        raise ValueError("contraction needs all vertices active")
    if e not in set(G.edges):
        raise ValueError(f"{e} is not an edge of the instance")
    if G.n < 3:
        raise ValueError("contraction needs n >= 3")
    x, y = e.verts
    survivors = [v for v in range(1, G.n + 1) if v not in (x, y)]
    old_to_new = {v: i + 1 for i, v in enumerate(survivors)}
    xi = G.n - 1
    new_to_old = {i + 1: v for i, v in enumerate(survivors)}

    rows: list[tuple[ColoredEdge, tuple[int, int]]] = []
    for f in G.edges:
        if f.color == e.color:
            continue
        u, v = f.verts
        nu_ = old_to_new.get(u, xi)
        nv_ = old_to_new.get(v, xi)
        rows.append((ColoredEdge(tuple(sorted((nu_, nv_))), f.color), f.verts))

    rows.sort()
    origins: dict[tuple[tuple[int, int], int], list[tuple[int, int]]] = {}
    for g, orig in rows:
        origins.setdefault((g.verts, g.color), []).append(orig)
    Gp = ColoredMultigraph(G.n - 1, G.kappa, tuple(g for g, _ in rows))
    cmap = ContractionMap(
        xi,
        (x, y),
        new_to_old,
        {k: tuple(v) for k, v in origins.items()},
    )
    return Gp, cmap


def lift_cycle(
    hc: HamiltonCycle, cmap: ContractionMap, e: ColoredEdge
) -> HamiltonCycle | None:
    """Expand a rainbow Hamilton cycle of the contracted graph back to the
    original graph, inserting e between its endpoints.

    Succeeds iff the two cycle edges at the contracted vertex can be traced to
    distinct original endpoints (one at x, one at y); returns None otherwise.
    When a xi-edge has parallel same-colored copies from both sides, any
    assignment making the endpoints distinct is taken: all copies exist in the
    original graph, so the lifted cycle is valid either way.  The result is
    rainbow for free: e's color class was deleted before the cycle was found.
    """
    x, y = e.verts
    n_prime = len(hc.vertices)
    if cmap.xi not in hc.vertices:
        raise ValueError("cycle does not visit the contracted vertex")
    pos = hc.vertices.index(cmap.xi)
    edge_in = hc.edges[(pos - 1) % n_prime]
    edge_out = hc.edges[pos]

    def sides(g: ColoredEdge) -> set[int]:
        ends = set()
        for orig in cmap.origins[(g.verts, g.color)]:
            for u in orig:
                if u in (x, y):
                    ends.add(u)
        return ends

    in_sides, out_sides = sides(edge_in), sides(edge_out)
    if x in in_sides and y in out_sides:
        attach_in, attach_out = x, y
    elif y in in_sides and x in out_sides:
        attach_in, attach_out = y, x
    else:
        return None

    def lift_edge(g: ColoredEdge, xi_end: int | None) -> ColoredEdge:
        u, v = g.verts
        lu = cmap.new_to_old[u] if u != cmap.xi else xi_end
        lv = cmap.new_to_old[v] if v != cmap.xi else xi_end
        return ColoredEdge(tuple(sorted((lu, lv))), g.color)

    # Walk the contracted cycle starting at xi, replacing it by the two
    # original endpoints joined through e.  Interior edges never touch xi
    # (it appears once in the cycle), so only the two boundary edges need an
    # endpoint substituted.
    verts: list[int] = [attach_in, attach_out]
    edges: list[ColoredEdge] = [
        ColoredEdge(tuple(sorted((x, y))), e.color),
        lift_edge(edge_out, attach_out),
    ]
    for i in range(1, n_prime):
        v = hc.vertices[(pos + i) % n_prime]
        verts.append(cmap.new_to_old[v])
        g = hc.edges[(pos + i) % n_prime]
        edges.append(lift_edge(g, attach_in if i == n_prime - 1 else None))

    # rotate so vertex 1 leads, keeping edge alignment (edges[i] joins
    # verts[i] and verts[i+1])
    shift = verts.index(1)
    verts = verts[shift:] + verts[:shift]
    edges = edges[shift:] + edges[:shift]
    return _canonical_cycle(verts, edges)
