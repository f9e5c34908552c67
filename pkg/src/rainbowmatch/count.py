"""Exact rainbow perfect matching decision, search, and counting.

Everything here is exact integer combinatorics; nothing is sampled.  The
workhorse is a backtracking kernel over bitmasks (one bit per vertex, one bit
per color) with a fail-fast coverage prune: a branch dies as soon as some
active uncovered vertex has no remaining usable edge.  Exponential in the
worst case, fine at desk scale, and guarded by an explicit node budget that
raises instead of silently truncating.

For bipartite instances whose color count equals n there is a second,
independent counting route via inclusion-exclusion over color subsets and
permanents; the two routes cross-check each other in the tests.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .model import (
    PARTITE,
    ColoredEdge,
    ColoredHypergraph,
    Matching,
    PartiteVertex,
)

__all__ = [
    "DEFAULT_NODE_BUDGET",
    "BudgetExceededError",
    "CountReport",
    "UniformHypergraph",
    "is_rainbow",
    "is_matching",
    "is_perfect_matching",
    "find_rainbow_pm",
    "count_rainbow_pm",
    "expected_rainbow_count",
    "disjoint_completion_count",
    "second_moment_exact",
    "reduce_to_uniform",
    "count_uniform_pm",
    "latin_transversal",
]

DEFAULT_NODE_BUDGET = 10**8

METHOD_BRUTE = "brute"
METHOD_IE = "color-inclusion-exclusion"


class BudgetExceededError(RuntimeError):
    """Search exceeded its node budget.  Carries the node count reached."""

    def __init__(self, message: str, nodes: int):
        super().__init__(message)
        self.nodes = nodes


@dataclass(frozen=True)
class CountReport:
    value: int
    method: str
    elapsed: float
    nodes: int


# -- predicates ---------------------------------------------------------------


def is_rainbow(edges: Iterable[ColoredEdge] | Matching) -> bool:
    """True iff the edges carry pairwise distinct colors."""
    if isinstance(edges, Matching):
        edges = edges.edges
    colors = [e.color for e in edges]
    return len(colors) == len(set(colors))


def is_matching(H: ColoredHypergraph, M: Matching) -> bool:
    """True iff M's edges belong to H and are pairwise vertex-disjoint."""
    edge_set = set(H.edges)
    seen = set()
    for e in M.edges:
        if e not in edge_set:
            return False
        if H.mode == PARTITE:
            verts = [PartiteVertex(p, i) for p, i in enumerate(e.verts, start=1)]
        else:
            verts = list(e.verts)
        for v in verts:
            if v in seen:
                return False
            seen.add(v)
    return True


def is_perfect_matching(H: ColoredHypergraph, M: Matching) -> bool:
    """True iff M is a matching of H covering every active vertex."""
    if not is_matching(H, M):
        return False
    covered = 0
    for _ in M.edges:
        covered += H.k if H.mode == PARTITE else 2
    return covered == len(H.active_vertices())


# -- backtracking kernel -------------------------------------------------------


def _kernel_setup(H: ColoredHypergraph):
    """Bit layout plus the per-mode branch vertex list.

    Returns (all_active_mask, branch_bits, edge_items, feasible) where
    edge_items is [(vertex_mask, color_bit, edge), ...] in canonical edge
    order and branch_bits are the bits we branch on, low to high.  feasible
    is False when a parity/size argument already rules out any perfect
    matching (unequal active part sizes, odd active vertex count).
    """
    n = H.n
    if H.mode == PARTITE:
        counts = H.active_counts()
        feasible = len(set(counts)) == 1
        bit_of = lambda part, idx: 1 << ((part - 1) * n + (idx - 1))
        all_active = 0
        for p in range(1, H.k + 1):
            for i in H.part_active(p):
                all_active |= bit_of(p, i)
        branch_bits = [bit_of(1, i) for i in H.part_active(1)]
        edge_items = []
        for e in H.edges:
            vmask = 0
            for part, idx in enumerate(e.verts, start=1):
                vmask |= bit_of(part, idx)
            edge_items.append((vmask, 1 << (e.color - 1), e))
    else:
        active = H.active_vertices()
        feasible = len(active) % 2 == 0
        all_active = 0
        for v in active:
            all_active |= 1 << (v - 1)
        branch_bits = [1 << (v - 1) for v in active]
        edge_items = [
            ((1 << (e.verts[0] - 1)) | (1 << (e.verts[1] - 1)), 1 << (e.color - 1), e)
            for e in H.edges
        ]
    return all_active, branch_bits, edge_items, feasible


class _Search:
    """One backtracking run; counts every visited node against the budget."""

    def __init__(self, H: ColoredHypergraph, budget: int, find_one: bool):
        self.all_active, self.branch_bits, self.edge_items, self.feasible = _kernel_setup(H)
        self.budget = budget
        self.find_one = find_one
        self.nodes = 0
        self.count = 0
        self.stack: list[ColoredEdge] = []
        self.found: tuple[ColoredEdge, ...] | None = None

    def run(self) -> None:
        if not self.feasible:
            return
        if self.all_active == 0:
            # No active vertices: exactly one (empty) perfect matching.
            self.count = 1
            if self.find_one:
                self.found = ()
            return
        self._recurse(0, 0, 0, self.edge_items)

    def _recurse(self, level: int, used: int, colors: int, pool) -> bool:
        """Returns True to abort the whole search (find_one hit)."""
        self.nodes += 1
        if self.nodes > self.budget:
            raise BudgetExceededError(
                f"node budget {self.budget} exceeded", self.nodes
            )
        branch = self.branch_bits
        while level < len(branch) and branch[level] & used:
            level += 1
        if level == len(branch):
            self.count += 1
            if self.find_one:
                self.found = tuple(self.stack)
                return True
            return False

        vbit = branch[level]
        live = []
        cands = []
        cover = 0
        for item in pool:
            vmask, cbit, _ = item
            if vmask & used or cbit & colors:
                continue
            live.append(item)
            cover |= vmask
            if vmask & vbit:
                cands.append(item)
        # Fail fast: every active uncovered vertex must still lie on some
        # usable edge, or no completion exists down this branch.
        if (self.all_active & ~used) & ~cover:
            return False
        for vmask, cbit, edge in cands:
            self.stack.append(edge)
            if self._recurse(level + 1, used | vmask, colors | cbit, live):
                return True
            self.stack.pop()
        return False


def find_rainbow_pm(
    H: ColoredHypergraph, budget: int = DEFAULT_NODE_BUDGET
) -> Matching | None:
    """First rainbow perfect matching in canonical search order, or None.

    "None" is a proof of absence (the search space was exhausted), not a
    timeout; running out of budget raises BudgetExceededError instead.
    """
    search = _Search(H, budget, find_one=True)
    search.run()
    if search.found is None:
        return None
    return Matching(tuple(sorted(search.found)))


def count_rainbow_pm(
    H: ColoredHypergraph,
    method: str = METHOD_BRUTE,
    budget: int = DEFAULT_NODE_BUDGET,
) -> CountReport:
    """Exact number of rainbow perfect matchings of H.

    method "brute" works in both modes and with restrictions applied;
    "color-inclusion-exclusion" (alias "ie") needs a bipartite instance with
    kappa == n and no absent vertices, and is the independent cross-check
    route for the brute kernel.
    """
    start = time.perf_counter()
    if method in (METHOD_BRUTE, "brute"):
        search = _Search(H, budget, find_one=False)
        search.run()
        return CountReport(search.count, METHOD_BRUTE, time.perf_counter() - start, search.nodes)
    if method in (METHOD_IE, "ie"):
        value, nodes = _count_ie(H, budget)
        return CountReport(value, METHOD_IE, time.perf_counter() - start, nodes)
    raise ValueError(f"unknown method {method!r}")


def _count_ie(H: ColoredHypergraph, budget: int) -> tuple[int, int]:
    """Inclusion-exclusion over color subsets, permanents via subset DP.

    A perfect matching is rainbow iff its color set is all of [1..n] (we need
    kappa == n, so n edges with distinct colors use every color).  For a color
    subset D let A_D be the bipartite adjacency keeping only edges colored
    inside D; then summing (-1)^(n-|D|) perm(A_D) counts exactly the perfect
    matchings whose color set is all of [1..n].
    """
    if H.mode != PARTITE or H.k != 2:
        raise ValueError("inclusion-exclusion route requires a bipartite instance")
    if H.kappa != H.n:
        raise ValueError("inclusion-exclusion route requires kappa == n")
    if H.absent:
        raise ValueError("inclusion-exclusion route requires all vertices active")
    n = H.n
    work = (4**n) * max(n, 1)
    if work > budget:
        raise BudgetExceededError(
            f"inclusion-exclusion needs ~4^{n}*{n} = {work} steps, over budget {budget}",
            work,
        )

    # row_color[i][c]: bitmask of columns j such that (i+1, j+1) has color c+1.
    row_color = [[0] * n for _ in range(n)]
    for e in H.edges:
        i, j = e.verts
        row_color[i - 1][e.color - 1] |= 1 << (j - 1)

    full = (1 << n) - 1
    total = 0
    for D in range(1 << n):
        rows = []
        for i in range(n):
            mask = 0
            rc = row_color[i]
            d = D
            while d:
                low = d & -d
                mask |= rc[low.bit_length() - 1]
                d ^= low
            rows.append(mask)
        # permanent of the 0/1 matrix given by rows, DP over column subsets
        f = [0] * (full + 1)
        f[0] = 1
        for mask in range(full + 1):
            fm = f[mask]
            if not fm:
                continue
            i = bin(mask).count("1")
            if i == n:
                continue
            avail = rows[i] & ~mask
            while avail:
                low = avail & -avail
                f[mask | low] += fm
                avail ^= low
        perm = f[full]
        sign = -1 if (n - bin(D).count("1")) % 2 else 1
        total += sign * perm
    return total, work


# -- moment formulas -----------------------------------------------------------


def expected_rainbow_count(n: int, k: int) -> float:
    """Expected number of rainbow perfect matchings of the complete partite
    instance with kappa = n and uniform colors: (n!)^k / n^n.

    Evaluated in log space so large n does not overflow.
    """
    if n < 1 or k < 2:
        raise ValueError("need n >= 1, k >= 2")
    return math.exp(k * math.lgamma(n + 1) - n * math.log(n))


def disjoint_completion_count(ell: int, k: int) -> int:
    """Number of perfect matchings on ell fixed vertices per part that avoid
    every edge of a given perfect matching on those vertices:

        sum_{i=0}^{ell} (-1)^i C(ell, i) ((ell-i)!)^(k-1)

    At k = 2 this is the derangement number D_ell.
    """
    if ell < 0 or k < 2:
        raise ValueError("need ell >= 0, k >= 2")
    return sum(
        (-1) ** i * math.comb(ell, i) * math.factorial(ell - i) ** (k - 1)
        for i in range(ell + 1)
    )


def second_moment_exact(n: int, k: int) -> float:
    """E[X^2] for the rainbow perfect matching count X of the complete partite
    instance with kappa = n, evaluated exactly in rationals:

        E[X^2] = E[X] * sum_{ell=0}^{n} n!/(ell! n^(n-ell)) * D_{n-ell}

    where D is disjoint_completion_count(., k).  The sum splits a second
    matching by how many edges it shares with the first; sharing all but
    (n-ell) edges leaves (n-ell) fresh edges that must dodge the first
    matching (D term) and must pick up exactly the unused colors
    ((n-ell)!/n^(n-ell) term).
    """
    if n < 1 or k < 2:
        raise ValueError("need n >= 1, k >= 2")
    ex = Fraction(math.factorial(n) ** k, n**n)
    total = Fraction(0)
    for ell in range(n + 1):
        total += Fraction(
            math.factorial(n) * disjoint_completion_count(n - ell, k),
            math.factorial(ell) * n ** (n - ell),
        )
    return float(ex * total)


# -- reduction to uncolored uniform hypergraphs ---------------------------------


@dataclass(frozen=True)
class UniformHypergraph:
    """An r-partite r-uniform hypergraph on r classes of n vertices, no colors.

    Edges are r-tuples (one index per class).  Produced by reduce_to_uniform,
    where class r holds the original colors.
    """

    n: int
    r: int
    edges: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.n < 1 or self.r < 2:
            raise ValueError("need n >= 1, r >= 2")
        seen = set()
        edges = tuple(sorted(tuple(e) for e in self.edges))
        for e in edges:
            if len(e) != self.r or not all(1 <= v <= self.n for v in e):
                raise ValueError(f"bad edge {e}")
            if e in seen:
                raise ValueError(f"duplicate edge {e}")
            seen.add(e)
        object.__setattr__(self, "edges", edges)


def reduce_to_uniform(H: ColoredHypergraph) -> UniformHypergraph:
    """Append each edge's color as a (k+1)-st vertex class.

    Rainbow perfect matchings of H then correspond bijectively to perfect
    matchings of the result: a perfect matching must cover all n color
    vertices, which is exactly color-distinctness when kappa == n.  That is
    also why kappa != n (or a restricted instance) is rejected: "perfect"
    stops encoding "rainbow" when the counts drift apart.
    """
    if H.mode != PARTITE:
        raise ValueError("reduction applies to partite instances")
    if H.kappa != H.n:
        raise ValueError("reduction requires kappa == n")
    if H.absent:
        raise ValueError("reduction requires all vertices active")
    return UniformHypergraph(
        H.n, H.k + 1, tuple(e.verts + (e.color,) for e in H.edges)
    )


def count_uniform_pm(U: UniformHypergraph, budget: int = DEFAULT_NODE_BUDGET) -> int:
    """Perfect matchings of an uncolored uniform hypergraph, by a deliberately
    plain enumerator (kept independent of the main kernel so the two can
    cross-check the colored-to-uniform reduction)."""
    by_first: dict[int, list[tuple[int, ...]]] = {}
    for e in U.edges:
        by_first.setdefault(e[0], []).append(e)
    n, r = U.n, U.r
    nodes = 0

    def rec(i: int, used: frozenset) -> int:
        nonlocal nodes
        nodes += 1
        if nodes > budget:
            raise BudgetExceededError(f"node budget {budget} exceeded", nodes)
        if i > n:
            return 1
        total = 0
        for e in by_first.get(i, ()):
            pairs = [(cls, v) for cls, v in enumerate(e, start=1)]
            if any(p in used for p in pairs[1:]):
                continue
            total += rec(i + 1, used | frozenset(pairs))
        return total

    return rec(1, frozenset())


# -- latin transversals ----------------------------------------------------------


def latin_transversal(matrix: Sequence[Sequence[int]], budget: int = DEFAULT_NODE_BUDGET):
    """A transversal of an n x n symbol matrix: n cells, one per row and column,
    with pairwise distinct symbols.  Returns 1-based (row, col) pairs sorted by
    row, or None when no transversal exists.

    Entry 0 means "cell unavailable".  Symbols must lie in [0..n].  Note that
    n cells with pairwise distinct symbols from an n-symbol alphabet use every
    symbol, so distinctness and full symbol coverage coincide here; the solver
    checks distinctness.
    """
    n = len(matrix)
    if n < 1:
        raise ValueError("matrix must be nonempty")
    edges = []
    for i, row in enumerate(matrix, start=1):
        if len(row) != n:
            raise ValueError("matrix must be square")
        for j, sym in enumerate(row, start=1):
            sym = int(sym)
            if not 0 <= sym <= n:
                raise ValueError(f"symbol {sym} out of range 0..{n}")
            if sym:
                edges.append(ColoredEdge((i, j), sym))
    H = ColoredHypergraph(PARTITE, n, 2, n, tuple(edges))
    M = find_rainbow_pm(H, budget=budget)
    if M is None:
        return None
    return sorted((e.verts[0], e.verts[1]) for e in M.edges)
