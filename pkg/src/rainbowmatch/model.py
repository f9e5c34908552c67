"""Edge-colored instances and their samplers.

Two instance flavors share one type:

* partite mode: k vertex classes of size n each, edges are k-tuples picking one
  vertex per class, colors drawn from [1..kappa].  Vertex tuples are unique, so
  the complete instance has n^k edges.
* graph mode: a simple graph on [1..n] with colored edges (k is fixed to 2 and
  a "tuple" is an unordered pair u < v).

Instances are immutable and canonical: edges are stored sorted by vertex tuple,
so two instances with equal content compare equal and serialize identically.
Deleted vertices are tracked in `absent` rather than by renumbering, which is
what lets restriction operators compose without rewriting labels.

All sampling takes an explicit `random.Random`; see `RandomnessSpec` for the
seed/substream convention used by the experiment drivers.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass
from itertools import combinations, product
from typing import Iterable, NamedTuple

__all__ = [
    "PARTITE",
    "GRAPH",
    "CapacityError",
    "PartiteVertex",
    "ColoredEdge",
    "Matching",
    "ColoredHypergraph",
    "RandomnessSpec",
    "complete_colored",
    "sample_partite_m",
    "sample_partite_p",
    "sample_colored_graph",
    "restrict",
    "degree_profile",
    "random_edge_ordering",
    "instance_to_dict",
    "instance_from_dict",
    "dumps_instance",
    "loads_instance",
    "load_instance",
    "save_instance",
]

PARTITE = "partite"
GRAPH = "graph"

# Complete partite instances materialize all n^k edges; refuse to build ones
# that would not fit in memory anyway.
DEFAULT_EDGE_CAPACITY = 2_000_000


class CapacityError(ValueError):
    """Raised when an operation would materialize too many edges."""


class PartiteVertex(NamedTuple):
    part: int
    index: int


class ColoredEdge(NamedTuple):
    """A colored edge.

    `verts` is the per-part index tuple in partite mode (position = part), or
    the sorted endpoint pair in graph mode.
    """

    verts: tuple[int, ...]
    color: int


@dataclass(frozen=True)
class Matching:
    """A set of pairwise vertex-disjoint edges (disjointness is the caller's
    invariant; see `count.is_matching` for the checker)."""

    edges: tuple[ColoredEdge, ...]

    def __len__(self) -> int:
        return len(self.edges)

    def colors(self) -> tuple[int, ...]:
        return tuple(e.color for e in self.edges)


def _derive_seed(master_seed: int, stream_index: int | str) -> int:
    # Hash-derived substreams: independent of PYTHONHASHSEED, stable across
    # platforms, and two distinct (seed, stream) pairs never collide in
    # practice.  Same trick as the usual "seed spawning" recipes.
    tag = f"rainbowmatch/{master_seed}/{stream_index}".encode()
    return int.from_bytes(hashlib.sha256(tag).digest()[:16], "big")


@dataclass(frozen=True)
class RandomnessSpec:
    """Seed plus substream index.

    Experiment drivers give every trial its own stream index so that results
    do not depend on scheduling: trial j always consumes stream j, whether it
    runs first, last, or in another process.
    """

    master_seed: int
    stream_index: int | str = 0

    def rng(self) -> random.Random:
        return random.Random(_derive_seed(self.master_seed, self.stream_index))

    def substream(self, stream_index: int | str) -> "RandomnessSpec":
        return RandomnessSpec(self.master_seed, stream_index)


@dataclass(frozen=True)
class ColoredHypergraph:
    """An immutable edge-colored instance (see module docstring for modes)."""

    mode: str
    n: int
    k: int
    kappa: int
    edges: tuple[ColoredEdge, ...] = ()
    absent: frozenset = frozenset()

    def __post_init__(self):
        if self.mode not in (PARTITE, GRAPH):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.kappa < 1:
            raise ValueError("kappa must be >= 1")
        if self.mode == PARTITE:
            if self.k < 2:
                raise ValueError("partite mode needs k >= 2")
        elif self.k != 2:
            raise ValueError("graph mode fixes k = 2")

        absent = frozenset(self._coerce_vertex(v) for v in self.absent)
        object.__setattr__(self, "absent", absent)

        edges = tuple(sorted(ColoredEdge(tuple(e[0]), int(e[1])) for e in self.edges))
        seen: set[tuple[int, ...]] = set()
        for e in edges:
            self._check_edge(e, absent)
            if e.verts in seen:
                raise ValueError(f"duplicate vertex tuple {e.verts}")
            seen.add(e.verts)
        object.__setattr__(self, "edges", edges)

    def _coerce_vertex(self, v):
        if self.mode == PARTITE:
            if isinstance(v, PartiteVertex):
                pv = v
            else:
                part, index = v
                pv = PartiteVertex(int(part), int(index))
            if not (1 <= pv.part <= self.k and 1 <= pv.index <= self.n):
                raise ValueError(f"vertex {pv} out of range")
            return pv
        u = int(v)
        if not 1 <= u <= self.n:
            raise ValueError(f"vertex {u} out of range")
        return u

    def _check_edge(self, e: ColoredEdge, absent: frozenset) -> None:
        if not 1 <= e.color <= self.kappa:
            raise ValueError(f"color {e.color} out of range 1..{self.kappa}")
        if self.mode == PARTITE:
            if len(e.verts) != self.k:
                raise ValueError(f"edge {e} must pick one vertex per part")
            for part, idx in enumerate(e.verts, start=1):
                if not 1 <= idx <= self.n:
                    raise ValueError(f"edge {e} vertex out of range")
                if PartiteVertex(part, idx) in absent:
                    raise ValueError(f"edge {e} touches absent vertex")
        else:
            if len(e.verts) != 2 or e.verts[0] >= e.verts[1]:
                raise ValueError(f"graph edge {e} must be a sorted pair u < v")
            for u in e.verts:
                if not 1 <= u <= self.n:
                    raise ValueError(f"edge {e} vertex out of range")
                if u in absent:
                    raise ValueError(f"edge {e} touches absent vertex")

    # -- vertex helpers ----------------------------------------------------

    def active_vertices(self) -> list:
        """Active (non-absent) vertices, in canonical order."""
        if self.mode == PARTITE:
            return [
                PartiteVertex(p, i)
                for p in range(1, self.k + 1)
                for i in range(1, self.n + 1)
                if PartiteVertex(p, i) not in self.absent
            ]
        return [v for v in range(1, self.n + 1) if v not in self.absent]

    def part_active(self, part: int) -> list[int]:
        if self.mode != PARTITE:
            raise ValueError("part_active is a partite-mode operation")
        return [
            i
            for i in range(1, self.n + 1)
            if PartiteVertex(part, i) not in self.absent
        ]

    def active_counts(self) -> tuple[int, ...]:
        if self.mode == PARTITE:
            return tuple(len(self.part_active(p)) for p in range(1, self.k + 1))
        return (len(self.active_vertices()),)

    def edge_by_verts(self, verts: tuple[int, ...]) -> ColoredEdge | None:
        for e in self.edges:
            if e.verts == verts:
                return e
        return None


# -- samplers ---------------------------------------------------------------


def _decode_partite_tuple(index: int, n: int, k: int) -> tuple[int, ...]:
    # Part-major base-n digits; ascending index order equals lexicographic
    # order on the vertex tuples.
    digits = []
    for _ in range(k):
        index, d = divmod(index, n)
        digits.append(d + 1)
    return tuple(reversed(digits))


def _check_partite_args(n: int, k: int, kappa: int) -> None:
    if n < 1 or k < 2 or kappa < 1:
        raise ValueError("need n >= 1, k >= 2, kappa >= 1")


def complete_colored(
    n: int,
    k: int,
    kappa: int,
    rnd: random.Random,
    max_edges: int = DEFAULT_EDGE_CAPACITY,
) -> ColoredHypergraph:
    """The complete partite instance: every vertex tuple present once, colors
    i.i.d. uniform on [1..kappa]."""
    _check_partite_args(n, k, kappa)
    total = n**k
    if total > max_edges:
        raise CapacityError(f"{n}^{k} = {total} edges exceeds capacity {max_edges}")
    edges = [
        ColoredEdge(verts, rnd.randint(1, kappa))
        for verts in product(range(1, n + 1), repeat=k)
    ]
    return ColoredHypergraph(PARTITE, n, k, kappa, tuple(edges))


def sample_partite_m(
    n: int, k: int, kappa: int, m: int, rnd: random.Random
) -> ColoredHypergraph:
    """m distinct vertex tuples uniformly at random, colors i.i.d. uniform.

    The gnm-style model: the edge support is a uniform m-subset of the n^k
    possible tuples, independent of the colors.
    """
    _check_partite_args(n, k, kappa)
    total = n**k
    if not 0 <= m <= total:
        raise ValueError(f"m must lie in 0..{total}")
    picked = sorted(rnd.sample(range(total), m))
    edges = [
        ColoredEdge(_decode_partite_tuple(t, n, k), rnd.randint(1, kappa))
        for t in picked
    ]
    return ColoredHypergraph(PARTITE, n, k, kappa, tuple(edges))


def sample_partite_p(
    n: int,
    k: int,
    kappa: int,
    p: float,
    rnd: random.Random,
    max_edges: int = DEFAULT_EDGE_CAPACITY,
) -> ColoredHypergraph:
    """Each vertex tuple kept independently with probability p (gnp-style),
    colors i.i.d. uniform on the kept edges."""
    _check_partite_args(n, k, kappa)
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    total = n**k
    if total > max_edges:
        raise CapacityError(f"{n}^{k} = {total} tuples exceeds capacity {max_edges}")
    edges = []
    for verts in product(range(1, n + 1), repeat=k):
        if rnd.random() < p:
            edges.append(ColoredEdge(verts, rnd.randint(1, kappa)))
    return ColoredHypergraph(PARTITE, n, k, kappa, tuple(edges))


def sample_colored_graph(
    n: int, m: int, kappa: int, rnd: random.Random
) -> ColoredHypergraph:
    """A uniform m-edge simple graph on [1..n] with i.i.d. uniform colors."""
    if n < 1 or kappa < 1:
        raise ValueError("need n >= 1, kappa >= 1")
    pairs = list(combinations(range(1, n + 1), 2))
    if not 0 <= m <= len(pairs):
        raise ValueError(f"m must lie in 0..{len(pairs)}")
    picked = sorted(rnd.sample(range(len(pairs)), m))
    edges = [ColoredEdge(pairs[t], rnd.randint(1, kappa)) for t in picked]
    return ColoredHypergraph(GRAPH, n, 2, kappa, tuple(edges))


# -- restriction and profiles ------------------------------------------------


def restrict(
    H: ColoredHypergraph,
    removed_edges: Iterable[ColoredEdge] = (),
    removed_vertices: Iterable = (),
    removed_colors: Iterable[int] = (),
) -> ColoredHypergraph:
    """Delete edges, vertices (with their incident edges), and color classes.

    Removed vertices are recorded in `absent`, never renumbered, so repeated
    restrictions compose.  Arguments must be drawn from H: foreign edges,
    already-absent vertices, and out-of-range colors are hard errors rather
    than silent no-ops.
    """
    edge_set = set(H.edges)
    removed_e = set()
    for e in removed_edges:
        e = ColoredEdge(tuple(e[0]), int(e[1]))
        if e not in edge_set:
            raise ValueError(f"{e} is not an edge of the instance")
        removed_e.add(e)

    removed_v = set()
    for v in removed_vertices:
        pv = H._coerce_vertex(v)
        if pv in H.absent:
            raise ValueError(f"vertex {pv} is already absent")
        removed_v.add(pv)

    removed_c = set()
    for c in removed_colors:
        c = int(c)
        if not 1 <= c <= H.kappa:
            raise ValueError(f"color {c} out of range 1..{H.kappa}")
        removed_c.add(c)

    absent = H.absent | removed_v

    def touches_removed(e: ColoredEdge) -> bool:
        if H.mode == PARTITE:
            return any(
                PartiteVertex(part, idx) in removed_v
                for part, idx in enumerate(e.verts, start=1)
            )
        return any(u in removed_v for u in e.verts)

    kept = tuple(
        e
        for e in H.edges
        if e not in removed_e and e.color not in removed_c and not touches_removed(e)
    )
    return ColoredHypergraph(H.mode, H.n, H.k, H.kappa, kept, absent)


def degree_profile(H: ColoredHypergraph) -> tuple[dict, dict[int, int]]:
    """(vertex degree map over active vertices, color degree map over 1..kappa).

    Zero-degree entries are included so that callers can check regularity
    without special-casing isolated vertices or unused colors.
    """
    deg = {v: 0 for v in H.active_vertices()}
    cdeg = {c: 0 for c in range(1, H.kappa + 1)}
    for e in H.edges:
        if H.mode == PARTITE:
            for part, idx in enumerate(e.verts, start=1):
                deg[PartiteVertex(part, idx)] += 1
        else:
            for u in e.verts:
                deg[u] += 1
        cdeg[e.color] += 1
    return deg, cdeg


def random_edge_ordering(
    H: ColoredHypergraph, rnd: random.Random
) -> tuple[ColoredEdge, ...]:
    """A uniform permutation of H's edges."""
    order = list(H.edges)
    rnd.shuffle(order)
    return tuple(order)


# -- JSON wire format ---------------------------------------------------------
#
# {"mode": "partite"|"graph", "n": int, "k": int, "colors": int,
#  "edges": [{"verts": [int, ...], "color": int}, ...]}
#
# plus an "absent" key (list of [part, index] or int) only when nonempty.
# Emission is canonical (edges sorted, fixed key order), so parse(emit(H)) == H
# and emit(parse(s)) == s whenever s is canonical.


def instance_to_dict(H: ColoredHypergraph) -> dict:
    out = {
        "mode": H.mode,
        "n": H.n,
        "k": H.k,
        "colors": H.kappa,
        "edges": [{"verts": list(e.verts), "color": e.color} for e in H.edges],
    }
    if H.absent:
        if H.mode == PARTITE:
            out["absent"] = sorted([v.part, v.index] for v in H.absent)
        else:
            out["absent"] = sorted(H.absent)
    return out


def instance_from_dict(data: dict) -> ColoredHypergraph:
    try:
        mode = data["mode"]
        n = int(data["n"])
        k = int(data["k"])
        kappa = int(data["colors"])
        raw_edges = data["edges"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed instance document: {exc}") from exc
    edges = []
    for item in raw_edges:
        try:
            edges.append(ColoredEdge(tuple(int(v) for v in item["verts"]), int(item["color"])))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed edge record {item!r}") from exc
    absent_raw = data.get("absent", ())
    if mode == PARTITE:
        absent = frozenset(PartiteVertex(int(p), int(i)) for p, i in absent_raw)
    else:
        absent = frozenset(int(v) for v in absent_raw)
    return ColoredHypergraph(mode, n, k, kappa, tuple(edges), absent)


def dumps_instance(H: ColoredHypergraph) -> str:
    return json.dumps(instance_to_dict(H), separators=(",", ":"))


def loads_instance(text: str) -> ColoredHypergraph:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"not valid JSON: {exc}") from exc
    return instance_from_dict(data)


def load_instance(path) -> ColoredHypergraph:
    with open(path, "r", encoding="utf-8") as fh:
        return loads_instance(fh.read())


def save_instance(H: ColoredHypergraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_instance(H))
        fh.write("\n")
