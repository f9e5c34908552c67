"""Edge-deletion process instrumentation.

Start from a complete colored partite instance, delete edges one at a time in
a given order, and after each deletion record the exact rainbow perfect
matching count, the relative loss it suffered, and a set of regularity flags
on the weight landscape.  Everything ratio-shaped is kept in Fraction so the
telescoping identity

    phi_t = phi_0 * prod_{i=1..t} (1 - xi_i)

holds exactly, not approximately.

The weight of a vertex tuple v against a color c is the number of rainbow
perfect matchings of the instance with v's vertices removed and color class c
removed.  For an edge e, the weight against its own color counts exactly the
rainbow perfect matchings through e, which is what links weights to counts:
summing that weight over all remaining edges counts each matching n times.

Flags per step (wire names B, R, C in the trace CSV):

* weight ratio: max edge weight over average edge weight stays below L,
* degree regularity: every vertex degree and color degree sits within
  relative eps1 of n^(k-1) * p where p is the surviving edge fraction,
* median cap: localized weight maxima stay below the larger of a fixed
  fraction of the current count and twice a one-sided majority median.

The dyadic interval machinery at the bottom is independent of the process: it
locates, for any positive weight vector with near-maximal entropy, a short
dyadic interval carrying most of the mass on a large support.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Iterable, Mapping, Sequence

from .count import BudgetExceededError, DEFAULT_NODE_BUDGET, count_rainbow_pm
from .model import (
    PARTITE,
    ColoredEdge,
    ColoredHypergraph,
    PartiteVertex,
    degree_profile,
    restrict,
)

__all__ = [
    "EventParams",
    "LemmaPreconditionError",
    "rainbow_weight",
    "edge_weights",
    "WeightProfile",
    "weight_profile",
    "majority_median",
    "weight_ratio_bounded",
    "degrees_regular",
    "weight_median_capped",
    "DeletionStep",
    "DeletionTrace",
    "run_deletion_process",
    "cumulative_loss_rate",
    "entropy",
    "dyadic_ratio_bound",
    "dyadic_support_fraction",
    "dyadic_interval_cover",
    "chernoff_bounds",
]


class LemmaPreconditionError(ValueError):
    """The entropy premise of the dyadic cover does not hold."""


@dataclass(frozen=True)
class EventParams:
    """Thresholds for the per-step flags.

    L        cap on max/avg edge weight (flag B)
    eps1     relative degree tolerance (flag R)
    K        the abundance knob the other two are usually derived from:
             L = sqrt(K), eps1 = K^(-1/3)
    """

    L: float
    eps1: float
    K: float

    def __post_init__(self):
        if not self.K > 0:
            raise ValueError("K must be positive")
        if not self.L > 1:
            raise ValueError("L must exceed 1")
        if not 0 < self.eps1 < 1:
            raise ValueError("eps1 must lie in (0, 1)")

    @classmethod
    def from_abundance(cls, K: float) -> "EventParams":
        return cls(L=math.sqrt(K), eps1=K ** (-1.0 / 3.0), K=K)


DEFAULT_EVENT_PARAMS = EventParams.from_abundance(100.0)


# -- weights ------------------------------------------------------------------


def _check_partite(H: ColoredHypergraph) -> None:
    if H.mode != PARTITE:
        raise ValueError("this operation is defined for partite instances")


def rainbow_weight(
    H: ColoredHypergraph,
    verts: Sequence[int],
    color: int,
    budget: int = DEFAULT_NODE_BUDGET,
) -> int:
    """Number of rainbow perfect matchings of H minus verts' vertices that
    avoid the given color class entirely.

    verts is a full per-part index tuple (the vertex set of a potential edge;
    the edge itself need not be present).  All named vertices must be active.
    """
    _check_partite(H)
    if len(verts) != H.k:
        raise ValueError(f"verts must name one vertex per part, got {verts}")
    removed = [PartiteVertex(p, i) for p, i in enumerate(verts, start=1)]
    sub = restrict(H, removed_vertices=removed, removed_colors=(color,))
    return count_rainbow_pm(sub, budget=budget).value


def edge_weights(
    H: ColoredHypergraph, budget: int = DEFAULT_NODE_BUDGET
) -> dict[ColoredEdge, int]:
    """w(e) = rainbow_weight(H, e.verts, e.color) for every edge: the number
    of rainbow perfect matchings through e."""
    return {e: rainbow_weight(H, e.verts, e.color, budget=budget) for e in H.edges}


@dataclass(frozen=True)
class WeightProfile:
    """The full weight table of an instance plus its localized maxima.

    table   (verts, color) -> weight, over all active tuples and all colors
    psi_v   ((part-ommitted partial tuple as ((part, idx), ...)), color) ->
            max weight over completions of the missing part
    psi_c   verts -> max weight over colors
    psi0    global maximum of the table
    """

    table: Mapping[tuple[tuple[int, ...], int], int]
    psi_v: Mapping[tuple[tuple[tuple[int, int], ...], int], int]
    psi_c: Mapping[tuple[int, ...], int]
    psi0: int


def weight_profile(
    H: ColoredHypergraph, budget: int = DEFAULT_NODE_BUDGET
) -> WeightProfile:
    """Compute the whole weight table (active tuples x colors).

    Cost is one exact count per table entry; meant for small traced instances.
    """
    _check_partite(H)
    parts = [H.part_active(p) for p in range(1, H.k + 1)]
    table: dict[tuple[tuple[int, ...], int], int] = {}
    for verts in product(*parts):
        for c in range(1, H.kappa + 1):
            table[(verts, c)] = rainbow_weight(H, verts, c, budget=budget)

    psi_v: dict[tuple[tuple[tuple[int, int], ...], int], int] = {}
    for missing in range(1, H.k + 1):
        other_parts = [p for p in range(1, H.k + 1) if p != missing]
        for partial in product(*(parts[p - 1] for p in other_parts)):
            key_verts = tuple(zip(other_parts, partial))
            for c in range(1, H.kappa + 1):
                best = 0
                for w in parts[missing - 1]:
                    full = list(partial)
                    full.insert(missing - 1, w)
                    best = max(best, table[(tuple(full), c)])
                psi_v[(key_verts, c)] = best

    psi_c = {}
    for verts in product(*parts):
        psi_c[verts] = max(table[(verts, c)] for c in range(1, H.kappa + 1))

    psi0 = max(table.values()) if table else 0
    return WeightProfile(table, psi_v, psi_c, psi0)


# -- median and flags -----------------------------------------------------------


def majority_median(values: Iterable) -> int:
    """The largest x in the multiset such that at least half the elements are
    strictly larger than x; the minimum when no element qualifies (e.g. all
    values equal).  Always a member of the multiset."""
    vals = sorted(values)
    if not vals:
        raise ValueError("median of an empty multiset")
    half = Fraction(len(vals), 2)
    # Walk distinct values from the top; the strictly-larger count only grows
    # as the candidate shrinks, so the first qualifying hit is the largest.
    pos = len(vals) - 1
    while pos >= 0:
        x = vals[pos]
        if len(vals) - 1 - pos >= half:
            return x
        while pos >= 0 and vals[pos] == x:
            pos -= 1
    return vals[0]


def _ratio_bounded(weights: Sequence[int], L: float) -> bool:
    if not weights:
        return True
    total = sum(weights)
    if total == 0:
        # All weights zero: max/avg is 0/0, read as balanced.
        return True
    # max/avg <= L  <=>  max * |E| <= L * total, in exact arithmetic.
    return Fraction(max(weights)) * len(weights) <= Fraction(L) * total


def weight_ratio_bounded(
    H: ColoredHypergraph,
    params: EventParams = DEFAULT_EVENT_PARAMS,
    budget: int = DEFAULT_NODE_BUDGET,
    weights: Mapping[ColoredEdge, int] | None = None,
) -> bool:
    """Flag B: max edge weight over average edge weight is at most params.L.

    Vacuously true with no edges or an all-zero weight landscape.  Pass
    `weights` to reuse a precomputed edge_weights map.
    """
    _check_partite(H)
    if weights is None:
        weights = edge_weights(H, budget=budget)
    return _ratio_bounded(list(weights.values()), params.L)


def degrees_regular(
    H: ColoredHypergraph,
    p: Fraction | float,
    params: EventParams = DEFAULT_EVENT_PARAMS,
) -> bool:
    """Flag R: every vertex degree and every color degree lies within relative
    eps1 of the expectation n^(k-1) * p.  Exact rational comparison."""
    _check_partite(H)
    p = Fraction(p)
    expect = Fraction(H.n ** (H.k - 1)) * p
    tol = Fraction(params.eps1) * expect
    deg, cdeg = degree_profile(H)
    for d in list(deg.values()) + list(cdeg.values()):
        if abs(Fraction(d) - expect) > tol:
            return False
    return True


def weight_median_capped(
    H: ColoredHypergraph,
    phi: int | None = None,
    params: EventParams = DEFAULT_EVENT_PARAMS,
    budget: int = DEFAULT_NODE_BUDGET,
    profile: WeightProfile | None = None,
) -> bool:
    """Flag C: localized weight maxima are capped by the larger of
    phi / (2^k * n^k) and twice the majority median.

    Two clause families: for each partial tuple missing one part and each
    color, the max over completions versus the median over completions; and
    for each full tuple, the max over colors versus the median over colors.
    The params argument is accepted for signature uniformity with the other
    flags; the cap does not depend on it.
    """
    _check_partite(H)
    del params
    if profile is None:
        profile = weight_profile(H, budget=budget)
    if phi is None:
        phi = count_rainbow_pm(H, budget=budget).value
    cap_fraction = Fraction(phi, (2**H.k) * (H.n**H.k))

    parts = [H.part_active(p) for p in range(1, H.k + 1)]
    for missing in range(1, H.k + 1):
        other_parts = [p for p in range(1, H.k + 1) if p != missing]
        for partial in product(*(parts[p - 1] for p in other_parts)):
            for c in range(1, H.kappa + 1):
                vals = []
                for w in parts[missing - 1]:
                    full = list(partial)
                    full.insert(missing - 1, w)
                    vals.append(profile.table[(tuple(full), c)])
                if not vals:
                    continue
                if max(vals) > max(cap_fraction, 2 * majority_median(vals)):
                    return False
    for verts in product(*parts):
        vals = [profile.table[(verts, c)] for c in range(1, H.kappa + 1)]
        if max(vals) > max(cap_fraction, 2 * majority_median(vals)):
            return False
    return True


# -- the deletion process ---------------------------------------------------------


@dataclass(frozen=True)
class DeletionStep:
    """State after the i-th deletion (index 0 is the initial state).

    xi and gamma are None at index 0 (no deletion happened yet).  When the
    count has already died (previous phi = 0), xi is recorded as Fraction(0);
    the telescoping product is 0 from the death step onward either way.
    w_avg and w_med are None once no edges remain.
    """

    index: int
    removed: ColoredEdge | None
    phi: int
    xi: Fraction | None
    gamma: Fraction | None
    p: Fraction
    w_max: int
    w_avg: Fraction | None
    w_med: int | None
    balanced: bool
    regular: bool
    median_capped: bool


@dataclass(frozen=True)
class DeletionTrace:
    n: int
    k: int
    kappa: int
    params: EventParams
    steps: tuple[DeletionStep, ...]
    truncated: bool

    @property
    def phi0(self) -> int:
        return self.steps[0].phi


def run_deletion_process(
    H0: ColoredHypergraph,
    ordering: Sequence[ColoredEdge],
    t_max: int | None = None,
    params: EventParams = DEFAULT_EVENT_PARAMS,
    budget: int = DEFAULT_NODE_BUDGET,
) -> DeletionTrace:
    """Delete ordering[0..t_max-1] one at a time from a complete colored
    instance and record a DeletionStep after every deletion (plus step 0).

    If some per-step computation exceeds the node budget the trace returned
    so far is marked truncated instead of raising; a partial trace with an
    explicit marker beats losing the prefix.
    """
    _check_partite(H0)
    N = H0.n**H0.k
    if len(H0.edges) != N or H0.absent:
        raise ValueError("the process starts from a complete colored instance")
    if sorted(ordering) != list(H0.edges):
        raise ValueError("ordering must be a permutation of the instance's edges")
    if t_max is None:
        t_max = len(ordering)
    if not 0 <= t_max <= len(ordering):
        raise ValueError(f"t_max must lie in 0..{len(ordering)}")

    steps: list[DeletionStep] = []
    truncated = False
    H = H0
    prev_phi: int | None = None
    for i in range(t_max + 1):
        removed = None
        if i > 0:
            removed = ordering[i - 1]
            H = restrict(H, removed_edges=(removed,))
        try:
            profile = weight_profile(H, budget=budget)
            phi = count_rainbow_pm(H, budget=budget).value
            p_i = Fraction(N - i, N)
            ws = [profile.table[(e.verts, e.color)] for e in H.edges]
            w_max = max(ws, default=0)
            w_avg = Fraction(sum(ws), len(ws)) if ws else None
            w_med = majority_median(ws) if ws else None
            balanced = _ratio_bounded(ws, params.L)
            regular = degrees_regular(H, p_i, params)
            capped = weight_median_capped(H, phi=phi, profile=profile, budget=budget)
        except BudgetExceededError:
            truncated = True
            break
        if i == 0:
            xi = gamma = None
        else:
            gamma = Fraction(H0.n, N - i + 1)
            xi = Fraction(0) if prev_phi == 0 else 1 - Fraction(phi, prev_phi)
        steps.append(
            DeletionStep(
                index=i,
                removed=removed,
                phi=phi,
                xi=xi,
                gamma=gamma,
                p=p_i,
                w_max=w_max,
                w_avg=w_avg,
                w_med=w_med,
                balanced=balanced,
                regular=regular,
                median_capped=capped,
            )
        )
        prev_phi = phi
    return DeletionTrace(H0.n, H0.k, H0.kappa, params, tuple(steps), truncated)


def cumulative_loss_rate(n: int, k: int, t: int) -> tuple[float, float]:
    """(sum_{i=1..t} n/(N-i+1), n*log(N/(N-t))) with N = n^k.

    The closed form under-approaches the exact sum from below with gap at most
    2n/(N-t): each harmonic term n/(N-i+1) lies between the integral slices of
    n/x on [N-i+1, N-i+2] and [N-i, N-i+1].
    """
    if n < 1 or k < 2:
        raise ValueError("need n >= 1, k >= 2")
    N = n**k
    if not 0 <= t < N:
        raise ValueError(f"t must lie in 0..{N - 1}")
    exact = n * math.fsum(1.0 / (N - i + 1) for i in range(1, t + 1))
    closed = n * math.log(N / (N - t))
    return exact, closed


# -- entropy and the dyadic interval cover ------------------------------------------


def entropy(weights: Iterable[float]) -> float:
    """Shannon entropy (nats) of the distribution proportional to weights.

    Zero weights contribute nothing; negative weights and all-zero vectors
    are errors.
    """
    ws = [float(w) for w in weights]
    if any(w < 0 for w in ws):
        raise ValueError("weights must be nonnegative")
    total = math.fsum(ws)
    if total <= 0:
        raise ValueError("weights must not all be zero")
    acc = 0.0
    for w in ws:
        if w > 0:
            p = w / total
            acc -= p * math.log(p)
    return acc


def dyadic_ratio_bound(defect: float) -> float:
    """rho: the max allowed b/a for the dyadic cover at entropy defect M."""
    return 2.0 ** (4.0 * (defect + math.log(3.0)))


def dyadic_support_fraction(defect: float) -> float:
    """sigma: the min fraction of indices the cover must contain."""
    return 2.0 ** (-2.0 * defect - 2.0)


def _dyadic_level(w: float) -> int:
    # level L such that 2^L <= w < 2^(L+1)
    _, e = math.frexp(w)
    return e - 1


def dyadic_interval_cover(
    weights: Sequence[float], defect: float
) -> tuple[float, float, list[int]]:
    """Find [a, b] with b <= rho*a whose preimage J = w^-1[a, b] satisfies
    |J| >= sigma*|S| and w(J) > 0.7*w(S), assuming the entropy premise
    H(w) > log|S| - defect.

    Weights must be strictly positive.  Scans contiguous runs of occupied
    dyadic levels, heaviest top level first, preferring the lowest qualifying
    bottom level (so a is as small as the run allows); a and b are actual
    weight values, hence members of the run.  Raises LemmaPreconditionError
    when the entropy premise fails, RuntimeError if (against the lemma) no
    run qualifies.
    """
    ws = [float(w) for w in weights]
    if not ws:
        raise ValueError("weights must be nonempty")
    if any(w <= 0 for w in ws):
        raise ValueError("weights must be strictly positive")
    size = len(ws)
    h = entropy(ws)
    if not h > math.log(size) - defect:
        raise LemmaPreconditionError(
            f"entropy {h:.6f} does not exceed log({size}) - {defect} = "
            f"{math.log(size) - defect:.6f}"
        )
    rho = dyadic_ratio_bound(defect)
    sigma = dyadic_support_fraction(defect)
    total = math.fsum(ws)

    by_level: dict[int, list[int]] = {}
    for idx, w in enumerate(ws):
        by_level.setdefault(_dyadic_level(w), []).append(idx)
    occupied = sorted(by_level, reverse=True)

    for ti, top in enumerate(occupied):
        # Bottom candidates from the lowest occupied level upward: lower a
        # first, per the tie-break.
        for bottom in reversed(occupied[ti:]):
            idxs = [
                i
                for lev in occupied[ti:]
                if bottom <= lev <= top
                for i in by_level[lev]
            ]
            vals = [ws[i] for i in idxs]
            a, b = min(vals), max(vals)
            if b > rho * a:
                continue
            if len(idxs) < sigma * size:
                continue
            if math.fsum(vals) <= 0.7 * total:
                continue
            return a, b, sorted(idxs)
    raise RuntimeError("no qualifying dyadic run; the entropy premise should forbid this")


# -- tail bounds --------------------------------------------------------------------


def chernoff_bounds(
    mu: float, eps: float | None = None, alpha: float | None = None
) -> tuple[float | None, float | None]:
    """Multiplicative tail bounds for a mean-mu sum of independent indicators.

    Returns (deviation, tail):
      deviation = 2*exp(-eps^2*mu/3)  for P(|X - mu| > eps*mu), 0 <= eps <= 1
      tail      = (e/alpha)^(alpha*mu) for P(X >= alpha*mu), alpha > e

    Either slot is None when its parameter is not supplied.
    """
    if mu < 0:
        raise ValueError("mu must be nonnegative")
    deviation = tail = None
    if eps is not None:
        if not 0 <= eps <= 1:
            raise ValueError("eps must lie in [0, 1]")
        deviation = 2.0 * math.exp(-(eps**2) * mu / 3.0)
    if alpha is not None:
        if not alpha > math.e:
            raise ValueError("alpha must exceed e")
        tail = (math.e / alpha) ** (alpha * mu)
    return deviation, tail
