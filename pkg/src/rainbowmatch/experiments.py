"""Experiment drivers: threshold scans, mean-count calibration, deletion
traces, Hamilton pipelines, and SVG plotting.

Determinism contract: a given ExperimentConfig (including master_seed) yields
byte-identical CSV no matter how many workers run the trials.  Three rules
make that work: every trial owns a fixed substream index derived from its
(cell, trial) position; workers return rows that are merged by that key, not
by arrival order; and no wall-clock value is ever written to CSV (elapsed
fields live in the JSON reports only).

CSV schemas (fixed, also documented in the README):

threshold   n,k,kappa,m,trials,successes,p_hat,se,absent,budget
mean-count  n,k,kappa,trials,mean,expected_mean,mean_se,
            second_moment,expected_second_moment,second_moment_se,budget
trace steps [trial,]i,phi,xi,gamma,p_i,w_max,w_avg,w_med,B,R,C
            (the trial column appears only when trials > 1)
trace summary i,gamma,mean_xi,se_xi,trials_positive,
            sum_gamma_exact,sum_gamma_closed
hamilton    n,m,colors,mode,trials,success,edge_class_too_small,
            matching_not_found,matching_budget,hc_not_found,hc_budget,
            lift_failed,p_hat,se
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .count import (
    BudgetExceededError,
    DEFAULT_NODE_BUDGET,
    count_rainbow_pm,
    expected_rainbow_count,
    find_rainbow_pm,
    second_moment_exact,
)
from .hamilton import (
    DEFAULT_HC_BUDGET,
    STAGE_HC_BUDGET,
    STAGE_HC_NOT_FOUND,
    STAGE_SUCCESS,
    assemble_even,
    contract_color_delete,
    find_rainbow_hc,
    lift_cycle,
)
from .model import (
    RandomnessSpec,
    complete_colored,
    random_edge_ordering,
    sample_colored_graph,
    sample_partite_m,
)
from .process import (
    EventParams,
    cumulative_loss_rate,
    run_deletion_process,
)

__all__ = [
    "ExperimentConfig",
    "TrialRow",
    "ExperimentResult",
    "STAGE_LIFT_FAILED",
    "threshold_scan",
    "threshold_table",
    "threshold_csv",
    "mean_count_experiment",
    "mean_count_table",
    "mean_count_csv",
    "trace_experiment",
    "trace_steps_table",
    "trace_steps_csv",
    "trace_summary_table",
    "trace_summary_csv",
    "hamilton_experiment",
    "hamilton_table",
    "hamilton_csv",
    "hamilton_trials_json",
    "table_json",
    "isotonic_fit",
    "PlotSpec",
    "emit_plot",
]

STAGE_LIFT_FAILED = "lift-failed"


@dataclass(frozen=True)
class ExperimentConfig:
    """Parameters for one experiment run.  Unused fields are ignored by the
    runners that do not need them; each runner validates what it uses."""

    kind: str
    ns: tuple[int, ...]
    k: int = 2
    kappa: int | None = None  # None: kappa = n per cell
    ms: tuple[int, ...] = ()
    trials: int = 1
    master_seed: int = 0
    jobs: int = 1
    node_budget: int = DEFAULT_NODE_BUDGET
    hc_budget: int = DEFAULT_HC_BUDGET
    t_max: int | None = None
    retries: int = 0
    event_abundance: float = 100.0

    def __post_init__(self):
        if not self.ns:
            raise ValueError("parameter grid must be nonempty")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.node_budget <= 0 or self.hc_budget <= 0:
            raise ValueError("budgets must be positive")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")

    def kappa_for(self, n: int) -> int:
        return self.kappa if self.kappa is not None else n


@dataclass(frozen=True)
class TrialRow:
    cell: tuple
    trial: int
    outcome: str  # found | absent | budget
    value: object
    elapsed: float


@dataclass(frozen=True)
class ExperimentResult:
    kind: str
    config: ExperimentConfig
    rows: tuple[TrialRow, ...]

    def by_cell(self) -> dict[tuple, list[TrialRow]]:
        cells: dict[tuple, list[TrialRow]] = {}
        for row in self.rows:
            cells.setdefault(row.cell, []).append(row)
        return cells


def _fmt(x) -> str:
    """Deterministic CSV cell rendering; None becomes an empty cell."""
    if x is None:
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, Fraction):
        return repr(float(x))
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _csv_lines(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    out = [",".join(header)]
    for row in rows:
        out.append(",".join(_fmt(x) for x in row))
    return "\n".join(out) + "\n"


def table_json(kind: str, header: Sequence[str], rows: Iterable[Sequence]) -> str:
    """The same table a CSV emitter writes, as a JSON document."""
    records = []
    for row in rows:
        rec = {}
        for h, v in zip(header, row):
            if isinstance(v, Fraction):
                v = float(v)
            rec[h] = v
        records.append(rec)
    return json.dumps({"kind": kind, "rows": records}, indent=2) + "\n"


def _p_hat_se(successes: int, trials: int) -> tuple[float, float]:
    p = successes / trials
    return p, math.sqrt(p * (1.0 - p) / trials)


def _run_tasks(worker: Callable, tasks: list, jobs: int, raw_sink=None) -> list:
    """Run worker over tasks, returning results sorted by the (cell, trial)
    key that every worker emits first.  With jobs > 1, completion order is
    scheduler-dependent; the sort makes the output independent of it.  An
    optional raw sink receives one JSON line per completed trial, in
    completion order (a progress stream, not a deterministic artifact)."""
    results = []
    if jobs <= 1:
        for task in tasks:
            res = worker(task)
            results.append(res)
            if raw_sink is not None:
                raw_sink.write(json.dumps(res, default=str) + "\n")
                raw_sink.flush()
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(worker, task) for task in tasks]
            for fut in as_completed(futures):
                res = fut.result()
                results.append(res)
                if raw_sink is not None:
                    raw_sink.write(json.dumps(res, default=str) + "\n")
                    raw_sink.flush()
    results.sort(key=lambda r: r[0])
    return results


# -- threshold scan -------------------------------------------------------------


def _threshold_trial(task):
    key, n, k, kappa, m, seed, stream, budget = task
    rnd = RandomnessSpec(seed, stream).rng()
    H = sample_partite_m(n, k, kappa, m, rnd)
    t0 = time.perf_counter()
    try:
        M = find_rainbow_pm(H, budget=budget)
        outcome = "found" if M is not None else "absent"
    except BudgetExceededError:
        outcome = "budget"
    return key, outcome, None, time.perf_counter() - t0


def threshold_scan(config: ExperimentConfig, raw_sink=None) -> ExperimentResult:
    """For each (n, m) cell: `trials` samples of the m-edge model, solved
    exactly.  Budget exhaustion is its own outcome, never folded into absent."""
    if not config.ms:
        raise ValueError("threshold scan needs an m grid")
    cells = [(n, m) for n in config.ns for m in config.ms]
    for n, m in cells:
        if m > n**config.k:
            raise ValueError(f"cell (n={n}, m={m}) exceeds {n}^{config.k} edges")
    tasks = []
    for ci, (n, m) in enumerate(cells):
        for t in range(config.trials):
            stream = ci * config.trials + t
            tasks.append(
                (
                    (ci, t),
                    n,
                    config.k,
                    config.kappa_for(n),
                    m,
                    config.master_seed,
                    stream,
                    config.node_budget,
                )
            )
    results = _run_tasks(_threshold_trial, tasks, config.jobs, raw_sink)
    rows = tuple(
        TrialRow(cells[key[0]], key[1], outcome, value, elapsed)
        for key, outcome, value, elapsed in results
    )
    return ExperimentResult("threshold", config, rows)


def threshold_table(result: ExperimentResult) -> tuple[list[str], list[list]]:
    header = ["n", "k", "kappa", "m", "trials", "successes", "p_hat", "se", "absent", "budget"]
    lines = []
    config = result.config
    for cell, rows in result.by_cell().items():
        n, m = cell
        successes = sum(1 for r in rows if r.outcome == "found")
        absent = sum(1 for r in rows if r.outcome == "absent")
        budget = sum(1 for r in rows if r.outcome == "budget")
        p, se = _p_hat_se(successes, len(rows))
        lines.append(
            [n, config.k, config.kappa_for(n), m, len(rows), successes, p, se, absent, budget]
        )
    return header, lines


def threshold_csv(result: ExperimentResult) -> str:
    return _csv_lines(*threshold_table(result))


# -- mean count calibration -------------------------------------------------------


def _mean_count_trial(task):
    key, n, k, kappa, seed, stream, budget = task
    rnd = RandomnessSpec(seed, stream).rng()
    H = complete_colored(n, k, kappa, rnd)
    t0 = time.perf_counter()
    try:
        report = count_rainbow_pm(H, budget=budget)
        return key, "found", report.value, time.perf_counter() - t0
    except BudgetExceededError:
        return key, "budget", None, time.perf_counter() - t0


def mean_count_experiment(config: ExperimentConfig, raw_sink=None) -> ExperimentResult:
    """Exact-count `trials` random colorings of the complete instance per n,
    for comparison against the closed-form mean and second moment."""
    cells = list(config.ns)
    tasks = []
    for ci, n in enumerate(cells):
        for t in range(config.trials):
            stream = ci * config.trials + t
            tasks.append(
                ((ci, t), n, config.k, config.kappa_for(n), config.master_seed, stream, config.node_budget)
            )
    results = _run_tasks(_mean_count_trial, tasks, config.jobs, raw_sink)
    rows = tuple(
        TrialRow((cells[key[0]],), key[1], outcome, value, elapsed)
        for key, outcome, value, elapsed in results
    )
    return ExperimentResult("mean-count", config, rows)


def _moment_stats(values: Sequence[int], power: int) -> tuple[float, float]:
    """(sample mean of x^power, standard error of that mean)."""
    xs = [float(v) ** power for v in values]
    mean = math.fsum(xs) / len(xs)
    if len(xs) < 2:
        return mean, 0.0
    var = math.fsum((x - mean) ** 2 for x in xs) / (len(xs) - 1)
    return mean, math.sqrt(var / len(xs))


def mean_count_table(result: ExperimentResult) -> tuple[list[str], list[list]]:
    header = [
        "n", "k", "kappa", "trials",
        "mean", "expected_mean", "mean_se",
        "second_moment", "expected_second_moment", "second_moment_se",
        "budget",
    ]
    config = result.config
    lines = []
    for cell, rows in result.by_cell().items():
        (n,) = cell
        counted = [r.value for r in rows if r.outcome == "found"]
        budget = sum(1 for r in rows if r.outcome == "budget")
        if counted:
            mean, mean_se = _moment_stats(counted, 1)
            m2, m2_se = _moment_stats(counted, 2)
        else:
            mean = mean_se = m2 = m2_se = float("nan")
        lines.append(
            [
                n, config.k, config.kappa_for(n), len(rows),
                mean, expected_rainbow_count(n, config.k), mean_se,
                m2, second_moment_exact(n, config.k), m2_se,
                budget,
            ]
        )
    return header, lines


def mean_count_csv(result: ExperimentResult) -> str:
    return _csv_lines(*mean_count_table(result))


# -- deletion trace -----------------------------------------------------------------


def _trace_trial(task):
    key, n, k, kappa, t_max, abundance, seed, stream, budget = task
    rnd = RandomnessSpec(seed, stream).rng()
    H0 = complete_colored(n, k, kappa, rnd)
    ordering = random_edge_ordering(H0, rnd)
    t0 = time.perf_counter()
    try:
        trace = run_deletion_process(
            H0, ordering, t_max=t_max, params=EventParams.from_abundance(abundance), budget=budget
        )
    except BudgetExceededError:
        return key, "budget", None, time.perf_counter() - t0
    steps = tuple(
        (
            s.index,
            s.phi,
            s.xi,
            s.gamma,
            s.p,
            s.w_max,
            s.w_avg,
            s.w_med,
            s.balanced,
            s.regular,
            s.median_capped,
        )
        for s in trace.steps
    )
    outcome = "budget" if trace.truncated else "found"
    return key, outcome, steps, time.perf_counter() - t0


def trace_experiment(config: ExperimentConfig, raw_sink=None) -> ExperimentResult:
    """Fresh coloring and fresh uniform deletion order per trial; each trial's
    TrialRow.value is the full step tuple list for the CSV emitters."""
    if len(config.ns) != 1:
        raise ValueError("trace experiment runs one n at a time")
    n = config.ns[0]
    kappa = config.kappa_for(n)
    N = n**config.k
    t_max = config.t_max if config.t_max is not None else N
    if not 0 <= t_max <= N:
        raise ValueError(f"t_max must lie in 0..{N}")
    tasks = [
        (
            (0, t),
            n,
            config.k,
            kappa,
            t_max,
            config.event_abundance,
            config.master_seed,
            t,
            config.node_budget,
        )
        for t in range(config.trials)
    ]
    results = _run_tasks(_trace_trial, tasks, config.jobs, raw_sink)
    rows = tuple(
        TrialRow((n,), key[1], outcome, value, elapsed)
        for key, outcome, value, elapsed in results
    )
    return ExperimentResult("trace", config, rows)


TRACE_STEP_HEADER = ["i", "phi", "xi", "gamma", "p_i", "w_max", "w_avg", "w_med", "B", "R", "C"]


def trace_steps_table(result: ExperimentResult) -> tuple[list[str], list[list]]:
    multi = len(result.rows) > 1
    header = (["trial"] if multi else []) + TRACE_STEP_HEADER
    lines = []
    for row in result.rows:
        if row.value is None:
            continue
        for step in row.value:
            rec = list(step)
            lines.append(([row.trial] if multi else []) + rec)
    return header, lines


def trace_steps_csv(result: ExperimentResult) -> str:
    return _csv_lines(*trace_steps_table(result))


def trace_summary_table(result: ExperimentResult) -> tuple[list[str], list[list]]:
    """Per step i: gamma, the mean of xi over trials whose previous count was
    still positive (the regime where the step-rate identity applies), its SE,
    how many trials qualified, and the cumulative rate sum against its closed
    form."""
    config = result.config
    n = config.ns[0]
    N = n**config.k
    t_max = config.t_max if config.t_max is not None else N
    per_step: dict[int, list[float]] = {i: [] for i in range(1, t_max + 1)}
    for row in result.rows:
        if row.value is None:
            continue
        steps = row.value
        for i in range(1, len(steps)):
            prev_phi = steps[i - 1][1]
            if prev_phi > 0:
                per_step[steps[i][0]].append(float(steps[i][2]))
    header = ["i", "gamma", "mean_xi", "se_xi", "trials_positive", "sum_gamma_exact", "sum_gamma_closed"]
    lines = []
    for i in range(1, t_max + 1):
        xs = per_step[i]
        gamma = n / (N - i + 1)
        if xs:
            mean = math.fsum(xs) / len(xs)
            if len(xs) > 1:
                var = math.fsum((x - mean) ** 2 for x in xs) / (len(xs) - 1)
                se = math.sqrt(var / len(xs))
            else:
                se = 0.0
        else:
            mean = se = None
        if i < N:
            exact, closed = cumulative_loss_rate(n, config.k, i)
        else:
            # the log form diverges once every edge is gone
            exact = math.fsum(n / (N - j + 1) for j in range(1, N + 1))
            closed = None
        lines.append([i, gamma, mean, se, len(xs), exact, closed])
    return header, lines


def trace_summary_csv(result: ExperimentResult) -> str:
    return _csv_lines(*trace_summary_table(result))


# -- hamilton pipeline ----------------------------------------------------------------


_STAGE_RANK = {
    "edge-class-too-small": 0,
    "matching-budget": 1,
    "matching-not-found": 2,
    STAGE_HC_BUDGET: 3,
    STAGE_HC_NOT_FOUND: 4,
    STAGE_LIFT_FAILED: 5,
    STAGE_SUCCESS: 6,
}


def _hamilton_trial(task):
    key, n, m, kappa, retries, seed, stream, node_budget, hc_budget = task
    spec = RandomnessSpec(seed, stream)
    t0 = time.perf_counter()
    if n % 2 == 0:
        rnd = spec.rng()
        G = sample_colored_graph(n, m, kappa, rnd)
        plan, hc = assemble_even(G, rnd, matching_budget=node_budget, hc_budget=hc_budget)
        telemetry = {
            "stage_reached": plan.stage_reached,
            "sizes": list(plan.class_sizes),
            "matchings_found": sum(1 for M in plan.matchings if M is not None),
            "hc_found": hc is not None,
            "attempts": None,
        }
    else:
        # odd n: fresh sample per attempt; contract a random edge, solve the
        # even-order remainder, lift back
        best = STAGE_HC_NOT_FOUND
        hc_found = False
        attempts = 0
        for attempt in range(retries):
            attempts += 1
            # slash-separated stream tags cannot collide with the plain
            # integer streams used elsewhere
            rnd = spec.substream(f"{stream}/{attempt}").rng()
            G = sample_colored_graph(n, m, kappa, rnd)
            e = rnd.choice(G.edges)
            Gp, cmap = contract_color_delete(G, e)
            try:
                hc_prime = find_rainbow_hc(Gp, budget=hc_budget)
            except BudgetExceededError:
                stage = STAGE_HC_BUDGET
                hc_prime = None
            else:
                stage = STAGE_HC_NOT_FOUND if hc_prime is None else STAGE_LIFT_FAILED
            if hc_prime is not None:
                hc_found = True
                lifted = lift_cycle(hc_prime, cmap, e)
                if lifted is not None:
                    stage = STAGE_SUCCESS
            if _STAGE_RANK[stage] > _STAGE_RANK[best]:
                best = stage
            if best == STAGE_SUCCESS:
                break
        telemetry = {
            "stage_reached": best,
            "sizes": None,
            "matchings_found": None,
            "hc_found": hc_found,
            "attempts": attempts,
        }
    outcome = "found" if telemetry["stage_reached"] == STAGE_SUCCESS else "absent"
    return key, outcome, telemetry, time.perf_counter() - t0


def hamilton_experiment(config: ExperimentConfig, raw_sink=None) -> ExperimentResult:
    """Stage telemetry for the even-n assembly or the odd-n contract-and-lift
    pipeline, one cell per (n, m)."""
    if not config.ms:
        raise ValueError("hamilton experiment needs an m grid")
    for n in config.ns:
        if n < 4:
            raise ValueError("hamilton experiment needs n >= 4")
        if n % 2 == 1 and config.retries < 1:
            raise ValueError("odd n requires retries >= 1")
        if config.kappa is not None and config.kappa != n:
            raise ValueError("the pipelines require exactly n colors")
    cells = [(n, m) for n in config.ns for m in config.ms]
    for n, m in cells:
        if m > n * (n - 1) // 2:
            raise ValueError(f"cell (n={n}, m={m}) exceeds the simple-graph bound")
    tasks = []
    for ci, (n, m) in enumerate(cells):
        for t in range(config.trials):
            stream = ci * config.trials + t
            tasks.append(
                (
                    (ci, t),
                    n,
                    m,
                    config.kappa_for(n),
                    config.retries,
                    config.master_seed,
                    stream,
                    config.node_budget,
                    config.hc_budget,
                )
            )
    results = _run_tasks(_hamilton_trial, tasks, config.jobs, raw_sink)
    rows = tuple(
        TrialRow(cells[key[0]], key[1], outcome, telemetry, elapsed)
        for key, outcome, telemetry, elapsed in results
    )
    return ExperimentResult("hamilton", config, rows)


def hamilton_table(result: ExperimentResult) -> tuple[list[str], list[list]]:
    header = [
        "n", "m", "colors", "mode", "trials", "success",
        "edge_class_too_small", "matching_not_found", "matching_budget",
        "hc_not_found", "hc_budget", "lift_failed", "p_hat", "se",
    ]
    stage_cols = [
        "edge-class-too-small", "matching-not-found", "matching-budget",
        STAGE_HC_NOT_FOUND, STAGE_HC_BUDGET, STAGE_LIFT_FAILED,
    ]
    config = result.config
    lines = []
    for cell, rows in result.by_cell().items():
        n, m = cell
        hist = {name: 0 for name in list(_STAGE_RANK)}
        for r in rows:
            hist[r.value["stage_reached"]] += 1
        successes = hist[STAGE_SUCCESS]
        p, se = _p_hat_se(successes, len(rows))
        lines.append(
            [n, m, config.kappa_for(n), "even" if n % 2 == 0 else "odd", len(rows), successes]
            + [hist[name] for name in stage_cols]
            + [p, se]
        )
    return header, lines


def hamilton_csv(result: ExperimentResult) -> str:
    return _csv_lines(*hamilton_table(result))


def hamilton_trials_json(result: ExperimentResult) -> str:
    """Per-trial JSON telemetry (this report, unlike the CSV, includes wall
    time)."""
    config = result.config
    out = {
        "kind": "hamilton",
        "k": 2,
        "trials": config.trials,
        "cells": [],
    }
    for cell, rows in result.by_cell().items():
        n, m = cell
        out["cells"].append(
            {
                "n": n,
                "m": m,
                "colors": config.kappa_for(n),
                "mode": "even" if n % 2 == 0 else "odd",
                "trials": [
                    {
                        "trial": r.trial,
                        "stage_reached": r.value["stage_reached"],
                        "sizes": r.value["sizes"],
                        "matchings_found": r.value["matchings_found"],
                        "hc_found": r.value["hc_found"],
                        "attempts": r.value["attempts"],
                        "elapsed": r.elapsed,
                    }
                    for r in rows
                ],
            }
        )
    return json.dumps(out, indent=2) + "\n"


# -- isotonic fit ------------------------------------------------------------------


def isotonic_fit(values: Sequence[float], weights: Sequence[float] | None = None) -> list[float]:
    """Nondecreasing least-squares fit via pool-adjacent-violators.

    Used to check that empirical threshold curves are monotone up to noise:
    the fit is the closest nondecreasing sequence in weighted L2.
    """
    if weights is None:
        weights = [1.0] * len(values)
    if len(weights) != len(values):
        raise ValueError("weights must match values")
    blocks: list[list[float]] = []  # [mean, weight, count]
    for v, w in zip(values, weights):
        blocks.append([float(v), float(w), 1])
        while len(blocks) > 1 and blocks[-2][0] > blocks[-1][0]:
            m2, w2, c2 = blocks.pop()
            m1, w1, c1 = blocks.pop()
            total = w1 + w2
            blocks.append([(m1 * w1 + m2 * w2) / total, total, c1 + c2])
    fit: list[float] = []
    for mean, _, count in blocks:
        fit.extend([mean] * count)
    return fit


# -- SVG plotting --------------------------------------------------------------------


@dataclass(frozen=True)
class PlotSpec:
    x: str
    y: str
    yerr: str | None = None
    title: str = ""
    width: int = 640
    height: int = 440


def _nice_ticks(lo: float, hi: float, target: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    span = hi - lo
    mag = 10.0 ** math.floor(math.log10(span / target))
    step = mag
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        step = mult * mag
        if span / step <= target:
            break
    start = math.ceil(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-9 * span:
        ticks.append(round(t, 10))
        t += step
    return ticks


def _parse_plot_csv(text: str, spec: PlotSpec) -> tuple[list[float], list[float], list[float] | None]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if len(lines) < 2:
        raise ValueError("CSV has no data rows")
    header = lines[0].split(",")
    try:
        xi = header.index(spec.x)
        yi = header.index(spec.y)
        erri = header.index(spec.yerr) if spec.yerr else None
    except ValueError as exc:
        raise ValueError(f"column not found: {exc}") from exc
    xs, ys, errs = [], [], ([] if erri is not None else None)
    for ln in lines[1:]:
        cells = ln.split(",")
        try:
            xs.append(float(cells[xi]))
            ys.append(float(cells[yi]))
            if erri is not None:
                errs.append(float(cells[erri]))
        except (ValueError, IndexError) as exc:
            raise ValueError(f"malformed CSV row {ln!r}") from exc
    order = sorted(range(len(xs)), key=lambda i: (xs[i], i))
    xs = [xs[i] for i in order]
    ys = [ys[i] for i in order]
    if errs is not None:
        errs = [errs[i] for i in order]
    return xs, ys, errs


def emit_plot(csv_text: str, spec: PlotSpec) -> str:
    """Render a line/scatter plot (optionally with error bars) as an SVG
    string.  Pure function of the CSV bytes and the plot settings."""
    xs, ys, errs = _parse_plot_csv(csv_text, spec)
    W, H = spec.width, spec.height
    ml, mr, mt, mb = 62, 18, 34 if spec.title else 18, 46
    pw, ph = W - ml - mr, H - mt - mb
    xlo, xhi = min(xs), max(xs)
    ylo = min(ys) if errs is None else min(y - e for y, e in zip(ys, errs))
    yhi = max(ys) if errs is None else max(y + e for y, e in zip(ys, errs))
    if xhi == xlo:
        xlo, xhi = xlo - 0.5, xhi + 0.5
    if yhi == ylo:
        ylo, yhi = ylo - 0.5, yhi + 0.5
    pad = 0.04 * (yhi - ylo)
    ylo, yhi = ylo - pad, yhi + pad

    def X(x: float) -> float:
        return ml + (x - xlo) / (xhi - xlo) * pw

    def Y(y: float) -> float:
        return mt + ph - (y - ylo) / (yhi - ylo) * ph

    def f(v: float) -> str:
        return f"{v:.2f}"

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
    ]
    if spec.title:
        parts.append(
            f'<text x="{W / 2:.1f}" y="20" text-anchor="middle" '
            f'font-family="sans-serif" font-size="14">{spec.title}</text>'
        )
    # axes
    parts.append(
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" '
        f'stroke="#333" stroke-width="1"/>'
    )
    for t in _nice_ticks(xlo, xhi):
        if not xlo <= t <= xhi:
            continue
        parts.append(
            f'<line x1="{f(X(t))}" y1="{mt + ph}" x2="{f(X(t))}" y2="{mt + ph + 5}" stroke="#333"/>'
        )
        parts.append(
            f'<text x="{f(X(t))}" y="{mt + ph + 18}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{t:g}</text>'
        )
    for t in _nice_ticks(ylo, yhi):
        if not ylo <= t <= yhi:
            continue
        parts.append(
            f'<line x1="{ml - 5}" y1="{f(Y(t))}" x2="{ml}" y2="{f(Y(t))}" stroke="#333"/>'
        )
        parts.append(
            f'<text x="{ml - 8}" y="{f(Y(t) + 4)}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{t:g}</text>'
        )
    parts.append(
        f'<text x="{ml + pw / 2:.1f}" y="{H - 8}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12">{spec.x}</text>'
    )
    parts.append(
        f'<text x="16" y="{mt + ph / 2:.1f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 16 {mt + ph / 2:.1f})">{spec.y}</text>'
    )
    if errs is not None:
        for x, y, e in zip(xs, ys, errs):
            parts.append(
                f'<line x1="{f(X(x))}" y1="{f(Y(y - e))}" x2="{f(X(x))}" '
                f'y2="{f(Y(y + e))}" stroke="#d62728" stroke-width="1"/>'
            )
    points = " ".join(f"{f(X(x))},{f(Y(y))}" for x, y in zip(xs, ys))
    parts.append(
        f'<polyline points="{points}" fill="none" stroke="#1f77b4" stroke-width="1.5"/>'
    )
    for x, y in zip(xs, ys):
        parts.append(f'<circle cx="{f(X(x))}" cy="{f(Y(y))}" r="3" fill="#1f77b4"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
