"""Closed-loop runs that reuse feedback laws instead of re-solving QPs.

Four strategies are compared on identical trajectories.  Solving the QP at
every step is the baseline; the single-polytope strategy keeps the law of
the last QP alive while the state stays in its validity polytope; the
candidate-family strategy keeps it alive on the whole family of polytopes
sharing the stage subset; the gamma-oracle strategy additionally consults
an offline atlas of every region known to share that stage subset.  All
four apply identical inputs (each reused law is optimal where it is used),
so only the indicator e(k) - whether step k solved a QP - differs.

Reusability is the fraction of steps with e(k) = 0.  Trajectories stop on
entering the terminal set, where the unconstrained LQR takes over and no
further QPs would ever be needed; those steps are excluded from the
statistics.
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import (
    AssumptionError,
    FamilyTooLarge,
    InfeasibleProblem,
    MaxIterations,
    RankDeficient,
)
from .families import (
    candidate_family,
    criterion_applies,
    reuse_region_from_sets,
    reuse_query,
    stage_subset,
)
from .qp import solve_qp, support_value
from .regions import _row_rank_ok, regional_law

MEMBERSHIP_TOL = 1e-9


class Strategy(Enum):
    EVERY_STEP = "everystep"
    SINGLE_POLYTOPE = "single"
    CANDIDATE_FAMILY = "family"
    GAMMA_ORACLE = "gamma"


@dataclass(frozen=True)
class ClosedLoopTrace:
    """One trajectory: states, applied inputs and the QP indicator e."""

    states: np.ndarray  # (steps+1) x n
    inputs: np.ndarray  # steps x m
    e: tuple  # steps entries of {0,1}
    entered_terminal_at: int | None
    qp_count: int

    @property
    def steps(self) -> int:
        return len(self.e)


@dataclass(frozen=True)
class BatchStats:
    """Aggregated reuse statistics over a batch of trajectories."""

    strategy: str
    n_traj: int
    reuse_pct: float  # fraction of non-terminal steps with e = 0
    total_qps: int
    mean_steps: float
    seed: int | None

    def as_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "n": self.n_traj,
            "seed": self.seed,
            "reuse_pct": self.reuse_pct,
            "total_qps": self.total_qps,
            "mean_steps": self.mean_steps,
        }


class _PolytopeContext:
    """Reuse the last law while the state stays in its polytope."""

    def __init__(self, poly, K, b, active=None):
        self.poly, self.K, self.b = poly, K, b
        self.regions_built = ((active, poly),)

    def query(self, x):
        if self.poly.contains(x, tol=MEMBERSHIP_TOL):
            return self.K @ x + self.b
        return None


class _FamilyContext:
    """Reuse the common feedback on any family (or atlas-group) polytope."""

    def __init__(self, rr, extra_polys=()):
        self.rr = rr
        self.extra_polys = tuple(extra_polys)
        self.regions_built = tuple(rr.candidates) + tuple(
            (None, p) for p in extra_polys
        )

    def query(self, x):
        u = reuse_query(self.rr, x, tol=MEMBERSHIP_TOL)
        if u is not None:
            return u
        for poly in self.extra_polys:
            if poly.contains(x, tol=MEMBERSHIP_TOL):
                return self.rr.feedback(x)
        return None


def _build_context(cqp, active, strategy, atlas, family_limit, prune_empty):
    """Reuse context after a QP solve; None means solve again next step."""
    if strategy is Strategy.EVERY_STEP:
        return None
    if not _row_rank_ok(cqp.G[active.zero_based()]):
        return None  # no law can be attached to dependent rows
    if strategy is Strategy.SINGLE_POLYTOPE or not criterion_applies(cqp, active):
        try:
            law = regional_law(cqp, active)
        except RankDeficient:
            return None
        return _PolytopeContext(law.region, law.K, law.b, active=active)
    try:
        sets = candidate_family(active, cqp.q_stage)
    except FamilyTooLarge:
        sets = [active]
    if family_limit is not None:
        sets = sets[: max(1, family_limit)]
    rr = reuse_region_from_sets(cqp, sets, prune_empty=prune_empty)
    extras = ()
    if strategy is Strategy.GAMMA_ORACLE:
        have = {cand for cand, _ in rr.candidates}
        group = atlas.group_of(stage_subset(active, cqp.q_stage))
        extras = tuple(poly for aset, poly in group if aset not in have)
    return _FamilyContext(rr, extras)


def simulate(
    cqp,
    strategy: Strategy,
    x0,
    max_steps: int = 1000,
    atlas=None,
    family_limit: int | None = None,
    prune_empty: bool = True,
    collect_regions: bool = False,
):
    """Run one closed-loop trajectory until the terminal set is entered.

    Returns a ClosedLoopTrace; with collect_regions, a (trace, regions)
    pair where regions lists (active_set, polytope) for every region
    built along the way (active_set is None for merged unions).  Raises
    InfeasibleProblem when x0 is outside the feasible set and MaxIterations
    when the loop does not reach the terminal set in max_steps.
    """
    if strategy is Strategy.GAMMA_ORACLE and atlas is None:
        raise AssumptionError("gamma strategy needs an atlas")
    spec = cqp.spec
    A_sys, B_sys = spec.sys.A, spec.sys.B
    x = np.asarray(x0, dtype=float).ravel()
    states = [x]
    inputs = []
    e = []
    regions = []
    entered = None
    ctx = None
    for _ in range(max_steps):
        if spec.Tset.contains(x, tol=MEMBERSHIP_TOL):
            entered = len(e)
            break
        u = ctx.query(x) if ctx is not None else None
        if u is None:
            res = solve_qp(cqp, x)
            u = res.U[: cqp.m].copy()
            ctx = _build_context(
                cqp, res.active, strategy, atlas, family_limit, prune_empty
            )
            if collect_regions and ctx is not None:
                regions.extend(ctx.regions_built)
            e.append(1)
        else:
            e.append(0)
        inputs.append(u)
        x = A_sys @ x + B_sys @ u
        states.append(x)
    else:
        raise MaxIterations(f"terminal set not reached in {max_steps} steps")
    trace = ClosedLoopTrace(
        states=np.array(states),
        inputs=np.array(inputs).reshape(len(inputs), cqp.m),
        e=tuple(e),
        entered_terminal_at=entered,
        qp_count=int(sum(e)),
    )
    return (trace, regions) if collect_regions else trace


def sample_initial_states(cqp, n: int, seed: int) -> np.ndarray:
    """n initial states, uniform over the state box, kept when feasible.

    Rejection removes states already in the terminal set (their trajectory
    would contribute zero steps) and states where the QP has no solution.
    Fixed seed gives a fixed sample.
    """
    spec = cqp.spec
    dim = spec.n
    lo = np.empty(dim)
    hi = np.empty(dim)
    for i in range(dim):
        e_i = np.zeros(dim)
        e_i[i] = 1.0
        hi[i] = support_value(spec.Xset, e_i)
        lo[i] = -support_value(spec.Xset, -e_i)
    rng = np.random.default_rng(seed)
    out = np.empty((n, dim))
    count = 0
    while count < n:
        x = rng.uniform(lo, hi)
        if spec.Tset.contains(x, tol=MEMBERSHIP_TOL):
            continue
        try:
            solve_qp(cqp, x)
        except (InfeasibleProblem, MaxIterations):
            continue
        out[count] = x
        count += 1
    return out


def _worker_count() -> int:
    raw = os.environ.get("MPC_REUSE_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def run_batch(
    cqp,
    strategy: Strategy,
    initial_states: np.ndarray,
    atlas=None,
    max_steps: int = 1000,
    family_limit: int | None = None,
    prune_empty: bool = True,
    seed: int | None = None,
):
    """Simulate each initial state; returns (BatchStats, traces).

    Trajectories are independent, so they may fan out across threads
    (MPC_REUSE_THREADS); results are merged by trajectory index either way.
    """
    def one(x0):
        return simulate(
            cqp, strategy, x0, max_steps=max_steps, atlas=atlas,
            family_limit=family_limit, prune_empty=prune_empty,
        )

    workers = _worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            traces = list(pool.map(one, initial_states))
    else:
        traces = [one(x0) for x0 in initial_states]
    total_steps = sum(t.steps for t in traces)
    total_qps = sum(t.qp_count for t in traces)
    reuse = 0.0 if total_steps == 0 else 1.0 - total_qps / total_steps
    stats = BatchStats(
        strategy=strategy.value,
        n_traj=len(traces),
        reuse_pct=reuse,
        total_qps=total_qps,
        mean_steps=total_steps / max(1, len(traces)),
        seed=seed,
    )
    return stats, traces


def compare_strategies(
    cqp,
    n: int,
    seed: int,
    strategies=(Strategy.SINGLE_POLYTOPE, Strategy.CANDIDATE_FAMILY),
    atlas=None,
    max_steps: int = 1000,
    prune_empty: bool = True,
):
    """Run several strategies over one shared initial-state sample.

    Returns (stats by strategy value, traces by strategy value).  The same
    states feed every strategy, so reuse percentages and QP counts are
    directly comparable.
    """
    states = sample_initial_states(cqp, n, seed)
    all_stats = {}
    all_traces = {}
    for strat in strategies:
        stats, traces = run_batch(
            cqp, strat, states, atlas=atlas, max_steps=max_steps,
            prune_empty=prune_empty, seed=seed,
        )
        all_stats[strat.value] = stats
        all_traces[strat.value] = traces
    return all_stats, all_traces


def write_trace_csv(trace: ClosedLoopTrace, path) -> None:
    """Step rows k, x1..xn, u1..um, e."""
    n = trace.states.shape[1]
    m = trace.inputs.shape[1]
    header = (
        ["k"]
        + [f"x{i+1}" for i in range(n)]
        + [f"u{j+1}" for j in range(m)]
        + ["e"]
    )
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for k in range(trace.steps):
            row = [k, *trace.states[k].tolist(), *trace.inputs[k].tolist(), trace.e[k]]
            writer.writerow(row)
