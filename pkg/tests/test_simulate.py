"""Closed-loop simulation tests.

The anchor trajectory from x0 = (-2.15, 1.05) pins the QP indicator of
every strategy, the shared state sequence, and the family built on the
saturated arc.  Batch tests cover the accounting and the QP-count
ordering between strategies.
"""

import csv

import numpy as np
import pytest

from regionalmpc.errors import AssumptionError, InfeasibleProblem, MaxIterations
from regionalmpc.qp import ActiveSet, solve_qp
from regionalmpc.simulate import (
    Strategy,
    compare_strategies,
    run_batch,
    sample_initial_states,
    simulate,
    write_trace_csv,
)

X0 = np.array([-2.15, 1.05])

# QP indicator per strategy from X0; states agree, only e differs
E_PATTERNS = {
    Strategy.EVERY_STEP: (1, 1, 1, 1, 1, 1, 1, 1),
    Strategy.SINGLE_POLYTOPE: (1, 1, 1, 0, 1, 1, 1, 1),
    Strategy.CANDIDATE_FAMILY: (1, 1, 1, 0, 1, 1, 0, 0),
    Strategy.GAMMA_ORACLE: (1, 1, 1, 0, 1, 1, 0, 0),
}


def _trace(cqp, strat, atlas201, **kw):
    atlas = atlas201 if strat is Strategy.GAMMA_ORACLE else None
    return simulate(cqp, strat, X0, atlas=atlas, **kw)


def test_anchor_e_patterns(ex1, atlas201):
    for strat, expected in E_PATTERNS.items():
        tr = _trace(ex1, strat, atlas201)
        assert tr.e == expected, strat.value
        assert tr.qp_count == sum(expected)
        assert tr.entered_terminal_at == 8


def test_anchor_states_agree_across_strategies(ex1, atlas201):
    traces = {strat: _trace(ex1, strat, atlas201) for strat in Strategy}
    base = traces[Strategy.EVERY_STEP]
    for tr in traces.values():
        assert tr.states.shape == base.states.shape
        assert np.max(np.abs(tr.states - base.states)) <= 1e-9
        assert np.max(np.abs(tr.inputs - base.inputs)) <= 1e-9


def test_anchor_saturated_arc(ex1):
    tr = simulate(ex1, Strategy.EVERY_STEP, X0)
    assert np.allclose(tr.inputs[5:8, 0], 2.0, atol=1e-9)
    res = solve_qp(ex1, tr.states[5])
    assert res.active == ActiveSet([1, 7, 13])


def test_anchor_family_members(ex1):
    tr, regions = simulate(
        ex1, Strategy.CANDIDATE_FAMILY, X0, collect_regions=True
    )
    # last solve (k = 5) builds the pruned family, largest value first
    tail = [aset for aset, _ in regions[-3:]]
    assert tail == [ActiveSet([1, 7, 13]), ActiveSet([1, 7]), ActiveSet([1])]
    for k in (6, 7):
        assert any(poly.contains(tr.states[k], tol=1e-9) for _, poly in regions[-3:])


def test_start_inside_terminal_set(ex1):
    tr = simulate(ex1, Strategy.SINGLE_POLYTOPE, np.zeros(2))
    assert tr.steps == 0
    assert tr.e == ()
    assert tr.qp_count == 0
    assert tr.entered_terminal_at == 0
    assert tr.states.shape == (1, 2)
    assert tr.inputs.shape == (0, 1)


def test_trace_bookkeeping(ex1, atlas201):
    states = sample_initial_states(ex1, 25, seed=5)
    for strat in Strategy:
        atlas = atlas201 if strat is Strategy.GAMMA_ORACLE else None
        _, traces = run_batch(ex1, strat, states, atlas=atlas)
        for tr in traces:
            assert len(tr.inputs) == len(tr.e) == len(tr.states) - 1
            assert tr.qp_count == sum(tr.e)
            assert tr.e[0] == 1
            assert tr.entered_terminal_at == tr.steps


def test_trajectories_respect_constraints(ex1):
    spec = ex1.spec
    states = sample_initial_states(ex1, 25, seed=5)
    _, traces = run_batch(ex1, Strategy.CANDIDATE_FAMILY, states)
    for tr in traces:
        for k in range(tr.steps):
            assert spec.Xset.contains(tr.states[k], tol=1e-7)
            assert spec.Uset.contains(tr.inputs[k], tol=1e-7)
        assert spec.Tset.contains(tr.states[-1], tol=1e-9)


def test_strategy_ordering(ex1, atlas201):
    stats, traces = compare_strategies(
        ex1, 50, seed=11, strategies=tuple(Strategy), atlas=atlas201
    )
    qps = {name: s.total_qps for name, s in stats.items()}
    assert qps["gamma"] <= qps["family"] <= qps["single"] <= qps["everystep"]
    assert stats["everystep"].reuse_pct == 0.0
    base = traces["everystep"]
    for name in ("single", "family", "gamma"):
        for t0, t1 in zip(base, traces[name]):
            assert t0.steps == t1.steps
            assert np.max(np.abs(t0.states - t1.states)) <= 1e-6


def test_prune_empty_does_not_change_the_loop(ex1):
    states = sample_initial_states(ex1, 15, seed=3)
    s_on, tr_on = run_batch(ex1, Strategy.CANDIDATE_FAMILY, states, prune_empty=True)
    s_off, tr_off = run_batch(ex1, Strategy.CANDIDATE_FAMILY, states, prune_empty=False)
    assert s_on.total_qps == s_off.total_qps
    assert s_on.reuse_pct == s_off.reuse_pct
    for a, b in zip(tr_on, tr_off):
        assert a.e == b.e


def test_family_limit_one_degenerates_to_single(ex1):
    states = sample_initial_states(ex1, 15, seed=3)
    _, tr_lim = run_batch(ex1, Strategy.CANDIDATE_FAMILY, states, family_limit=1)
    _, tr_single = run_batch(ex1, Strategy.SINGLE_POLYTOPE, states)
    for a, b in zip(tr_lim, tr_single):
        assert a.e == b.e
        assert np.max(np.abs(a.states - b.states)) <= 1e-9


def test_write_trace_csv(ex1, tmp_path):
    tr = simulate(ex1, Strategy.SINGLE_POLYTOPE, X0)
    path = tmp_path / "trace.csv"
    write_trace_csv(tr, path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["k", "x1", "x2", "u1", "e"]
    assert len(rows) == tr.steps + 1
    assert rows[1][0] == "0"
    assert float(rows[1][1]) == pytest.approx(-2.15)
    assert float(rows[1][2]) == pytest.approx(1.05)
    assert rows[1][4] == "1"


def test_infeasible_start_raises(ex1):
    with pytest.raises(InfeasibleProblem):
        simulate(ex1, Strategy.EVERY_STEP, np.array([2.5, 1.0]))


def test_max_steps_raises(ex1):
    with pytest.raises(MaxIterations):
        simulate(ex1, Strategy.EVERY_STEP, X0, max_steps=3)


def test_gamma_requires_atlas(ex1):
    with pytest.raises(AssumptionError):
        simulate(ex1, Strategy.GAMMA_ORACLE, X0)


def test_sample_initial_states_deterministic(ex1):
    a = sample_initial_states(ex1, 30, seed=9)
    b = sample_initial_states(ex1, 30, seed=9)
    assert np.array_equal(a, b)
    c = sample_initial_states(ex1, 30, seed=10)
    assert not np.array_equal(a, c)


def test_sample_initial_states_feasible(ex1):
    spec = ex1.spec
    for x in sample_initial_states(ex1, 30, seed=9):
        assert spec.Xset.contains(x, tol=1e-9)
        assert not spec.Tset.contains(x, tol=1e-9)
        solve_qp(ex1, x)  # must not raise


def test_run_batch_accounting(ex1):
    states = sample_initial_states(ex1, 20, seed=2)
    stats, traces = run_batch(ex1, Strategy.SINGLE_POLYTOPE, states, seed=2)
    total_steps = sum(t.steps for t in traces)
    assert stats.n_traj == 20
    assert stats.strategy == "single"
    assert stats.seed == 2
    assert stats.total_qps == sum(t.qp_count for t in traces)
    assert stats.reuse_pct == pytest.approx(1.0 - stats.total_qps / total_steps)
    assert stats.mean_steps == pytest.approx(total_steps / 20)
    d = stats.as_dict()
    assert d["n"] == 20
    assert d["reuse_pct"] == stats.reuse_pct
