"""Condensed QP assembly: dimensions, block structure, cost and
constraint equivalence against explicit rollouts."""

import numpy as np

from regionalmpc.condense import rollout_cost


def test_row_counts(ex1, pend):
    assert (ex1.q, ex1.q_stage, ex1.q_T) == (32, 6, 8)
    assert (pend.q, pend.q_stage, pend.q_T) == (138, 10, 38)
    assert ex1.q == ex1.N * ex1.q_stage + ex1.q_T
    assert pend.q == pend.N * pend.q_stage + pend.q_T


def test_block_structure(ex1, pend):
    for cqp in (ex1, pend):
        m, N = cqp.m, cqp.N
        # head rows touch u(0) only
        assert np.all(cqp.G[: cqp.q_stage, m:] == 0.0)
        # initial-state rows carry no input dependence and sit last
        assert np.all(cqp.G[-cqp.q_X :] == 0.0)
        assert np.allclose(cqp.E[-cqp.q_X :], -cqp.spec.Xset.C)
        assert np.allclose(cqp.H, cqp.H.T)
        assert np.linalg.eigvalsh(cqp.H)[0] > 0.0
        S = cqp.E + cqp.G @ cqp.HinvFT
        assert np.max(np.abs(S - cqp.S)) <= 1e-10


def test_objective_matches_rollout(ex1, pend):
    rng = np.random.default_rng(5)
    for cqp in (ex1, pend):
        for _ in range(20):
            x = rng.uniform(-1, 1, cqp.n)
            U = rng.uniform(-1, 1, cqp.m * cqp.N)
            quad = 0.5 * U @ cqp.H @ U + x @ cqp.F @ U + 0.5 * x @ cqp.Y @ x
            ref = rollout_cost(cqp.spec, x, U)
            assert abs(quad - ref) <= 1e-8 * max(1.0, abs(ref))


def test_predicted_states_match_recursion(ex1):
    rng = np.random.default_rng(6)
    s = ex1.spec
    x = rng.uniform(-1, 1, ex1.n)
    U = rng.uniform(-1, 1, ex1.m * ex1.N)
    stacked = ex1.predict_states(x, U)
    xk = x
    for k in range(ex1.N):
        xk = s.sys.A @ xk + s.sys.B @ U[k * ex1.m : (k + 1) * ex1.m]
        assert np.allclose(stacked[k * ex1.n : (k + 1) * ex1.n], xk, atol=1e-12)


def _rollout_feasible(cqp, x, U, tol):
    s = cqp.spec
    if not s.Xset.contains(x, tol=tol):
        return False
    xk = x
    for k in range(cqp.N):
        u = U[k * cqp.m : (k + 1) * cqp.m]
        if not s.Uset.contains(u, tol=tol):
            return False
        xk = s.sys.A @ xk + s.sys.B @ u
        inside = s.Tset if k == cqp.N - 1 else s.Xset
        if not inside.contains(xk, tol=tol):
            return False
    return True


def test_constraints_equal_rollout_feasibility(ex1):
    rng = np.random.default_rng(7)
    checked = 0
    while checked < 100:
        x = rng.uniform(-3, 3, ex1.n)
        U = rng.uniform(-2.5, 2.5, ex1.m * ex1.N)
        margins = ex1.G @ U - ex1.w - ex1.E @ x
        # skip samples sitting on a boundary, the equivalence is about sets
        if np.min(np.abs(margins)) < 1e-7:
            continue
        stacked_ok = bool(np.all(margins <= 1e-9))
        assert stacked_ok == _rollout_feasible(ex1, x, U, 1e-9)
        checked += 1
