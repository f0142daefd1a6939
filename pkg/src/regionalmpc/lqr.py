"""Unconstrained LQR tail: Riccati solution and the invariant terminal set.

The terminal weight P is the fixed point of the discrete Riccati recursion
and the terminal polytope T is the maximal set on which the LQR feedback
u = K x keeps every future state in X and every future input in U.  With
that pair, the finite-horizon controller inherits stability and the QP's
terminal constraint is exactly "the tail can run unconstrained".
"""

from __future__ import annotations

import numpy as np

from .errors import AssumptionError, NoConvergence, NoTermination
from .model import HalfspacePolytope, OcpSpec
from .qp import _lp_max, remove_redundant_rows

DARE_RTOL = 1e-12
DARE_MAX_ITER = 10000
INVSET_TOL = 1e-9
INVSET_MAX_ITER = 500


def solve_dare(A, B, Q, R) -> np.ndarray:
    """Fixed point of P = A'PA - A'PB (R + B'PB)^-1 B'PA + Q, from P0 = Q.

    Iterates the recursion until the relative Frobenius change drops below
    DARE_RTOL; raises NoConvergence at the iteration cap.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    Q = np.asarray(Q, dtype=float)
    R = np.asarray(R, dtype=float)
    P = Q.copy()
    for _ in range(DARE_MAX_ITER):
        BPA = B.T @ P @ A
        Pn = A.T @ P @ A - BPA.T @ np.linalg.solve(R + B.T @ P @ B, BPA) + Q
        Pn = 0.5 * (Pn + Pn.T)
        if np.linalg.norm(Pn - P) <= DARE_RTOL * np.linalg.norm(Pn):
            return Pn
        P = Pn
    raise NoConvergence(f"Riccati iteration not settled after {DARE_MAX_ITER} steps")


def lqr_gain(A, B, P, R) -> np.ndarray:
    """Optimal feedback u = K x for the unconstrained infinite horizon."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    return -np.linalg.solve(R + B.T @ P @ B, B.T @ P @ A)


def invariant_terminal_set(
    A, B, K, Xset: HalfspacePolytope, Uset: HalfspacePolytope
) -> HalfspacePolytope:
    """Maximal constraint-admissible invariant set of x+ = (A + BK) x.

    Stacks the constraint rows propagated through powers of the closed loop
    and stops once every row of the next power is redundant (support LP per
    row).  The result is reduced to its minimal representation and the rows
    are scaled to unit norm.  Raises NoTermination past the power cap;
    requires the closed loop to be strictly stable.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    K = np.asarray(K, dtype=float)
    Acl = A + B @ K
    if np.max(np.abs(np.linalg.eigvals(Acl))) >= 1.0:
        raise AssumptionError("closed loop not strictly stable")
    C0 = np.vstack([Xset.C, Uset.C @ K])
    c0 = np.concatenate([Xset.c, Uset.c])
    if np.any(c0 <= 0.0):
        raise AssumptionError("origin not strictly inside the constraints")

    rows_C = [C0]
    rows_c = [c0]
    Ak = Acl.copy()  # power for the rows tested next
    for _ in range(INVSET_MAX_ITER):
        C_cur = np.vstack(rows_C)
        c_cur = np.concatenate(rows_c)
        cand_C = C0 @ Ak
        all_redundant = True
        keep_rows = []
        for row, bound in zip(cand_C, c0):
            nrm = np.linalg.norm(row)
            if nrm <= 1e-12:
                continue  # 0'x <= bound with bound > 0 holds everywhere
            res = _lp_max(row, C_cur, c_cur)
            if res.status == 3 or not res.success or -res.fun > bound + INVSET_TOL:
                all_redundant = False
            keep_rows.append((row, bound))
        if all_redundant:
            stacked = HalfspacePolytope(C_cur, c_cur)
            reduced, _ = remove_redundant_rows(stacked, tol=INVSET_TOL)
            return reduced.normalized()
        rows_C.append(np.array([r for r, _ in keep_rows]))
        rows_c.append(np.array([b for _, b in keep_rows]))
        Ak = Ak @ Acl
    raise NoTermination(f"invariant set not settled after {INVSET_MAX_ITER} powers")


def complete_ocp(spec: OcpSpec) -> OcpSpec:
    """Fill in missing P / T from the Riccati solution and invariant set."""
    if spec.P is not None and spec.Tset is not None:
        return spec
    P = spec.P
    if P is None:
        P = solve_dare(spec.sys.A, spec.sys.B, spec.Q, spec.R)
    Tset = spec.Tset
    if Tset is None:
        K = lqr_gain(spec.sys.A, spec.sys.B, P, spec.R)
        Tset = invariant_terminal_set(spec.sys.A, spec.sys.B, K, spec.Xset, spec.Uset)
    return spec.with_terminal(P, Tset)
