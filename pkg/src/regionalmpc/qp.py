"""Optimization kernel: LP utilities, active sets and the parametric QP solver.

The QP solved here is the condensed form

    min_U  0.5 U' H U + x' F U  (+ 0.5 x' Y x)
    s.t.   G U <= w + E x

with H positive definite.  The solver is a dual active-set method started at
the unconstrained optimum; every working-set change reuses the precomputed
products H^-1 G' and G H^-1 G' carried by the condensed problem object, so a
single solve costs a handful of small linear solves.  A projected-gradient
method on the dual serves as an independent slow reference.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .errors import (
    EmptyPolytope,
    IndexOutOfRange,
    InfeasibleProblem,
    MaxIterations,
    Unbounded,
)
from .model import HalfspacePolytope

# LP feasibility tolerance handed to HiGHS
LP_TOL = 1e-9
# dual active set: relative primal feasibility at which a row counts as satisfied
QP_FEAS_TOL = 1e-9
# residual threshold deciding membership in the reported active set
ACTIVE_TOL = 1e-8
_LP_OPTS = {"primal_feasibility_tolerance": LP_TOL}


class ActiveSet:
    """Immutable sorted set of 1-based constraint row indices."""

    __slots__ = ("idx",)

    def __init__(self, indices=()):
        idx = tuple(sorted({int(i) for i in indices}))
        if idx and idx[0] < 1:
            raise IndexOutOfRange(f"row indices are 1-based, got {idx[0]}")
        object.__setattr__(self, "idx", idx)

    def __len__(self):
        return len(self.idx)

    def __iter__(self):
        return iter(self.idx)

    def __contains__(self, i):
        return int(i) in self.idx

    def __eq__(self, other):
        return isinstance(other, ActiveSet) and self.idx == other.idx

    def __hash__(self):
        return hash(self.idx)

    def __repr__(self):
        return f"ActiveSet({{{', '.join(map(str, self.idx))}}})"

    def union(self, other: "ActiveSet") -> "ActiveSet":
        return ActiveSet(self.idx + other.idx)

    def intersect(self, other: "ActiveSet") -> "ActiveSet":
        return ActiveSet(set(self.idx) & set(other.idx))

    def issubset(self, other: "ActiveSet") -> bool:
        return set(self.idx) <= set(other.idx)

    def head(self, bound: int) -> "ActiveSet":
        """Subset of indices at most ``bound``."""
        return ActiveSet(i for i in self.idx if i <= bound)

    def zero_based(self) -> np.ndarray:
        return np.array(self.idx, dtype=int) - 1

    def value(self) -> int:
        """Order-embedding into the integers: sum of 2^(i-1) over members.

        A strict superset always maps to a strictly larger value, so sorting
        by value descending lists supersets before their subsets.
        """
        v = 0
        for i in self.idx:
            v += 1 << (i - 1)
        return v

    @staticmethod
    def complement(members: "ActiveSet", q: int) -> "ActiveSet":
        return ActiveSet(i for i in range(1, q + 1) if i not in members)


def _lp_max(direction, C, c):
    """Maximize direction' z over {C z <= c}; returns the scipy result."""
    return linprog(
        -np.asarray(direction, dtype=float),
        A_ub=C,
        b_ub=c,
        bounds=(None, None),
        method="highs",
        options=_LP_OPTS,
    )


def support_value(poly: HalfspacePolytope, direction) -> float:
    """max direction' z over the polytope; +inf if unbounded that way."""
    res = _lp_max(direction, poly.C, poly.c)
    if res.status == 3:
        return np.inf
    if res.status == 2:
        raise EmptyPolytope("support of an empty polytope")
    if not res.success:
        raise Unbounded(f"support LP failed: {res.message}")
    return float(-res.fun)


def is_empty(poly: HalfspacePolytope) -> bool:
    """True when {C z <= c} has no point (phase-1 LP)."""
    res = linprog(
        np.zeros(poly.dim),
        A_ub=poly.C,
        b_ub=poly.c,
        bounds=(None, None),
        method="highs",
        options=_LP_OPTS,
    )
    return res.status == 2


def chebyshev_center(poly: HalfspacePolytope):
    """Largest inscribed ball; returns (center, radius).

    Raises EmptyPolytope / Unbounded when no ball or arbitrarily large
    balls fit.
    """
    norms = np.linalg.norm(poly.C, axis=1)
    A = np.hstack([poly.C, norms[:, None]])
    obj = np.zeros(poly.dim + 1)
    obj[-1] = -1.0
    res = linprog(
        obj,
        A_ub=A,
        b_ub=poly.c,
        bounds=[(None, None)] * poly.dim + [(0.0, None)],
        method="highs",
        options=_LP_OPTS,
    )
    if res.status == 2:
        raise EmptyPolytope("no inscribed ball")
    if res.status == 3:
        raise Unbounded("inscribed ball radius is unbounded")
    if not res.success:
        raise Unbounded(f"Chebyshev LP failed: {res.message}")
    return res.x[:-1].copy(), float(res.x[-1])


def poly_contains_poly(outer: HalfspacePolytope, inner: HalfspacePolytope) -> bool:
    """inner subseteq outer, one support LP per outer row."""
    if is_empty(inner):
        return True
    for row, bound in zip(outer.C, outer.c):
        if support_value(inner, row) > bound + 1e-9:
            return False
    return True


def remove_redundant_rows(poly: HalfspacePolytope, tol: float = 1e-9):
    """Minimal halfspace representation (sequential support LPs).

    Returns (reduced polytope, kept row indices, 0-based).  Row i is dropped
    when maximizing its normal over the remaining rows stays below its own
    offset plus ``tol``.
    """
    q = poly.num_rows
    keep = list(range(q))
    for i in range(q):
        if i not in keep:
            continue
        others = [j for j in keep if j != i]
        if not others:
            break
        res = _lp_max(poly.C[i], poly.C[others], poly.c[others])
        if res.status == 3 or not res.success:
            continue  # unbounded without this row: essential
        if -res.fun <= poly.c[i] + tol:
            keep.remove(i)
    keep_arr = np.array(keep, dtype=int)
    return HalfspacePolytope(poly.C[keep_arr], poly.c[keep_arr]), keep_arr


def vertices_2d(poly: HalfspacePolytope, tol: float = 1e-8) -> np.ndarray:
    """Vertices of a bounded 2d polytope, counterclockwise.

    Candidate points come from pairwise row intersections and are kept when
    feasible for all rows.  Raises EmptyPolytope / Unbounded as appropriate.
    """
    if poly.dim != 2:
        raise ValueError("vertices_2d needs a 2d polytope")
    if is_empty(poly):
        raise EmptyPolytope("no vertices: empty polytope")
    for d in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        if not np.isfinite(support_value(poly, d)):
            raise Unbounded("no vertex list: unbounded polytope")
    C, c = poly.C, poly.c
    scale = 1.0 + np.abs(c)
    pts = []
    q = poly.num_rows
    for i in range(q):
        for j in range(i + 1, q):
            M = np.array([C[i], C[j]])
            if abs(np.linalg.det(M)) < 1e-12 * max(
                1.0, np.linalg.norm(C[i]) * np.linalg.norm(C[j])
            ):
                continue
            z = np.linalg.solve(M, np.array([c[i], c[j]]))
            if np.all(C @ z <= c + tol * scale):
                pts.append(z)
    if not pts:
        raise EmptyPolytope("no vertices found")
    pts = np.array(pts)
    # dedupe, then order by angle around an interior point
    uniq = []
    for p in pts:
        if not any(np.linalg.norm(p - u) <= 1e-7 * (1 + np.linalg.norm(u)) for u in uniq):
            uniq.append(p)
    center = np.mean(uniq, axis=0)
    uniq.sort(key=lambda p: np.arctan2(p[1] - center[1], p[0] - center[0]))
    return np.array(uniq)


@dataclass(frozen=True)
class QpResult:
    """Solution of one condensed QP instance."""

    U: np.ndarray
    lam: np.ndarray
    active: ActiveSet
    working: ActiveSet
    obj: float
    iterations: int


def active_rows_from_residual(cqp, x, U, tol: float = ACTIVE_TOL) -> ActiveSet:
    """Rows with |G_i U - w_i - E_i x| within tol relative to the offset.

    Residual-based so weakly active rows (zero multiplier) are included.
    """
    b = cqp.w + cqp.E @ np.asarray(x, dtype=float).ravel()
    resid = np.abs(cqp.G @ U - b)
    mask = resid <= tol * (1.0 + np.abs(b))
    return ActiveSet(np.nonzero(mask)[0] + 1)


def solve_qp(cqp, x, max_iter: int | None = None) -> QpResult:
    """Solve the condensed QP at state x by a dual active-set method.

    Starts at the unconstrained optimum and adds the most violated row
    (violation measured relative to 1 + |offset|, ties to the lowest index),
    taking partial dual steps that drop blocking rows on the way.  Raises
    InfeasibleProblem when the dual is unbounded and MaxIterations past the
    iteration cap.  The reported active set is residual-based, so it can be
    wider than the final working set; multipliers off the working set are 0.
    """
    x = np.asarray(x, dtype=float).ravel()
    q = cqp.G.shape[0]
    if max_iter is None:
        max_iter = 100 + 50 * q
    b = cqp.w + cqp.E @ x
    scale = 1.0 + np.abs(b)
    U = -cqp.HinvFT @ x
    GHiG = cqp.GHiG
    HinvGT = cqp.HinvGT
    work: list[int] = []  # 0-based working set, insertion order
    lam_w = np.zeros(0)
    iters = 0

    while True:
        s = cqp.G @ U - b
        p = int(np.argmax(s / scale))
        if s[p] / scale[p] <= QP_FEAS_TOL:
            break
        lam_p = 0.0
        while True:
            iters += 1
            if iters > max_iter:
                raise MaxIterations(f"no convergence in {max_iter} iterations")
            if work:
                GHa = GHiG[work, p]
                r = np.linalg.solve(GHiG[np.ix_(work, work)], GHa)
                z = HinvGT[:, p] - HinvGT[:, work] @ r
                apz = GHiG[p, p] - GHa @ r
            else:
                r = np.zeros(0)
                z = HinvGT[:, p]
                apz = GHiG[p, p]
            # blocking step length over rows whose multiplier would go negative
            t_block = np.inf
            j_block = -1
            for pos, j in enumerate(work):
                if r[pos] > 1e-12:
                    tj = lam_w[pos] / r[pos]
                    if tj < t_block or (tj == t_block and j < j_block):
                        t_block, j_block = tj, j
            if apz > 1e-10 * GHiG[p, p]:
                t_full = s[p] / apz
                if t_full <= t_block:
                    lam_w = lam_w - t_full * r
                    lam_p += t_full
                    U = U - t_full * z
                    work.append(p)
                    lam_w = np.append(lam_w, lam_p)
                    break
                lam_w = lam_w - t_block * r
                lam_p += t_block
                U = U - t_block * z
            else:
                # row p depends on the working set: dual-only step
                if j_block < 0:
                    raise InfeasibleProblem(
                        "constraints inconsistent at the requested state"
                    )
                lam_w = lam_w - t_block * r
                lam_p += t_block
            pos = work.index(j_block)
            work.pop(pos)
            lam_w = np.delete(lam_w, pos)
            s = cqp.G @ U - b

    if work:
        # polish: re-solve the equality problem on the final working set
        try:
            U0 = -cqp.HinvFT @ x
            viol0 = cqp.G[work] @ U0 - b[work]
            lam_ref = np.linalg.solve(GHiG[np.ix_(work, work)], viol0)
            if np.min(lam_ref) >= -1e-9:
                U = U0 - HinvGT[:, work] @ lam_ref
                lam_w = lam_ref
        except np.linalg.LinAlgError:
            pass
    lam = np.zeros(q)
    lam[work] = lam_w
    obj = 0.5 * U @ cqp.H @ U + x @ cqp.F @ U + 0.5 * x @ cqp.Y @ x
    return QpResult(
        U=U,
        lam=lam,
        active=active_rows_from_residual(cqp, x, U),
        working=ActiveSet(np.asarray(sorted(work)) + 1),
        obj=float(obj),
        iterations=iters,
    )


def reference_solve(cqp, X, tol: float = 1e-10, max_iter: int = 200000):
    """Accelerated projected gradient on the dual, batched over states.

    The dual of the condensed QP is  min 0.5 lam' M lam + lam' (S x + w)
    over lam >= 0 with M = G H^-1 G'.  Momentum restarts are tracked per
    column so one hard state cannot stall the whole batch.  Stops when the
    absolute projection fixed-point residual max |lam - P(lam - grad)|
    drops below tol; relative measures flatter iterates whose multipliers
    are large while the primal is still off.  X has one state per column
    (a single vector is promoted).  Slow but independent of the active-set
    logic; used to cross-check solve_qp.
    """
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    if single:
        X = X[:, None]
    qlin = cqp.S @ X + cqp.w[:, None]
    M = cqp.GHiG
    L = float(np.linalg.eigvalsh(M)[-1])
    if L <= 0.0:
        lam = np.zeros_like(qlin)
    else:
        lam = np.maximum(0.0, -qlin / L)
        y = lam.copy()
        t_k = np.ones(X.shape[1])
        for it in range(max_iter):
            grad = M @ y + qlin
            lam_next = np.maximum(0.0, y - grad / L)
            # restart the momentum in columns where it points uphill
            up = np.sum((y - lam_next) * (lam_next - lam), axis=0) > 0.0
            t_next = np.where(up, 1.0, 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_k * t_k)))
            beta = np.where(up, 0.0, (t_k - 1.0) / t_next)
            y = lam_next + beta * (lam_next - lam)
            t_k = t_next
            lam = lam_next
            if it % 25 == 24:
                step = lam - np.maximum(0.0, lam - (M @ lam + qlin))
                if np.max(np.abs(step)) <= tol:
                    break
        else:
            raise MaxIterations("projected gradient did not converge")
    Uall = -cqp.HinvFT @ X - cqp.HinvGT @ lam
    return (Uall[:, 0], lam[:, 0]) if single else (Uall, lam)


def kkt_residuals(cqp, x, U, lam) -> dict:
    """Stationarity / primal / complementarity / dual-sign residuals."""
    x = np.asarray(x, dtype=float).ravel()
    b = cqp.w + cqp.E @ x
    grad = cqp.H @ U + cqp.F.T @ x + cqp.G.T @ lam
    viol = cqp.G @ U - b
    return {
        "stationarity": float(np.max(np.abs(grad))),
        "primal": float(np.max(viol)),
        "complementarity": float(np.max(np.abs(lam * viol))),
        "dual_min": float(np.min(lam)) if lam.size else 0.0,
    }
