"""Feedback laws shared across active sets, and where they can be reused.

The first q_stage constraint rows act on u(0) alone.  Writing Atilde for
the active rows among them, the block triangular structure of G makes the
head of the law depend on Atilde only: whenever G_A has full row rank and
|Atilde| = m, the first-stage block G11 restricted to Atilde is invertible
and

    u(0) = K x + b,   K = (G11_At)^-1 E1_At,   b = (G11_At)^-1 w1_At,

independently of which later-stage rows are active.  Every candidate set
between Atilde and A therefore yields the same feedback, and collecting
their polytopes gives a region on which u(0) can be reused with no QP
solve.  Candidates that cannot occur in the solution have empty polytopes,
so keeping them is sound and pruning them is an optimization.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import AssumptionError, FamilyTooLarge, Singular
from .model import HalfspacePolytope
from .qp import ActiveSet, is_empty
from .regions import RANK_TOL, _row_rank_ok, polytope_from_active_set

FAMILY_CAP = 16  # free indices; 2^16 candidate subsets


def stage_subset(active: ActiveSet, q_stage: int) -> ActiveSet:
    """Active rows constraining u(0) and x(1): the first q_stage indices."""
    return active.head(q_stage)


def criterion_applies(cqp, active: ActiveSet) -> bool:
    """True when the feedback head is pinned down by the first-stage rows.

    Requires G_A of full row rank and exactly m active first-stage rows;
    under full row rank the cardinality test is equivalent to invertibility
    of the first-stage block.
    """
    if len(stage_subset(active, cqp.q_stage)) != cqp.m:
        return False
    return _row_rank_ok(cqp.G[active.zero_based()])


def simplified_feedback(cqp, atilde: ActiveSet):
    """Feedback (K, b) from the first-stage rows alone.

    Raises Singular when the m x m block is not invertible.
    """
    if len(atilde) != cqp.m:
        raise Singular(f"need exactly {cqp.m} first-stage rows, got {len(atilde)}")
    idx = atilde.zero_based()
    if np.any(idx >= cqp.q_stage):
        raise Singular("rows beyond the first stage cannot pin down u(0)")
    block = cqp.G11[idx]
    s = np.linalg.svd(block, compute_uv=False)
    if s[-1] <= RANK_TOL * s[0]:
        raise Singular("first-stage block not invertible")
    K = np.linalg.solve(block, cqp.E1[idx])
    b = np.linalg.solve(block, cqp.w1[idx])
    return K, b


def candidate_family(
    active: ActiveSet, q_stage: int, cap: int = FAMILY_CAP
) -> list[ActiveSet]:
    """All active sets between the stage subset and A, largest first.

    The free indices are the active rows beyond the first stage; every
    subset of them joined with Atilde is a candidate.  Sorted by descending
    binary value, so supersets precede their subsets and A itself is first.
    Raises FamilyTooLarge past ``cap`` free indices.
    """
    atilde = stage_subset(active, q_stage)
    free = sorted(set(active) - set(atilde))
    if len(free) > cap:
        raise FamilyTooLarge(f"{len(free)} free indices exceed the cap of {cap}")
    members = []
    for r in range(len(free) + 1):
        for sub in combinations(free, r):
            members.append(ActiveSet(tuple(atilde) + sub))
    members.sort(key=lambda a: a.value(), reverse=True)
    return members


@dataclass(frozen=True)
class ReuseRegion:
    """One feedback law with every polytope on which it is known optimal."""

    Atilde: ActiveSet
    K: np.ndarray
    b: np.ndarray
    candidates: tuple  # of (ActiveSet, HalfspacePolytope), descending value
    origin_set: ActiveSet

    def feedback(self, x) -> np.ndarray:
        return self.K @ np.asarray(x, dtype=float).ravel() + self.b


def _assemble(cqp, atilde, sets, origin, prune_empty) -> ReuseRegion:
    K, b = simplified_feedback(cqp, atilde)
    kept = []
    for cand in sets:
        if not _row_rank_ok(cqp.G[cand.zero_based()]):
            continue
        poly = polytope_from_active_set(cqp, cand)
        if prune_empty and is_empty(poly):
            continue
        kept.append((cand, poly))
    kept.sort(key=lambda item: item[0].value(), reverse=True)
    return ReuseRegion(
        Atilde=atilde, K=K, b=b, candidates=tuple(kept), origin_set=origin
    )


def build_reuse_region(cqp, active: ActiveSet, prune_empty: bool = False) -> ReuseRegion:
    """Reusable feedback for A's whole candidate family.

    Requires criterion_applies; rank-deficient candidates are dropped and,
    with prune_empty, empty polytopes as well (neither changes any value a
    query can return).  Raises FamilyTooLarge past the family cap.
    """
    if not criterion_applies(cqp, active):
        raise AssumptionError("feedback head not determined by first-stage rows")
    atilde = stage_subset(active, cqp.q_stage)
    sets = candidate_family(active, cqp.q_stage)
    return _assemble(cqp, atilde, sets, active, prune_empty)


def reuse_region_from_sets(
    cqp, sets: list[ActiveSet], prune_empty: bool = False
) -> ReuseRegion:
    """Reuse region from an explicit candidate list (wire-delivered).

    All members must share one stage subset of cardinality m; the largest
    set is taken as the origin.
    """
    if not sets:
        raise AssumptionError("no candidate sets given")
    atilde = stage_subset(sets[0], cqp.q_stage)
    for cand in sets[1:]:
        if stage_subset(cand, cqp.q_stage) != atilde:
            raise AssumptionError("candidates do not share a stage subset")
    origin = max(sets, key=lambda a: a.value())
    return _assemble(cqp, atilde, sets, origin, prune_empty)


def reuse_query(rr: ReuseRegion, x, tol: float = 1e-9):
    """Feedback at x when some stored polytope contains it, else None.

    Polytopes are checked in descending binary order; the first hit wins
    (any hit gives the same feedback, so order only affects speed).
    """
    x = np.asarray(x, dtype=float).ravel()
    for _, poly in rr.candidates:
        if poly.contains(x, tol=tol):
            return rr.K @ x + rr.b
    return None
