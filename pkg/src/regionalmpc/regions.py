"""From an active set to its affine law and polytope of validity.

Fixing the set A of constraints that hold with equality turns the QP into
an equality-constrained problem with a closed-form solution: the optimizer
is affine in the state,

    U(x) = Kbar x + bbar,
    Kbar = H^-1 G_A' W S_A - H^-1 F',   bbar = H^-1 G_A' W w_A,

with W = (G_A H^-1 G_A')^-1, valid on the polytope where the multipliers
stay nonnegative (first row block below) and the inactive rows stay
feasible (second block).  The first m rows of (Kbar, bbar) are the feedback
actually applied in closed loop.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyPolytope, RankDeficient
from .model import HalfspacePolytope
from .qp import ActiveSet, chebyshev_center

RANK_TOL = 1e-9


@dataclass(frozen=True)
class RegionalLaw:
    """Affine law, its feedback head and the polytope where it is optimal."""

    Kbar: np.ndarray
    bbar: np.ndarray
    K: np.ndarray
    b: np.ndarray
    region: HalfspacePolytope
    source: ActiveSet

    def sequence(self, x) -> np.ndarray:
        """Full input sequence prescribed at x."""
        return self.Kbar @ np.asarray(x, dtype=float).ravel() + self.bbar

    def feedback(self, x) -> np.ndarray:
        """First input only: u = K x + b."""
        return self.K @ np.asarray(x, dtype=float).ravel() + self.b


def _row_rank_ok(G_A: np.ndarray) -> bool:
    if G_A.shape[0] == 0:
        return True
    if G_A.shape[0] > G_A.shape[1]:
        return False
    s = np.linalg.svd(G_A, compute_uv=False)
    return s[-1] > RANK_TOL * s[0]


def control_law_from_active_set(cqp, active: ActiveSet):
    """Affine optimizer (Kbar, bbar) for the given active rows.

    Raises RankDeficient unless G_A has full row rank.  The empty set gives
    the unconstrained law (-H^-1 F', 0).
    """
    idx = active.zero_based()
    G_A = cqp.G[idx]
    if not _row_rank_ok(G_A):
        raise RankDeficient(f"rows {tuple(active)} are linearly dependent")
    if len(idx) == 0:
        return -cqp.HinvFT.copy(), np.zeros(cqp.m * cqp.N)
    W = np.linalg.inv(cqp.GHiG[np.ix_(idx, idx)])
    HiGA = cqp.HinvGT[:, idx]
    Kbar = HiGA @ W @ cqp.S[idx] - cqp.HinvFT
    bbar = HiGA @ W @ cqp.w[idx]
    return Kbar, bbar


def polytope_from_active_set(cqp, active: ActiveSet) -> HalfspacePolytope:
    """Polytope on which the law of ``active`` solves the QP.

    Top rows keep the multipliers of the active rows nonnegative, bottom
    rows keep the remaining constraints satisfied.  Rows are scaled to unit
    norm (zero rows are kept as they are: with a negative offset they encode
    emptiness).  Raises RankDeficient unless G_A has full row rank.
    """
    idx = active.zero_based()
    G_A = cqp.G[idx]
    if not _row_rank_ok(G_A):
        raise RankDeficient(f"rows {tuple(active)} are linearly dependent")
    mask = np.ones(cqp.q, dtype=bool)
    mask[idx] = False
    S_I = cqp.S[mask]
    w_I = cqp.w[mask]
    if len(idx) == 0:
        T = -S_I
        d = w_I.copy()
    else:
        W = np.linalg.inv(cqp.GHiG[np.ix_(idx, idx)])
        C = cqp.GHiG[np.ix_(np.nonzero(mask)[0], idx)]  # = G_I H^-1 G_A'
        T = np.vstack([W @ cqp.S[idx], C @ W @ cqp.S[idx] - S_I])
        d = np.concatenate([-W @ cqp.w[idx], w_I - C @ W @ cqp.w[idx]])
    norms = np.linalg.norm(T, axis=1)
    nz = norms > 0.0
    T[nz] /= norms[nz, None]
    d[nz] /= norms[nz]
    return HalfspacePolytope(T, d)


def feedback_head(Kbar: np.ndarray, bbar: np.ndarray, m: int):
    """First m rows: the part of the law applied to the plant."""
    return Kbar[:m], bbar[:m]


def regional_law(cqp, active: ActiveSet) -> RegionalLaw:
    """Bundle law, feedback head and validity polytope for an active set."""
    Kbar, bbar = control_law_from_active_set(cqp, active)
    K, b = feedback_head(Kbar, bbar, cqp.m)
    region = polytope_from_active_set(cqp, active)
    return RegionalLaw(Kbar=Kbar, bbar=bbar, K=K, b=b, region=region, source=active)


def interior_samples(
    poly: HalfspacePolytope, count: int, rng: np.random.Generator
) -> np.ndarray:
    """Strictly interior points, one per row: center plus random rays.

    Shoots a random direction from the Chebyshev center and steps a random
    fraction of the distance to the boundary.  Polytopes can be thin, so
    sampling leans on the center rather than on rejection from a box.
    """
    center, radius = chebyshev_center(poly)
    if radius <= 1e-12:
        raise EmptyPolytope("polytope has no interior to sample")
    slack = poly.c - poly.C @ center
    out = np.empty((count, poly.dim))
    for i in range(count):
        d = rng.standard_normal(poly.dim)
        d /= np.linalg.norm(d)
        steps = poly.C @ d
        pos = steps > 1e-12
        t_max = np.min(slack[pos] / steps[pos]) if np.any(pos) else radius
        out[i] = center + rng.uniform(0.0, 0.9) * t_max * d
    return out
