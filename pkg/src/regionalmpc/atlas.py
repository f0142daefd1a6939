"""Offline atlas of active sets found by gridding the state space.

Solving the QP on a dense grid and keeping one polytope per distinct
active set approximates the explicit solution.  Entries are grouped by
their stage subset: all members of a group share the same feedback head
whenever the head criterion holds, so the union of a group's polytopes is
the widest region on which that feedback can be reused.  The atlas serves
as the best-case comparison column; a grid cannot prove completeness, and
the closed loop therefore always unions the atlas group with the current
candidate family before querying it.
"""

from __future__ import annotations

import json
from collections import defaultdict

import numpy as np

from .errors import AssumptionError, InfeasibleProblem, MaxIterations, RankDeficient
from .families import candidate_family, criterion_applies, stage_subset
from .model import HalfspacePolytope
from .qp import ActiveSet, is_empty, solve_qp, support_value
from .regions import polytope_from_active_set

GRID_POINT_CAP = 10_000_000


class ActiveSetAtlas:
    """Map from each discovered active set to its polytope, grouped by
    stage subset."""

    def __init__(self, q_stage: int):
        self.q_stage = q_stage
        self.entries: dict[ActiveSet, HalfspacePolytope] = {}
        self._groups: dict[ActiveSet, list[ActiveSet]] = defaultdict(list)

    def add(self, active: ActiveSet, poly: HalfspacePolytope) -> None:
        if active in self.entries:
            return
        self.entries[active] = poly
        self._groups[stage_subset(active, self.q_stage)].append(active)

    def group_members(self, atilde: ActiveSet) -> list[ActiveSet]:
        """Active sets sharing the given stage subset, descending value."""
        return sorted(
            self._groups.get(atilde, []), key=lambda a: a.value(), reverse=True
        )

    def group_of(self, atilde: ActiveSet):
        """(ActiveSet, polytope) pairs of a group, descending value."""
        return [(a, self.entries[a]) for a in self.group_members(atilde)]

    def __len__(self):
        return len(self.entries)

    def to_json_dict(self) -> dict:
        return {
            "q_stage": self.q_stage,
            "entries": [
                {
                    "active": list(aset),
                    "C": poly.C.tolist(),
                    "c": poly.c.tolist(),
                }
                for aset, poly in sorted(
                    self.entries.items(), key=lambda kv: kv[0].value()
                )
            ],
        }

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh)
            fh.write("\n")


def gamma_of(atlas: ActiveSetAtlas, active: ActiveSet) -> list[HalfspacePolytope]:
    """Every stored polytope whose active set shares A's stage subset."""
    return [poly for _, poly in atlas.group_of(stage_subset(active, atlas.q_stage))]


def enumerate_by_grid(
    cqp,
    box: HalfspacePolytope,
    pts_per_dim: int,
    enrich_families: bool = False,
) -> ActiveSetAtlas:
    """Solve the QP on a regular grid over the box and collect active sets.

    Infeasible points are skipped; active sets with dependent rows carry no
    polytope and are skipped as well.  With enrich_families, every
    harvested set that satisfies the head criterion also contributes its
    non-empty candidate family members: each of those provably occurs in
    the exact solution, so enrichment only fills grid gaps.
    """
    dim = box.dim
    if pts_per_dim**dim > GRID_POINT_CAP:
        raise AssumptionError(f"{pts_per_dim}^{dim} grid points exceed the cap")
    axes = []
    for i in range(dim):
        e_i = np.zeros(dim)
        e_i[i] = 1.0
        hi = support_value(box, e_i)
        lo = -support_value(box, -e_i)
        axes.append(np.linspace(lo, hi, pts_per_dim))
    atlas = ActiveSetAtlas(cqp.q_stage)
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.stack([m.ravel() for m in mesh], axis=1)
    for x in points:
        try:
            res = solve_qp(cqp, x)
        except (InfeasibleProblem, MaxIterations):
            continue
        if res.active in atlas.entries:
            continue
        try:
            poly = polytope_from_active_set(cqp, res.active)
        except RankDeficient:
            continue
        atlas.add(res.active, poly)
    if enrich_families:
        for aset in list(atlas.entries):
            if not criterion_applies(cqp, aset):
                continue
            for cand in candidate_family(aset, cqp.q_stage):
                if cand in atlas.entries:
                    continue
                try:
                    poly = polytope_from_active_set(cqp, cand)
                except RankDeficient:
                    continue
                if not is_empty(poly):
                    atlas.add(cand, poly)
    return atlas
