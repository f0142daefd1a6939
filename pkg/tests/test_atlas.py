"""Grid-harvested catalogue of active sets grouped by stage subset."""

import json

import numpy as np

from regionalmpc import ActiveSet, solve_qp
from regionalmpc.atlas import enumerate_by_grid, gamma_of
from regionalmpc.errors import EmptyPolytope, Unbounded
from regionalmpc.errors import RankDeficient
from regionalmpc.families import candidate_family, criterion_applies, stage_subset
from regionalmpc.qp import is_empty
from regionalmpc.regions import interior_samples, polytope_from_active_set

SATURATED_HI = ActiveSet([1])
SATURATED_LO = ActiveSet([2])


def test_saturated_groups_have_expected_size(atlas201):
    # both input-saturated groups: 26 regions up to grid coverage (+-4)
    for atilde in (SATURATED_HI, SATURATED_LO):
        members = atlas201.group_members(atilde)
        assert 22 <= len(members) <= 30
        for aset in members:
            assert stage_subset(aset, atlas201.q_stage) == atilde


def test_gamma_region_collects_whole_group(ex1, atlas201):
    polys = gamma_of(atlas201, ActiveSet([1, 7, 13]))
    assert len(polys) == len(atlas201.group_members(SATURATED_HI))
    assert 22 <= len(polys) <= 30


def test_first_input_constant_per_group(ex1, atlas201):
    # within one stage-subset group the applied input never changes
    rng = np.random.default_rng(71)
    for aset, poly in atlas201.group_of(SATURATED_HI)[:8]:
        if not criterion_applies(ex1, aset):
            continue
        try:
            samples = interior_samples(poly, 5, rng)
        except (EmptyPolytope, Unbounded):
            continue
        inputs = [solve_qp(ex1, x).U[: ex1.m] for x in samples]
        for u in inputs[1:]:
            assert np.max(np.abs(u - inputs[0])) <= 1e-6


def test_coarser_grid_is_subset_of_finer(ex1, atlas201):
    coarse = enumerate_by_grid(ex1, ex1.spec.Xset, 101)
    for aset in coarse.entries:
        assert aset in atlas201.entries


def test_enrichment_contains_candidate_members(ex1, atlas101e):
    # every non-empty candidate of a qualifying entry is itself an entry
    for aset in list(atlas101e.entries):
        if not criterion_applies(ex1, aset):
            continue
        for cand in candidate_family(aset, ex1.q_stage):
            if cand in atlas101e.entries:
                continue
            # missing members must be empty or rank deficient
            try:
                poly = polytope_from_active_set(ex1, cand)
            except RankDeficient:
                continue
            assert is_empty(poly)


def test_json_dump_shape(tmp_path, atlas201):
    path = tmp_path / "atlas.json"
    atlas201.save(path)
    raw = json.loads(path.read_text())
    assert raw["q_stage"] == 6
    assert len(raw["entries"]) == len(atlas201)
    entry = raw["entries"][0]
    assert set(entry) >= {"active", "C", "c"}
    assert isinstance(entry["active"], list)
