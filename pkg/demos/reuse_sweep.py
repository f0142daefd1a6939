"""Reuse statistics over a random batch, all four strategies.

Usage:  python3 demos/reuse_sweep.py [--config configs/ex1.json] [--n 200]

The gamma column needs an offline atlas.  For the 2-state example it is
gridded; for anything bigger the atlas is harvested from the trajectories
the batch itself visits (a dense grid in 4 dimensions is not tractable).
"""

import argparse
import time

from regionalmpc import complete_ocp, load_config
from regionalmpc.atlas import ActiveSetAtlas, enumerate_by_grid
from regionalmpc.condense import build_condensed_qp
from regionalmpc.errors import FamilyTooLarge, RankDeficient
from regionalmpc.families import candidate_family, criterion_applies
from regionalmpc.qp import is_empty, solve_qp
from regionalmpc.regions import polytope_from_active_set
from regionalmpc.simulate import Strategy, run_batch, sample_initial_states

parser = argparse.ArgumentParser()
parser.add_argument("--config", default="configs/ex1.json")
parser.add_argument("--n", type=int, default=200)
parser.add_argument("--seed", type=int, default=42)
args = parser.parse_args()

cqp = build_condensed_qp(complete_ocp(load_config(args.config)))
states = sample_initial_states(cqp, args.n, args.seed)


def harvested_atlas(traces):
    atlas = ActiveSetAtlas(cqp.q_stage)
    for tr in traces:
        for x in tr.states[:-1]:
            res = solve_qp(cqp, x)
            if res.active in atlas.entries:
                continue
            sets = [res.active]
            if criterion_applies(cqp, res.active):
                try:
                    sets += candidate_family(res.active, cqp.q_stage)
                except FamilyTooLarge:
                    pass
            for aset in sets:
                if aset in atlas.entries:
                    continue
                try:
                    poly = polytope_from_active_set(cqp, aset)
                except RankDeficient:
                    continue
                if aset != res.active and is_empty(poly):
                    continue
                atlas.add(aset, poly)
    return atlas


print(f"{args.config}: n={args.n} seed={args.seed} "
      f"(state dim {cqp.n}, {cqp.q} stacked rows)")
print(f"{'strategy':>10}  {'reuse %':>8}  {'QPs':>6}  {'wall':>6}")

results = {}
for strat in (Strategy.EVERY_STEP, Strategy.SINGLE_POLYTOPE, Strategy.CANDIDATE_FAMILY):
    t0 = time.perf_counter()
    st, tr = run_batch(cqp, strat, states, seed=args.seed)
    results[strat.value] = (st, tr)
    print(f"{strat.value:>10}  {100 * st.reuse_pct:8.2f}  {st.total_qps:6d}"
          f"  {time.perf_counter() - t0:5.1f}s")

t0 = time.perf_counter()
if cqp.n == 2:
    atlas = enumerate_by_grid(cqp, cqp.spec.Xset, 201)
    source = "201x201 grid"
else:
    atlas = harvested_atlas(results["everystep"][1])
    source = "trajectory harvest"
st, _ = run_batch(cqp, Strategy.GAMMA_ORACLE, states, atlas=atlas, seed=args.seed)
print(f"{'gamma':>10}  {100 * st.reuse_pct:8.2f}  {st.total_qps:6d}"
      f"  {time.perf_counter() - t0:5.1f}s  ({len(atlas)} sets, {source})")

single = results["single"][0]
family = results["family"][0]
saved = single.total_qps - family.total_qps
print()
print(f"family vs single: {saved} fewer QP solves "
      f"({100 * saved / single.total_qps:.1f}% of the single-polytope count)")
