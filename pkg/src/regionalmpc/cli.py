"""Command-line front end: simulate | batch | netsim | atlas | dump.

Every output file gets a sibling ``<output>.manifest.json`` recording the
exact invocation, so a run can be reproduced bit-identically later.
"""

from __future__ import annotations

import argparse
import json
import socket
import sys
import threading
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__, netsim
from .atlas import enumerate_by_grid
from .condense import build_condensed_qp
from .errors import InfeasibleProblem, RegionalMpcError
from .model import load_config
from .lqr import complete_ocp
from .qp import vertices_2d
from .simulate import (
    Strategy,
    run_batch,
    sample_initial_states,
    simulate,
    write_trace_csv,
)

STRATEGY_NAMES = {
    "everystep": Strategy.EVERY_STEP,
    "single": Strategy.SINGLE_POLYTOPE,
    "family": Strategy.CANDIDATE_FAMILY,
    "gamma": Strategy.GAMMA_ORACLE,
}


@dataclass(frozen=True)
class RunManifest:
    """Reproducibility sidecar written next to every output file."""

    config: str
    command: list
    seed: int | None
    strategy: str | None
    outputs: list
    version: str

    def write(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(asdict(self), fh, indent=2)
            fh.write("\n")


def _write_manifest(args, outputs, strategy=None, seed=None):
    manifest = RunManifest(
        config=args.config,
        command=sys.argv[1:],
        seed=seed,
        strategy=strategy,
        outputs=list(outputs),
        version=__version__,
    )
    for out in outputs:
        manifest.write(f"{out}.manifest.json")


def _load(args):
    return build_condensed_qp(complete_ocp(load_config(args.config)))


def _atlas_for(cqp, grid: int):
    return enumerate_by_grid(cqp, cqp.spec.Xset, grid)


def _region_vertex_dump(regions) -> dict:
    entries = []
    for aset, poly in regions:
        entry = {"active": list(aset) if aset is not None else None}
        try:
            entry["vertices"] = [list(v) for v in vertices_2d(poly)]
        except RegionalMpcError:
            entry["vertices"] = []
        entries.append(entry)
    return {"regions": entries}


def cmd_simulate(args) -> int:
    cqp = _load(args)
    strategy = STRATEGY_NAMES[args.strategy]
    x0 = np.array([float(v) for v in args.x0.split(",")])
    atlas = _atlas_for(cqp, args.grid) if strategy is Strategy.GAMMA_ORACLE else None
    try:
        trace, regions = simulate(
            cqp, strategy, x0, max_steps=args.max_steps, atlas=atlas,
            collect_regions=True,
        )
    except InfeasibleProblem:
        print("infeasible initial state", file=sys.stderr)
        return 2
    write_trace_csv(trace, args.out)
    outputs = [args.out]
    if cqp.n == 2:
        vertex_path = f"{args.out}.regions.json"
        with open(vertex_path, "w") as fh:
            json.dump(_region_vertex_dump(regions), fh, indent=2)
            fh.write("\n")
        outputs.append(vertex_path)
    _write_manifest(args, outputs, strategy=args.strategy)
    print(f"{trace.steps} steps, {trace.qp_count} QPs solved")
    return 0


def cmd_batch(args) -> int:
    cqp = _load(args)
    names = [s.strip() for s in args.strategies.split(",") if s.strip()]
    for name in names:
        if name not in STRATEGY_NAMES:
            print(f"unknown strategy '{name}'", file=sys.stderr)
            return 1
    atlas = None
    if "gamma" in names:
        atlas = _atlas_for(cqp, args.grid)
    states = sample_initial_states(cqp, args.n, args.seed)
    rows = {}
    for name in names:
        stats, _ = run_batch(
            cqp, STRATEGY_NAMES[name], states, atlas=atlas, seed=args.seed
        )
        rows[name] = stats
    report = {name: stats.as_dict() for name, stats in rows.items()}
    if "single" in rows and "family" in rows:
        saved = rows["single"].total_qps - rows["family"].total_qps
        report["qp_savings"] = {
            "saved": saved,
            "relative_to_single": saved / rows["single"].total_qps,
        }
    with open(args.out, "w") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    _write_manifest(args, [args.out], strategy=args.strategies, seed=args.seed)
    print(f"{'strategy':>10}  {'reuse %':>8}  {'QPs':>6}  {'mean steps':>10}")
    for name, stats in rows.items():
        print(
            f"{name:>10}  {100 * stats.reuse_pct:8.2f}  {stats.total_qps:6d}"
            f"  {stats.mean_steps:10.3f}"
        )
    return 0


def _netsim_sessions(cqp, address, states, l_limit):
    """Run one wire session per initial state; returns total requests."""
    total = 0
    for x0 in states:
        with socket.create_connection(address) as sock:
            stats, _ = netsim.local_run(sock, cqp, x0, l_limit=l_limit)
        total += stats.requests
    return total


def cmd_netsim(args) -> int:
    cqp = _load(args)
    if args.serve:
        port, stop = netsim.serve_tcp("127.0.0.1", args.port, cqp, args.l)
        # flushed so a parent process can scrape the bound port
        print(f"serving on 127.0.0.1:{port}, ctrl-c to stop", flush=True)
        try:
            threading.Event().wait()
        except KeyboardInterrupt:
            stop()
        return 0
    states = sample_initial_states(cqp, args.n, args.seed)
    if args.remote:
        host, _, port = args.remote.partition(":")
        requests = _netsim_sessions(cqp, (host, int(port)), states, args.l)
    else:
        port, stop = netsim.serve_tcp("127.0.0.1", 0, cqp, args.l)
        try:
            requests = _netsim_sessions(cqp, ("127.0.0.1", port), states, args.l)
        finally:
            stop()
    # baseline: one set per response, criterion off (single-polytope node)
    base_port, base_stop = netsim.serve_tcp(
        "127.0.0.1", 0, cqp, 1, apply_criterion=False
    )
    try:
        baseline = _netsim_sessions(cqp, ("127.0.0.1", base_port), states, 1)
    finally:
        base_stop()
    reduction = 1.0 - requests / baseline if baseline else 0.0
    report = {
        "l": args.l,
        "n": args.n,
        "seed": args.seed,
        "requests": requests,
        "baseline_requests": baseline,
        "reduction_pct": 100.0 * reduction,
    }
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(report, fh, indent=2)
            fh.write("\n")
        _write_manifest(args, [args.out], seed=args.seed)
    print(
        f"l={args.l}: {requests} requests vs {baseline} baseline "
        f"({100 * reduction:.1f}% fewer)"
    )
    return 0


def cmd_dump(args) -> int:
    """Static problem data for a local node that only speaks the wire."""
    cqp = _load(args)
    spec = cqp.spec
    payload = cqp.debug_dict()
    payload["A"] = spec.sys.A.tolist()
    payload["B"] = spec.sys.B.tolist()
    payload["Tset"] = {"C": spec.Tset.C.tolist(), "c": spec.Tset.c.tolist()}
    with open(args.out, "w") as fh:
        json.dump(payload, fh)
        fh.write("\n")
    _write_manifest(args, [args.out])
    print(f"problem data: {cqp.n} states, {cqp.m} inputs, {cqp.q} rows")
    return 0


def cmd_atlas(args) -> int:
    cqp = _load(args)
    atlas = enumerate_by_grid(
        cqp, cqp.spec.Xset, args.grid, enrich_families=args.enrich
    )
    atlas.save(args.out)
    _write_manifest(args, [args.out])
    print(f"{len(atlas)} active sets over a {args.grid}^{cqp.n} grid")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="regionalmpc",
        description="Regional feedback reuse for linear MPC",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="single closed-loop trajectory")
    sim.add_argument("--config", required=True)
    sim.add_argument("--x0", required=True, help="comma-separated state")
    sim.add_argument(
        "--strategy", default="family", choices=sorted(STRATEGY_NAMES)
    )
    sim.add_argument("--out", required=True, help="trace CSV path")
    sim.add_argument("--max-steps", type=int, default=1000)
    sim.add_argument("--grid", type=int, default=201, help="gamma atlas grid")
    sim.set_defaults(func=cmd_simulate)

    batch = sub.add_parser("batch", help="reuse statistics over random states")
    batch.add_argument("--config", required=True)
    batch.add_argument("--n", type=int, default=1000)
    batch.add_argument("--seed", type=int, default=42)
    batch.add_argument("--strategies", default="single,family")
    batch.add_argument("--grid", type=int, default=201, help="gamma atlas grid")
    batch.add_argument("--out", required=True, help="stats JSON path")
    batch.set_defaults(func=cmd_batch)

    net = sub.add_parser("netsim", help="central/local split over TCP")
    net.add_argument("--config", required=True)
    net.add_argument("--n", type=int, default=1000)
    net.add_argument("--seed", type=int, default=42)
    net.add_argument("--l", type=int, default=50, help="sets per response")
    net.add_argument("--remote", help="host:port of an external central node")
    net.add_argument(
        "--serve", action="store_true", help="run a central node only"
    )
    net.add_argument("--port", type=int, default=0, help="with --serve")
    net.add_argument("--out", help="report JSON path")
    net.set_defaults(func=cmd_netsim)

    atl = sub.add_parser("atlas", help="enumerate active sets over a grid")
    atl.add_argument("--config", required=True)
    atl.add_argument("--grid", type=int, default=201)
    atl.add_argument(
        "--enrich", action="store_true",
        help="also add candidate sets of criterion-passing entries",
    )
    atl.add_argument("--out", required=True, help="atlas JSON path")
    atl.set_defaults(func=cmd_atlas)

    dump = sub.add_parser("dump", help="export static problem data")
    dump.add_argument("--config", required=True)
    dump.add_argument("--out", required=True, help="problem JSON path")
    dump.set_defaults(func=cmd_dump)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except RegionalMpcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
