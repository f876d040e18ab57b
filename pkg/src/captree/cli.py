"""Benchmark and utility command-line front-end.

Subcommands: filter, build, query, bench, dispersion, gen.
Exit codes: 0 success, 1 usage error, 2 data error, 3 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time

import numpy as np

from . import bench as bench_mod
from .bench import (BenchReport, VerificationError, capt_verdicts, kd_verdicts,
                    median_time, oracle_check_trace, query_phase, verify_trace)
from .io import ParseError, read_trace, read_xyz, write_trace, write_xyz
from .morton import FilterConfig, filter_cloud
from .oracle import KdTree, dispersion_stats
from .synth import CLOUD_KINDS, WORKLOADS, gen_cloud, gen_queries
from .tree import BuildParams, construct, load_capt, save_capt

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_VERIFY = 3

ORACLE_CHECK_MAX_POINTS = 4096


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def _build_parser() -> _Parser:
    p = _Parser(prog="captree",
                description="Point-cloud collision tree toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("filter", parents=[], help="downsample a cloud")
    f.add_argument("input")
    f.add_argument("output")
    f.add_argument("--r-filter", type=float, required=True)
    f.add_argument("--base", type=float, nargs=3, metavar=("X", "Y", "Z"))
    f.add_argument("--reach", type=float)

    b = sub.add_parser("build", help="build and dump a tree")
    b.add_argument("input")
    b.add_argument("output")
    b.add_argument("--r-min", type=float, default=0.01)
    b.add_argument("--r-max", type=float, default=0.08)

    q = sub.add_parser("query", help="replay a query trace against a tree")
    q.add_argument("tree")
    q.add_argument("trace")
    q.add_argument("--mode", choices=("scalar", "batch"), default="batch")
    q.add_argument("--no-aabb-prefilter", action="store_true")
    q.add_argument("--lane-width", type=int, default=8)
    q.add_argument("--repetitions", type=int, default=3)
    q.add_argument("--check-only", action="store_true",
                   help="verify verdicts only; emit no timing fields")
    q.add_argument("--json", dest="json_out", help="write report JSON here")

    be = sub.add_parser("bench", help="run a filter/build/query suite")
    be.add_argument("config", help="JSON configuration file")
    be.add_argument("--out-json")
    be.add_argument("--out-csv")
    be.add_argument("--check-only", action="store_true")

    d = sub.add_parser("dispersion", help="nearest-neighbor dispersion stats")
    d.add_argument("input")

    g = sub.add_parser("gen", help="generate synthetic clouds and traces")
    gsub = g.add_subparsers(dest="what", required=True)
    gc = gsub.add_parser("cloud")
    gc.add_argument("--kind", choices=CLOUD_KINDS, required=True)
    gc.add_argument("--points", type=int, required=True)
    gc.add_argument("--out", required=True)
    gc.add_argument("--seed", type=int, default=0)
    gc.add_argument("--side", type=float, default=1.0)
    gt = gsub.add_parser("trace")
    gt.add_argument("--cloud", required=True)
    gt.add_argument("--out", required=True)
    gt.add_argument("--count", type=int, required=True)
    gt.add_argument("--workload", choices=WORKLOADS, default="mixed")
    gt.add_argument("--batch", type=int, default=8)
    gt.add_argument("--r-min", type=float, default=0.01)
    gt.add_argument("--r-max", type=float, default=0.08)
    gt.add_argument("--mix", default="1:1:1",
                    help="all:none:partial batch ratio for mixed workloads")
    gt.add_argument("--seed", type=int, default=0)
    return p


def _cmd_filter(args) -> int:
    cloud = read_xyz(args.input)
    cfg = FilterConfig(r_filter=args.r_filter,
                       base=np.asarray(args.base) if args.base else None,
                       max_reach=args.reach)
    t0 = time.perf_counter()
    out = filter_cloud(cloud, cfg)
    elapsed = time.perf_counter() - t0
    write_xyz(out, args.output)
    print(f"filtered {len(cloud)} -> {len(out)} points "
          f"(r_filter={args.r_filter} m) in {elapsed * 1e3:.2f} ms")
    return EXIT_OK


def _cmd_build(args) -> int:
    cloud = read_xyz(args.input)
    params = BuildParams(r_min=args.r_min, r_max=args.r_max)
    t0 = time.perf_counter()
    tree = construct(cloud, params)
    elapsed = time.perf_counter() - t0
    save_capt(tree, args.output)
    s = tree.stats()
    print(f"built tree over {s.n_points} points in {elapsed * 1e3:.2f} ms")
    print(f"  leaves={s.n_leaves} max_affordance={s.max_affordance} "
          f"mean_affordance={s.mean_affordance:.2f} "
          f"stored={s.total_stored} memory={s.memory_bytes} B")
    return EXIT_OK


def _cmd_query(args) -> int:
    tree = load_capt(args.tree)
    records = read_trace(args.trace)
    prefilter = not args.no_aabb_prefilter
    for rec in records:
        for r in rec.radii:
            if not (tree.r_min <= float(r) <= tree.r_max):
                raise ValueError(
                    f"batch {rec.batch_id}: radius {float(r)} outside "
                    f"[{tree.r_min}, {tree.r_max}]")
    verdicts = capt_verdicts(tree, records, mode=args.mode,
                             lane_width=args.lane_width,
                             use_aabb_prefilter=prefilter)
    verify_trace(records, verdicts)
    report = {
        "mode": args.mode,
        "lane_width": args.lane_width,
        "aabb_prefilter": prefilter,
        "n_batches": len(records),
        "n_spheres": int(sum(len(r) for r in records)),
        "n_colliding_batches": int(verdicts.sum()),
    }
    if not args.check_only:
        report.update(query_phase(tree, records, mode=args.mode,
                                  lane_width=args.lane_width,
                                  use_aabb_prefilter=prefilter,
                                  repetitions=args.repetitions))
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.json_out:
        with open(args.json_out, "w") as f:
            f.write(text + "\n")
    print(text)
    return EXIT_OK


def _cmd_dispersion(args) -> int:
    cloud = read_xyz(args.input)
    stats = dispersion_stats(cloud)
    print(json.dumps({"count": stats.count, "mean": stats.mean,
                      "median": stats.median, "p95": stats.p95},
                     indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_gen(args) -> int:
    if args.what == "cloud":
        cloud = gen_cloud(args.kind, args.points, seed=args.seed, side=args.side)
        write_xyz(cloud, args.out)
        print(f"wrote {len(cloud)} points to {args.out}")
    else:
        cloud = read_xyz(args.cloud)
        params = BuildParams(r_min=args.r_min, r_max=args.r_max)
        mix = tuple(float(v) for v in args.mix.split(":"))
        records = gen_queries(cloud, params, args.count,
                              workload=args.workload, batch_size=args.batch,
                              mix=mix, seed=args.seed)
        write_trace(records, args.out)
        n = sum(len(r) for r in records)
        print(f"wrote {n} spheres in {len(records)} batches to {args.out}")
    return EXIT_OK


def _bench_scene(scene: dict, defaults: dict, check_only: bool,
                 reports: list) -> None:
    name = scene.get("name", "scene")
    params = BuildParams(r_min=scene.get("r_min", defaults["r_min"]),
                         r_max=scene.get("r_max", defaults["r_max"]))
    lane_width = int(scene.get("lane_width", defaults["lane_width"]))
    repetitions = int(scene.get("repetitions", defaults["repetitions"]))
    mode = scene.get("mode", "batch")
    spec = scene["cloud"]
    if "path" in spec:
        cloud = read_xyz(spec["path"])
    else:
        cloud = gen_cloud(spec["kind"], spec["points"],
                          seed=spec.get("seed", 0),
                          **{k: v for k, v in spec.items()
                             if k not in ("kind", "points", "seed")})
    qspec = scene.get("queries", {})
    sweep = scene.get("r_filter", [0.0])
    if not isinstance(sweep, (list, tuple)):
        sweep = [sweep]
    for r_filter in sweep:
        cfg = FilterConfig(r_filter=float(r_filter))
        filter_ms = None
        if check_only:
            filtered = filter_cloud(cloud, cfg)
        else:
            t0 = time.perf_counter()
            filtered = filter_cloud(cloud, cfg)
            filter_ms = (time.perf_counter() - t0) * 1e3
        build_ms = None
        if check_only:
            tree = construct(filtered, params)
        else:
            build_ms = median_time(lambda: construct(filtered, params),
                                   repetitions=repetitions) * 1e3
            tree = construct(filtered, params)
        records = gen_queries(
            filtered, params, int(qspec.get("count", 1000)),
            workload=qspec.get("workload", "mixed"),
            batch_size=int(qspec.get("batch", lane_width)),
            mix=tuple(qspec.get("mix", (1, 1, 1))),
            seed=int(qspec.get("seed", 0)))
        verdicts = capt_verdicts(tree, records, mode=mode, lane_width=lane_width)
        verify_trace(records, verdicts)
        checked = 0
        if len(filtered) <= ORACLE_CHECK_MAX_POINTS:
            checked = oracle_check_trace(tree, filtered, records)
        s = tree.stats()
        report = BenchReport(
            name=f"{name}/r_filter={r_filter}",
            cloud_size_before=len(cloud), cloud_size_after=len(filtered),
            n_leaves=s.n_leaves, max_affordance=s.max_affordance,
            mean_affordance=s.mean_affordance, total_stored=s.total_stored,
            memory_bytes=s.memory_bytes, lane_width=lane_width, mode=mode,
            n_batches=len(records),
            n_spheres=int(sum(len(r) for r in records)),
            filter_ms=filter_ms, build_ms=build_ms, oracle_checked=checked)
        if not check_only:
            report.__dict__.update(query_phase(
                tree, records, mode=mode, lane_width=lane_width,
                repetitions=repetitions))
            if scene.get("baseline", True):
                kd = KdTree(filtered)
                t = median_time(lambda: kd_verdicts(kd, records),
                                repetitions=repetitions)
                report.baseline_ns_all = t * 1e9 / report.n_spheres
                kd_bits = kd_verdicts(kd, records)
                if not np.array_equal(kd_bits, verdicts):
                    raise VerificationError(
                        f"{report.name}: baseline verdicts disagree")
        reports.append(report)


def _cmd_bench(args) -> int:
    with open(args.config) as f:
        config = json.load(f)
    defaults = {
        "r_min": config.get("r_min", 0.01),
        "r_max": config.get("r_max", 0.08),
        "lane_width": config.get("lane_width", 8),
        "repetitions": config.get("repetitions", 3),
    }
    reports: list[BenchReport] = []
    for scene in config.get("scenes", []):
        _bench_scene(scene, defaults, args.check_only, reports)
    payload = [r.to_dict() for r in reports]
    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.out_json:
        with open(args.out_json, "w") as f:
            f.write(text + "\n")
    if args.out_csv:
        fields = list(BenchReport.__dataclass_fields__.keys())
        fields.remove("extra")
        with open(args.out_csv, "w", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=fields, extrasaction="ignore")
            writer.writeheader()
            for row in payload:
                writer.writerow({k: row.get(k) for k in fields})
    print(text)
    return EXIT_OK


_COMMANDS = {
    "filter": _cmd_filter,
    "build": _cmd_build,
    "query": _cmd_query,
    "bench": _cmd_bench,
    "dispersion": _cmd_dispersion,
    "gen": _cmd_gen,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except VerificationError as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except (ParseError, ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
