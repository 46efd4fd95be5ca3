"""Command-line entry point: generate, admit, simulate, compare."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import io
from .cgx import build_master, cgx_admit, write_iteration_csv
from .generate import GenSpec, generate_flows, generate_topology
from .lp import write_mps
from .model import us_to_ns, validate_instance
from .ospf import ospf_admit, throughput_gap
from .solution import check_solution

EXIT_OK, EXIT_INPUT, EXIT_NO_INCUMBENT, EXIT_BOUND = 0, 2, 3, 4

log = logging.getLogger("dldn")


class InputError(Exception):
    pass


def default_seed() -> int:
    raw = os.environ.get("DLDN_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise InputError(f"DLDN_SEED must be an integer, got {raw!r}") from None


@dataclass
class RunManifest:
    """Resolved settings of a sweep, also accepted as a JSON file."""

    axis: str = "deadline"
    levels: list[int] = field(default_factory=lambda: [10])
    deadlines_us: list[float] = field(default_factory=lambda: [1000])
    flow_counts: list[int] = field(default_factory=lambda: [50, 100, 200, 350, 500])
    nodes: int = 50
    links: int = 106
    seed: int = 0
    time_limit_s: float = 300.0

    def violations(self) -> list[str]:
        out = []
        if self.axis not in ("level", "deadline"):
            out.append(f"axis must be 'level' or 'deadline', got {self.axis!r}")
        if not self.levels or not self.deadlines_us or not self.flow_counts:
            out.append("sweep lists must be non-empty")
        return out


# -- generate -------------------------------------------------------------------

def _spec_from_args(args) -> GenSpec:
    base = {}
    if args.spec:
        try:
            base = json.loads(Path(args.spec).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise InputError(f"cannot read spec file: {exc}") from None
    flags = {"nodes": args.nodes, "links": args.links, "level": args.level, "flows": args.flows,
             "deadline_us": args.deadline_us, "seed": args.seed}
    merged = {**base, **{k: v for k, v in flags.items() if v is not None}}
    missing = [k for k in ("nodes", "links", "level", "flows", "deadline_us") if k not in merged]
    if missing:
        raise InputError("missing " + ", ".join("--" + k.replace("_", "-") for k in missing))
    try:
        return GenSpec(
            nodes=int(merged["nodes"]), links=int(merged["links"]), level=int(merged["level"]),
            flows=int(merged["flows"]), deadline_ns=us_to_ns(merged["deadline_us"]),
            seed=int(merged.get("seed", default_seed())),
            max_prop_ns=us_to_ns(merged.get("max_prop_us", 40)),
            burst_bytes=int(merged.get("burst_bytes", 1500)),
            T_ns=us_to_ns(merged.get("T_us", 10)), HC=int(merged.get("HC", 8)),
            N=int(merged.get("N", 3)), P_ns=us_to_ns(merged.get("P_us", 1)))
    except (ValueError, TypeError) as exc:
        raise InputError(str(exc)) from None


def cmd_generate(args) -> int:
    spec = _spec_from_args(args)
    bad = spec.violations()
    if bad:
        raise InputError("; ".join(bad))
    instance = generate_topology(spec)
    flows = generate_flows(spec, instance)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    io.save_instance(out / args.instance_name, instance)
    io.save_flows(out / args.flows_name, flows)
    print(f"wrote {out / args.instance_name} ({len(instance.nodes)} nodes, {len(instance.arcs)} arcs) "
          f"and {out / args.flows_name} ({len(flows)} flows)")
    return EXIT_OK


# -- admit ----------------------------------------------------------------------

def _load(args):
    try:
        instance, flows = io.load_instance(args.instance, args.flows)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise InputError(f"cannot load instance: {exc}") from None
    bad = validate_instance(instance, flows)
    if bad:
        raise InputError("invalid instance: " + "; ".join(bad[:5]))
    return instance, flows


def cmd_admit(args) -> int:
    instance, flows = _load(args)
    if args.algorithm == "ospf":
        solution = ospf_admit(instance, flows)
        rows, ub, gap, status = [], None, None, "optimal"
    else:
        solution, report = cgx_admit(instance, flows, args.time_limit_s, args.cg_share)
        rows, ub, gap, status = report.log, report.ub, report.gap_percent, report.ilp_status
        if args.mps:
            write_mps(build_master(instance, flows, report.columns).as_binary(), args.mps)
    problems = check_solution(instance, flows, solution)
    if problems:
        print("internal error: solution fails the integer recheck: " + problems[0], file=sys.stderr)
        return EXIT_BOUND
    io.save_solution(args.out, solution, flows)
    if args.report:
        write_iteration_csv(rows, args.report)
    line = f"algorithm={solution.algorithm} accepted={len(solution.accepted)}/{len(flows)} Th_bps={solution.throughput}"
    if ub is not None:
        line += f" UB_bps={ub:.6g} gap_percent={gap:.4f}"
    print(line)
    if status == "time-limit" and not solution.accepted and flows:
        return EXIT_NO_INCUMBENT
    return EXIT_OK


# -- simulate -------------------------------------------------------------------

def cmd_simulate(args) -> int:
    from .sim import BUNDLES, AdmissionMismatch, SimConfig, check_invariants, run_simulation, write_stats_csv

    if args.bundle:
        bundle = BUNDLES[args.bundle]()
        instance, flows, solution, traffic = bundle.instance, bundle.flows, bundle.solution, bundle.traffic
        horizon = bundle.horizon_ns
    else:
        if not args.instance or not args.solution:
            raise InputError("simulate needs --instance and --solution, or --bundle")
        instance, flows = _load(args)
        try:
            solution = io.load_solution(args.solution, instance, flows)
            traffic = io.load_traffic(args.traffic) if args.traffic else []
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise InputError(f"cannot load solution or traffic: {exc}") from None
        horizon = None
    if args.horizon_us is not None:
        horizon = us_to_ns(args.horizon_us)
    if horizon is None:
        horizon = 10 * instance.cycle.HC * instance.cycle.T
    drift = {}
    if args.drift_ppm:
        drift = {v: args.drift_ppm for v in instance.node}
    config = SimConfig(horizon, args.seed, drift)
    try:
        result = run_simulation(instance, flows, solution, traffic, config)
    except AdmissionMismatch as exc:
        raise InputError(str(exc)) from None
    for w in result.warnings:
        print(f"warning: {w}", file=sys.stderr)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result.trace.write_csv(out / "trace.csv")
    write_stats_csv(result.stats, out / "stats.csv")
    report = check_invariants(result.trace)
    for s in result.stats:
        print(f"flow {s.flow_id}: packets={s.packets} jitter_ns={s.jitter} bound_ns={s.bound} "
              f"max_e2e_ns={s.max_e2e} {'ok' if s.ok else 'VIOLATION'}")
    print(f"invariants: {'ok' if report.ok else report.counts} over {report.packets} packets, "
          f"{report.same_cycle_pairs} same-cycle pairs")
    for f in result.faults[:10]:
        print(f"fault: {f}", file=sys.stderr)
    return EXIT_OK if (result.ok and report.ok) else EXIT_BOUND


# -- compare --------------------------------------------------------------------

RESULT_COLUMNS = ["axis", "value", "flows", "Th_cgx_bps", "Th_ospf_bps", "gap_percent", "opt_gap_percent",
                  "UB_bps", "accepted_cgx", "accepted_ospf", "termination", "failures"]


def _manifest(args) -> RunManifest:
    m = RunManifest(seed=default_seed())
    if args.manifest:
        try:
            doc = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
            m = RunManifest(**{**asdict(m), **doc})
        except (OSError, ValueError, TypeError) as exc:
            raise InputError(f"bad manifest: {exc}") from None
    for key in ("axis", "levels", "deadlines_us", "flow_counts", "nodes", "links", "seed", "time_limit_s"):
        v = getattr(args, key, None)
        if v is not None:
            setattr(m, key, v)
    bad = m.violations()
    if bad:
        raise InputError("; ".join(bad))
    return m


def sweep_rows(m: RunManifest):
    """Yield (result row, wall seconds) for every sweep point, in manifest order."""
    values = m.levels if m.axis == "level" else m.deadlines_us
    for value in values:
        for count in m.flow_counts:
            level = value if m.axis == "level" else m.levels[0]
            deadline = value if m.axis == "deadline" else m.deadlines_us[0]
            row = {"axis": m.axis, "value": value, "flows": count}
            start = time.monotonic()
            try:
                spec = GenSpec(nodes=m.nodes, links=m.links, level=int(level), flows=count,
                               deadline_ns=us_to_ns(deadline), seed=m.seed)
                instance = generate_topology(spec)
                flows = generate_flows(spec, instance)
                cgx, report = cgx_admit(instance, flows, m.time_limit_s)
                ospf = ospf_admit(instance, flows)
                gap = throughput_gap(cgx, ospf)
                row.update({
                    "Th_cgx_bps": cgx.throughput, "Th_ospf_bps": ospf.throughput,
                    "gap_percent": "" if gap is None else f"{gap:.6f}",
                    "opt_gap_percent": f"{report.gap_percent:.6f}", "UB_bps": f"{report.ub:.1f}",
                    "accepted_cgx": len(cgx.accepted), "accepted_ospf": len(ospf.accepted),
                    "termination": report.termination, "failures": 0})
            except Exception as exc:  # recorded per row, the sweep goes on
                log.error("sweep point %s=%s flows=%s failed: %s", m.axis, value, count, exc)
                row.update({k: "" for k in RESULT_COLUMNS if k not in row})
                row.update({"termination": f"error: {exc}", "failures": 1})
            yield row, time.monotonic() - start


def cmd_compare(args) -> int:
    m = _manifest(args)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    timing_path = Path(args.timing) if args.timing else out.with_name(out.stem + "_timing.csv")
    with open(out, "w", newline="", encoding="utf-8") as fh, \
            open(timing_path, "w", newline="", encoding="utf-8") as th:
        w = csv.DictWriter(fh, RESULT_COLUMNS)
        w.writeheader()
        tw = csv.writer(th)
        tw.writerow(["axis", "value", "flows", "wall_s"])
        for row, wall in sweep_rows(m):
            w.writerow(row)
            tw.writerow([row["axis"], row["value"], row["flows"], f"{wall:.3f}"])
            print(f"{m.axis}={row['value']} flows={row['flows']} gap%={row['gap_percent']} "
                  f"opt_gap%={row['opt_gap_percent']} ({wall:.1f}s)")
    return EXIT_OK


# -- parser ---------------------------------------------------------------------

def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x]


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dldn", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="random topology and flows")
    g.add_argument("--spec", help="JSON file with generator settings; flags override it")
    g.add_argument("--nodes", type=int)
    g.add_argument("--links", type=int)
    g.add_argument("--level", type=int)
    g.add_argument("--flows", type=int)
    g.add_argument("--deadline-us", type=float, dest="deadline_us")
    g.add_argument("--seed", type=int)
    g.add_argument("--out-dir", default=".")
    g.add_argument("--instance-name", default="instance.json")
    g.add_argument("--flows-name", default="flows.json")
    g.set_defaults(func=cmd_generate)

    a = sub.add_parser("admit", help="admission control with CGX or the OSPF baseline")
    a.add_argument("--instance", required=True)
    a.add_argument("--flows", help="separate flows file (defaults to the instance's own)")
    a.add_argument("--algorithm", choices=["cgx", "ospf"], default="cgx")
    a.add_argument("--time-limit-s", type=float, default=300.0)
    a.add_argument("--cg-share", type=float, default=0.7, help="fraction of the budget spent in column generation")
    a.add_argument("--out", default="solution.json")
    a.add_argument("--report", help="per-iteration CSV")
    a.add_argument("--mps", help="dump the final 0-1 master in fixed MPS")
    a.set_defaults(func=cmd_admit)

    s = sub.add_parser("simulate", help="run the data plane and check delay and jitter bounds")
    s.add_argument("--bundle", choices=["poc"], help="canned scenario instead of input files")
    s.add_argument("--instance")
    s.add_argument("--flows")
    s.add_argument("--solution")
    s.add_argument("--traffic", help="best-effort background flows (JSON)")
    s.add_argument("--horizon-us", type=float)
    s.add_argument("--seed", type=int)
    s.add_argument("--drift-ppm", type=float, default=0.0)
    s.add_argument("--out-dir", default=".")
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("compare", help="CGX vs OSPF sweep")
    c.add_argument("--manifest", help="JSON sweep description; flags override it")
    c.add_argument("--axis", choices=["level", "deadline"])
    c.add_argument("--levels", type=_int_list)
    c.add_argument("--deadlines-us", type=_float_list, dest="deadlines_us")
    c.add_argument("--flow-counts", type=_int_list, dest="flow_counts")
    c.add_argument("--nodes", type=int)
    c.add_argument("--links", type=int)
    c.add_argument("--seed", type=int)
    c.add_argument("--time-limit-s", type=float, dest="time_limit_s")
    c.add_argument("--out", default="compare.csv")
    c.add_argument("--timing", help="wall-time sidecar CSV (default: <out>_timing.csv)")
    c.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if getattr(args, "seed", None) is None and args.command in ("generate", "simulate"):
            args.seed = default_seed()
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
