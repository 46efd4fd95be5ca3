"""End-to-end acceptance checks; conftest prints one PASS/FAIL line per criterion."""

import csv
import random
import statistics
import time

import numpy as np
import pytest

from dldn.cgx import Column, cgx_admit, round_ilp, run_cg
from dldn.cli import main
from dldn.generate import GenSpec, generate_flows, generate_topology
from dldn.lp import LinearProgram, solve_lp
from dldn.sim import SimConfig, check_invariants, poc_bundle, run_simulation, write_stats_csv
from oracles import all_path_patterns, best_assignment, full_lp_value, highs_lp, random_instance, random_lp, vertex_optimum

SWEEP_DEADLINES = [100, 300, 500, 750, 1000]
SWEEP_FLOWS = [50, 100, 200, 350, 500]
SWEEP_ARGS = ["compare", "--axis", "deadline", "--deadlines-us", ",".join(map(str, SWEEP_DEADLINES)),
              "--flow-counts", ",".join(map(str, SWEEP_FLOWS)), "--levels", "10", "--nodes", "50",
              "--links", "106", "--seed", "0", "--time-limit-s", "300"]


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def poc(tmp_path_factory):
    bundle = poc_bundle()
    start = time.monotonic()
    res = run_simulation(bundle.instance, bundle.flows, bundle.solution, bundle.traffic,
                         SimConfig(bundle.horizon_ns, 0, {}))
    wall = time.monotonic() - start
    report = check_invariants(res.trace)
    out = tmp_path_factory.mktemp("poc")
    res.trace.write_csv(out / "trace.csv")
    write_stats_csv(res.stats, out / "stats.csv")
    return bundle, res, report, wall, out


@pytest.fixture(scope="module")
def desk_sim():
    spec = GenSpec(nodes=50, links=106, level=10, flows=100, deadline_ns=1_000_000, seed=0)
    inst = generate_topology(spec)
    flows = generate_flows(spec, inst)
    sol, _ = cgx_admit(inst, flows, time_limit=120)
    res = run_simulation(inst, flows, sol, [], SimConfig(1_000_000, 0))
    return inst, res


@pytest.fixture(scope="module")
def sweep(tmp_path_factory):
    out = tmp_path_factory.mktemp("sweep") / "compare.csv"
    start = time.monotonic()
    assert main(SWEEP_ARGS + ["--out", str(out)]) == 0
    return out, read_csv(out), time.monotonic() - start


def test_criterion_01_jitter_bound(poc, record_property):
    bundle, res, _, wall, _ = poc
    rates = [f.rate_bps for f in bundle.flows]
    bursts = [f.burst_bytes for f in bundle.flows]
    assert rates == [2_240_000_000, 6_720_000_000, 6_720_000_000, 3_360_000_000, 3_360_000_000]
    assert bursts == [1400, 4200, 4200, 2100, 2100]
    assert all(v.Q == 5000 for v in bundle.instance.nodes)
    assert bundle.traffic and res.be_delivered > 0
    packets = sum(s.packets for s in res.stats)
    worst = max(s.jitter for s in res.stats)
    record_property("detail", f"{packets} packets, worst jitter {worst} ns <= 5000 ns, {wall:.1f}s")
    assert packets >= 10**5
    assert not res.faults and res.hp_dropped == 0
    for s in res.stats:
        assert s.packets > 0 and s.jitter <= 5000 and s.bound == 5000
    assert wall < 60


def test_criterion_02_constant_pair_delay(poc, record_property):
    _, res, report, _, _ = poc
    a = res.trace.arrays()
    # direct recomputation, independent of the checker: every hop record after the first
    # closes a pair with the previous hop of the same packet
    order = np.lexsort((a["hop"], a["seq"], a["flow"]))
    f, s, h = a["flow"][order], a["seq"][order], a["hop"][order]
    q, d = a["q"][order], a["d"][order]
    prev = (f[1:] == f[:-1]) & (s[1:] == s[:-1]) & (h[1:] == h[:-1] + 1)
    plans = res.trace.plans
    Q = np.array([plans[fi].Q[hi] for fi, hi in zip(f[:-1][prev], h[:-1][prev])])
    P = np.array([plans[fi].P[hi] for fi, hi in zip(f[1:][prev], h[1:][prev])])
    lhs = q[:-1][prev] + P + d[1:][prev]
    record_property("detail", f"{int(prev.sum())} damper pairs, {int((lhs != Q + P).sum())} mismatches")
    assert prev.sum() == report.damper_pairs > 0
    assert (lhs == Q + P).all()
    assert "pair-delay" not in report.counts


def test_criterion_03_eligibility_gap(poc, record_property):
    _, res, report, _, _ = poc
    record_property("detail", f"{report.same_cycle_pairs_long} same-cycle pairs on paths of 4+ hops")
    assert report.same_cycle_pairs_long >= 1000
    assert "gap-bound" not in report.counts and "gap-preserved" not in report.counts
    assert report.ok, report.violations[:5]


def test_criterion_04_two_cycle_queuing(poc, desk_sim, record_property):
    worst = []
    for trace, T in ((poc[1].trace, poc[0].instance.cycle.T), (desk_sim[1].trace, desk_sim[0].cycle.T)):
        a = trace.arrays()
        wait = a["t_out"] - a["E"]
        assert wait.size > 0
        worst.append(float(wait.max() / (2 * T)))
        assert (wait <= 2 * T).all()
        assert "queue-bound" not in check_invariants(trace).counts
    record_property("detail", "max wait / 2T = " + ", ".join(f"{w:.3f}" for w in worst))


def test_criterion_05_cg_lp_exactness(record_property):
    start = time.monotonic()
    worst = 0.0
    for i in range(50):
        rng = random.Random(f"criterion-5/{i}")
        inst, flows = random_instance(rng, rng.randint(3, 10), rng.randint(0, 8), rng.randint(1, 8),
                                      max_patterns=3)
        assert all(len(f.patterns) <= 3 for f in flows)
        res = run_cg(inst, flows)
        ref = full_lp_value(inst, flows)
        assert res.certified
        rel = abs(res.ub - ref) / max(1.0, abs(ref))
        worst = max(worst, rel)
        assert rel <= 1e-6, (i, res.ub, ref)
    wall = time.monotonic() - start
    record_property("detail", f"50 instances, worst relative error {worst:.2e}, {wall:.1f}s")
    assert wall < 60


def test_criterion_06_ilp_oracle(record_property):
    start = time.monotonic()
    nontrivial = 0
    for i in range(30):
        rng = random.Random(f"criterion-6/{i}")
        inst, flows = random_instance(rng, rng.randint(3, 8), rng.randint(0, 6), rng.randint(2, 6),
                                      cap_range=(1500, 6000), buf_range=(3000, 9000))
        columns = []
        for f in flows:
            pps = all_path_patterns(inst, f)
            rng.shuffle(pps)
            columns += [Column(pp, f.throughput_bps) for pp in pps[:3]]
        sol, rep = round_ilp(columns, inst, flows)
        options: dict = {}
        for c in rep.columns:
            options.setdefault(c.flow_id, []).append(c.path_pattern)
        assert all(len(v) <= 4 for v in options.values())
        best = best_assignment(inst, flows, options)
        assert rep.z == best == sol.throughput, i
        nontrivial += best < sum(f.throughput_bps for f in flows if f.id in options)
    wall = time.monotonic() - start
    record_property("detail", f"30 instances ({nontrivial} capacity-bound), exact match, {wall:.1f}s")
    assert wall < 60


def test_criterion_07_dominance(sweep, record_property):
    _, rows, _ = sweep
    assert len(rows) == 25 and all(r["failures"] == "0" for r in rows)
    gaps = []
    for r in rows:
        assert int(r["Th_cgx_bps"]) >= int(r["Th_ospf_bps"])
        if int(r["Th_ospf_bps"]) > 0:
            gaps.append(float(r["gap_percent"]))
            assert gaps[-1] >= 100.0
    record_property("detail", f"{len(gaps)} rows, throughput gap {min(gaps):.1f}%..{max(gaps):.1f}%")
    assert gaps


def test_criterion_08_optimality_gap(sweep, record_property):
    _, rows, wall = sweep
    opt = []
    for r in rows:
        z, ub, g = int(r["Th_cgx_bps"]), float(r["UB_bps"]), float(r["opt_gap_percent"])
        assert g >= 0
        assert z <= ub * (1 + 1e-9) + 1e-6
        expected = max(0.0, 100 * (ub - z) / ub) if ub > 0 else 0.0
        assert g == pytest.approx(expected, abs=1e-4)
        opt.append(g)
    med = statistics.median(opt)
    record_property("detail", f"median gap {med:.3f}%, max {max(opt):.3f}%, sweep {wall:.0f}s")
    assert med <= 5.0
    assert wall < 15 * 60


def test_criterion_09_lp_duality(record_property):
    worst_dual, worst_cs, worst_vertex, vertex_cases, optimal = 0.0, 0.0, 0.0, 0, 0
    for i in range(200):
        rng = np.random.default_rng(90_000 + i)
        m, n = (int(v) for v in rng.integers(1, 21, size=2))
        c, A, b, u = random_lp(rng, m, n, upper=i % 2 == 1)
        lp = LinearProgram(c, A, b, upper=u)
        sol = solve_lp(lp)
        ref = highs_lp(c, A, b, u)
        assert sol.status.value == {0: "optimal", 2: "infeasible", 3: "unbounded"}[ref.status]
        if not sol.optimal:
            continue
        optimal += 1
        scale = 1 + abs(sol.objective)
        gap = abs(sol.objective - sol.dual_objective(lp)) / scale
        slack = b - A @ sol.x
        rc = c - sol.duals @ A
        at_up = np.isfinite(lp.upper) & (sol.x >= lp.upper - 1e-9)
        interior = (sol.x > 1e-9) & ~at_up
        cs = max(np.abs(sol.duals * slack).max(initial=0), np.abs(rc[interior] * sol.x[interior]).max(initial=0))
        assert (sol.duals >= -1e-9).all() and (rc[~at_up] <= 1e-6 * scale).all()
        worst_dual, worst_cs = max(worst_dual, gap), max(worst_cs, cs / scale)
        assert gap <= 1e-6 and cs / scale <= 1e-6
        if m <= 8 and n <= 8:
            best = vertex_optimum(c, A, b, u if n <= 6 else None) if (u is None or n <= 6) else None
            if best is not None:
                vertex_cases += 1
                err = abs(sol.objective - best) / max(1.0, abs(best))
                worst_vertex = max(worst_vertex, err)
                assert err <= 1e-9
    # a dedicated batch of small problems so the vertex oracle sees enough cases
    for i in range(100):
        rng = np.random.default_rng(95_000 + i)
        m, n = (int(v) for v in rng.integers(1, 9, size=2))
        c, A, b, _ = random_lp(rng, m, n)
        sol = solve_lp(LinearProgram(c, A, b))
        best = vertex_optimum(c, A, b)
        if best is None:
            assert sol.status.value == "infeasible"
            continue
        vertex_cases += 1
        err = abs(sol.objective - best) / max(1.0, abs(best))
        worst_vertex = max(worst_vertex, err)
        assert sol.optimal and err <= 1e-9
    record_property("detail", f"{optimal} optimal LPs, duality {worst_dual:.1e}, slackness {worst_cs:.1e}; "
                              f"{vertex_cases} vertex checks, worst {worst_vertex:.1e}")
    assert optimal >= 100


def test_criterion_10_determinism(poc, sweep, tmp_path, monkeypatch, record_property):
    monkeypatch.delenv("DLDN_SEED", raising=False)
    sim_dir = tmp_path / "poc"
    assert main(["simulate", "--bundle", "poc", "--out-dir", str(sim_dir)]) == 0
    for name in ("trace.csv", "stats.csv"):
        assert (sim_dir / name).read_bytes() == (poc[4] / name).read_bytes(), name
    again = tmp_path / "compare.csv"
    assert main(SWEEP_ARGS + ["--out", str(again)]) == 0
    assert again.read_bytes() == sweep[0].read_bytes()
    size = (sim_dir / "trace.csv").stat().st_size
    record_property("detail", f"trace {size} B, stats and 25-row compare CSV byte-identical")
