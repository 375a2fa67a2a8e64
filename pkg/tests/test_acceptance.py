"""Acceptance suite: one check per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` or directly with
``python3 -m tests.test_acceptance`` from the repository root.
"""

from __future__ import annotations

import random
import time
from pathlib import Path

import pytest

from rtlfl.agent import Budget, ScriptedBackend, TestReport, run_localization
from rtlfl.agent.tools import AgentState, CheckSignals, handle_tool
from rtlfl.blocks import find_driven_block, merge_assign_blocks
from rtlfl.errors import InvalidSignalName
from rtlfl.harness.bench import run_benchmark
from rtlfl.harness.cli import main as cli_main
from rtlfl.harness.manifest import load_manifest
from rtlfl.harness.project import Project, load_stimulus
from rtlfl.slicer import DrivenSet, PathNode, build_exec_path, intra_block_analysis
from rtlfl.waveform import cycle_count, load_vcd

from .conftest import JUMP, TOY, corpus_files, corpus_project
from .oracles import designs
from .oracles.vcd_replay import NaiveVcd
from .test_blocks import assert_partition_invariants, check_network, single
from .test_slicer import assert_monotone, node_sets

BENCH_COUNT = 50
BENCH_BUDGET = Budget()


def report_line(number: int, title: str, ok: bool, detail: str, elapsed: float) -> str:
    return f"[{'PASS' if ok else 'FAIL'}] {number:2d}. {title}: {detail} ({elapsed:.2f}s)"


def timed(fn, *args):
    t0 = time.perf_counter()
    out = fn(*args)
    return out, time.perf_counter() - t0


# -- the checks --------------------------------------------------------------------------


def check_blockization():
    files = corpus_files()
    projects = [corpus_project(p) for p in files]
    projects.append(Project.from_manifest(load_manifest(TOY / "manifest.toml")))
    projects.append(Project.from_manifest(load_manifest(JUMP / "manifest.toml")))
    for p in projects:
        assert_partition_invariants(p)
    blocks = sum(len(p.blocks) for p in projects)
    return len(files) >= 20, f"{len(files)} corpus designs + toy core + jump demo, {blocks} blocks, invariants hold"


def random_network(rng: random.Random):
    n = rng.randint(1, 30)
    outs = [[f"o{i}"] + ([f"p{i}"] if rng.randrange(6) == 0 else []) for i in range(n)]
    pool = [s for o in outs for s in o] + ["in_a", "in_b", "in_c"]
    return [single(i, set(rng.sample(pool, rng.randint(0, min(3, len(pool))))), outs[i]) for i in range(n)]


def check_merge():
    rng = random.Random(2024)
    nets = [random_network(rng) for _ in range(200)]
    for net in nets:
        check_network(net)
    shuffled = 0
    for net in nets[:50]:
        ref = merge_assign_blocks(net)
        perm = list(net)
        rng.shuffle(perm)
        assert merge_assign_blocks(perm) == ref
        shuffled += 1
    return True, f"200 networks match union-find, {shuffled} shuffles invariant"


def oracle_slices(cycles=40, roots_per_design=8):
    """(project, path, oracle node/edge sets) for every design and root."""
    out = []
    for factory in designs.ALL:
        d = designs.build(factory)
        p = Project.from_files(d.files, d.top)
        stim = designs.stimulus(d, cycles, seed=11)
        _, w = p.simulate(stim, cycles)
        _, executed = d.simulate(stim, cycles)
        rng = random.Random(factory.__name__)
        signals = sorted(d.driver)
        roots: set[tuple[str, int]] = set()
        while len(roots) < roots_per_design:
            roots.add((rng.choice(signals), rng.randrange(cycles)))
        for sig, t in sorted(roots):
            path = build_exec_path(p.blocks, sig, t, w, p.replay_coverage())
            out.append((factory.__name__, p, path, d.exec_path(sig, t, executed)))
    return out


def check_slicer_oracle():
    cases = oracle_slices()
    bad = [(name, str(path.root)) for name, _, path, want in cases if node_sets(path) != want]
    n_designs = len({c[0] for c in cases})
    ok = not bad and n_designs >= 10 and len(cases) >= 5 * n_designs
    return ok, f"{len(cases) - len(bad)}/{len(cases)} slices equal over {n_designs} designs" + (f", first miss {bad[0]}" if bad else "")


def check_pipeline_register():
    m = load_manifest(JUMP / "manifest.toml")
    p = Project.from_manifest(m)
    src = p.replay_coverage()
    pc_id = "top.u_if.pc_id_o"
    b = find_driven_block(p.blocks, pc_id)
    covered = intra_block_analysis(pc_id, b, 18, load_vcd(JUMP / "buggy.vcd", "top.clk"), src)
    stall_w = load_vcd(JUMP / "stall.vcd", "top.clk")
    stalled = intra_block_analysis(pc_id, b, 18, stall_w, src)
    path = build_exec_path(p.blocks, pc_id, 18, stall_w, src)
    ok = (
        covered == DrivenSet(frozenset({"top.u_if.pc_if_o", "top.u_if.if_id_pipe_reg_we"}), 17)
        and stalled == DrivenSet(frozenset({pc_id}), 17)
        and (PathNode(b.id, 17), PathNode(b.id, 18)) in path.edges
    )
    return ok, f"covered -> {sorted(covered.signals)}@{covered.cycle}; stalled -> {sorted(stalled.signals)}@{stalled.cycle} with self edge"


def check_monotonicity(extra_paths):
    checked = 0
    slices = 0
    for _, p, path, _ in oracle_slices():
        assert_monotone(path, p.blocks)
        checked += len(path.edges)
        slices += 1
    for p, path in extra_paths:
        assert_monotone(path, p.blocks)
        checked += len(path.edges)
        slices += 1
    return True, f"{checked} edges in {slices} slices; gap in {{0,1}}, 1 iff the analyzed (target) block is clocked"


def check_benchmark(bench):
    table = bench.table((1, 5, 10))
    n = len(bench.records)
    ok = n == BENCH_COUNT and table[1] >= 40 and table[5] >= 45
    return ok, f"{n} mutants (seeds tried {bench.tried}): Top-1 {table[1]}/{n}, Top-5 {table[5]}/{n}, Top-10 {table[10]}/{n}"


def check_reduction(bench):
    red = bench.reductions()
    every = all(len(path.blocks) < len(case.project.blocks) for path, case in zip(bench.paths, bench.cases))
    mean = sum(red) / len(red)
    return every and mean >= 0.40, f"every path smaller: {every}; mean reduction {mean:.1%} (min {min(red):.1%})"


def check_block_sizes():
    p = Project.from_manifest(load_manifest(TOY / "manifest.toml"))
    small = sum(1 for b in p.blocks if len(b.lines) <= 200)
    frac = small / len(p.blocks)
    return frac >= 0.95, f"{small}/{len(p.blocks)} blocks ({frac:.1%}) have <= 200 lines"


def check_determinism(tmp: Path):
    outs = []
    for case, manifest in (("jump", JUMP / "manifest.toml"), ("toy", TOY / "bug_alu" / "manifest.toml")):
        for run in ("a", "b"):
            d = tmp / case / run
            code = cli_main(["localize", "--manifest", str(manifest), "--out", str(d)])
            assert code == 0
        outs.append(all((tmp / case / "a" / f).read_bytes() == (tmp / case / "b" / f).read_bytes()
                        for f in ("ranking.json", "ranking.txt", "transcript.jsonl")))
    return all(outs), "scripted localize twice on jump demo and toy-core ALU bug: byte-identical rankings and transcripts"


VCD_FIXTURES = [
    (JUMP / "buggy.vcd", "top.clk"),
    (JUMP / "stall.vcd", "top.clk"),
    (JUMP / "golden.vcd", "top.clk"),
    (TOY / "golden.vcd", "toy_top.clk"),
    (TOY / "bug_alu" / "buggy.vcd", "toy_top.clk"),
]


def check_vcd():
    rng = random.Random(99)
    total = 0
    for path, clock in VCD_FIXTURES:
        text = path.read_text()
        w = load_vcd(path, clock)
        naive = NaiveVcd(text)
        if w.cycle_times != naive.posedges(clock):
            return False, f"{path.name}: edge times differ"
        names = sorted(naive.width)
        for _ in range(1000):
            sig, k = rng.choice(names), rng.randrange(cycle_count(w))
            if w.value_at(sig, k).bits != naive.value_at(clock, sig, k):
                return False, f"{path.name}: {sig}@{k} differs"
            total += 1
    return True, f"{total} queries over {len(VCD_FIXTURES)} fixtures match the naive replayer"


def check_guardrails():
    p = Project.from_manifest(load_manifest(JUMP / "manifest.toml"))
    w = load_vcd(JUMP / "buggy.vcd", "top.clk")
    report = TestReport.load(JUMP / "report.json")
    path = build_exec_path(p.blocks, report.signal, report.cycle, w, p.replay_coverage())

    # direct: an invalid name raises before any state change
    state = AgentState(current=path.root, visited={path.root})
    good = path.driven[path.root][0][0]
    before = state.snapshot()
    try:
        handle_tool(CheckSignals((good, "top.not_offered")), state, path, w)
        return False, "out-of-list name accepted"
    except InvalidSignalName:
        pass
    untouched = state.snapshot() == before

    # through the loop: one retry per invalid turn, state advances after the third
    bad = {"name": "check_signals", "arguments": {"names": ["top.not_offered"]}}
    queue = {"name": "check_signals", "arguments": {"names": [good]}}
    stop = {"name": "exit", "arguments": {"scores": {}}}
    script = [{"tool_calls": [queue, bad]}, {"tool_calls": [bad]}, {"tool_calls": [bad]}, {"tool_calls": [stop]}]
    res = run_localization(path, report, ScriptedBackend(script), w, Budget(max_retries=3), p.source_of_block)
    nodes = [t["node"]["block"] for t in res.transcript]
    errors = [sum(c["error"] for c in t["calls"]) for t in res.transcript]
    nxt = path.source_of(path.root, good)
    advanced = nodes[:3] == [path.root.block] * 3 and nodes[3] == nxt.block
    ok = untouched and errors == [1, 1, 1, 0] and advanced
    return ok, f"state untouched: {untouched}; errors per turn {errors}; advanced after 3 retries: {advanced}"


# -- pytest wrappers -----------------------------------------------------------------


@pytest.fixture(scope="module")
def bench():
    m = load_manifest(TOY / "manifest.toml")
    proj = Project.from_manifest(m)
    stim, cycles = load_stimulus(m.stimulus)
    t0 = time.perf_counter()
    res = run_benchmark(proj, stim, m.cycles or cycles, list(m.observe), BENCH_COUNT, BENCH_BUDGET)
    res.elapsed = time.perf_counter() - t0
    return res


def emit(capsys, number, title, result, elapsed, limit=None):
    ok, detail = result
    if limit is not None:
        ok = ok and elapsed < limit
        detail += f", limit {limit:g}s"
    with capsys.disabled():
        print("\n" + report_line(number, title, ok, detail, elapsed))
    assert ok, detail


def test_c01_blockization(capsys):
    emit(capsys, 1, "blockization invariants", *timed(check_blockization), limit=5)


def test_c02_merge(capsys):
    emit(capsys, 2, "merge fixpoint", *timed(check_merge), limit=10)


def test_c03_slicer_oracle(capsys):
    emit(capsys, 3, "slicer equals dynamic-dependence oracle", *timed(check_slicer_oracle), limit=30)


def test_c04_pipeline_register(capsys):
    emit(capsys, 4, "pipeline-register scenario", *timed(check_pipeline_register))


def test_c05_monotonicity(capsys, bench):
    extra = [(c.project, path) for c, path in zip(bench.cases, bench.paths)]
    emit(capsys, 5, "timestamp monotonicity", *timed(check_monotonicity, extra))


def test_c06_benchmark(capsys, bench):
    ok, detail = check_benchmark(bench)
    emit(capsys, 6, "seeded-mutation benchmark", (ok, detail), bench.elapsed, limit=120)


def test_c07_reduction(capsys, bench):
    emit(capsys, 7, "slice reduction", *timed(check_reduction, bench))


def test_c08_block_sizes(capsys):
    emit(capsys, 8, "block-size distribution", *timed(check_block_sizes))


def test_c09_determinism(capsys, tmp_path):
    emit(capsys, 9, "localize determinism", *timed(check_determinism, tmp_path))


def test_c10_vcd(capsys):
    emit(capsys, 10, "VCD semantics", *timed(check_vcd))


def test_c11_guardrails(capsys):
    emit(capsys, 11, "tool-protocol guardrails", *timed(check_guardrails))


if __name__ == "__main__":
    import tempfile

    m = load_manifest(TOY / "manifest.toml")
    stim, cyc = load_stimulus(m.stimulus)
    b, b_time = timed(run_benchmark, Project.from_manifest(m), stim, m.cycles or cyc, list(m.observe), BENCH_COUNT, BENCH_BUDGET)
    with tempfile.TemporaryDirectory() as tmp:
        rows = [
            (1, "blockization invariants", timed(check_blockization), 5),
            (2, "merge fixpoint", timed(check_merge), 10),
            (3, "slicer equals dynamic-dependence oracle", timed(check_slicer_oracle), 30),
            (4, "pipeline-register scenario", timed(check_pipeline_register), None),
            (5, "timestamp monotonicity", timed(check_monotonicity, [(c.project, p) for c, p in zip(b.cases, b.paths)]), None),
            (6, "seeded-mutation benchmark", (check_benchmark(b), b_time), 120),
            (7, "slice reduction", timed(check_reduction, b), None),
            (8, "block-size distribution", timed(check_block_sizes), None),
            (9, "localize determinism", timed(check_determinism, Path(tmp)), None),
            (10, "VCD semantics", timed(check_vcd), None),
            (11, "tool-protocol guardrails", timed(check_guardrails), None),
        ]
    passed = 0
    for number, title, ((ok, detail), elapsed), limit in rows:
        if limit is not None:
            ok = ok and elapsed < limit
        passed += ok
        print(report_line(number, title, ok, detail, elapsed))
    print(f"{passed}/{len(rows)} criteria passed")
