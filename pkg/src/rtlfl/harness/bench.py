"""Seeded-mutation benchmark: inject, simulate, slice, localize, score."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from rtlfl.agent import Budget, PolicyBackend, TestReport, run_localization
from rtlfl.errors import AnalysisError
from rtlfl.harness.evaluate import EvalRecord, evaluate_topn, make_record
from rtlfl.harness.mutate import RULES, Mutation, applicable_sites, inject_mutation
from rtlfl.harness.project import Project
from rtlfl.slicer import ExecPath, build_exec_path
from rtlfl.waveform import Waveform


def first_mismatch(w: Waveform, golden: Waveform, observe: list[str]) -> tuple[str, int] | None:
    n = min(len(w.cycle_times), len(golden.cycle_times))
    for t in range(n):
        for s in observe:
            if w.value_at(s, t).bits != golden.value_at(s, t).bits:
                return s, t
    return None


@dataclass
class BugCase:
    bug_id: str
    mutation: Mutation
    project: Project
    waveform: Waveform
    signal: str
    cycle: int

    def report(self, golden: Waveform) -> TestReport:
        expected = golden.value_at(self.signal, self.cycle).hex()
        got = self.waveform.value_at(self.signal, self.cycle).hex()
        return TestReport(
            instruction=f"instruction retiring at cycle {self.cycle}",
            pc="",
            signal=self.signal,
            cycle=self.cycle,
            expected=f"{self.signal} should be {expected}, simulation shows {got}",
        )


@dataclass
class BenchResult:
    records: list[EvalRecord]
    cases: list[BugCase]
    paths: list[ExecPath]
    tried: int = 0
    skipped: dict[str, int] = field(default_factory=dict)

    def table(self, n_values=(1, 5, 10)) -> dict[int, int]:
        return evaluate_topn(self.records, n_values)

    def reductions(self) -> list[float]:
        return [1 - len(p.blocks) / len(c.project.blocks) for p, c in zip(self.paths, self.cases)]


def generate_cases(
    golden_project: Project,
    stimulus: dict[str, list[int]],
    cycles: int,
    observe: list[str],
    n: int = 50,
    seeds=None,
    golden: Waveform | None = None,
) -> tuple[list[BugCase], int, dict[str, int]]:
    """Collect ``n`` mutants whose observed outputs diverge from the golden run."""
    if golden is None:
        golden = golden_project.simulate(stimulus, cycles)[1]
    observe = [golden_project.hier(s) for s in observe]
    cases: list[BugCase] = []
    skipped: dict[str, int] = {}
    seen: set[tuple] = set()
    tried = 0
    top, files, clock = golden_project.design.top, golden_project.files, golden_project.clock
    sites = {rule: applicable_sites(files, top, rule, clock) for rule in RULES}
    for seed in seeds if seeds is not None else itertools.count():
        if len(cases) >= n:
            break
        tried += 1
        rule = RULES[seed % len(RULES)]
        try:
            mut = inject_mutation(files, top, rule, seed, clock, sites[rule])
        except AnalysisError:
            skipped["no site"] = skipped.get("no site", 0) + 1
            continue
        key = (mut.file, mut.line, mut.col, mut.mutated)
        if key in seen:
            skipped["duplicate"] = skipped.get("duplicate", 0) + 1
            continue
        seen.add(key)
        try:
            proj = Project.from_files(mut.apply(files), top, clock)
            _, w = proj.simulate(stimulus, cycles)
        except AnalysisError as exc:
            kind = type(exc).__name__
            skipped[kind] = skipped.get(kind, 0) + 1
            continue
        hit = first_mismatch(w, golden, observe)
        if hit is None:
            skipped["equivalent"] = skipped.get("equivalent", 0) + 1
            continue
        cases.append(BugCase(f"{rule}-{seed}", mut, proj, w, hit[0], hit[1]))
    return cases, tried, skipped


def localize_case(case: BugCase, golden: Waveform, budget: Budget) -> tuple[EvalRecord, ExecPath]:
    proj = case.project
    path = build_exec_path(proj.blocks, case.signal, case.cycle, case.waveform, proj.replay_coverage())
    result = run_localization(
        path, case.report(golden), PolicyBackend(golden), case.waveform, budget, proj.source_of_block
    )
    ranked = [e.block_id for e in result.ranked]
    return make_record(case.bug_id, case.mutation.ground_truth(), ranked, proj.blocks), path


def run_benchmark(
    golden_project: Project,
    stimulus: dict[str, list[int]],
    cycles: int,
    observe: list[str],
    n: int = 50,
    budget: Budget = Budget(),
    seeds=None,
) -> BenchResult:
    golden = golden_project.simulate(stimulus, cycles)[1]
    cases, tried, skipped = generate_cases(golden_project, stimulus, cycles, observe, n, seeds, golden)
    records, paths = [], []
    for case in cases:
        rec, path = localize_case(case, golden, budget)
        records.append(rec)
        paths.append(path)
    return BenchResult(records, cases, paths, tried, skipped)
