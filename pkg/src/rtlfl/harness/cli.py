"""``rtlfl`` command line.

Exit codes: 0 success, 1 usage error, 2 analysis error, 3 backend error.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from rtlfl.agent import (
    Budget,
    LocalizationResult,
    PolicyBackend,
    RecordingBackend,
    RemoteBackend,
    RemoteProfile,
    ScriptedBackend,
    TestReport,
    run_localization,
)
from rtlfl.blocks import size_histogram
from rtlfl.coverage import CoverageSource
from rtlfl.errors import AnalysisError, BackendError, ManifestError
from rtlfl.harness.evaluate import EvalRecord, evaluate_topn, format_table
from rtlfl.harness.manifest import ProjectManifest, load_manifest
from rtlfl.harness.mutate import RULES, inject_mutation
from rtlfl.harness.project import Project, load_stimulus
from rtlfl.slicer import build_exec_path
from rtlfl.waveform import Waveform, load_vcd

EXIT_OK, EXIT_USAGE, EXIT_ANALYSIS, EXIT_BACKEND = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _waveform(m: ProjectManifest, proj: Project) -> Waveform:
    return load_vcd(m.require("waveform"), proj.clock_signal)


def _coverage(m: ProjectManifest, proj: Project) -> CoverageSource:
    if m.coverage is not None:
        return CoverageSource.load(m.coverage, proj.blocks)
    return proj.replay_coverage()


def _histogram_text(proj: Project) -> str:
    rows = size_histogram(proj.blocks)
    lines = [f"{len(proj.blocks)} blocks"]
    if rows:
        peak = max(c for _, _, c in rows) or 1
        for lo, hi, count in rows:
            bar = "#" * max(1 if count else 0, round(40 * count / peak))
            lines.append(f"{lo:5d}-{hi:<5d} {count:6d} {bar}")
    return "\n".join(lines) + "\n"


def cmd_blockize(args) -> int:
    m = load_manifest(args.manifest)
    proj = Project.from_manifest(m)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "blocks.json").write_text(proj.blocks.dumps(), encoding="utf-8")
    hist = _histogram_text(proj)
    (out / "histogram.txt").write_text(hist, encoding="utf-8")
    sys.stdout.write(hist)
    return EXIT_OK


def cmd_slice(args) -> int:
    m = load_manifest(args.manifest)
    proj = Project.from_manifest(m)
    w = _waveform(m, proj)
    cycle = args.cycle if args.cycle is not None else w.cycle_at_time(args.time)
    path = build_exec_path(proj.blocks, proj.hier(args.signal), cycle, w, _coverage(m, proj))
    text = path.dumps() + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if args.dot:
        Path(args.dot).write_text(path.to_dot(), encoding="utf-8")
    print(
        f"path: {len(path.blocks)} of {len(proj.blocks)} blocks, "
        f"{len(path.nodes)} nodes, {len(path.edges)} edges"
    )
    return EXIT_OK


def make_backend(backend_ref: str, base: Path, proj: Project):
    kind, _, ref = backend_ref.partition(":")
    if not ref:
        raise UsageError(f"backend must look like scripted:<file>, remote:<profile> or policy:<golden.vcd>, got {backend_ref!r}")
    p = Path(ref)
    if not p.is_absolute():
        p = base / p
    if kind == "scripted":
        return ScriptedBackend.load(p)
    if kind == "policy":
        return PolicyBackend(load_vcd(p, proj.clock_signal))
    if kind == "remote":
        try:
            profile = RemoteProfile.from_json(json.loads(p.read_text(encoding="utf-8")))
        except (OSError, ValueError) as exc:
            raise BackendError(f"cannot read backend profile {p}: {exc}") from exc
        return RemoteBackend(profile)
    raise UsageError(f"unknown backend kind {kind!r}")


def _write_result(out: Path, result: LocalizationResult, proj: Project) -> None:
    out.mkdir(parents=True, exist_ok=True)
    data = result.to_json()
    for entry in data["ranking"]:
        b = proj.blocks.by_id.get(entry["block"])
        entry["spans"] = [[f, s, e] for f, s, e in b.line_ranges()] if b is not None else []
    (out / "ranking.json").write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    lines = []
    if not data["ranking"]:
        lines.append("no candidate blocks: the suspicious queue is empty")
    for entry in data["ranking"]:
        spans = ", ".join(f"{f}:{s}-{e}" for f, s, e in entry["spans"])
        lines.append(f"{entry['rank']:3d}. {entry['confidence']:.3f}  {entry['block']}  [{spans}]")
        if entry["rationale"]:
            lines.append(f"     {entry['rationale']}")
    acct = data["accounting"]
    lines.append(
        f"tool calls: {acct['tool_calls']}  tokens: {acct['tokens']}  nodes visited: {acct['nodes_visited']}"
        + ("  (budget exhausted, partial result)" if acct["budget_exhausted"] else "")
    )
    for flag in data["flags"]:
        lines.append(f"note: {flag}")
    (out / "ranking.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    (out / "transcript.jsonl").write_text(result.transcript_jsonl(), encoding="utf-8")


def _localize_one(report_path: Path, m: ProjectManifest, proj: Project, w: Waveform, args, out: Path) -> str:
    report = TestReport.load(report_path)
    backend_ref = args.backend or m.backend
    if backend_ref is None:
        raise UsageError("no backend given (use --backend or set 'backend' in the manifest)")
    base = Path.cwd() if args.backend else m.root
    backend = make_backend(backend_ref, base, proj)
    recorder = RecordingBackend(backend) if args.record else None
    budget = Budget(max_tool_calls=args.max_tool_calls, max_tokens=args.max_tokens)
    path = build_exec_path(proj.blocks, proj.hier(report.signal), report.cycle, w, _coverage(m, proj))
    try:
        result = run_localization(path, report, recorder or backend, w, budget, proj.source_of_block)
    finally:
        if isinstance(backend, RemoteBackend):
            backend.close()
    _write_result(out, result, proj)
    if recorder is not None:
        recorder.dump(args.record)
    top = result.ranked[0].block_id if result.ranked else "no candidates"
    return f"{report_path.name}: {len(result.ranked)} suspicious block(s), top: {top} -> {out}"


def cmd_localize(args) -> int:
    m = load_manifest(args.manifest)
    proj = Project.from_manifest(m)
    w = _waveform(m, proj)
    reports = [Path(r) for r in args.report] if args.report else [m.require("report")]
    for r in reports:
        if not r.is_file():
            raise ManifestError(f"report file not found: {r}")
    if args.record and len(reports) > 1:
        raise UsageError("--record takes a single report")
    out = Path(args.out)
    outs = [out] if len(reports) == 1 else [out / r.stem for r in reports]
    jobs = max(1, args.jobs)
    if jobs == 1 or len(reports) == 1:
        lines = [_localize_one(r, m, proj, w, args, o) for r, o in zip(reports, outs)]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            lines = list(pool.map(lambda ro: _localize_one(ro[0], m, proj, w, args, ro[1]), zip(reports, outs)))
    for line in lines:
        print(line)
    return EXIT_OK


def cmd_mutate(args) -> int:
    m = load_manifest(args.manifest)
    files = dict(m.read_sources())
    mut = inject_mutation(files, m.top, args.rule, args.seed, m.clock)
    mutated = mut.apply(files)
    out = Path(args.out)
    for name, text in mutated.items():
        dest = out / name
        dest.parent.mkdir(parents=True, exist_ok=True)
        dest.write_text(text, encoding="utf-8")
    (out / "ground_truth.json").write_text(mut.dumps(), encoding="utf-8")
    print(f"{mut.rule} at {mut.file}:{mut.line}: {mut.original!r} -> {mut.mutated!r}")
    return EXIT_OK


def _read_records(path: Path) -> list[EvalRecord]:
    text = path.read_text(encoding="utf-8")
    if text.lstrip().startswith("["):
        rows = json.loads(text)
    else:
        rows = [json.loads(line) for line in text.splitlines() if line.strip()]
    return [EvalRecord.from_json(r) for r in rows]


def cmd_eval(args) -> int:
    n_values = [int(x) for x in args.n.split(",")]
    if args.records:
        try:
            records = _read_records(Path(args.records))
        except (OSError, ValueError, KeyError) as exc:
            raise ManifestError(f"cannot read records {args.records}: {exc}") from exc
    else:
        if not args.manifest:
            raise UsageError("eval needs --records or --manifest")
        from rtlfl.harness.bench import run_benchmark

        m = load_manifest(args.manifest)
        proj = Project.from_manifest(m)
        stimulus, cycles = load_stimulus(m.require("stimulus"))
        res = run_benchmark(
            proj, stimulus, m.cycles or cycles, list(m.observe), args.count, Budget(max_tool_calls=args.max_tool_calls)
        )
        records = res.records
        if args.out:
            Path(args.out).write_text("".join(json.dumps(r.to_json(), sort_keys=True) + "\n" for r in records))
        red = res.reductions()
        print(f"mutants: {len(records)} (seeds tried {res.tried}); mean slice reduction {sum(red) / len(red):.1%}")
    if not records:
        raise ManifestError("no evaluation records")
    sys.stdout.write(format_table(evaluate_topn(records, n_values), len(records)))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rtlfl", description="Fault localization for RTL designs from a failing simulation.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("blockize", help="split the design into code blocks")
    b.add_argument("--manifest", required=True)
    b.add_argument("--out", default=".")
    b.set_defaults(fn=cmd_blockize)

    s = sub.add_parser("slice", help="build the execution path from a mismatching signal")
    s.add_argument("--manifest", required=True)
    s.add_argument("--signal", required=True)
    when = s.add_mutually_exclusive_group(required=True)
    when.add_argument("--cycle", type=int)
    when.add_argument("--time", type=int, help="simulation time; mapped to the last rising edge at or before it")
    s.add_argument("--out")
    s.add_argument("--dot")
    s.set_defaults(fn=cmd_slice)

    lo = sub.add_parser("localize", help="run the debugging loop and rank suspicious blocks")
    lo.add_argument("--manifest", required=True)
    lo.add_argument("--backend", help="scripted:<file> | remote:<profile.json> | policy:<golden.vcd>")
    lo.add_argument("--report", action="append", help="test report JSON (repeatable)")
    lo.add_argument("--max-tool-calls", type=int, default=60)
    lo.add_argument("--max-tokens", type=int)
    lo.add_argument("--jobs", type=int, default=1)
    lo.add_argument("--record", help="write the backend's decisions as a replayable script")
    lo.add_argument("--out", default="localize_out")
    lo.set_defaults(fn=cmd_localize)

    mu = sub.add_parser("mutate", help="inject one seeded bug")
    mu.add_argument("--manifest", required=True)
    mu.add_argument("--rule", required=True, choices=RULES)
    mu.add_argument("--seed", type=int, required=True)
    mu.add_argument("--out", required=True)
    mu.set_defaults(fn=cmd_mutate)

    ev = sub.add_parser("eval", help="Top-N table from records, or run the mutation benchmark")
    ev.add_argument("--records")
    ev.add_argument("--manifest")
    ev.add_argument("--n", default="1,5,10")
    ev.add_argument("--count", type=int, default=50)
    ev.add_argument("--max-tool-calls", type=int, default=60)
    ev.add_argument("--out")
    ev.set_defaults(fn=cmd_eval)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except UsageError as exc:
        print(f"rtlfl: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BackendError as exc:
        print(f"rtlfl: backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except AnalysisError as exc:
        print(f"rtlfl: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS
    except OSError as exc:
        print(f"rtlfl: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS


if __name__ == "__main__":
    sys.exit(main())
