"""Per-cycle coverage of assignments inside clocked blocks.

Replay mode re-evaluates the guards that dominate an assignment using the
waveform values sampled at the queried cycle. A guard that reads a blocking
temporary written earlier in the same clocked block sees the value computed
during that evaluation, which is the one sampled a cycle later. An unknown
guard counts as not taken. ExternalFile mode reads a JSON table of ``{file, line, cycles}``
records produced by some other tool.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

from rtlfl.blocks import BlockSet, CodeBlock
from rtlfl.errors import AnalysisError, MissingCoverage
from rtlfl.hdl.ast import Expr, GuardedAssign
from rtlfl.logic import SignalValue, compile_expr, truth
from rtlfl.waveform import Waveform


class _WaveWidths:
    def __init__(self, w: Waveform, lsbs: dict[str, int] | None = None):
        self.w = w
        self.lsbs = lsbs or {}

    def __call__(self, name: str) -> int:
        return self.w.width(name)

    def lsb(self, name: str) -> int:
        return self.lsbs.get(name, 0)


def eval_expr(expr: Expr, w: Waveform, t: int, lsbs: dict[str, int] | None = None) -> SignalValue:
    """Evaluate ``expr`` over the values recorded at cycle ``t``."""
    width, fn = compile_expr(expr, _WaveWidths(w, lsbs))
    val, unk = fn(lambda name: w.parts_at(name, t))
    return SignalValue.from_parts(width, val, unk)


class CoverageMode(str, Enum):
    REPLAY = "Replay"
    EXTERNAL = "ExternalFile"


class CoverageTableError(AnalysisError):
    pass


@dataclass
class CoverageSource:
    mode: CoverageMode = CoverageMode.REPLAY
    external: dict[tuple[str, int], frozenset[int]] = field(default_factory=dict)
    max_cycle: int = -1
    lsbs: dict[str, int] = field(default_factory=dict)
    _compiled: dict[int, object] = field(default_factory=dict, repr=False)

    @classmethod
    def replay(cls, lsbs: dict[str, int] | None = None) -> CoverageSource:
        return cls(CoverageMode.REPLAY, lsbs=dict(lsbs or {}))

    @classmethod
    def from_records(cls, records: list[dict], blocks: BlockSet | None = None) -> CoverageSource:
        table: dict[tuple[str, int], set[int]] = {}
        owned = set()
        if blocks is not None:
            for b in blocks:
                owned |= b.lines
        for rec in records:
            try:
                key = (str(rec["file"]), int(rec["line"]))
                cycles = [int(c) for c in rec["cycles"]]
            except (KeyError, TypeError, ValueError) as exc:
                raise CoverageTableError(f"bad coverage record {rec!r}") from exc
            if blocks is not None and key not in owned:
                raise CoverageTableError(f"coverage line {key[0]}:{key[1]} is not inside any block")
            table.setdefault(key, set()).update(cycles)
        max_cycle = max((max(c) for c in table.values() if c), default=-1)
        return cls(CoverageMode.EXTERNAL, {k: frozenset(v) for k, v in table.items()}, max_cycle)

    @classmethod
    def load(cls, path, blocks: BlockSet | None = None) -> CoverageSource:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        if not isinstance(data, list):
            raise CoverageTableError("coverage file must hold a JSON array")
        return cls.from_records(data, blocks)

    def guard_true(self, expr: Expr, w: Waveform, t: int, late: frozenset[str] = frozenset()) -> bool:
        # Keyed by id(); the entry keeps ``expr`` alive so the id stays unique.
        entry = self._compiled.get(id(expr))
        if entry is None:
            entry = (expr, compile_expr(expr, _WaveWidths(w, self.lsbs))[1])
            self._compiled[id(expr)] = entry
        return truth(*entry[1](lambda name: w.parts_at(name, t + 1 if name in late else t))) is True


def assignments_to(b: CodeBlock, s: str) -> list[tuple[str, GuardedAssign]]:
    out = []
    for st in b.statements:
        for ga in st.node.guard_tree:
            if s in ga.targets:
                out.append((st.node.file, ga))
    return out


def _start(span) -> tuple[int, int] | None:
    return (span.line, span.col) if span.line > 0 else None


_LATE: dict[int, tuple[CodeBlock, dict]] = {}


def late_reads(b: CodeBlock, ga: GuardedAssign) -> list[frozenset[str]]:
    """Per guard of ``ga``: blocking temporaries of ``b`` already written when the guard is read."""
    cached = _LATE.get(id(b))
    if cached is None or cached[0] is not b:
        cached = _LATE[id(b)] = (b, {})
    memo = cached[1]
    if id(ga) in memo:
        return memo[id(ga)]
    writes: list[tuple[tuple[int, int], str]] = []
    order = {}
    if b.clocked:
        for st in b.statements:
            for other in st.node.guard_tree:
                order[id(other)] = _start(other.assign.span)
                if other.assign.blocking and order[id(other)] is not None:
                    writes += [(order[id(other)], t) for t in other.targets]
    out = []
    for g in ga.guards:
        at = _start(g.expr.span) or order.get(id(ga))
        out.append(frozenset(t for pos, t in writes if at is not None and pos < at and t in g.signals))
    memo[id(ga)] = out
    return out


def is_assignment_covered(b: CodeBlock, s, t: int, w: Waveform, src: CoverageSource) -> bool:
    """Whether some assignment to ``s`` in ``b`` executed at cycle ``t``."""
    name = str(s)
    found = assignments_to(b, name)
    if src.mode is CoverageMode.REPLAY:
        for _, ga in found:
            late = late_reads(b, ga)
            if all(src.guard_true(g.expr, w, t, lt) for g, lt in zip(ga.guards, late)):
                return True
        return False
    for file, ga in found:
        span = ga.assign.span
        lines = range(span.line, span.end_line + 1)
        if not any((file, ln) in src.external for ln in lines) or t > src.max_cycle:
            raise MissingCoverage(span.line, t)
        if any(t in src.external.get((file, ln), ()) for ln in lines):
            return True
    return False
