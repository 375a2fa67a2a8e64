"""A small cycle-based 4-state simulator for the supported subset.

It exists so fixtures and mutants can be turned into VCD waveforms without an
external simulator. Semantics are deliberately simple:

* one clock; every clocked always block fires on its rising edge, reading the
  settled pre-edge state (nonblocking updates commit after all blocks ran);
* asynchronous reset terms in sensitivity lists are treated as synchronous,
  so reset must be held across at least one rising edge;
* primary inputs change right after the clocked updates of an edge, then the
  combinational logic settles and the state is sampled;
* an unknown ``if`` condition takes the else branch, an unknown ``case``
  subject matches nothing.

The clock rises at ``5 + 10*k`` and falls five time units later.
"""

from __future__ import annotations

import graphlib
from dataclasses import dataclass
from typing import Callable, TextIO

from rtlfl.errors import CombinationalLoop, UnsupportedConstruct
from rtlfl.hdl.ast import (
    Assign,
    Block,
    Case,
    CaseMatch,
    Concat,
    Direction,
    Expr,
    Ident,
    If,
    Index,
    NullStmt,
    Slice,
    Stmt,
    StmtKind,
    expr_idents,
    lvalue_targets,
)
from rtlfl.hdl.elaborate import DesignHierarchy
from rtlfl.logic import SignalValue, WidthTable, compile_expr, mask, truth
from rtlfl.waveform import VcdWriter

PERIOD = 10
FIRST_EDGE = 5

Value = tuple[int, int]


class _Env:
    """State access for one process activation."""

    __slots__ = ("state", "local", "pending", "clocked")

    def __init__(self, state: dict[str, Value], clocked: bool):
        self.state = state
        self.local: dict[str, Value] = {}
        self.pending: list[tuple[str, int, int, int, int]] = []
        self.clocked = clocked

    def get(self, name: str) -> Value:
        v = self.local.get(name)
        return self.state[name] if v is None else v


def _splice(old: Value, lo: int, width: int, val: int, unk: int) -> Value:
    m = mask(width) << lo
    return (old[0] & ~m) | ((val << lo) & m), (old[1] & ~m) | ((unk << lo) & m)


class _Compiler:
    def __init__(self, design: DesignHierarchy):
        self.widths = WidthTable(
            {n: s.width for n, s in design.signals.items()},
            {n: s.lsb for n, s in design.signals.items()},
        )

    def expr(self, e: Expr, ctx: int | None = None):
        return compile_expr(e, self.widths, ctx)

    def lvalue(self, e: Expr):
        """Compile an lvalue to ``(width, fn(get) -> [(name, lo, width)])`` MSB first."""
        if isinstance(e, Ident):
            name, w = e.name, self.widths(e.name)
            parts = [(name, 0, w)]
            return w, lambda g: parts
        if isinstance(e, Index):
            name = e.base.name
            bw = self.widths(name)
            off = self.widths.lsb(name)
            _, idx = self.expr(e.index)

            def bit(g):
                v, u = idx(g)
                pos = v - off
                if u or pos < 0 or pos >= bw:
                    return []
                return [(name, pos, 1)]

            return 1, bit
        if isinstance(e, Slice) and e.mode == ":":
            name = e.base.name
            off = self.widths.lsb(name)
            hi, lo = e.msb.value, e.lsb.value
            parts = [(name, lo - off, hi - lo + 1)]
            return hi - lo + 1, lambda g: parts
        if isinstance(e, Slice):
            name = e.base.name
            bw = self.widths(name)
            off = self.widths.lsb(name)
            w = e.lsb.value
            _, base = self.expr(e.msb)
            down = e.mode == "-:"

            def indexed(g):
                v, u = base(g)
                lo = (v - w + 1 if down else v) - off
                if u or lo < 0 or lo + w > bw:
                    return []
                return [(name, lo, w)]

            return w, indexed
        if isinstance(e, Concat):
            items = [self.lvalue(i) for i in e.items]
            total = sum(w for w, _ in items)

            def cat(g):
                out = []
                for _, fn in items:
                    out.extend(fn(g))
                return out

            return total, cat
        raise UnsupportedConstruct("<sim>", getattr(e, "span", None) and e.span.line or 0, "lvalue")

    def stmt(self, s: Stmt) -> Callable[[_Env], None]:
        if isinstance(s, Assign):
            lw, lfn = self.lvalue(s.lhs)
            _, rfn = self.expr(s.rhs, lw)
            blocking = s.blocking

            def assign(env: _Env):
                g = env.get
                val, unk = rfn(g)
                val &= mask(lw)
                unk &= mask(lw)
                shift = lw
                for name, lo, w in lfn(g):
                    shift -= w
                    pv, pu = (val >> shift) & mask(w), (unk >> shift) & mask(w)
                    if blocking or not env.clocked:
                        env.local[name] = _splice(env.get(name), lo, w, pv, pu)
                    else:
                        env.pending.append((name, lo, w, pv, pu))

            return assign
        if isinstance(s, Block):
            fns = [self.stmt(x) for x in s.stmts]

            def block(env: _Env):
                for fn in fns:
                    fn(env)

            return block
        if isinstance(s, If):
            _, cond = self.expr(s.cond)
            then = self.stmt(s.then)
            other = self.stmt(s.else_) if s.else_ is not None else None

            def branch(env: _Env):
                if truth(*cond(env.get)) is True:
                    then(env)
                elif other is not None:
                    other(env)

            return branch
        if isinstance(s, Case):
            arms = []
            default = None
            for item in s.items:
                body = self.stmt(item.body)
                if item.patterns is None:
                    default = body
                else:
                    _, m = self.expr(CaseMatch(s.subject, item.patterns, s.kind, item.span))
                    arms.append((m, body))

            def case(env: _Env):
                g = env.get
                for m, body in arms:
                    if truth(*m(g)) is True:
                        body(env)
                        return
                if default is not None:
                    default(env)

            return case
        if isinstance(s, NullStmt):
            return lambda env: None
        raise UnsupportedConstruct("<sim>", 0, type(s).__name__)


@dataclass
class _Process:
    name: str
    reads: frozenset[str]
    writes: frozenset[str]
    run: Callable[[_Env], None]
    clocked: bool


@dataclass
class SimTrace:
    """Per-cycle samples taken right after each rising clock edge settles."""

    signals: dict[str, int]
    samples: list[dict[str, Value]]

    def value(self, name: str, cycle: int) -> SignalValue:
        val, unk = self.samples[cycle][name]
        return SignalValue.from_parts(self.signals[name], val, unk)


class Simulator:
    def __init__(self, design: DesignHierarchy, clock: str):
        self.design = design
        self.clock = clock
        comp = _Compiler(design)
        self.widths = {n: s.width for n, s in design.signals.items()}
        procs: list[_Process] = []
        for st in design.statements:
            node = st.node
            run = comp.stmt(node.body)
            writes = frozenset(node.lhs_signals)
            reads = frozenset(node.rhs_signals | node.condition_signals)
            name = f"{st.instance}:{node.file}:{node.line_span[0]}"
            if node.kind is StmtKind.CONTINUOUS_ASSIGN and reads & writes:
                raise CombinationalLoop([name])
            procs.append(_Process(name, reads, writes, run, node.clocked))
        for pb in design.connections:
            if pb.direction is Direction.INPUT:
                lhs: Expr = Ident(pb.port, pb.span)
                rhs = pb.expr
            else:
                lhs, rhs = pb.expr, Ident(pb.port, pb.span)
            run = comp.stmt(Assign(lhs, rhs, True, pb.span))
            writes = frozenset(t.name for t in lvalue_targets(lhs))
            reads = frozenset(expr_idents(rhs))
            procs.append(_Process(f"{pb.parent}:{pb.file}:{pb.span.line}", reads, writes, run, False))
        self.clocked = [p for p in procs if p.clocked]
        comb = [p for p in procs if not p.clocked]
        writer_of: dict[str, int] = {}
        for i, p in enumerate(comb):
            for s in p.writes:
                writer_of[s] = i
        graph = {i: {writer_of[r] for r in p.reads if r in writer_of and writer_of[r] != i} for i, p in enumerate(comb)}
        try:
            order = list(graphlib.TopologicalSorter(graph).static_order())
        except graphlib.CycleError as exc:
            raise CombinationalLoop([comb[i].name for i in exc.args[1]]) from None
        self.comb = [comb[i] for i in order]
        self.readers: dict[str, list[int]] = {}
        for i, p in enumerate(self.comb):
            for r in p.reads:
                self.readers.setdefault(r, []).append(i)

    def run(
        self,
        stimulus: dict[str, list[int]],
        cycles: int,
        vcd: TextIO | None = None,
    ) -> SimTrace:
        """Simulate ``cycles`` rising edges.

        ``stimulus[name][k]`` is the value a primary input holds from edge ``k``
        until edge ``k + 1``; entry 0 is also the value before the first edge.
        Missing trailing entries repeat the last one.
        """
        names = sorted(self.widths)
        state: dict[str, Value] = {n: (0, mask(w)) for n, w in self.widths.items()}
        dirty = [True] * len(self.comb)
        changed: set[str] = set(names)
        writer = VcdWriter(vcd, [(n, self.widths[n]) for n in names]) if vcd is not None else None

        def put(name: str, v: Value) -> None:
            if state[name] != v:
                state[name] = v
                changed.add(name)
                for i in self.readers.get(name, ()):
                    dirty[i] = True

        def drive_inputs(k: int) -> None:
            for name, seq in stimulus.items():
                if not seq:
                    continue
                value = seq[min(k, len(seq) - 1)]
                w = self.widths[name]
                put(name, (value & mask(w), 0) if value is not None else (0, mask(w)))

        def settle() -> None:
            for i, p in enumerate(self.comb):
                if dirty[i]:
                    dirty[i] = False
                    env = _Env(state, False)
                    p.run(env)
                    for n, v in env.local.items():
                        put(n, v)

        def dump(time: int) -> None:
            if writer is not None:
                for n in sorted(changed):
                    writer.change(time, n, SignalValue.from_parts(self.widths[n], *state[n]))
            changed.clear()

        put(self.clock, (0, 0))
        drive_inputs(0)
        settle()
        dump(0)
        samples: list[dict[str, Value]] = []
        for k in range(cycles):
            t_edge = FIRST_EDGE + PERIOD * k
            commits: list[tuple[str, int, int, int, int]] = []
            blocking: list[tuple[str, Value]] = []
            for p in self.clocked:
                env = _Env(state, True)
                p.run(env)
                commits.extend(env.pending)
                blocking.extend(env.local.items())
            for n, v in blocking:
                put(n, v)
            for n, lo, w, val, unk in commits:
                put(n, _splice(state[n], lo, w, val, unk))
            put(self.clock, (1, 0))
            drive_inputs(k)
            settle()
            samples.append(dict(state))
            dump(t_edge)
            put(self.clock, (0, 0))
            dump(t_edge + PERIOD // 2)
        return SimTrace(dict(self.widths), samples)
