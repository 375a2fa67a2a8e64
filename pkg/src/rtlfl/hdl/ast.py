"""AST node types for the supported SystemVerilog subset.

Expression and statement nodes are frozen dataclasses; elaboration rewrites
them with :func:`dataclasses.replace` rather than mutating in place.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Union


@dataclass(frozen=True, slots=True)
class Span:
    line: int
    col: int
    end_line: int
    end_col: int

    def merge(self, other: Span) -> Span:
        return Span(self.line, self.col, other.end_line, other.end_col)


NO_SPAN = Span(0, 0, 0, 0)


# --- expressions ------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class Ident:
    name: str
    span: Span = NO_SPAN


@dataclass(frozen=True, slots=True)
class Number:
    """A literal. ``unk`` marks X/Z bits, ``zmask`` the Z subset of them."""

    value: int
    width: int | None  # None = unsized (treated as 32 bits)
    unk: int = 0
    zmask: int = 0
    text: str = ""
    fill: bool = False  # '0 / '1 / 'x: extends to context width
    span: Span = NO_SPAN


@dataclass(frozen=True, slots=True)
class Index:
    base: Ident
    index: Expr
    span: Span = NO_SPAN


@dataclass(frozen=True, slots=True)
class Slice:
    """``base[msb:lsb]``, or an indexed part-select when ``mode`` is ``+:``/``-:``."""

    base: Ident
    msb: Expr
    lsb: Expr
    mode: str = ":"
    span: Span = NO_SPAN


@dataclass(frozen=True, slots=True)
class Concat:
    items: tuple[Expr, ...]
    span: Span = NO_SPAN


@dataclass(frozen=True, slots=True)
class Repl:
    count: Expr
    items: tuple[Expr, ...]
    span: Span = NO_SPAN


@dataclass(frozen=True, slots=True)
class Unary:
    op: str
    operand: Expr
    span: Span = NO_SPAN
    op_span: Span = NO_SPAN


@dataclass(frozen=True, slots=True)
class Binary:
    op: str
    lhs: Expr
    rhs: Expr
    span: Span = NO_SPAN
    op_span: Span = NO_SPAN


@dataclass(frozen=True, slots=True)
class Ternary:
    cond: Expr
    then: Expr
    else_: Expr
    span: Span = NO_SPAN


@dataclass(frozen=True, slots=True)
class CaseMatch:
    """Synthetic node: does ``subject`` match any of ``patterns``? Built from case items."""

    subject: Expr
    patterns: tuple[Expr, ...]
    kind: str = "case"  # case | casez | casex
    span: Span = NO_SPAN


Expr = Union[Ident, Number, Index, Slice, Concat, Repl, Unary, Binary, Ternary, CaseMatch]


def expr_children(e: Expr) -> tuple[Expr, ...]:
    if isinstance(e, Index):
        return (e.base, e.index)
    if isinstance(e, Slice):
        return (e.base, e.msb, e.lsb)
    if isinstance(e, (Concat,)):
        return e.items
    if isinstance(e, Repl):
        return (e.count, *e.items)
    if isinstance(e, Unary):
        return (e.operand,)
    if isinstance(e, Binary):
        return (e.lhs, e.rhs)
    if isinstance(e, Ternary):
        return (e.cond, e.then, e.else_)
    if isinstance(e, CaseMatch):
        return (e.subject, *e.patterns)
    return ()


def walk_expr(e: Expr) -> Iterator[Expr]:
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(expr_children(node)))


def expr_idents(e: Expr) -> set[str]:
    return {n.name for n in walk_expr(e) if isinstance(n, Ident)}


def lvalue_targets(e: Expr) -> list[Ident]:
    """Identifiers written by an assignment target (whole-signal granularity)."""
    if isinstance(e, Ident):
        return [e]
    if isinstance(e, (Index, Slice)):
        return [e.base]
    if isinstance(e, Concat):
        out: list[Ident] = []
        for item in e.items:
            out.extend(lvalue_targets(item))
        return out
    raise TypeError(f"not an lvalue: {type(e).__name__}")


def lvalue_reads(e: Expr) -> set[str]:
    """Identifiers read while computing an lvalue's address (e.g. a dynamic bit index)."""
    if isinstance(e, Ident):
        return set()
    if isinstance(e, Index):
        return expr_idents(e.index)
    if isinstance(e, Slice):
        return expr_idents(e.msb) | expr_idents(e.lsb)
    if isinstance(e, Concat):
        out: set[str] = set()
        for item in e.items:
            out |= lvalue_reads(item)
        return out
    return set()


# --- statements -------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class Assign:
    lhs: Expr
    rhs: Expr
    blocking: bool
    span: Span = NO_SPAN


@dataclass(frozen=True, slots=True)
class If:
    cond: Expr
    then: Stmt
    else_: Stmt | None
    span: Span = NO_SPAN


@dataclass(frozen=True, slots=True)
class CaseItem:
    patterns: tuple[Expr, ...] | None  # None = default
    body: Stmt
    span: Span = NO_SPAN


@dataclass(frozen=True, slots=True)
class Case:
    kind: str
    subject: Expr
    items: tuple[CaseItem, ...]
    span: Span = NO_SPAN


@dataclass(frozen=True, slots=True)
class Block:
    stmts: tuple[Stmt, ...]
    span: Span = NO_SPAN


@dataclass(frozen=True, slots=True)
class NullStmt:
    span: Span = NO_SPAN


Stmt = Union[Assign, If, Case, Block, NullStmt]


def walk_stmt(s: Stmt) -> Iterator[Stmt]:
    stack: list[Stmt] = [s]
    while stack:
        node = stack.pop()
        yield node
        if isinstance(node, Block):
            stack.extend(reversed(node.stmts))
        elif isinstance(node, If):
            if node.else_ is not None:
                stack.append(node.else_)
            stack.append(node.then)
        elif isinstance(node, Case):
            stack.extend(item.body for item in reversed(node.items))


# --- module level -----------------------------------------------------------


class Direction(str, Enum):
    INPUT = "input"
    OUTPUT = "output"
    INOUT = "inout"


@dataclass(frozen=True, slots=True)
class Range:
    msb: Expr
    lsb: Expr


@dataclass(frozen=True, slots=True)
class PortDecl:
    name: str
    direction: Direction
    range: Range | None
    line: int
    width: int | None = None  # filled once parameters are known


@dataclass(frozen=True, slots=True)
class NetDecl:
    name: str
    kind: str
    range: Range | None
    line: int


@dataclass(frozen=True, slots=True)
class ParamDecl:
    name: str
    value: Number
    local: bool
    range: Range | None
    line: int


@dataclass(frozen=True, slots=True)
class PortConnection:
    port: str
    expr: Expr | None
    span: Span


@dataclass(frozen=True, slots=True)
class InstanceDecl:
    module: str
    name: str
    params: tuple[tuple[str, Number], ...]
    connections: tuple[PortConnection, ...]
    span: Span


class StmtKind(str, Enum):
    CONTINUOUS_ASSIGN = "ContinuousAssign"
    ALWAYS_BLOCK = "AlwaysBlock"


@dataclass(frozen=True, slots=True)
class Guard:
    """One dominating condition: ``expr`` must evaluate to 1 for the guarded code to run."""

    expr: Expr
    signals: frozenset[str]


@dataclass(frozen=True, slots=True)
class GuardedAssign:
    assign: Assign
    guards: tuple[Guard, ...]
    targets: tuple[str, ...]
    reads: frozenset[str]


@dataclass(frozen=True)
class StatementNode:
    kind: StmtKind
    file: str
    line_span: tuple[int, int]
    body: Stmt
    clocked: bool = False
    clock_edge_signal: str | None = None
    triggers: tuple[tuple[str, str], ...] = ()  # (edge, signal) from the sensitivity list
    always_kind: str = ""
    lhs_signals: frozenset[str] = frozenset()
    rhs_signals: frozenset[str] = frozenset()
    condition_signals: frozenset[str] = frozenset()
    guard_tree: tuple[GuardedAssign, ...] = ()

    @property
    def trigger_signals(self) -> frozenset[str]:
        return frozenset(sig for _, sig in self.triggers)

    @property
    def lines(self) -> range:
        return range(self.line_span[0], self.line_span[1] + 1)


@dataclass
class ModuleDecl:
    name: str
    file: str
    line: int
    ports: list[PortDecl] = field(default_factory=list)
    nets: list[NetDecl] = field(default_factory=list)
    params: list[ParamDecl] = field(default_factory=list)
    items: list[StatementNode] = field(default_factory=list)
    instantiations: list[InstanceDecl] = field(default_factory=list)

    def port(self, name: str) -> PortDecl | None:
        for p in self.ports:
            if p.name == name:
                return p
        return None


@dataclass
class DesignAST:
    modules: dict[str, ModuleDecl]
    files: dict[str, str]  # path -> text

    def module(self, name: str) -> ModuleDecl | None:
        return self.modules.get(name)
