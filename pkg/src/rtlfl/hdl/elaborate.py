"""Expand the module hierarchy into flat, hierarchically named signals."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from rtlfl.errors import (
    HdlSyntaxError,
    RecursiveInstantiation,
    UnknownModule,
    UnresolvedIdentifier,
    UnsupportedConstruct,
)
from rtlfl.hdl.ast import (
    Assign,
    Binary,
    Block,
    Case,
    CaseItem,
    CaseMatch,
    Concat,
    DesignAST,
    Direction,
    Expr,
    Guard,
    GuardedAssign,
    Ident,
    If,
    Index,
    ModuleDecl,
    NullStmt,
    Number,
    Range,
    Repl,
    Slice,
    Span,
    StatementNode,
    Stmt,
    Ternary,
    Unary,
    expr_idents,
    lvalue_targets,
)


@dataclass(frozen=True, order=True)
class SignalRef:
    hier_name: str
    width: int = 1
    lsb: int = 0

    @property
    def local_name(self) -> str:
        return self.hier_name.rsplit(".", 1)[-1]

    @property
    def scope(self) -> str:
        return self.hier_name.rsplit(".", 1)[0]

    def __str__(self) -> str:
        return self.hier_name


@dataclass
class Instance:
    path: str
    module: str
    params: dict[str, Number]
    children: list[Instance] = field(default_factory=list)
    file: str = ""


@dataclass(frozen=True)
class ElabStatement:
    index: int
    instance: str
    module: str
    node: StatementNode

    @property
    def file(self) -> str:
        return self.node.file


@dataclass(frozen=True)
class PortBinding:
    """One named port connection, resolved on both sides."""

    index: int
    parent: str  # instance path of the instantiating module
    child: str  # instance path of the instantiated module
    port: str  # hierarchical name of the child port
    direction: Direction
    expr: Expr  # parent-side expression, resolved to hierarchical names
    parent_signals: frozenset[str]
    file: str
    span: Span

    @property
    def lines(self) -> range:
        return range(self.span.line, self.span.end_line + 1)


@dataclass
class DesignHierarchy:
    top: str
    root: Instance
    signals: dict[str, SignalRef]
    statements: list[ElabStatement]
    connections: list[PortBinding]
    ports: dict[str, Direction]  # hierarchical port name -> direction
    instances: dict[str, Instance]
    files: dict[str, str]

    def signal(self, name: str) -> SignalRef:
        return self.signals[name]

    @property
    def primary_inputs(self) -> list[str]:
        prefix = self.top + "."
        return sorted(
            n for n, d in self.ports.items() if d is Direction.INPUT and n.startswith(prefix) and n.count(".") == 1
        )

    @property
    def primary_outputs(self) -> list[str]:
        return sorted(
            n for n, d in self.ports.items() if d is Direction.OUTPUT and n.count(".") == 1
        )


def const_eval(e: Expr, params: dict[str, Number], where: str) -> int:
    """Evaluate a constant expression over literals and parameters (ranges, selects)."""
    if isinstance(e, Number):
        if e.unk:
            raise UnsupportedConstruct(where, e.span.line, "unknown bits in constant expression")
        return e.value
    if isinstance(e, Ident):
        if e.name not in params:
            raise UnresolvedIdentifier(where, e.name)
        return params[e.name].value
    if isinstance(e, Binary):
        a = const_eval(e.lhs, params, where)
        b = const_eval(e.rhs, params, where)
        ops = {
            "+": lambda: a + b,
            "-": lambda: a - b,
            "*": lambda: a * b,
            "/": lambda: a // b,
            "%": lambda: a % b,
            "<<": lambda: a << b,
            ">>": lambda: a >> b,
            "**": lambda: a**b,
        }
        if e.op in ops:
            return ops[e.op]()
    if isinstance(e, Unary) and e.op in "-+":
        v = const_eval(e.operand, params, where)
        return -v if e.op == "-" else v
    raise UnsupportedConstruct(where, getattr(e, "span", Span(0, 0, 0, 0)).line, "non-constant expression")


def _range_bounds(rng: Range | None, params: dict[str, Number], where: str) -> tuple[int, int]:
    if rng is None:
        return 1, 0
    msb = const_eval(rng.msb, params, where)
    lsb = const_eval(rng.lsb, params, where)
    if msb < lsb:
        raise UnsupportedConstruct(where, getattr(rng.msb, "span", Span(0, 0, 0, 0)).line, "ascending range")
    return msb - lsb + 1, lsb


class _Resolver:
    def __init__(self, scope: str, names: set[str], params: dict[str, Number], file: str):
        self.scope = scope
        self.names = names
        self.params = params
        self.file = file

    def name(self, n: str) -> str:
        if n not in self.names:
            raise UnresolvedIdentifier(self.scope, n)
        return f"{self.scope}.{n}"

    def names_of(self, names) -> frozenset[str]:
        return frozenset(self.name(n) for n in names if n not in self.params)

    def expr(self, e: Expr) -> Expr:
        if isinstance(e, Ident):
            if e.name in self.params:
                p = self.params[e.name]
                return replace(p, span=e.span)
            return Ident(self.name(e.name), e.span)
        if isinstance(e, Number):
            return e
        if isinstance(e, Index):
            return Index(self.expr(e.base), self.expr(e.index), e.span)
        if isinstance(e, Slice):
            base = self.expr(e.base)
            if not isinstance(base, Ident):
                raise UnsupportedConstruct(self.file, e.span.line, "select on a parameter")
            return Slice(base, self.expr(e.msb), self.expr(e.lsb), e.mode, e.span)
        if isinstance(e, Concat):
            return Concat(tuple(self.expr(i) for i in e.items), e.span)
        if isinstance(e, Repl):
            return Repl(self.expr(e.count), tuple(self.expr(i) for i in e.items), e.span)
        if isinstance(e, Unary):
            return Unary(e.op, self.expr(e.operand), e.span, e.op_span)
        if isinstance(e, Binary):
            return Binary(e.op, self.expr(e.lhs), self.expr(e.rhs), e.span, e.op_span)
        if isinstance(e, Ternary):
            return Ternary(self.expr(e.cond), self.expr(e.then), self.expr(e.else_), e.span)
        if isinstance(e, CaseMatch):
            return CaseMatch(self.expr(e.subject), tuple(self.expr(p) for p in e.patterns), e.kind, e.span)
        raise TypeError(type(e).__name__)

    def stmt(self, s: Stmt) -> Stmt:
        if isinstance(s, Assign):
            lhs = self.expr(s.lhs)
            for t in lvalue_targets(s.lhs):
                if t.name in self.params:
                    raise UnsupportedConstruct(self.file, s.span.line, f"assignment to parameter {t.name}")
            return Assign(lhs, self.expr(s.rhs), s.blocking, s.span)
        if isinstance(s, Block):
            return Block(tuple(self.stmt(x) for x in s.stmts), s.span)
        if isinstance(s, If):
            return If(self.expr(s.cond), self.stmt(s.then), None if s.else_ is None else self.stmt(s.else_), s.span)
        if isinstance(s, Case):
            items = tuple(
                CaseItem(None if it.patterns is None else tuple(self.expr(p) for p in it.patterns), self.stmt(it.body), it.span)
                for it in s.items
            )
            return Case(s.kind, self.expr(s.subject), items, s.span)
        if isinstance(s, NullStmt):
            return s
        raise TypeError(type(s).__name__)

    def node(self, n: StatementNode) -> StatementNode:
        tree = tuple(
            GuardedAssign(
                self.stmt(ga.assign),
                tuple(Guard(self.expr(g.expr), self.names_of(g.signals)) for g in ga.guards),
                tuple(self.name(t) for t in ga.targets),
                self.names_of(ga.reads),
            )
            for ga in n.guard_tree
        )
        return replace(
            n,
            body=self.stmt(n.body),
            clock_edge_signal=None if n.clock_edge_signal is None else self.name(n.clock_edge_signal),
            triggers=tuple((edge, self.name(sig)) for edge, sig in n.triggers),
            lhs_signals=self.names_of(n.lhs_signals),
            rhs_signals=self.names_of(n.rhs_signals),
            condition_signals=self.names_of(n.condition_signals),
            guard_tree=tree,
        )


def _is_lvalue(e: Expr) -> bool:
    try:
        lvalue_targets(e)
    except TypeError:
        return False
    return True


def elaborate(ast: DesignAST, top: str) -> DesignHierarchy:
    """Instantiate ``top`` recursively and resolve every identifier."""
    if top not in ast.modules:
        raise UnknownModule(top)
    signals: dict[str, SignalRef] = {}
    ports: dict[str, Direction] = {}
    statements: list[ElabStatement] = []
    connections: list[PortBinding] = []
    instances: dict[str, Instance] = {}

    def module_params(mod: ModuleDecl, overrides: dict[str, Number], path: str) -> dict[str, Number]:
        params: dict[str, Number] = {}
        for p in mod.params:
            value = p.value
            if p.name in overrides and not p.local:
                value = overrides[p.name]
            if p.range is not None:
                width, _ = _range_bounds(p.range, params, mod.file)
            else:
                width = value.width or 32
            mask = (1 << width) - 1
            params[p.name] = Number(value.value & mask, width, value.unk & mask, value.zmask & mask, value.text)
        declared = {p.name for p in mod.params if not p.local}
        for name in overrides:
            if name not in declared:
                raise UnresolvedIdentifier(path, name)
        return params

    def visit(mod: ModuleDecl, path: str, overrides: dict[str, Number], stack: tuple[str, ...]) -> Instance:
        if mod.name in stack:
            raise RecursiveInstantiation(path)
        params = module_params(mod, overrides, path)
        inst = Instance(path, mod.name, params, file=mod.file)
        instances[path] = inst
        local: set[str] = set()
        for p in mod.ports:
            width, lsb = _range_bounds(p.range, params, mod.file)
            signals[f"{path}.{p.name}"] = SignalRef(f"{path}.{p.name}", width, lsb)
            ports[f"{path}.{p.name}"] = p.direction
            local.add(p.name)
        for n in mod.nets:
            if n.name in local or n.name in params:
                raise HdlSyntaxError(mod.file, n.line, "unique declaration", n.name)
            width, lsb = _range_bounds(n.range, params, mod.file)
            signals[f"{path}.{n.name}"] = SignalRef(f"{path}.{n.name}", width, lsb)
            local.add(n.name)
        resolver = _Resolver(path, local, params, mod.file)
        for item in mod.items:
            statements.append(ElabStatement(len(statements), path, mod.name, resolver.node(item)))
        inst_names: set[str] = set()
        for decl in mod.instantiations:
            if decl.name in inst_names or decl.name in local:
                raise HdlSyntaxError(mod.file, decl.span.line, "unique instance name", decl.name)
            inst_names.add(decl.name)
            child_mod = ast.modules.get(decl.module)
            if child_mod is None:
                raise UnknownModule(decl.module)
            child_path = f"{path}.{decl.name}"
            child = visit(child_mod, child_path, dict(decl.params), stack + (mod.name,))
            inst.children.append(child)
            for conn in decl.connections:
                port = child_mod.port(conn.port)
                if port is None:
                    raise UnresolvedIdentifier(child_path, conn.port)
                if conn.expr is None:
                    continue
                expr = resolver.expr(conn.expr)
                if port.direction is Direction.OUTPUT and not _is_lvalue(expr):
                    raise UnsupportedConstruct(mod.file, conn.span.line, "output port connected to a non-lvalue")
                connections.append(
                    PortBinding(
                        index=len(connections),
                        parent=path,
                        child=child_path,
                        port=f"{child_path}.{conn.port}",
                        direction=port.direction,
                        expr=expr,
                        parent_signals=frozenset(expr_idents(expr)),
                        file=mod.file,
                        span=conn.span,
                    )
                )
        return inst

    root = visit(ast.modules[top], top, {}, ())
    return DesignHierarchy(top, root, signals, statements, connections, ports, instances, dict(ast.files))
