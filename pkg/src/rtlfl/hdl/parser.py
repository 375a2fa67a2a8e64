"""Recursive-descent parser for the synthesizable SystemVerilog subset.

Supported: module declarations with ANSI or non-ANSI port lists, net and
variable declarations, literal parameters, continuous assigns, ``always``,
``always_ff`` and ``always_comb`` blocks built from ``if``/``case``/``begin``
and blocking or nonblocking assignments, and module instantiation with named
port connections. Anything else raises :class:`UnsupportedConstruct` naming
the file and line.
"""

from __future__ import annotations

from dataclasses import dataclass

from rtlfl.errors import HdlSyntaxError, UnsupportedConstruct
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
    InstanceDecl,
    ModuleDecl,
    NetDecl,
    NullStmt,
    Number,
    ParamDecl,
    PortConnection,
    PortDecl,
    Range,
    Repl,
    Slice,
    Span,
    StatementNode,
    Stmt,
    StmtKind,
    Ternary,
    Unary,
    expr_idents,
    lvalue_reads,
    lvalue_targets,
)
from rtlfl.hdl.lexer import Token, tokenize

UNSUPPORTED_ITEMS = {
    "initial", "final", "function", "task", "class", "interface", "generate",
    "genvar", "for", "while", "repeat", "forever", "typedef", "enum", "struct",
    "union", "package", "import", "integer", "int", "modport", "program",
    "always_latch", "fork",
}

BINARY_PRECEDENCE = [
    ("||",),
    ("&&",),
    ("|",),
    ("^", "~^", "^~"),
    ("&",),
    ("==", "!=", "===", "!=="),
    ("<", "<=", ">", ">="),
    ("<<", ">>", "<<<", ">>>"),
    ("+", "-"),
    ("*", "/", "%"),
    ("**",),
]
UNARY_OPS = {"!", "~", "-", "+", "&", "|", "^", "~&", "~|", "~^", "^~"}


@dataclass(frozen=True)
class SourceUnit:
    path: str
    text: str

    @property
    def line_count(self) -> int:
        if not self.text:
            return 0
        return self.text.count("\n") + (0 if self.text.endswith("\n") else 1)

    @classmethod
    def from_path(cls, path) -> SourceUnit:
        with open(path, encoding="utf-8") as fh:
            return cls(str(path), fh.read())


def parse_number(text: str, file: str = "<string>", line: int = 0, span: Span | None = None) -> Number:
    """Parse a Verilog literal such as ``8'hff``, ``'0`` or ``4'b10x1``."""
    span = span or Span(line, 0, line, 0)
    raw = text.replace("_", "").replace(" ", "").replace("\t", "")
    if raw.startswith("'") and len(raw) == 2:
        ch = raw[1].lower()
        if ch == "0":
            return Number(0, None, text=text, fill=True, span=span)
        if ch == "1":
            return Number(1, None, text=text, fill=True, span=span)
        if ch == "x":
            return Number(0, None, unk=1, text=text, fill=True, span=span)
        return Number(0, None, unk=1, zmask=1, text=text, fill=True, span=span)
    if "'" not in raw:
        return Number(int(raw), None, text=text, span=span)
    size_txt, rest = raw.split("'", 1)
    width = int(size_txt) if size_txt else None
    if width == 0:
        raise HdlSyntaxError(file, line, "non-zero literal width", text)
    if rest[0] in "sS":
        raise UnsupportedConstruct(file, line, "signed literal")
    base_ch = rest[0].lower()
    digits = rest[1:].lower()
    if not digits:
        raise HdlSyntaxError(file, line, "literal digits", text)
    if base_ch == "d":
        if any(c in "xz?" for c in digits):
            if len(digits) != 1:
                raise HdlSyntaxError(file, line, "decimal digits", text)
            w = width or 32
            mask = (1 << w) - 1
            z = mask if digits in "z?" else 0
            return Number(0, width, unk=mask, zmask=z, text=text, span=span)
        if not digits.isdigit():
            raise HdlSyntaxError(file, line, "decimal digits", text)
        value = int(digits)
        if width is not None:
            value &= (1 << width) - 1
        return Number(value, width, text=text, span=span)
    bits_per = {"b": 1, "o": 3, "h": 4}[base_ch]
    value = unk = zmask = 0
    for c in digits:
        value <<= bits_per
        unk <<= bits_per
        zmask <<= bits_per
        full = (1 << bits_per) - 1
        if c == "x":
            unk |= full
        elif c in "z?":
            unk |= full
            zmask |= full
        else:
            d = int(c, 16)
            if d >= (1 << bits_per):
                raise HdlSyntaxError(file, line, f"base-{base_ch} digit", c)
            value |= d
    nbits = bits_per * len(digits)
    if width is not None:
        if nbits < width:
            first = digits[0]
            ext = ((1 << width) - 1) ^ ((1 << nbits) - 1)
            if first == "x":
                unk |= ext
            elif first in "z?":
                unk |= ext
                zmask |= ext
        mask = (1 << width) - 1
        value &= mask
        unk &= mask
        zmask &= mask
    value &= ~unk
    return Number(value, width, unk=unk, zmask=zmask, text=text, span=span)


def analyze_body(body: Stmt) -> tuple[GuardedAssign, ...]:
    """Flatten a statement tree into assignments with their dominating guards.

    ``case`` statements are desugared into priority if/else chains.
    """
    out: list[GuardedAssign] = []

    def guard(expr: Expr) -> Guard:
        return Guard(expr, frozenset(expr_idents(expr)))

    def visit(stmt: Stmt, guards: tuple[Guard, ...]) -> None:
        if isinstance(stmt, Assign):
            targets = tuple(t.name for t in lvalue_targets(stmt.lhs))
            reads = frozenset(expr_idents(stmt.rhs) | lvalue_reads(stmt.lhs))
            out.append(GuardedAssign(stmt, guards, targets, reads))
        elif isinstance(stmt, Block):
            for s in stmt.stmts:
                visit(s, guards)
        elif isinstance(stmt, If):
            visit(stmt.then, guards + (guard(stmt.cond),))
            if stmt.else_ is not None:
                visit(stmt.else_, guards + (guard(Unary("!", stmt.cond, stmt.cond.span)),))
        elif isinstance(stmt, Case):
            prior: list[Guard] = []
            for item in stmt.items:
                if item.patterns is None:
                    visit(item.body, guards + tuple(prior))
                    continue
                match = CaseMatch(stmt.subject, item.patterns, stmt.kind, item.span)
                visit(item.body, guards + tuple(prior) + (guard(match),))
                prior.append(guard(Unary("!", match, item.span)))

    visit(body, ())
    return tuple(out)


def _strip(names: frozenset[str] | set[str], params: set[str]) -> frozenset[str]:
    return frozenset(n for n in names if n not in params)


class Parser:
    def __init__(self, text: str, file: str):
        self.file = file
        self.toks = tokenize(text, file)
        self.pos = 0

    # -- token helpers --------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.pos]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def at(self, *texts: str) -> bool:
        t = self.tok
        return t.kind in ("op", "kw") and t.text in texts

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "eof":
            self.pos += 1
        return t

    def accept(self, text: str) -> Token | None:
        if self.at(text):
            return self.advance()
        return None

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise HdlSyntaxError(self.file, self.tok.line, repr(text), self.tok.text or "end of file")
        return self.advance()

    def expect_id(self) -> Token:
        t = self.tok
        if t.kind != "id":
            if t.kind == "kw" and t.text in UNSUPPORTED_ITEMS:
                raise UnsupportedConstruct(self.file, t.line, t.text)
            raise HdlSyntaxError(self.file, t.line, "identifier", t.text or "end of file")
        return self.advance()

    def unsupported(self, what: str, tok: Token | None = None) -> UnsupportedConstruct:
        return UnsupportedConstruct(self.file, (tok or self.tok).line, what)

    def span_from(self, start: Token) -> Span:
        prev = self.toks[self.pos - 1]
        return Span(start.line, start.col, prev.end_line, prev.end_col)

    # -- top level -------------------------------------------------------------

    def parse_file(self) -> list[ModuleDecl]:
        modules = []
        while self.tok.kind != "eof":
            if self.at("module"):
                modules.append(self.parse_module())
            elif self.at(";"):
                self.advance()
            elif self.tok.kind == "kw":
                raise self.unsupported(self.tok.text)
            else:
                raise HdlSyntaxError(self.file, self.tok.line, "'module'", self.tok.text)
        return modules

    def parse_module(self) -> ModuleDecl:
        start = self.expect("module")
        name = self.expect_id().text
        mod = ModuleDecl(name, self.file, start.line)
        self._raw_items: list = []
        if self.accept("#"):
            self.expect("(")
            self.parse_param_list(mod)
            self.expect(")")
        if self.accept("("):
            if not self.at(")"):
                self.parse_port_list(mod)
            self.expect(")")
        self.expect(";")
        while not self.at("endmodule"):
            if self.tok.kind == "eof":
                raise HdlSyntaxError(self.file, self.tok.line, "'endmodule'", "end of file")
            self.parse_module_item(mod)
        self.advance()
        if self.accept(":"):
            self.expect_id()
        self.finish_module(mod)
        return mod

    def parse_param_list(self, mod: ModuleDecl) -> None:
        while True:
            self.accept("parameter")
            self.parse_param_assignments(mod, local=False, terminators=(",", ")"))
            if not self.accept(","):
                break

    def parse_param_assignments(self, mod: ModuleDecl, local: bool, terminators: tuple[str, ...]) -> None:
        if self.at("signed"):
            raise self.unsupported("signed parameter")
        if self.at("int", "integer"):
            self.advance()
        elif self.at("logic", "bit", "reg", "wire"):
            self.advance()
        rng = self.parse_range_opt()
        while True:
            name_tok = self.expect_id()
            self.expect("=")
            value = self.parse_expr()
            if not isinstance(value, Number):
                raise self.unsupported("non-literal parameter value", name_tok)
            mod.params.append(ParamDecl(name_tok.text, value, local, rng, name_tok.line))
            # In a #( ) list a comma may introduce the next 'parameter' keyword.
            if self.at(",") and self.peek().text != "parameter" and self.peek().kind == "id":
                if self.peek(2).text == "=":
                    self.advance()
                    continue
            break

    def parse_range_opt(self) -> Range | None:
        if not self.at("["):
            return None
        self.advance()
        msb = self.parse_expr()
        self.expect(":")
        lsb = self.parse_expr()
        self.expect("]")
        return Range(msb, lsb)

    def parse_data_type(self) -> tuple[str, Range | None]:
        kind = "wire"
        if self.at("logic", "wire", "reg", "bit"):
            kind = self.advance().text
            if kind == "wire" and self.at("logic"):
                self.advance()
        if self.at("signed"):
            raise self.unsupported("signed data type")
        self.accept("unsigned")
        rng = self.parse_range_opt()
        if self.at("["):
            raise self.unsupported("multi-dimensional packed array")
        return kind, rng

    def parse_port_list(self, mod: ModuleDecl) -> None:
        if not self.at("input", "output", "inout"):
            # Non-ANSI header: names only; directions follow as module items.
            while True:
                t = self.expect_id()
                mod.ports.append(PortDecl(t.text, Direction.INPUT, None, -t.line))
                if not self.accept(","):
                    return
        direction: Direction | None = None
        kind_range: tuple[str, Range | None] = ("wire", None)
        while True:
            if self.at("input", "output", "inout"):
                dtok = self.advance()
                if dtok.text == "inout":
                    raise self.unsupported("inout port", dtok)
                direction = Direction(dtok.text)
                kind_range = self.parse_data_type()
            elif self.at("logic", "wire", "reg", "bit", "["):
                kind_range = self.parse_data_type()
            assert direction is not None
            t = self.expect_id()
            if self.at("["):
                raise self.unsupported("unpacked array port", t)
            mod.ports.append(PortDecl(t.text, direction, kind_range[1], t.line))
            if not self.accept(","):
                return

    # -- module items ------------------------------------------------------------

    def parse_module_item(self, mod: ModuleDecl) -> None:
        t = self.tok
        if t.kind == "kw":
            kw = t.text
            if kw in ("input", "output", "inout"):
                self.parse_port_item(mod)
            elif kw in ("logic", "wire", "reg", "bit"):
                self.parse_net_item(mod)
            elif kw in ("parameter", "localparam"):
                self.advance()
                self.parse_param_assignments(mod, local=(kw == "localparam"), terminators=(";",))
                self.expect(";")
            elif kw == "assign":
                self.parse_continuous_assign(mod)
            elif kw in ("always", "always_ff", "always_comb"):
                self.parse_always(mod)
            elif kw in UNSUPPORTED_ITEMS or kw in ("interface", "class"):
                raise self.unsupported(kw)
            else:
                raise HdlSyntaxError(self.file, t.line, "module item", kw)
        elif t.kind == "id":
            self.parse_instance(mod)
        elif self.at(";"):
            self.advance()
        elif t.kind == "sysid":
            raise self.unsupported(f"system task {t.text}")
        else:
            raise HdlSyntaxError(self.file, t.line, "module item", t.text)

    def parse_port_item(self, mod: ModuleDecl) -> None:
        dtok = self.advance()
        if dtok.text == "inout":
            raise self.unsupported("inout port", dtok)
        direction = Direction(dtok.text)
        _, rng = self.parse_data_type()
        while True:
            t = self.expect_id()
            for i, p in enumerate(mod.ports):
                if p.name == t.text:
                    mod.ports[i] = PortDecl(t.text, direction, rng, t.line)
                    break
            else:
                raise HdlSyntaxError(self.file, t.line, "a port named in the module header", t.text)
            if not self.accept(","):
                break
        self.expect(";")

    def parse_net_item(self, mod: ModuleDecl) -> None:
        kind, rng = self.parse_data_type()
        init: tuple[Token, Expr] | None = None
        while True:
            t = self.expect_id()
            if self.at("["):
                raise self.unsupported("unpacked array", t)
            port = mod.port(t.text)
            if port is not None:
                # `output logic x;` style redeclaration of a non-ANSI port.
                if rng is not None and port.range is None:
                    idx = mod.ports.index(port)
                    mod.ports[idx] = PortDecl(port.name, port.direction, rng, port.line)
            else:
                mod.nets.append(NetDecl(t.text, kind, rng, t.line))
            if self.at("="):
                if kind != "wire":
                    raise self.unsupported(f"{kind} declaration with initializer", t)
                if init is not None:
                    raise self.unsupported("multiple net declaration assignments in one statement", t)
                self.advance()
                init = (t, self.parse_expr())
            if not self.accept(","):
                break
        self.expect(";")
        if init is not None:
            t, rhs = init
            lhs = Ident(t.text, Span(t.line, t.col, t.end_line, t.end_col))
            span = self.span_from(t)
            self._raw_items.append(("assign", Assign(lhs, rhs, True, span), t.line, span.end_line))

    def parse_continuous_assign(self, mod: ModuleDecl) -> None:
        start = self.advance()
        lhs = self.parse_lvalue()
        self.expect("=")
        rhs = self.parse_expr()
        if self.at(","):
            raise self.unsupported("multiple assignments in one assign statement")
        self.expect(";")
        span = self.span_from(start)
        self._raw_items.append(("assign", Assign(lhs, rhs, True, span), start.line, span.end_line))

    def parse_always(self, mod: ModuleDecl) -> None:
        start = self.advance()
        kind = start.text
        triggers: list[tuple[str, str]] = []
        if kind == "always_comb":
            if self.at("@"):
                raise self.unsupported("always_comb with sensitivity list")
        else:
            if not self.accept("@"):
                raise self.unsupported(f"{kind} without event control", start)
            if self.accept("*"):
                pass
            else:
                self.expect("(")
                if self.accept("*"):
                    pass
                else:
                    level: list[str] = []
                    while True:
                        if self.at("posedge", "negedge"):
                            edge = self.advance().text
                            triggers.append((edge, self.expect_id().text))
                        else:
                            level.append(self.expect_id().text)
                        if not (self.accept("or") or self.accept(",")):
                            break
                    if triggers and level:
                        raise self.unsupported("mixed edge and level sensitivity", start)
                self.expect(")")
            if kind == "always_ff" and not triggers:
                raise self.unsupported("always_ff without clock edge", start)
        body = self.parse_stmt()
        span = self.span_from(start)
        self._raw_items.append(("always", kind, tuple(triggers), body, start.line, span.end_line))

    def parse_instance(self, mod: ModuleDecl) -> None:
        start = self.expect_id()
        params: list[tuple[str, Number]] = []
        if self.accept("#"):
            self.expect("(")
            while not self.at(")"):
                if not self.accept("."):
                    raise self.unsupported("positional parameter override")
                pname = self.expect_id().text
                self.expect("(")
                value = self.parse_expr()
                if not isinstance(value, Number):
                    raise self.unsupported("non-literal parameter override")
                self.expect(")")
                params.append((pname, value))
                if not self.accept(","):
                    break
            self.expect(")")
        inst_name = self.expect_id().text
        if self.at("["):
            raise self.unsupported("instance array")
        self.expect("(")
        conns: list[PortConnection] = []
        seen: set[str] = set()
        while not self.at(")"):
            ctok = self.tok
            if not self.accept("."):
                raise self.unsupported("positional port connection")
            if self.at("*"):
                raise self.unsupported("wildcard port connection")
            pname = self.expect_id().text
            if not self.at("("):
                raise self.unsupported("implicit named port connection")
            self.expect("(")
            expr = None if self.at(")") else self.parse_expr()
            self.expect(")")
            if pname in seen:
                raise HdlSyntaxError(self.file, ctok.line, "unique port connection", pname)
            seen.add(pname)
            conns.append(PortConnection(pname, expr, self.span_from(ctok)))
            if not self.accept(","):
                break
        self.expect(")")
        self.expect(";")
        mod.instantiations.append(
            InstanceDecl(start.text, inst_name, tuple(params), tuple(conns), self.span_from(start))
        )

    # -- statements --------------------------------------------------------------

    def parse_stmt(self) -> Stmt:
        t = self.tok
        if self.at("begin"):
            self.advance()
            if self.accept(":"):
                self.expect_id()
            stmts = []
            while not self.at("end"):
                if self.tok.kind == "eof":
                    raise HdlSyntaxError(self.file, self.tok.line, "'end'", "end of file")
                if self.at("logic", "reg", "wire", "bit", "int", "integer"):
                    raise self.unsupported("block-local declaration")
                stmts.append(self.parse_stmt())
            self.advance()
            if self.accept(":"):
                self.expect_id()
            return Block(tuple(stmts), self.span_from(t))
        if self.at("unique", "unique0", "priority"):
            self.advance()
            if not self.at("if", "case", "casez", "casex"):
                raise HdlSyntaxError(self.file, self.tok.line, "'if' or 'case'", self.tok.text)
        if self.at("if"):
            self.advance()
            self.expect("(")
            cond = self.parse_expr()
            self.expect(")")
            then = self.parse_stmt()
            else_ = None
            if self.accept("else"):
                else_ = self.parse_stmt()
            return If(cond, then, else_, self.span_from(t))
        if self.at("case", "casez", "casex"):
            kind = self.advance().text
            self.expect("(")
            subject = self.parse_expr()
            self.expect(")")
            if self.at("inside"):
                raise self.unsupported("case inside")
            items = []
            while not self.at("endcase"):
                itok = self.tok
                if self.tok.kind == "eof":
                    raise HdlSyntaxError(self.file, self.tok.line, "'endcase'", "end of file")
                if self.accept("default"):
                    self.accept(":")
                    items.append(CaseItem(None, self.parse_stmt(), self.span_from(itok)))
                    continue
                pats = [self.parse_expr()]
                while self.accept(","):
                    pats.append(self.parse_expr())
                self.expect(":")
                body = self.parse_stmt()
                items.append(CaseItem(tuple(pats), body, self.span_from(itok)))
            self.advance()
            return Case(kind, subject, tuple(items), self.span_from(t))
        if self.at(";"):
            self.advance()
            return NullStmt(self.span_from(t))
        if t.kind == "kw":
            if t.text in UNSUPPORTED_ITEMS:
                raise self.unsupported(t.text)
            raise HdlSyntaxError(self.file, t.line, "statement", t.text)
        if t.kind == "sysid":
            raise self.unsupported(f"system task {t.text}")
        lhs = self.parse_lvalue()
        if self.at("<="):
            blocking = False
        elif self.at("="):
            blocking = True
        else:
            raise HdlSyntaxError(self.file, self.tok.line, "'=' or '<='", self.tok.text)
        self.advance()
        rhs = self.parse_expr()
        self.expect(";")
        return Assign(lhs, rhs, blocking, self.span_from(t))

    def parse_lvalue(self) -> Expr:
        t = self.tok
        if self.at("{"):
            self.advance()
            items = [self.parse_lvalue()]
            while self.accept(","):
                items.append(self.parse_lvalue())
            self.expect("}")
            return Concat(tuple(items), self.span_from(t))
        ident_tok = self.expect_id()
        return self.parse_selects(ident_tok)

    # -- expressions ---------------------------------------------------------------

    def parse_expr(self) -> Expr:
        start = self.tok
        cond = self.parse_binary(0)
        if self.at("?"):
            self.advance()
            then = self.parse_expr()
            self.expect(":")
            else_ = self.parse_expr()
            return Ternary(cond, then, else_, self.span_from(start))
        return cond

    def parse_binary(self, level: int) -> Expr:
        if level == len(BINARY_PRECEDENCE):
            return self.parse_unary()
        start = self.tok
        lhs = self.parse_binary(level + 1)
        ops = BINARY_PRECEDENCE[level]
        while self.tok.kind == "op" and self.tok.text in ops:
            op_tok = self.advance()
            if op_tok.text == "**":
                rhs = self.parse_binary(level)  # right associative
            else:
                rhs = self.parse_binary(level + 1)
            op_span = Span(op_tok.line, op_tok.col, op_tok.end_line, op_tok.end_col)
            lhs = Binary(op_tok.text, lhs, rhs, self.span_from(start), op_span)
        return lhs

    def parse_unary(self) -> Expr:
        t = self.tok
        if t.kind == "op" and t.text in UNARY_OPS:
            self.advance()
            operand = self.parse_unary()
            op_span = Span(t.line, t.col, t.end_line, t.end_col)
            return Unary(t.text, operand, self.span_from(t), op_span)
        return self.parse_primary()

    def parse_primary(self) -> Expr:
        t = self.tok
        if t.kind == "num":
            self.advance()
            return parse_number(t.text, self.file, t.line, Span(t.line, t.col, t.end_line, t.end_col))
        if t.kind == "id":
            self.advance()
            if self.at("."):
                raise self.unsupported("hierarchical reference", t)
            if self.at("("):
                raise self.unsupported("function call", t)
            if self.at("::"):
                raise self.unsupported("package scope reference", t)
            return self.parse_selects(t)
        if t.kind == "sysid":
            raise self.unsupported(f"system function {t.text}")
        if self.at("("):
            self.advance()
            e = self.parse_expr()
            self.expect(")")
            return e
        if self.at("{"):
            self.advance()
            first = self.parse_expr()
            if self.at("{"):
                self.advance()
                items = [self.parse_expr()]
                while self.accept(","):
                    items.append(self.parse_expr())
                self.expect("}")
                self.expect("}")
                return Repl(first, tuple(items), self.span_from(t))
            items = [first]
            while self.accept(","):
                items.append(self.parse_expr())
            self.expect("}")
            return Concat(tuple(items), self.span_from(t))
        if self.at("'") and self.peek().text in ("(", "{"):
            raise self.unsupported("assignment pattern or cast")
        raise HdlSyntaxError(self.file, t.line, "expression", t.text or "end of file")

    def parse_selects(self, ident_tok: Token) -> Expr:
        base = Ident(ident_tok.text, Span(ident_tok.line, ident_tok.col, ident_tok.end_line, ident_tok.end_col))
        if not self.at("["):
            return base
        self.advance()
        first = self.parse_expr()
        if self.accept(":"):
            second = self.parse_expr()
            self.expect("]")
            node: Expr = Slice(base, first, second, ":", self.span_from(ident_tok))
        elif self.at("+:", "-:"):
            mode = self.advance().text
            second = self.parse_expr()
            self.expect("]")
            node = Slice(base, first, second, mode, self.span_from(ident_tok))
        else:
            self.expect("]")
            node = Index(base, first, self.span_from(ident_tok))
        if self.at("["):
            raise self.unsupported("multi-dimensional select", ident_tok)
        return node

    # -- statement nodes --------------------------------------------------------------

    def finish_module(self, mod: ModuleDecl) -> None:
        names = [p.name for p in mod.ports]
        if len(names) != len(set(names)):
            dup = next(n for n in names if names.count(n) > 1)
            raise HdlSyntaxError(self.file, mod.line, "unique port names", dup)
        for p in mod.ports:
            if p.line < 0:
                raise HdlSyntaxError(self.file, -p.line, f"a direction declaration for port {p.name}")
        params = {p.name for p in mod.params}
        for item in self._raw_items:
            if item[0] == "assign":
                _, a, first, last = item
                targets = frozenset(t.name for t in lvalue_targets(a.lhs))
                reads = frozenset(expr_idents(a.rhs) | lvalue_reads(a.lhs))
                ga = GuardedAssign(a, (), tuple(sorted(targets)), _strip(reads, params))
                mod.items.append(
                    StatementNode(
                        kind=StmtKind.CONTINUOUS_ASSIGN,
                        file=self.file,
                        line_span=(first, last),
                        body=a,
                        lhs_signals=targets,
                        rhs_signals=_strip(reads, params),
                        guard_tree=(ga,),
                    )
                )
            else:
                _, kind, triggers, body, first, last = item
                tree = analyze_body(body)
                lhs: set[str] = set()
                rhs: set[str] = set()
                cond: set[str] = set()
                stripped = []
                for ga in tree:
                    lhs.update(ga.targets)
                    rhs.update(ga.reads)
                    for g in ga.guards:
                        cond.update(g.signals)
                    stripped.append(
                        GuardedAssign(
                            ga.assign,
                            tuple(Guard(g.expr, _strip(g.signals, params)) for g in ga.guards),
                            ga.targets,
                            _strip(ga.reads, params),
                        )
                    )
                clocked = bool(triggers)
                clock = None
                if clocked:
                    pos = [sig for edge, sig in triggers if edge == "posedge"]
                    clock = pos[0] if pos else triggers[0][1]
                mod.items.append(
                    StatementNode(
                        kind=StmtKind.ALWAYS_BLOCK,
                        file=self.file,
                        line_span=(first, last),
                        body=body,
                        clocked=clocked,
                        clock_edge_signal=clock,
                        triggers=triggers,
                        always_kind=kind,
                        lhs_signals=frozenset(lhs),
                        rhs_signals=_strip(rhs, params),
                        condition_signals=_strip(cond, params),
                        guard_tree=tuple(stripped),
                    )
                )
        mod.items.sort(key=lambda s: s.line_span)


def _check_line_ownership(mods: list[ModuleDecl], file: str) -> None:
    spans: list[tuple[int, int, str]] = []
    for mod in mods:
        for s in mod.items:
            spans.append((s.line_span[0], s.line_span[1], s.kind.value))
        for inst in mod.instantiations:
            for c in inst.connections:
                spans.append((c.span.line, c.span.end_line, f"port connection .{c.port}"))
    spans.sort()
    for (a0, a1, ka), (b0, b1, kb) in zip(spans, spans[1:]):
        if b0 <= a1:
            raise UnsupportedConstruct(file, b0, f"{kb} shares a source line with {ka}")


def parse_sources(files: list[SourceUnit]) -> DesignAST:
    """Parse every file into one :class:`DesignAST` keyed by module name."""
    modules: dict[str, ModuleDecl] = {}
    texts: dict[str, str] = {}
    for unit in files:
        texts[unit.path] = unit.text
        mods = Parser(unit.text, unit.path).parse_file()
        _check_line_ownership(mods, unit.path)
        for m in mods:
            if m.name in modules:
                raise HdlSyntaxError(unit.path, m.line, "unique module name", m.name)
            modules[m.name] = m
    return DesignAST(modules, texts)
