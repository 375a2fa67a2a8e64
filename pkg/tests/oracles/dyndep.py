"""Brute-force dynamic-dependence oracle over a tiny design DSL.

Designs are written as Python data, rendered to SystemVerilog for the code
under test, and interpreted directly here. Nothing in this module imports the
package: block partition, ids, cones, coverage and values are all recomputed
from the DSL.

Expressions
    ("s", name) | ("c", width, value) | ("bit", name, i)
    (op, a, b) for op in + - & | ^ == != <
    ("!", a) | ("~", a) | ("?", cond, a, b)

Statements
    ("nb", lhs, expr) | ("ba", lhs, expr)
    ("if", cond, then_stmts, else_stmts)
    ("case", subject, [(const_expr, stmts), ...], default_stmts_or_None)

Module items
    ("assign", lhs, expr) | ("comb", stmts) | ("ff", stmts)
    ("inst", module_name, instance_name, [(port, expr), ...])
"""

from __future__ import annotations

from dataclasses import dataclass, field

FILE = "design.sv"
BINOPS = {"+", "-", "&", "|", "^", "==", "!=", "<"}


@dataclass
class Module:
    name: str
    ports: list[tuple[str, str, int]]  # (dir, name, width)
    wires: list[tuple[str, int]]
    items: list[tuple]

    def widths(self) -> dict[str, int]:
        w = {n: width for _, n, width in self.ports}
        w.update(dict(self.wires))
        return w

    def directions(self) -> dict[str, str]:
        return {n: d for d, n, _ in self.ports}


# -- rendering -----------------------------------------------------------------


def render_expr(e) -> str:
    tag = e[0]
    if tag == "s":
        return e[1]
    if tag == "c":
        return f"{e[1]}'d{e[2]}"
    if tag == "bit":
        return f"{e[1]}[{e[2]}]"
    if tag in ("!", "~"):
        return f"{tag}({render_expr(e[1])})"
    if tag == "?":
        return f"({render_expr(e[1])} ? {render_expr(e[2])} : {render_expr(e[3])})"
    return f"({render_expr(e[1])} {tag} {render_expr(e[2])})"


def _decl(width: int) -> str:
    return "logic" if width == 1 else f"logic [{width - 1}:0]"


class _Writer:
    def __init__(self):
        self.lines: list[str] = []

    def add(self, text: str) -> int:
        self.lines.append(text)
        return len(self.lines)


def _render_stmts(out: _Writer, stmts, indent: int) -> None:
    pad = "  " * indent
    for st in stmts:
        if st[0] in ("nb", "ba"):
            op = "<=" if st[0] == "nb" else "="
            out.add(f"{pad}{st[1]} {op} {render_expr(st[2])};")
        elif st[0] == "if":
            out.add(f"{pad}if ({render_expr(st[1])}) begin")
            _render_stmts(out, st[2], indent + 1)
            if st[3]:
                out.add(f"{pad}end else begin")
                _render_stmts(out, st[3], indent + 1)
            out.add(f"{pad}end")
        elif st[0] == "case":
            out.add(f"{pad}case ({render_expr(st[1])})")
            for value, body in st[2]:
                out.add(f"{pad}  {render_expr(value)}: begin")
                _render_stmts(out, body, indent + 2)
                out.add(f"{pad}  end")
            if st[3] is not None:
                out.add(f"{pad}  default: begin")
                _render_stmts(out, st[3], indent + 2)
                out.add(f"{pad}  end")
            out.add(f"{pad}endcase")
        else:
            raise ValueError(st)


@dataclass
class Rendered:
    text: str
    # (module, item index) -> first line; (module, item index, port) -> line
    item_line: dict[tuple[str, int], int] = field(default_factory=dict)
    port_line: dict[tuple[str, int, str], int] = field(default_factory=dict)


def render(modules: list[Module]) -> Rendered:
    out = _Writer()
    r = Rendered("")
    for m in modules:
        out.add(f"module {m.name} (")
        for i, (d, n, w) in enumerate(m.ports):
            sep = "," if i < len(m.ports) - 1 else ""
            out.add(f"  {d} {_decl(w)} {n}{sep}")
        out.add(");")
        for n, w in m.wires:
            out.add(f"  {_decl(w)} {n};")
        for idx, item in enumerate(m.items):
            if item[0] == "assign":
                r.item_line[(m.name, idx)] = out.add(f"  assign {item[1]} = {render_expr(item[2])};")
            elif item[0] in ("comb", "ff"):
                head = "always_comb begin" if item[0] == "comb" else "always_ff @(posedge clk) begin"
                r.item_line[(m.name, idx)] = out.add(f"  {head}")
                _render_stmts(out, item[1], 2)
                out.add("  end")
            elif item[0] == "inst":
                r.item_line[(m.name, idx)] = out.add(f"  {item[1]} {item[2]} (")
                for j, (port, expr) in enumerate(item[3]):
                    sep = "," if j < len(item[3]) - 1 else ""
                    r.port_line[(m.name, idx, port)] = out.add(f"    .{port}({render_expr(expr)}){sep}")
                out.add("  );")
            else:
                raise ValueError(item)
        out.add("endmodule")
        out.add("")
    r.text = "\n".join(out.lines)
    return r


# -- static analysis -------------------------------------------------------------


def expr_reads(e) -> set[str]:
    tag = e[0]
    if tag == "s":
        return {e[1]}
    if tag == "c":
        return set()
    if tag == "bit":
        return {e[1]}
    return set().union(*(expr_reads(x) for x in e[1:]))


def assignment_records(stmts, guards=frozenset()):
    """Yield ``(kind, target, reads, guard_signals)`` for every assignment."""
    for st in stmts:
        if st[0] in ("nb", "ba"):
            yield st[0], st[1], expr_reads(st[2]), guards
        elif st[0] == "if":
            g = guards | expr_reads(st[1])
            yield from assignment_records(st[2], g)
            yield from assignment_records(st[3], g)
        elif st[0] == "case":
            g = guards | expr_reads(st[1])
            for value, body in st[2]:
                yield from assignment_records(body, g | expr_reads(value))
            if st[3] is not None:
                yield from assignment_records(st[3], g)


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


@dataclass
class OBlock:
    id: str
    clocked: bool
    # local target -> list of (reads, guards, kind), names already flattened
    records: dict[str, list[tuple[set[str], frozenset[str], str]]]
    port_in: set[str] | None = None  # port blocks: v_in

    def cone(self, s: str) -> set[str]:
        if self.port_in is not None:
            return set(self.port_in)
        expandable = {
            t for t, recs in self.records.items() if not self.clocked or any(k == "ba" for _, _, k in recs)
        }
        out: set[str] = set()
        done = {s}
        todo = [s]
        while todo:
            u = todo.pop()
            for reads, guards, _ in self.records.get(u, ()):
                for r in reads | guards:
                    if r in expandable:
                        if r not in done:
                            done.add(r)
                            todo.append(r)
                    else:
                        out.add(r)
        return out


# -- flattening and interpretation ------------------------------------------------


def _rename(e, f):
    tag = e[0]
    if tag == "s":
        return ("s", f(e[1]))
    if tag == "c":
        return e
    if tag == "bit":
        return ("bit", f(e[1]), e[2])
    return (tag,) + tuple(_rename(x, f) for x in e[1:])


def _rename_stmts(stmts, f):
    out = []
    for st in stmts:
        if st[0] in ("nb", "ba"):
            out.append((st[0], f(st[1]), _rename(st[2], f)))
        elif st[0] == "if":
            out.append(("if", _rename(st[1], f), _rename_stmts(st[2], f), _rename_stmts(st[3], f)))
        else:
            items = [(_rename(v, f), _rename_stmts(b, f)) for v, b in st[2]]
            default = None if st[3] is None else _rename_stmts(st[3], f)
            out.append(("case", _rename(st[1], f), items, default))
    return out


def evaluate(e, get) -> int:
    tag = e[0]
    if tag == "s":
        return get(e[1])
    if tag == "c":
        return e[2]
    if tag == "bit":
        return (get(e[1]) >> e[2]) & 1
    if tag == "!":
        return int(evaluate(e[1], get) == 0)
    if tag == "~":
        return ~evaluate(e[1], get)
    if tag == "?":
        return evaluate(e[2], get) if evaluate(e[1], get) else evaluate(e[3], get)
    a, b = evaluate(e[1], get), evaluate(e[2], get)
    return {
        "+": lambda: a + b,
        "-": lambda: a - b,
        "&": lambda: a & b,
        "|": lambda: a | b,
        "^": lambda: a ^ b,
        "==": lambda: int(a == b),
        "!=": lambda: int(a != b),
        "<": lambda: int(a < b),
    }[tag]()


@dataclass
class _Proc:
    block: str
    kind: str  # assign | comb | ff | port
    stmts: list  # for assign/port: [("ba", lhs, expr)]


class OracleDesign:
    def __init__(self, modules: list[Module], top: str):
        self.modules = {m.name: m for m in modules}
        self.top = top
        self.rendered = render(modules)
        self.widths: dict[str, int] = {}
        self.blocks: dict[str, OBlock] = {}
        self.driver: dict[str, str] = {}
        self.procs: list[_Proc] = []
        self.inputs = [f"{top}.{n}" for d, n, _ in self.modules[top].ports if d == "input"]
        self._flatten(top, top)

    @property
    def files(self) -> dict[str, str]:
        return {FILE: self.rendered.text}

    def _flatten(self, mod_name: str, path: str) -> None:
        m = self.modules[mod_name]
        local = m.widths()

        def f(n: str) -> str:
            if n not in local:
                raise KeyError(f"{n} undeclared in {mod_name}")
            return f"{path}.{n}"

        for n, w in local.items():
            self.widths[f(n)] = w
        assigns: list[tuple[int, tuple]] = []
        for idx, item in enumerate(m.items):
            line = self.rendered.item_line[(mod_name, idx)]
            if item[0] == "assign":
                assigns.append((line, ("ba", f(item[1]), _rename(item[2], f))))
            elif item[0] in ("comb", "ff"):
                bid = f"AlwaysBlock:{path}:{FILE}:{line}"
                stmts = _rename_stmts(item[1], f)
                self._add_block(bid, item[0] == "ff", stmts)
                self.procs.append(_Proc(bid, item[0], stmts))
            else:
                _, child_mod, inst, conns = item
                child_path = f"{path}.{inst}"
                dirs = self.modules[child_mod].directions()
                for port, expr in conns:
                    pline = self.rendered.port_line[(mod_name, idx, port)]
                    cport = f"{child_path}.{port}"
                    pexpr = _rename(expr, f)
                    if dirs[port] == "input":
                        bid = f"ModInputBlock:{path}:{FILE}:{pline}"
                        blk = OBlock(bid, False, {}, port_in=expr_reads(pexpr))
                        self._register(blk, {cport})
                        self.procs.append(_Proc(bid, "port", [("ba", cport, pexpr)]))
                    else:
                        assert expr[0] == "s"
                        bid = f"ModOutputBlock:{path}:{FILE}:{pline}"
                        blk = OBlock(bid, False, {}, port_in={cport})
                        self._register(blk, {pexpr[1]})
                        self.procs.append(_Proc(bid, "port", [("ba", pexpr[1], ("s", cport))]))
                self._flatten(child_mod, child_path)
        # Continuous assigns: components of the "feeds" relation, named by first line.
        uf = _UnionFind(len(assigns))
        for i, (_, a) in enumerate(assigns):
            for j, (_, b) in enumerate(assigns):
                if i != j and a[1] in expr_reads(b[2]):
                    uf.union(i, j)
        groups: dict[int, list[tuple[int, tuple]]] = {}
        for i, entry in enumerate(assigns):
            groups.setdefault(uf.find(i), []).append(entry)
        for members in groups.values():
            first = min(line for line, _ in members)
            bid = f"AssignBlock:{path}:{FILE}:{first}"
            stmts = [st for _, st in sorted(members)]
            self._add_block(bid, False, stmts)
            self.procs.append(_Proc(bid, "assign", stmts))

    def _add_block(self, bid: str, clocked: bool, stmts) -> None:
        records: dict[str, list] = {}
        for kind, target, reads, guards in assignment_records(stmts):
            records.setdefault(target, []).append((reads, guards, kind))
        self._register(OBlock(bid, clocked, records), set(records))

    def _register(self, blk: OBlock, outs: set[str]) -> None:
        assert blk.id not in self.blocks, blk.id
        self.blocks[blk.id] = blk
        for s in outs:
            assert s not in self.driver, s
            self.driver[s] = blk.id

    # -- interpretation ----------------------------------------------------------

    def _exec(self, stmts, get, put, executed) -> None:
        for st in stmts:
            if st[0] in ("nb", "ba"):
                put(st[0], st[1], evaluate(st[2], get))
                executed.add(st[1])
            elif st[0] == "if":
                branch = st[2] if evaluate(st[1], get) else st[3]
                self._exec(branch, get, put, executed)
            else:
                subject = evaluate(st[1], get)
                for value, body in st[2]:
                    if evaluate(value, get) == subject:
                        self._exec(body, get, put, executed)
                        break
                else:
                    if st[3] is not None:
                        self._exec(st[3], get, put, executed)

    def _mask(self, name: str, v: int) -> int:
        return v & ((1 << self.widths[name]) - 1)

    def simulate(self, stimulus: dict[str, list[int]], cycles: int):
        """Return per-cycle samples and, per edge, the (block, target) pairs that executed."""
        state = {n: 0 for n in self.widths}
        comb = [p for p in self.procs if p.kind != "ff"]
        ffs = [p for p in self.procs if p.kind == "ff"]

        def drive(k: int) -> None:
            for n, seq in stimulus.items():
                state[f"{self.top}.{n}"] = self._mask(f"{self.top}.{n}", seq[min(k, len(seq) - 1)])

        def settle() -> None:
            for _ in range(len(comb) * 4 + 4):
                changed = False
                for p in comb:
                    local: dict[str, int] = {}

                    def get(n, local=local):
                        return local[n] if n in local else state[n]

                    def put(kind, n, v, local=local):
                        local[n] = self._mask(n, v)

                    self._exec(p.stmts, get, put, set())
                    for n, v in local.items():
                        if state[n] != v:
                            state[n] = v
                            changed = True
                if not changed:
                    return
            raise RuntimeError("combinational logic did not settle")

        drive(0)
        settle()
        samples: list[dict[str, int]] = []
        executed_at: list[set[tuple[str, str]]] = []
        for k in range(cycles):
            nb: list[tuple[str, int]] = []
            blocking: list[tuple[str, int]] = []
            executed: set[tuple[str, str]] = set()
            for p in ffs:
                local: dict[str, int] = {}

                def get(n, local=local):
                    return local[n] if n in local else state[n]

                def put(kind, n, v, local=local):
                    if kind == "ba":
                        local[n] = self._mask(n, v)
                    else:
                        nb.append((n, self._mask(n, v)))

                ran: set[str] = set()
                self._exec(p.stmts, get, put, ran)
                executed |= {(p.block, t) for t in ran}
                blocking.extend(local.items())
            for n, v in blocking + nb:
                state[n] = v
            drive(k)
            settle()
            samples.append(dict(state))
            executed_at.append(executed)
        return samples, executed_at

    # -- slicing ---------------------------------------------------------------------

    def exec_path(self, sig: str, t: int, executed_at) -> tuple[set[tuple[str, int]], set]:
        """Node and edge sets reached backward from ``(sig, t)``."""
        root = (self.driver[sig], t)
        nodes = {root}
        edges: set[tuple[tuple[str, int], tuple[str, int]]] = set()
        seen: set[tuple[str, int]] = set()
        stack = [(sig, t)]
        while stack:
            s, cur = stack.pop()
            if cur < 0 or (s, cur) in seen:
                continue
            seen.add((s, cur))
            blk = self.blocks[self.driver[s]]
            if not blk.clocked:
                deps, prev = blk.cone(s), cur
            elif cur >= 1 and (blk.id, s) in executed_at[cur]:
                # executed_at[k] holds what ran at edge k, which reads cycle k - 1
                deps, prev = blk.cone(s), cur - 1
            else:
                deps, prev = {s}, cur - 1
            if prev < 0:
                continue
            here = (blk.id, cur)
            for d in deps:
                if d not in self.driver:
                    continue
                src = (self.driver[d], prev)
                nodes.add(src)
                edges.add((src, here))
                stack.append((d, prev))
        return nodes, edges

    def covered(self, block: str, s: str, t: int, executed_at) -> bool:
        return t + 1 < len(executed_at) and (block, s) in executed_at[t + 1]
