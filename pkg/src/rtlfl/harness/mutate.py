"""Single-site source mutations used to build localization benchmarks.

Sites are restricted to assign and always statements of modules that are
instantiated exactly once, so every mutated line belongs to exactly one code
block. All sites are single-line text edits; reverting restores the original
bytes.
"""

from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass

from rtlfl.errors import NoApplicableSite
from rtlfl.hdl.ast import (
    Assign,
    Binary,
    Case,
    Expr,
    Ident,
    If,
    Index,
    Number,
    Repl,
    Slice,
    expr_children,
    lvalue_targets,
    walk_stmt,
)
from rtlfl.hdl.elaborate import DesignHierarchy, elaborate
from rtlfl.hdl.parser import SourceUnit, parse_sources

RULES = ("BinaryOpSwap", "UnaryNegateCondition", "SignalReplace", "ConstantPerturb", "AssignmentDelete")

OP_SWAP = {
    "+": "-",
    "-": "+",
    "&": "|",
    "|": "^",
    "^": "&",
    "==": "!=",
    "!=": "==",
    "<": ">=",
    ">=": "<",
    ">": "<=",
    "<=": ">",
    "&&": "||",
    "||": "&&",
    "<<": ">>",
    ">>": "<<",
}


@dataclass(frozen=True)
class Mutation:
    rule: str
    file: str
    line: int
    col: int
    end_col: int
    original: str
    mutated: str
    seed: int

    def _edit(self, text: str, old: str, new: str) -> str:
        lines = text.split("\n")
        row = lines[self.line - 1]
        if row[self.col : self.end_col] != old:
            raise ValueError(f"{self.file}:{self.line}: expected {old!r} at column {self.col}")
        lines[self.line - 1] = row[: self.col] + new + row[self.end_col :]
        return "\n".join(lines)

    @property
    def _mutated_end(self) -> int:
        return self.col + len(self.mutated)

    def apply(self, files: dict[str, str]) -> dict[str, str]:
        out = dict(files)
        out[self.file] = self._edit(files[self.file], self.original, self.mutated)
        return out

    def revert(self, files: dict[str, str]) -> dict[str, str]:
        out = dict(files)
        undo = Mutation(self.rule, self.file, self.line, self.col, self._mutated_end, self.mutated, self.original, self.seed)
        out[self.file] = undo._edit(files[self.file], self.mutated, self.original)
        return out

    def ground_truth(self) -> list[tuple[str, int]]:
        return [(self.file, self.line)]

    def to_json(self) -> dict:
        d = asdict(self)
        d["ground_truth"] = [{"file": f, "line": ln} for f, ln in self.ground_truth()]
        return d

    @classmethod
    def from_json(cls, data: dict) -> Mutation:
        return cls(**{k: data[k] for k in ("rule", "file", "line", "col", "end_col", "original", "mutated", "seed")})

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"


@dataclass(frozen=True)
class _Site:
    file: str
    line: int
    col: int
    end_col: int
    original: str
    choices: tuple[str, ...]


def _single_line(span) -> bool:
    return span.line > 0 and span.line == span.end_line


def _operand_exprs(e: Expr):
    """Walk an expression, skipping select bounds and replication counts."""
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        if isinstance(node, Slice):
            stack.append(node.base)
        elif isinstance(node, Index):
            stack.append(node.base)
        elif isinstance(node, Repl):
            stack.extend(reversed(node.items))
        else:
            stack.extend(reversed(expr_children(node)))


def _render_number(n: Number, value: int) -> str | None:
    text = n.text.replace("_", "")
    if "'" not in text:
        return str(value) if text.isdigit() else None
    size, rest = text.split("'", 1)
    if not rest or rest[0].lower() not in "bodh":
        return None
    base = rest[0]
    digits = rest[1:]
    fmt = {"b": "b", "o": "o", "d": "d", "h": "x"}[base.lower()]
    body = format(value, fmt)
    if fmt != "d":
        body = body.rjust(len(digits), "0")
    return f"{size}'{base}{body}"


class _SiteCollector:
    def __init__(self, design: DesignHierarchy, files: dict[str, str], clock: str):
        self.files = files
        self.clock = clock
        self.design = design

    def widths_for(self, instance: str) -> dict[str, int]:
        prefix = instance + "."
        return {
            n[len(prefix):]: s.width
            for n, s in self.design.signals.items()
            if n.startswith(prefix) and "." not in n[len(prefix):]
        }

    def text(self, file: str, line: int, col: int, end_col: int) -> str:
        return self.files[file].split("\n")[line - 1][col:end_col]

    def collect(self, rule: str, module, instance: str) -> list[_Site]:
        widths = self.widths_for(instance)
        sites: list[_Site] = []
        for item in module.items:
            stmts = list(walk_stmt(item.body))
            exprs: list[Expr] = []
            rhs: list[Expr] = []
            for s in stmts:
                if isinstance(s, Assign):
                    exprs.append(s.rhs)
                    rhs.append(s.rhs)
                elif isinstance(s, If):
                    exprs.append(s.cond)
                elif isinstance(s, Case):
                    exprs.append(s.subject)
            f = item.file
            if rule == "BinaryOpSwap":
                for e in exprs:
                    for n in _operand_exprs(e):
                        if isinstance(n, Binary) and n.op in OP_SWAP and _single_line(n.op_span):
                            sp = n.op_span
                            sites.append(_Site(f, sp.line, sp.col, sp.end_col, n.op, (OP_SWAP[n.op],)))
            elif rule == "UnaryNegateCondition":
                for s in stmts:
                    if isinstance(s, If) and _single_line(s.cond.span):
                        sp = s.cond.span
                        c = self.text(f, sp.line, sp.col, sp.end_col)
                        sites.append(_Site(f, sp.line, sp.col, sp.end_col, c, (f"!({c})",)))
            elif rule == "SignalReplace":
                for e in rhs:
                    for n in _operand_exprs(e):
                        if not isinstance(n, Ident) or n.name not in widths or not _single_line(n.span):
                            continue
                        alts = tuple(
                            sorted(
                                k
                                for k, w in widths.items()
                                if w == widths[n.name] and k != n.name and k != self.clock
                            )
                        )
                        if alts:
                            sp = n.span
                            sites.append(_Site(f, sp.line, sp.col, sp.end_col, n.name, alts))
            elif rule == "ConstantPerturb":
                for e in exprs:
                    for n in _operand_exprs(e):
                        if not isinstance(n, Number) or n.unk or n.fill or not _single_line(n.span):
                            continue
                        width = n.width or 32
                        new = _render_number(n, (n.value ^ 1) & ((1 << width) - 1))
                        sp = n.span
                        old = self.text(f, sp.line, sp.col, sp.end_col)
                        if new is not None and new != old:
                            sites.append(_Site(f, sp.line, sp.col, sp.end_col, old, (new,)))
            elif rule == "AssignmentDelete":
                if not item.clocked:
                    continue
                assigns = [s for s in stmts if isinstance(s, Assign)]
                count: dict[str, int] = {}
                for a in assigns:
                    for t in lvalue_targets(a.lhs):
                        count[t.name] = count.get(t.name, 0) + 1
                for a in assigns:
                    if not _single_line(a.span):
                        continue
                    if all(count[t.name] > 1 for t in lvalue_targets(a.lhs)):
                        sp = a.span
                        old = self.text(f, sp.line, sp.col, sp.end_col)
                        sites.append(_Site(f, sp.line, sp.col, sp.end_col, old, (";",)))
            else:
                raise ValueError(f"unknown mutation rule {rule!r}")
        return sites


def applicable_sites(files: dict[str, str], top: str, rule: str, clock: str = "clk") -> list[_Site]:
    units = [SourceUnit(name, text) for name, text in files.items()]
    ast = parse_sources(units)
    design = elaborate(ast, top)
    by_module: dict[str, list[str]] = {}
    for path, inst in design.instances.items():
        by_module.setdefault(inst.module, []).append(path)
    col = _SiteCollector(design, files, clock)
    sites: list[_Site] = []
    for name in sorted(by_module):
        paths = by_module[name]
        if len(paths) != 1:
            continue
        sites.extend(col.collect(rule, ast.modules[name], paths[0]))
    sites = sorted(set(sites), key=lambda s: (s.file, s.line, s.col, s.end_col))
    return sites


def inject_mutation(
    files: dict[str, str], top: str, rule: str, seed: int, clock: str = "clk", sites: list[_Site] | None = None
) -> Mutation:
    """Pick one applicable site for ``rule`` pseudo-randomly from ``seed``.

    ``sites`` may carry a precomputed :func:`applicable_sites` list for the
    same sources and rule.
    """
    if rule not in RULES:
        raise ValueError(f"unknown mutation rule {rule!r}")
    if sites is None:
        sites = applicable_sites(files, top, rule, clock)
    if not sites:
        raise NoApplicableSite(rule)
    rng = random.Random(seed)
    site = rng.choice(sites)
    replacement = rng.choice(site.choices)
    return Mutation(rule, site.file, site.line, site.col, site.end_col, site.original, replacement, seed)
