"""Partition an elaborated design into disjoint code blocks.

Four kinds exist. A port connection at an instantiation site becomes a
ModInputBlock or ModOutputBlock, an always block becomes an AlwaysBlock, and
continuous assigns start as single-statement AssignBlocks that are merged
while one block's outputs feed another's inputs.

Signals are carried as hierarchical names (``top.u1.a``); widths live in
``DesignHierarchy.signals``.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum

from rtlfl.errors import MultiDriver, UndrivenSignal
from rtlfl.hdl.ast import Direction, StmtKind, lvalue_targets
from rtlfl.hdl.elaborate import DesignHierarchy, ElabStatement, PortBinding


class BlockKind(str, Enum):
    MOD_INPUT = "ModInputBlock"
    MOD_OUTPUT = "ModOutputBlock"
    ASSIGN = "AssignBlock"
    ALWAYS = "AlwaysBlock"


@dataclass(frozen=True)
class CodeBlock:
    id: str
    kind: BlockKind
    instance_path: str
    file: str
    lines: frozenset[tuple[str, int]]
    v_in: frozenset[str]
    v_out: frozenset[str]
    clocked: bool = False
    statements: tuple[ElabStatement, ...] = ()
    ports: tuple[PortBinding, ...] = ()
    trigger_signals: frozenset[str] = frozenset()

    @property
    def first_line(self) -> int:
        return min(line for _, line in self.lines)

    @property
    def size(self) -> int:
        return len(self.lines)

    @property
    def is_port(self) -> bool:
        return self.kind in (BlockKind.MOD_INPUT, BlockKind.MOD_OUTPUT)

    def line_ranges(self) -> list[tuple[str, int, int]]:
        """Contiguous ``(file, start, end)`` runs, sorted."""
        runs: list[tuple[str, int, int]] = []
        for f, line in sorted(self.lines):
            if runs and runs[-1][0] == f and runs[-1][2] == line - 1:
                runs[-1] = (f, runs[-1][1], line)
            else:
                runs.append((f, line, line))
        return runs

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind.value,
            "instance": self.instance_path,
            "file": self.file,
            "lines": [[s, e] for _, s, e in self.line_ranges()],
            "clocked": self.clocked,
            "v_in": sorted(self.v_in),
            "v_out": sorted(self.v_out),
        }


def block_id(kind: BlockKind, instance: str, file: str, first_line: int) -> str:
    return f"{kind.value}:{instance}:{file}:{first_line}"


@dataclass(frozen=True)
class BlockSet:
    blocks: tuple[CodeBlock, ...]
    driver_index: dict[str, str]
    by_id: dict[str, CodeBlock] = field(compare=False)

    def __len__(self) -> int:
        return len(self.blocks)

    def __iter__(self):
        return iter(self.blocks)

    def block(self, block_id: str) -> CodeBlock:
        return self.by_id[block_id]

    def blocks_containing(self, file: str, line: int) -> list[CodeBlock]:
        return [b for b in self.blocks if (file, line) in b.lines]

    def to_json(self) -> dict:
        return {"blocks": [b.to_json() for b in self.blocks]}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


def find_driven_block(blocks: BlockSet, s) -> CodeBlock:
    """The unique block whose outputs contain ``s``."""
    name = str(s)
    bid = blocks.driver_index.get(name)
    if bid is None:
        raise UndrivenSignal(name)
    return blocks.by_id[bid]


def _merge_two(a: CodeBlock, b: CodeBlock) -> CodeBlock:
    stmts = tuple(sorted(a.statements + b.statements, key=lambda s: s.index))
    lines = a.lines | b.lines
    first = min(lines, key=lambda fl: (fl[1], fl[0]))
    return CodeBlock(
        id=block_id(BlockKind.ASSIGN, a.instance_path, first[0], first[1]),
        kind=BlockKind.ASSIGN,
        instance_path=a.instance_path,
        file=first[0],
        lines=lines,
        v_in=a.v_in | b.v_in,
        v_out=a.v_out | b.v_out,
        statements=stmts,
    )


def merge_assign_blocks(blocks: list[CodeBlock]) -> list[CodeBlock]:
    """Merge AssignBlocks until no block's outputs meet another block's inputs.

    The result is sorted by (instance, file, first line) so it does not depend
    on input order.
    """
    work = list(blocks)
    changed = True
    while changed:
        changed = False
        i = 0
        while i < len(work):
            j = 0
            while j < len(work):
                if i != j and (work[i].v_out & work[j].v_in or work[j].v_out & work[i].v_in):
                    merged = _merge_two(work[i], work[j])
                    lo, hi = min(i, j), max(i, j)
                    del work[hi]
                    work[lo] = merged
                    i = lo
                    j = 0
                    changed = True
                    continue
                j += 1
            i += 1
    return sorted(work, key=lambda b: (b.instance_path, b.file, b.first_line))


def _statement_block(st: ElabStatement) -> CodeBlock:
    node = st.node
    lines = frozenset((node.file, ln) for ln in node.lines)
    if node.kind is StmtKind.CONTINUOUS_ASSIGN:
        kind = BlockKind.ASSIGN
        v_in = node.rhs_signals | node.condition_signals
        triggers: frozenset[str] = frozenset()
    else:
        kind = BlockKind.ALWAYS
        triggers = node.trigger_signals if node.clocked else frozenset()
        v_in = (node.rhs_signals | node.condition_signals) - triggers
    return CodeBlock(
        id=block_id(kind, st.instance, node.file, node.line_span[0]),
        kind=kind,
        instance_path=st.instance,
        file=node.file,
        lines=lines,
        v_in=frozenset(v_in),
        v_out=frozenset(node.lhs_signals),
        clocked=node.clocked,
        statements=(st,),
        trigger_signals=frozenset(triggers),
    )


def _port_block(pb: PortBinding) -> CodeBlock:
    lines = frozenset((pb.file, ln) for ln in pb.lines)
    if pb.direction is Direction.INPUT:
        kind = BlockKind.MOD_INPUT
        v_in, v_out = pb.parent_signals, frozenset({pb.port})
    else:
        kind = BlockKind.MOD_OUTPUT
        v_in = frozenset({pb.port})
        v_out = frozenset(t.name for t in lvalue_targets(pb.expr))
    return CodeBlock(
        id=block_id(kind, pb.parent, pb.file, pb.span.line),
        kind=kind,
        instance_path=pb.parent,
        file=pb.file,
        lines=lines,
        v_in=frozenset(v_in),
        v_out=v_out,
        ports=(pb,),
    )


def blockize(design: DesignHierarchy) -> BlockSet:
    """Build the block partition and the signal -> driving block index."""
    singles: list[CodeBlock] = []
    for st in design.statements:
        singles.append(_statement_block(st))
    for pb in design.connections:
        singles.append(_port_block(pb))

    # Drivers are checked per statement so that two assigns to one signal are
    # reported even though merging would otherwise fold them together.
    drivers: dict[str, list[str]] = defaultdict(list)
    for b in singles:
        for s in b.v_out:
            drivers[s].append(b.id)
    for s in sorted(drivers):
        if len(drivers[s]) > 1:
            raise MultiDriver(s, sorted(drivers[s]))

    assigns: dict[str, list[CodeBlock]] = defaultdict(list)
    others: list[CodeBlock] = []
    for b in singles:
        if b.kind is BlockKind.ASSIGN:
            assigns[b.instance_path].append(b)
        else:
            others.append(b)
    merged: list[CodeBlock] = []
    for inst in sorted(assigns):
        merged.extend(merge_assign_blocks(assigns[inst]))

    ordered = sorted(others + merged, key=lambda b: (b.instance_path, b.file, b.first_line, b.kind.value))
    by_id: dict[str, CodeBlock] = {}
    index: dict[str, str] = {}
    for b in ordered:
        if b.id in by_id:
            raise AssertionError(f"duplicate block id {b.id}")
        by_id[b.id] = b
        for s in b.v_out:
            index[s] = b.id
    return BlockSet(tuple(ordered), index, by_id)


def block_source(block: CodeBlock, files: dict[str, str]) -> str:
    """Source text of a block, one header per contiguous line run."""
    out = []
    for f, start, end in block.line_ranges():
        text = files.get(f, "").splitlines()
        out.append(f"// {f}:{start}-{end}")
        for ln in range(start, end + 1):
            src = text[ln - 1] if 0 < ln <= len(text) else ""
            out.append(f"{ln:5d} | {src}")
    return "\n".join(out)


def size_histogram(blocks: BlockSet, bucket: int = 10) -> list[tuple[int, int, int]]:
    """``(lo, hi, count)`` rows over block line counts."""
    if not blocks.blocks:
        return []
    counts: dict[int, int] = defaultdict(int)
    for b in blocks:
        counts[(b.size - 1) // bucket] += 1
    top = max(counts)
    return [(k * bucket + 1, (k + 1) * bucket, counts.get(k, 0)) for k in range(top + 1)]
