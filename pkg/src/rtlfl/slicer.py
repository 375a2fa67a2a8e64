"""Backward slicing over (block, cycle) nodes.

Starting from a mismatching signal at a cycle, each step finds the block that
drives the signal, asks which of its inputs determined the value and at what
cycle, and walks on to the blocks driving those inputs. Combinational blocks
stay at the same cycle. A clocked block looks one cycle back, either at the
inputs of the assignment that executed or, when no assignment to the signal
executed, at the register's own previous value.
"""

from __future__ import annotations

import graphlib
import json
from collections import deque
from dataclasses import dataclass, field

from rtlfl.blocks import BlockKind, BlockSet, CodeBlock, find_driven_block
from rtlfl.coverage import CoverageSource, is_assignment_covered
from rtlfl.errors import CombinationalLoop, CycleOutOfRange, LimitExceeded, UndrivenSignal
from rtlfl.waveform import Waveform


@dataclass(frozen=True, order=True)
class PathNode:
    block: str
    cycle: int

    def __str__(self) -> str:
        return f"{self.block}@{self.cycle}"


@dataclass(frozen=True)
class DrivenSet:
    signals: frozenset[str]
    cycle: int


@dataclass(frozen=True)
class SliceLimits:
    max_nodes: int = 100_000


@dataclass
class ExecPath:
    root: PathNode
    nodes: list[PathNode] = field(default_factory=list)
    edges: set[tuple[PathNode, PathNode]] = field(default_factory=set)
    # (node, input signal) -> node of the block driving that input
    sources: dict[tuple[PathNode, str], PathNode] = field(default_factory=dict)
    # node -> ordered (signal, cycle) inputs shown to the reasoning loop
    driven: dict[PathNode, list[tuple[str, int]]] = field(default_factory=dict)
    # node -> inputs that have no driving block (primary inputs)
    frontier: dict[PathNode, list[str]] = field(default_factory=dict)
    _seen: set[PathNode] = field(default_factory=set, repr=False)

    def add_node(self, node: PathNode) -> None:
        if node not in self._seen:
            self._seen.add(node)
            self.nodes.append(node)
            self.driven.setdefault(node, [])

    def __contains__(self, node: PathNode) -> bool:
        return node in self._seen

    @property
    def blocks(self) -> set[str]:
        return {n.block for n in self.nodes}

    def source_of(self, node: PathNode, signal: str) -> PathNode | None:
        return self.sources.get((node, signal))

    def to_json(self) -> dict:
        index = {n: i for i, n in enumerate(self.nodes)}
        return {
            "root": index[self.root],
            "nodes": [{"block": n.block, "cycle": n.cycle} for n in self.nodes],
            "edges": sorted([index[a], index[b]] for a, b in self.edges),
            "driven": [
                [{"name": s, "cycle": c} for s, c in self.driven.get(n, [])] for n in self.nodes
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)

    def to_dot(self) -> str:
        index = {n: i for i, n in enumerate(self.nodes)}
        out = ["digraph exec_path {", "  rankdir=BT;"]
        for n, i in index.items():
            shape = "doublecircle" if n == self.root else "box"
            out.append(f'  n{i} [shape={shape}, label="{n.block}\\n@{n.cycle}"];')
        for a, b in sorted(self.edges, key=lambda e: (index[e[0]], index[e[1]])):
            out.append(f"  n{index[a]} -> n{index[b]};")
        out.append("}")
        return "\n".join(out) + "\n"


class _BlockInfo:
    def __init__(self, b: CodeBlock):
        self.block = b  # keeps id(b) from being reused while cached
        self.by_target: dict[str, list] = {}
        blocking: set[str] = set()
        for st in b.statements:
            for ga in st.node.guard_tree:
                for t in ga.targets:
                    self.by_target.setdefault(t, []).append(ga)
                if ga.assign.blocking:
                    blocking.update(ga.targets)
        # In-block signals whose value is consumed within the same evaluation.
        self.expand = blocking if b.clocked else set(b.v_out)
        self.cones: dict[str, frozenset[str]] = {}
        if b.kind is BlockKind.ASSIGN:
            graph = {t: {r for ga in gas for r in ga.reads if r in self.by_target} for t, gas in self.by_target.items()}
            try:
                graphlib.TopologicalSorter(graph).prepare()
            except graphlib.CycleError:
                raise CombinationalLoop([b.id]) from None


_INFO: dict[int, _BlockInfo] = {}


def _info(b: CodeBlock) -> _BlockInfo:
    info = _INFO.get(id(b))
    if info is None or info.block is not b:
        info = _INFO[id(b)] = _BlockInfo(b)
    return info


def dataflow_analysis(s, b: CodeBlock) -> frozenset[str]:
    """Static cone of ``s`` inside ``b``: data reads plus dominating guard signals.

    Reads of signals computed earlier in the same evaluation (any in-block
    signal of a combinational block, blocking-assigned signals of a clocked
    block) are replaced by their own cones.
    """
    name = str(s)
    if b.is_port:
        return b.v_in
    info = _info(b)
    cached = info.cones.get(name)
    if cached is not None:
        return cached
    result: set[str] = set()
    done = {name}
    todo = [name]
    while todo:
        u = todo.pop()
        for ga in info.by_target.get(u, ()):
            used = set(ga.reads)
            for g in ga.guards:
                used |= g.signals
            for r in used:
                if r in info.expand and r in info.by_target:
                    if r not in done:
                        done.add(r)
                        todo.append(r)
                else:
                    result.add(r)
    cone = info.cones[name] = frozenset(result - b.trigger_signals)
    return cone


def intra_block_analysis(s, b: CodeBlock, t: int, w: Waveform, src: CoverageSource) -> DrivenSet:
    if not b.clocked:
        return DrivenSet(dataflow_analysis(s, b), t)
    if t - 1 >= 0 and is_assignment_covered(b, s, t - 1, w, src):
        return DrivenSet(dataflow_analysis(s, b), t - 1)
    return DrivenSet(frozenset({str(s)}), t - 1)


def build_exec_path(
    blocks: BlockSet,
    sig,
    t: int,
    w: Waveform,
    src: CoverageSource,
    limits: SliceLimits = SliceLimits(),
) -> ExecPath:
    """Slice backward from ``sig`` at cycle ``t``."""
    sig = str(sig)
    n_cycles = len(w.cycle_times)
    if not 0 <= t < n_cycles:
        raise CycleOutOfRange(t, n_cycles)
    root_block = find_driven_block(blocks, sig)
    path = ExecPath(PathNode(root_block.id, t))
    path.add_node(path.root)
    # Same-cycle signal dependencies, checked for cycles at the end.
    comb_deps: dict[tuple[str, int], set[tuple[str, int]]] = {}
    visited: set[tuple[str, int]] = set()
    queue: deque[tuple[str, int]] = deque([(sig, t)])
    while queue:
        s, cur = queue.popleft()
        if cur < 0 or (s, cur) in visited:
            continue
        visited.add((s, cur))
        b = find_driven_block(blocks, s)
        node = PathNode(b.id, cur)
        driven = intra_block_analysis(s, b, cur, w, src)
        if driven.cycle < 0:
            continue
        for si in sorted(driven.signals):
            try:
                bi = find_driven_block(blocks, si)
            except UndrivenSignal:
                if si not in path.frontier.setdefault(node, []):
                    path.frontier[node].append(si)
                continue
            src_node = PathNode(bi.id, driven.cycle)
            path.add_node(src_node)
            if len(path.nodes) > limits.max_nodes:
                raise LimitExceeded(limits.max_nodes)
            path.edges.add((src_node, node))
            if (node, si) not in path.sources:
                path.sources[(node, si)] = src_node
                path.driven[node].append((si, driven.cycle))
            if driven.cycle == cur:
                comb_deps.setdefault((s, cur), set()).add((si, cur))
            queue.append((si, driven.cycle))
    _check_comb_loops(comb_deps, blocks)
    return path


def _check_comb_loops(deps: dict[tuple[str, int], set[tuple[str, int]]], blocks: BlockSet) -> None:
    try:
        graphlib.TopologicalSorter(deps).prepare()
    except graphlib.CycleError as exc:
        cycle = exc.args[1]
        raise CombinationalLoop([blocks.driver_index[s] for s, _ in cycle]) from None
