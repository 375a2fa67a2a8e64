"""Tool calls, agent state and their transitions."""

from __future__ import annotations

from dataclasses import dataclass, field

from rtlfl.errors import CycleOutOfRange, InvalidSignalName, SignalNotRecorded
from rtlfl.slicer import ExecPath, PathNode
from rtlfl.waveform import Waveform


class ToolArgumentError(ValueError):
    pass


@dataclass(frozen=True)
class AppendBlock:
    rationale: str = ""
    name = "append_block"


@dataclass(frozen=True)
class CheckSignals:
    names: tuple[str, ...]
    name = "check_signals"


@dataclass(frozen=True)
class ReadValues:
    queries: tuple[tuple[str, int], ...]
    name = "read_values"


@dataclass(frozen=True)
class Exit:
    scores: dict[str, float]
    rationale: str = ""
    name = "exit"


ToolCall = AppendBlock | CheckSignals | ReadValues | Exit


def parse_tool_call(name: str, args: dict) -> ToolCall:
    if not isinstance(args, dict):
        raise ToolArgumentError(f"{name}: arguments must be an object")
    if "__unparsed__" in args:
        raise ToolArgumentError(f"{name}: arguments are not valid JSON")
    if name == "append_block":
        return AppendBlock(str(args.get("rationale", "")))
    if name == "check_signals":
        names = args.get("names")
        if not isinstance(names, list) or not all(isinstance(n, str) for n in names):
            raise ToolArgumentError("check_signals: names must be a list of strings")
        return CheckSignals(tuple(names))
    if name == "read_values":
        queries = args.get("queries")
        if not isinstance(queries, list):
            raise ToolArgumentError("read_values: queries must be a list")
        out = []
        for q in queries:
            try:
                out.append((str(q["signal"]), int(q["cycle"])))
            except (KeyError, TypeError, ValueError):
                raise ToolArgumentError(f"read_values: bad query {q!r}") from None
        return ReadValues(tuple(out))
    if name == "exit":
        scores = args.get("scores", {})
        if not isinstance(scores, dict):
            raise ToolArgumentError("exit: scores must be an object")
        try:
            parsed = {str(k): float(v) for k, v in scores.items()}
        except (TypeError, ValueError):
            raise ToolArgumentError("exit: scores must be numbers") from None
        return Exit(parsed, str(args.get("rationale", "")))
    raise ToolArgumentError(f"unknown tool {name!r}")


def tool_call_json(call: ToolCall) -> dict:
    if isinstance(call, AppendBlock):
        args: dict = {"rationale": call.rationale} if call.rationale else {}
    elif isinstance(call, CheckSignals):
        args = {"names": list(call.names)}
    elif isinstance(call, ReadValues):
        args = {"queries": [{"signal": s, "cycle": c} for s, c in call.queries]}
    else:
        args = {"scores": dict(call.scores)}
        if call.rationale:
            args["rationale"] = call.rationale
    return {"name": call.name, "arguments": args}


@dataclass
class SuspiciousEntry:
    block_id: str
    confidence: float = 0.0
    rationale: str = ""

    def to_json(self) -> dict:
        return {"block": self.block_id, "confidence": self.confidence, "rationale": self.rationale}


@dataclass
class AgentState:
    current: PathNode
    pending: list[PathNode] = field(default_factory=list)
    visited: set[PathNode] = field(default_factory=set)
    suspicious: list[SuspiciousEntry] = field(default_factory=list)
    retries: int = 0

    def suspicious_ids(self) -> list[str]:
        return [e.block_id for e in self.suspicious]

    def snapshot(self) -> dict:
        return {
            "current": str(self.current),
            "pending": [str(n) for n in self.pending],
            "visited": sorted(str(n) for n in self.visited),
            "suspicious": self.suspicious_ids(),
        }


@dataclass(frozen=True)
class Observation:
    text: str
    error: bool = False


def render_value(signal: str, cycle: int, w: Waveform) -> str:
    v = w.value_at(signal, cycle)
    return f"{signal}@{cycle} = {v.hex()} (0b{v.bits})"


def offered_signals(path: ExecPath, node: PathNode) -> list[str]:
    return [s for s, _ in path.driven.get(node, [])]


def handle_tool(call: ToolCall, state: AgentState, path: ExecPath, w: Waveform) -> Observation:
    """Apply one tool call. Raises on invalid arguments without touching ``state``."""
    if isinstance(call, AppendBlock):
        block = state.current.block
        if block in state.suspicious_ids():
            return Observation(f"{block} is already in the suspicious list (duplicate ignored).")
        state.suspicious.append(SuspiciousEntry(block, rationale=call.rationale))
        return Observation(f"Appended {block} to the suspicious list (position {len(state.suspicious)}).")
    if isinstance(call, CheckSignals):
        offered = offered_signals(path, state.current)
        for name in call.names:
            if name not in offered:
                raise InvalidSignalName(name)
        new: list[PathNode] = []
        for name in call.names:
            src = path.source_of(state.current, name)
            if src is None or src in state.visited or src in new:
                continue
            new.append(src)
        # Already-queued nodes move to the front so the latest lead is followed first.
        state.pending[:] = new + [n for n in state.pending if n not in new]
        if not new:
            return Observation("No new blocks to inspect for those signals.")
        return Observation("Queued for inspection: " + ", ".join(str(n) for n in new))
    if isinstance(call, ReadValues):
        lines = []
        for sig, cycle in call.queries:
            if not 0 <= cycle < len(w.cycle_times):
                raise CycleOutOfRange(cycle, len(w.cycle_times))
            if not w.has(sig):
                raise SignalNotRecorded(sig)
        for sig, cycle in call.queries:
            lines.append(render_value(sig, cycle, w))
        return Observation("\n".join(lines) if lines else "(no queries)")
    if isinstance(call, Exit):
        return Observation("Finished.")
    raise TypeError(type(call).__name__)


def rank(suspicious: list[SuspiciousEntry]) -> list[SuspiciousEntry]:
    """Highest confidence first; ties keep append order."""
    return sorted(suspicious, key=lambda e: -e.confidence)
