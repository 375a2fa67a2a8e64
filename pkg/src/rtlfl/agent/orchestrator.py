"""The node-by-node debugging loop between an execution path and a backend."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

from rtlfl.agent.backends import BackendPort, BackendRequest
from rtlfl.agent.prompt import TOOL_SCHEMAS, TestReport, build_prompt
from rtlfl.agent.tools import (
    AgentState,
    Exit,
    Observation,
    ReadValues,
    SuspiciousEntry,
    ToolArgumentError,
    handle_tool,
    parse_tool_call,
    rank,
    tool_call_json,
)
from rtlfl.errors import CycleOutOfRange, InvalidSignalName, SignalNotRecorded
from rtlfl.slicer import ExecPath, PathNode
from rtlfl.waveform import Waveform

_RECOVERABLE = (ToolArgumentError, InvalidSignalName, CycleOutOfRange, SignalNotRecorded)


@dataclass(frozen=True)
class Budget:
    max_tool_calls: int = 60
    max_tokens: int | None = None
    max_retries: int = 3


@dataclass
class LocalizationResult:
    ranked: list[SuspiciousEntry]
    transcript: list[dict]
    tool_calls: int = 0
    tokens: int = 0
    exit_called: bool = False
    budget_exhausted: bool = False
    nodes_visited: int = 0
    flags: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "ranking": [dict(e.to_json(), rank=i + 1) for i, e in enumerate(self.ranked)],
            "accounting": {
                "tool_calls": self.tool_calls,
                "tokens": self.tokens,
                "nodes_visited": self.nodes_visited,
                "exit_called": self.exit_called,
                "budget_exhausted": self.budget_exhausted,
            },
            "flags": list(self.flags),
        }

    def transcript_jsonl(self) -> str:
        return "".join(json.dumps(rec, sort_keys=True) + "\n" for rec in self.transcript)


def _estimate_tokens(text: str) -> int:
    return (len(text) + 3) // 4


def _finalize(state: AgentState, exit_call: Exit | None, flags: list[str]) -> list[SuspiciousEntry]:
    entries = state.suspicious
    if exit_call is not None:
        visited_blocks = {n.block for n in state.visited}
        appended = set(state.suspicious_ids())
        for block in exit_call.scores:
            if block in appended:
                continue
            if block in visited_blocks:
                entries.append(SuspiciousEntry(block, rationale=exit_call.rationale))
                appended.add(block)
                flags.append(f"scored without append: {block}")
            else:
                flags.append(f"ignored score for block outside the inspected path: {block}")
    for i, e in enumerate(entries):
        score = exit_call.scores.get(e.block_id) if exit_call is not None else None
        if score is None:
            if exit_call is not None:
                flags.append(f"no exit score for {e.block_id}; fallback used")
            e.confidence = 1.0 / (1 + i)
        else:
            if not 0.0 <= score <= 1.0:
                flags.append(f"confidence {score} for {e.block_id} clamped to [0, 1]")
            e.confidence = min(1.0, max(0.0, score))
        if exit_call is not None and not e.rationale:
            e.rationale = exit_call.rationale
    return rank(entries)


def run_localization(
    path: ExecPath,
    report: TestReport,
    backend: BackendPort,
    w: Waveform,
    budget: Budget = Budget(),
    block_source: Callable[[str], str] = lambda block_id: "",
) -> LocalizationResult:
    """Walk the execution path with ``backend`` and return the ranked suspicious blocks."""
    state = AgentState(current=path.root, visited={path.root})
    flags: list[str] = []
    transcript: list[dict] = []
    calls_used = 0
    tokens = 0
    exit_call: Exit | None = None
    exhausted = False

    def open_node(node: PathNode) -> tuple[list[dict], str]:
        prompt = build_prompt(report, node, block_source(node.block), path.driven.get(node, []))
        return prompt.messages(), prompt.user

    messages, prompt_text = open_node(state.current)
    fresh_prompt: str | None = prompt_text
    while True:
        if calls_used >= budget.max_tool_calls or (budget.max_tokens is not None and tokens >= budget.max_tokens):
            exhausted = True
            break
        node = state.current
        request = BackendRequest(list(messages), TOOL_SCHEMAS, node, list(path.driven.get(node, [])))
        turn = backend.next_turn(request)
        sent = sum(len(str(m.get("content", ""))) for m in messages)
        reply = turn.text + json.dumps([[c.name, c.arguments] for c in turn.tool_calls], sort_keys=True)
        tokens += turn.tokens or ((sent + 3) // 4 + _estimate_tokens(reply))
        messages.append(
            {
                "role": "assistant",
                "content": turn.text,
                "tool_calls": [
                    {
                        "id": c.id or f"call_{len(transcript)}_{i}",
                        "type": "function",
                        "function": {"name": c.name, "arguments": json.dumps(c.arguments, sort_keys=True)},
                    }
                    for i, c in enumerate(turn.tool_calls)
                ],
            }
        )
        record_calls = []
        invalid = False
        parsed_calls = []
        for i, raw in enumerate(turn.tool_calls):
            if calls_used >= budget.max_tool_calls:
                exhausted = True
                break
            calls_used += 1
            call = None
            try:
                call = parse_tool_call(raw.name, raw.arguments)
                obs = handle_tool(call, state, path, w)
            except _RECOVERABLE as exc:
                obs = Observation(f"error: {exc}", error=True)
                invalid = True
            parsed_calls.append(call)
            messages.append({"role": "tool", "tool_call_id": raw.id or f"call_{len(transcript)}_{i}", "content": obs.text})
            record_calls.append(
                {
                    "call": tool_call_json(call) if call is not None else {"name": raw.name, "arguments": raw.arguments},
                    "observation": obs.text,
                    "error": obs.error,
                }
            )
            if isinstance(call, Exit) and not obs.error:
                exit_call = call
                break
        rec = {
            "turn": len(transcript),
            "node": {"block": node.block, "cycle": node.cycle},
            "calls": record_calls,
            "state": state.snapshot(),
            "tool_calls_used": calls_used,
            "tokens": tokens,
        }
        if fresh_prompt is not None:
            rec["prompt"] = fresh_prompt
            fresh_prompt = None
        transcript.append(rec)
        if exit_call is not None or exhausted:
            break
        if invalid:
            state.retries += 1
            if state.retries < budget.max_retries:
                continue
            flags.append(f"retry limit reached at {node}")
        elif parsed_calls and all(isinstance(c, ReadValues) for c in parsed_calls):
            continue
        nxt = None
        while state.pending:
            cand = state.pending.pop(0)
            if cand not in state.visited:
                nxt = cand
                break
        if nxt is None:
            break
        state.current = nxt
        state.visited.add(nxt)
        state.retries = 0
        messages, fresh_prompt = open_node(nxt)
    if exhausted:
        flags.append("budget exhausted")
    ranked = _finalize(state, exit_call, flags)
    return LocalizationResult(
        ranked=ranked,
        transcript=transcript,
        tool_calls=calls_used,
        tokens=tokens,
        exit_called=exit_call is not None,
        budget_exhausted=exhausted,
        nodes_visited=len(state.visited),
        flags=flags,
    )
