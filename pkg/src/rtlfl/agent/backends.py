"""Model backends for the debugging loop.

Every backend turns a :class:`BackendRequest` (the chat so far, tool schemas
and the node being inspected) into a :class:`BackendTurn` holding zero or more
tool calls. Messages use the common chat-completions layout, so the remote
backend can forward them unchanged.
"""

from __future__ import annotations

import json
import os
import re
import time
from dataclasses import dataclass, field
from typing import Protocol

import httpx

from rtlfl.errors import BackendError
from rtlfl.slicer import PathNode
from rtlfl.waveform import Waveform


@dataclass(frozen=True)
class RawToolCall:
    name: str
    arguments: dict
    id: str = ""


@dataclass(frozen=True)
class BackendRequest:
    messages: list[dict]
    tools: list[dict]
    node: PathNode
    driven: list[tuple[str, int]]


@dataclass
class BackendTurn:
    tool_calls: list[RawToolCall]
    text: str = ""
    tokens: int = 0


class BackendPort(Protocol):
    shareable: bool

    def next_turn(self, request: BackendRequest) -> BackendTurn: ...


class ScriptMismatch(BackendError):
    pass


class ScriptedBackend:
    """Replays a decision file: a list of ``{expect_block, tool_calls}`` entries."""

    shareable = False

    def __init__(self, entries: list[dict]):
        self.entries = list(entries)
        self.pos = 0

    @classmethod
    def load(cls, path) -> ScriptedBackend:
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise BackendError(f"cannot read decision script {path}: {exc}") from exc
        if not isinstance(data, list):
            raise BackendError("decision script must be a JSON array")
        return cls(data)

    def next_turn(self, request: BackendRequest) -> BackendTurn:
        if self.pos >= len(self.entries):
            raise BackendError(f"decision script exhausted after {self.pos} turns")
        entry = self.entries[self.pos]
        self.pos += 1
        expect = entry.get("expect_block")
        if expect is not None and expect != request.node.block:
            raise ScriptMismatch(
                f"turn {self.pos}: script expects block {expect}, orchestrator presented {request.node.block}"
            )
        if "expect_cycle" in entry and entry["expect_cycle"] != request.node.cycle:
            raise ScriptMismatch(
                f"turn {self.pos}: script expects cycle {entry['expect_cycle']}, got {request.node.cycle}"
            )
        calls = [
            RawToolCall(c["name"], dict(c.get("arguments", {})), f"call_{self.pos}_{i}")
            for i, c in enumerate(entry.get("tool_calls", []))
        ]
        return BackendTurn(calls, entry.get("text", ""))


_VALUE_RE = re.compile(r"^(?P<sig>\S+)@(?P<cycle>\d+) = \S+ \(0b(?P<bits>[01xz]+)\)$", re.M)


class PolicyBackend:
    """Deterministic stand-in that follows driving signals whose values differ from a golden run.

    At each node it first reads every offered driving signal. If some differ
    from the golden waveform it asks to trace those; otherwise the block turned
    matching inputs into a wrong output, so it is appended and the run ends.
    """

    shareable = False

    def __init__(self, golden: Waveform, confidence: float = 1.0):
        self.golden = golden
        self.confidence = confidence

    def _golden_bits(self, sig: str, cycle: int) -> str | None:
        if not self.golden.has(sig) or not 0 <= cycle < len(self.golden.cycle_times):
            return None
        return self.golden.value_at(sig, cycle).bits

    def next_turn(self, request: BackendRequest) -> BackendTurn:
        last = request.messages[-1] if request.messages else {}
        observed = {}
        if last.get("role") == "tool":
            tool_texts = []
            for m in reversed(request.messages):
                if m.get("role") != "tool":
                    break
                tool_texts.append(m.get("content", ""))
            for text in tool_texts:
                for m in _VALUE_RE.finditer(text):
                    observed[(m["sig"], int(m["cycle"]))] = m["bits"]
        wanted = list(request.driven)
        if wanted and not all(q in observed for q in wanted):
            queries = [{"signal": s, "cycle": c} for s, c in wanted]
            return BackendTurn([RawToolCall("read_values", {"queries": queries}, "read")])
        bad = [s for s, c in wanted if observed[(s, c)] != self._golden_bits(s, c)]
        if bad:
            return BackendTurn([RawToolCall("check_signals", {"names": bad}, "check")])
        block = request.node.block
        why = "all driving signals match the golden run but the block output does not"
        return BackendTurn(
            [
                RawToolCall("append_block", {"rationale": why}, "append"),
                RawToolCall("exit", {"scores": {block: self.confidence}}, "exit"),
            ]
        )


class RecordingBackend:
    """Wraps a backend and records its turns as a replayable decision script."""

    def __init__(self, inner: BackendPort):
        self.inner = inner
        self.shareable = False
        self.entries: list[dict] = []

    def next_turn(self, request: BackendRequest) -> BackendTurn:
        turn = self.inner.next_turn(request)
        self.entries.append(
            {
                "expect_block": request.node.block,
                "expect_cycle": request.node.cycle,
                "tool_calls": [{"name": c.name, "arguments": c.arguments} for c in turn.tool_calls],
            }
        )
        return turn

    def dump(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.entries, fh, indent=2, sort_keys=True)
            fh.write("\n")


@dataclass
class RemoteProfile:
    base_url: str
    model: str
    api_key_env: str = "RTLFL_API_KEY"
    api_key: str | None = None
    timeout: float = 60.0
    max_retries: int = 3
    backoff: float = 1.0
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_json(cls, data: dict) -> RemoteProfile:
        known = {k: data[k] for k in ("base_url", "model", "api_key_env", "api_key", "timeout", "max_retries", "backoff") if k in data}
        if "base_url" not in known or "model" not in known:
            raise BackendError("remote profile needs base_url and model")
        return cls(**known, extra=dict(data.get("extra", {})))

    def resolve_key(self) -> str | None:
        return os.environ.get(self.api_key_env) or self.api_key


class RemoteBackend:
    """Chat-completions client with tool calling, over HTTP."""

    shareable = False
    RETRY_STATUS = {408, 409, 429, 500, 502, 503, 504}

    def __init__(self, profile: RemoteProfile, transport: httpx.BaseTransport | None = None, sleep=time.sleep):
        self.profile = profile
        self.sleep = sleep
        headers = {"Content-Type": "application/json"}
        key = profile.resolve_key()
        if key:
            headers["Authorization"] = f"Bearer {key}"
        self.client = httpx.Client(
            base_url=profile.base_url.rstrip("/"), headers=headers, timeout=profile.timeout, transport=transport
        )

    def _post(self, body: dict) -> dict:
        last_error = ""
        for attempt in range(self.profile.max_retries + 1):
            if attempt:
                self.sleep(self.profile.backoff * 2 ** (attempt - 1))
            try:
                resp = self.client.post("/chat/completions", json=body)
            except httpx.HTTPError as exc:
                last_error = f"transport error: {exc}"
                continue
            if resp.status_code in self.RETRY_STATUS:
                last_error = f"HTTP {resp.status_code}"
                continue
            if resp.status_code >= 400:
                raise BackendError(f"backend rejected request: HTTP {resp.status_code}: {resp.text[:200]}")
            try:
                return resp.json()
            except ValueError as exc:
                raise BackendError(f"backend returned invalid JSON: {exc}") from exc
        raise BackendError(f"backend unreachable after {self.profile.max_retries + 1} attempts ({last_error})")

    def next_turn(self, request: BackendRequest) -> BackendTurn:
        body = {"model": self.profile.model, "messages": request.messages, "tools": request.tools, "tool_choice": "auto"}
        body.update(self.profile.extra)
        data = self._post(body)
        try:
            message = data["choices"][0]["message"]
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendError(f"malformed completion: {exc}") from exc
        calls = []
        for tc in message.get("tool_calls") or []:
            fn = tc.get("function", {})
            raw = fn.get("arguments") or "{}"
            try:
                args = json.loads(raw) if isinstance(raw, str) else dict(raw)
            except json.JSONDecodeError:
                # Surface as an invalid call so the orchestrator can count a retry.
                args = {"__unparsed__": raw}
            calls.append(RawToolCall(str(fn.get("name", "")), args, str(tc.get("id", ""))))
        usage = data.get("usage") or {}
        tokens = int(usage.get("total_tokens", 0) or 0)
        return BackendTurn(calls, message.get("content") or "", tokens)

    def close(self) -> None:
        self.client.close()
