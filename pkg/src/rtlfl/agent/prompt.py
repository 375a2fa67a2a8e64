"""Test reports, prompt rendering and tool schemas for the debugging loop."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

from rtlfl.errors import ManifestError
from rtlfl.slicer import PathNode


@dataclass(frozen=True)
class TestReport:
    """A failing instruction as reported by co-simulation against a reference model."""

    __test__ = False  # keep pytest from collecting this class

    instruction: str
    pc: str
    signal: str
    cycle: int
    expected: str

    @classmethod
    def from_json(cls, data: dict) -> TestReport:
        try:
            return cls(
                instruction=str(data["instruction"]),
                pc=str(data.get("pc", "")),
                signal=str(data["signal"]),
                cycle=int(data["cycle"]),
                expected=str(data.get("expected", "")),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ManifestError(f"bad test report: {exc}") from exc

    @classmethod
    def load(cls, path) -> TestReport:
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))

    def to_json(self) -> dict:
        return asdict(self)


SYSTEM_PROMPT = """\
You are a hardware verification engineer debugging a processor written in SystemVerilog.
A co-simulation run against a reference model flagged one instruction as wrong. You walk
backward through the execution, one code block at a time. Each block is shown with the
cycle at which it is being inspected and with the list of signals that drove its output
at that point.

Work like this:
- Read the block and decide whether its logic could produce the wrong value.
- Use read_values to inspect any signal at any cycle.
- If the block itself looks wrong, call append_block to add it to the suspicious list.
- If one or more driving signals look wrong, call check_signals with their names so that
  their driving blocks are inspected next. Names must be chosen from the provided list.
- When you are confident, call exit with a confidence between 0 and 1 for every block
  you appended."""


def build_prompt(report: TestReport, node: PathNode, block_source: str, driven: list[tuple[str, int]]) -> PromptContext:
    driven_json = json.dumps([{"name": s, "cycle": c} for s, c in driven], indent=2)
    parts = [
        "## Test report",
        f"Instruction: {report.instruction}",
        f"PC: {report.pc}",
        f"Mismatching signal: {report.signal} at cycle {report.cycle}",
        f"Expected behavior: {report.expected}",
        "",
        f"## Current block: {node.block} at cycle {node.cycle}",
        "```systemverilog",
        block_source,
        "```",
        "",
        "## Driving signals",
        driven_json,
    ]
    if not driven:
        parts.append("No block drives this one inside the design; tracing cannot continue from here.")
    parts += [
        "",
        "## Tools",
        "append_block: add the current block to the suspicious list.",
        "check_signals: inspect the blocks driving the named signals next. "
        "Every name must be chosen from the provided list above.",
        "read_values: read signal values at given cycles.",
        "exit: finish and give a confidence in [0, 1] for each suspicious block.",
    ]
    return PromptContext(SYSTEM_PROMPT, "\n".join(parts))


@dataclass(frozen=True)
class PromptContext:
    system: str
    user: str

    def messages(self) -> list[dict]:
        return [{"role": "system", "content": self.system}, {"role": "user", "content": self.user}]


def _fn(name: str, description: str, properties: dict, required: list[str]) -> dict:
    return {
        "type": "function",
        "function": {
            "name": name,
            "description": description,
            "parameters": {"type": "object", "properties": properties, "required": required},
        },
    }


TOOL_SCHEMAS = [
    _fn("append_block", "Add the current block to the suspicious block list.", {}, []),
    _fn(
        "check_signals",
        "Continue tracing through the blocks that drive these signals.",
        {"names": {"type": "array", "items": {"type": "string"}}},
        ["names"],
    ),
    _fn(
        "read_values",
        "Read signal values at the given cycles.",
        {
            "queries": {
                "type": "array",
                "items": {
                    "type": "object",
                    "properties": {"signal": {"type": "string"}, "cycle": {"type": "integer"}},
                    "required": ["signal", "cycle"],
                },
            }
        },
        ["queries"],
    ),
    _fn(
        "exit",
        "Stop debugging and report a confidence for every suspicious block.",
        {
            "scores": {"type": "object", "additionalProperties": {"type": "number"}},
            "rationale": {"type": "string"},
        },
        ["scores"],
    ),
]
