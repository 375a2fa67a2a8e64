from rtlfl.agent.backends import PolicyBackend, RecordingBackend, RemoteBackend, RemoteProfile, ScriptedBackend
from rtlfl.agent.orchestrator import Budget, LocalizationResult, run_localization
from rtlfl.agent.prompt import TestReport, build_prompt
from rtlfl.agent.tools import SuspiciousEntry, handle_tool, rank

__all__ = [
    "Budget",
    "LocalizationResult",
    "PolicyBackend",
    "RecordingBackend",
    "RemoteBackend",
    "RemoteProfile",
    "ScriptedBackend",
    "SuspiciousEntry",
    "TestReport",
    "build_prompt",
    "handle_tool",
    "rank",
    "run_localization",
]
