"""Exception hierarchy shared by every stage of the toolkit.

Analysis failures derive from :class:`AnalysisError` (CLI exit code 2);
backend transport and protocol failures derive from :class:`BackendError`
(exit code 3).
"""

from __future__ import annotations


class RtlflError(Exception):
    """Root of all toolkit errors."""


class AnalysisError(RtlflError):
    pass


# --- frontend ---------------------------------------------------------------


class HdlSyntaxError(AnalysisError):
    def __init__(self, file: str, line: int, expected: str, found: str = ""):
        self.file = file
        self.line = line
        self.expected = expected
        self.found = found
        msg = f"{file}:{line}: expected {expected}"
        if found:
            msg += f", found {found!r}"
        super().__init__(msg)


class UnsupportedConstruct(AnalysisError):
    def __init__(self, file: str, line: int, construct: str):
        self.file = file
        self.line = line
        self.construct = construct
        super().__init__(f"{file}:{line}: unsupported construct: {construct}")


class UnknownModule(AnalysisError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unknown module {name!r}")


class RecursiveInstantiation(AnalysisError):
    def __init__(self, path: str):
        self.path = path
        super().__init__(f"recursive instantiation at {path}")


class UnresolvedIdentifier(AnalysisError):
    def __init__(self, path: str, name: str):
        self.path = path
        self.name = name
        super().__init__(f"unresolved identifier {name!r} in {path}")


# --- blockizer --------------------------------------------------------------


class MultiDriver(AnalysisError):
    def __init__(self, signal: str, drivers: list[str]):
        self.signal = signal
        self.drivers = list(drivers)
        super().__init__(f"signal {signal} has multiple drivers: {', '.join(drivers)}")


class UndrivenSignal(AnalysisError):
    def __init__(self, signal: str):
        self.signal = signal
        super().__init__(f"signal {signal} has no driving block")


# --- waveform ---------------------------------------------------------------


class MalformedVcd(AnalysisError):
    def __init__(self, line: int, reason: str = ""):
        self.line = line
        super().__init__(f"malformed VCD at line {line}" + (f": {reason}" if reason else ""))


class ClockNotFound(AnalysisError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"clock signal {name!r} not found in VCD")


class SignalNotRecorded(AnalysisError):
    def __init__(self, signal: str):
        self.signal = signal
        super().__init__(f"signal {signal!r} is not recorded in the waveform")


class CycleOutOfRange(AnalysisError):
    def __init__(self, cycle: int, count: int | None = None):
        self.cycle = cycle
        self.count = count
        extra = f" (waveform has {count} cycles)" if count is not None else ""
        super().__init__(f"cycle {cycle} out of range{extra}")


# --- coverage ---------------------------------------------------------------


class UnsupportedOperator(AnalysisError):
    def __init__(self, op: str):
        self.op = op
        super().__init__(f"unsupported operator {op!r}")


class MissingCoverage(AnalysisError):
    def __init__(self, line: int, cycle: int):
        self.line = line
        self.cycle = cycle
        super().__init__(f"no coverage data for line {line} at cycle {cycle}")


# --- slicer -----------------------------------------------------------------


class CombinationalLoop(AnalysisError):
    def __init__(self, blocks: list[str]):
        self.blocks = sorted(set(blocks))
        super().__init__("combinational loop through blocks: " + ", ".join(self.blocks))


class LimitExceeded(AnalysisError):
    def __init__(self, nodes: int):
        self.nodes = nodes
        super().__init__(f"execution path exceeded {nodes} nodes")


# --- agent / harness --------------------------------------------------------


class BackendError(RtlflError):
    pass


class InvalidSignalName(AnalysisError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"signal {name!r} is not in the offered driven-signal list")


class NoApplicableSite(AnalysisError):
    def __init__(self, rule: str):
        self.rule = rule
        super().__init__(f"no applicable site for mutation rule {rule}")


class ManifestError(AnalysisError):
    pass
