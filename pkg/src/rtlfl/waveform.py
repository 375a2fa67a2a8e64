"""VCD loading and per-cycle point queries.

Cycle ``k`` is the state observed at the (k+1)-th rising edge of the clock,
*after* every value change carrying that timestamp has been applied. A
register updated by the edge therefore already shows its new value at the
cycle of that edge, and its inputs are read at cycle ``k - 1``.
"""

from __future__ import annotations

import bisect
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, TextIO

from rtlfl.errors import ClockNotFound, CycleOutOfRange, MalformedVcd, SignalNotRecorded
from rtlfl.logic import SignalValue

_SKIP_SECTIONS = {"$date", "$version", "$comment"}
_DUMP_SECTIONS = {"$dumpvars", "$dumpall", "$dumpon", "$dumpoff"}
_VAR_TYPES = {
    "wire", "reg", "logic", "bit", "integer", "parameter", "supply0", "supply1",
    "tri", "triand", "trior", "tri0", "tri1", "wand", "wor", "event", "int",
    "shortint", "longint", "byte", "enum",
}


@dataclass
class _Trace:
    width: int
    times: list[int] = field(default_factory=list)
    values: list[SignalValue] = field(default_factory=list)
    parts: list[tuple[int, int]] = field(default_factory=list)

    def record(self, time: int, value: SignalValue) -> None:
        if self.times and self.times[-1] == time:
            self.values[-1] = value
            self.parts[-1] = value.parts
        else:
            self.times.append(time)
            self.values.append(value)
            self.parts.append(value.parts)


@dataclass
class Waveform:
    clock: str
    cycle_times: list[int]
    traces: dict[str, _Trace]
    timescale: str = ""

    @property
    def signals(self) -> list[str]:
        return sorted(self.traces)

    def width(self, signal) -> int:
        return self._trace(signal).width

    def has(self, signal) -> bool:
        return str(signal) in self.traces

    def _trace(self, signal) -> _Trace:
        name = str(signal)
        try:
            return self.traces[name]
        except KeyError:
            raise SignalNotRecorded(name) from None

    def _index(self, trace: _Trace, t: int) -> int:
        if not 0 <= t < len(self.cycle_times):
            raise CycleOutOfRange(t, len(self.cycle_times))
        return bisect.bisect_right(trace.times, self.cycle_times[t]) - 1

    def value_at(self, signal, t: int) -> SignalValue:
        """Value of ``signal`` at posedge cycle ``t`` (post-update sampling)."""
        trace = self._trace(signal)
        i = self._index(trace, t)
        if i < 0:
            return SignalValue.unknown(trace.width)
        return trace.values[i]

    def parts_at(self, signal, t: int) -> tuple[int, int]:
        trace = self._trace(signal)
        i = self._index(trace, t)
        if i < 0:
            return 0, (1 << trace.width) - 1
        return trace.parts[i]

    def cycle_at_time(self, time: int) -> int:
        """Cycle index of the last rising clock edge at or before ``time``."""
        k = bisect.bisect_right(self.cycle_times, time) - 1
        if k < 0:
            raise CycleOutOfRange(-1, len(self.cycle_times))
        return k


def cycle_count(w: Waveform) -> int:
    return len(w.cycle_times)


def value_at(w: Waveform, s, t: int) -> SignalValue:
    return w.value_at(s, t)


def _extend(bits: str, width: int, line: int) -> str:
    if len(bits) > width:
        # Leading zeros beyond the declared width are harmless; anything else is not.
        extra, bits = bits[: len(bits) - width], bits[len(bits) - width :]
        if extra.strip("0"):
            raise MalformedVcd(line, f"value wider than {width} bits")
        return bits
    if len(bits) < width:
        pad = bits[0] if bits[0] in "xz" else "0"
        bits = pad * (width - len(bits)) + bits
    return bits


def _tokens(fh: TextIO):
    for lineno, line in enumerate(fh, 1):
        for tok in line.split():
            yield lineno, tok


def parse_vcd(fh: TextIO, clock: str, strip_prefix: str = "") -> Waveform:
    codes: dict[str, list[str]] = {}
    traces: dict[str, _Trace] = {}
    scope: list[str] = []
    timescale = ""
    time = 0
    in_defs = True
    toks = _tokens(fh)
    lineno = 0

    def take_until_end() -> list[str]:
        nonlocal lineno
        out = []
        for lineno, tok in toks:
            if tok == "$end":
                return out
            out.append(tok)
        raise MalformedVcd(lineno, "missing $end")

    def apply(code: str, bits: str) -> None:
        names = codes.get(code)
        if names is None:
            raise MalformedVcd(lineno, f"unknown identifier code {code!r}")
        for name in names:
            tr = traces[name]
            tr.record(time, SignalValue(_extend(bits, tr.width, lineno)))

    for lineno, tok in toks:
        if tok in _SKIP_SECTIONS:
            take_until_end()
        elif tok == "$timescale":
            timescale = " ".join(take_until_end())
        elif tok == "$scope":
            body = take_until_end()
            if len(body) < 2:
                raise MalformedVcd(lineno, "bad $scope")
            scope.append(body[1])
        elif tok == "$upscope":
            take_until_end()
            if not scope:
                raise MalformedVcd(lineno, "unbalanced $upscope")
            scope.pop()
        elif tok == "$var":
            body = take_until_end()
            if len(body) < 4:
                raise MalformedVcd(lineno, "bad $var")
            vtype, width_txt, code, ref = body[:4]
            if vtype in ("real", "realtime", "shortreal"):
                raise MalformedVcd(lineno, f"real-valued variable {ref}")
            if vtype not in _VAR_TYPES:
                raise MalformedVcd(lineno, f"unknown variable type {vtype}")
            try:
                width = int(width_txt)
            except ValueError:
                raise MalformedVcd(lineno, "bad variable width") from None
            name = ".".join(scope + [ref])
            if strip_prefix and name.startswith(strip_prefix):
                name = name[len(strip_prefix) :]
            if name in traces:
                raise MalformedVcd(lineno, f"duplicate variable {name}")
            traces[name] = _Trace(width)
            codes.setdefault(code, []).append(name)
        elif tok == "$enddefinitions":
            take_until_end()
            in_defs = False
        elif tok in _DUMP_SECTIONS or tok == "$end":
            continue
        elif tok.startswith("$"):
            raise MalformedVcd(lineno, f"unknown keyword {tok}")
        elif tok.startswith("#"):
            try:
                new_time = int(tok[1:])
            except ValueError:
                raise MalformedVcd(lineno, f"bad timestamp {tok}") from None
            if new_time < time:
                raise MalformedVcd(lineno, "time goes backwards")
            time = new_time
        elif tok[0] in "01xXzZ":
            if in_defs:
                raise MalformedVcd(lineno, "value change before $enddefinitions")
            apply(tok[1:], tok[0].lower())
        elif tok[0] in "bB":
            if in_defs:
                raise MalformedVcd(lineno, "value change before $enddefinitions")
            bits = tok[1:].lower()
            if not bits or any(c not in "01xz" for c in bits):
                raise MalformedVcd(lineno, f"bad vector value {tok}")
            try:
                _, code = next(toks)
            except StopIteration:
                raise MalformedVcd(lineno, "vector value without identifier") from None
            apply(code, bits)
        elif tok[0] in "rR":
            raise MalformedVcd(lineno, "real-valued change")
        else:
            raise MalformedVcd(lineno, f"unexpected token {tok!r}")

    if clock not in traces:
        raise ClockNotFound(clock)
    clk = traces[clock]
    cycle_times = []
    prev = "x"
    for t, v in zip(clk.times, clk.values):
        bit = v.bits[-1]
        if prev == "0" and bit == "1":
            cycle_times.append(t)
        prev = bit
    return Waveform(clock, cycle_times, traces, timescale)


def load_vcd(file, clock: str, strip_prefix: str = "") -> Waveform:
    """Load a VCD file and index it by the rising edges of ``clock``."""
    with open(file, encoding="utf-8") as fh:
        return parse_vcd(fh, clock, strip_prefix)


def loads_vcd(text: str, clock: str, strip_prefix: str = "") -> Waveform:
    return parse_vcd(io.StringIO(text), clock, strip_prefix)


def _code(i: int) -> str:
    chars = []
    while True:
        chars.append(chr(33 + i % 94))
        i //= 94
        if i == 0:
            return "".join(chars)


class VcdWriter:
    """Minimal VCD writer; signal names are dot-separated hierarchical paths."""

    def __init__(self, out: TextIO, signals: Iterable[tuple[str, int]], timescale: str = "1ns"):
        self.out = out
        self.widths: dict[str, int] = {}
        self.codes: dict[str, str] = {}
        self.last: dict[str, str] = {}
        self.time: int | None = None
        sigs = sorted(signals)
        for i, (name, width) in enumerate(sigs):
            self.widths[name] = width
            self.codes[name] = _code(i)
        out.write(f"$timescale {timescale} $end\n")
        self._write_scopes(sigs)
        out.write("$enddefinitions $end\n")

    def _write_scopes(self, sigs: list[tuple[str, int]]) -> None:
        tree: dict = {}
        for name, _ in sigs:
            parts = name.split(".")
            node = tree
            for p in parts[:-1]:
                node = node.setdefault(p, {})
            node.setdefault("", []).append(name)

        def emit(node: dict, depth: int) -> None:
            for name in node.get("", []):
                local = name.rsplit(".", 1)[-1]
                w = self.widths[name]
                rng = f" [{w - 1}:0]" if w > 1 else ""
                self.out.write(f"$var wire {w} {self.codes[name]} {local}{rng} $end\n")
            for key in sorted(k for k in node if k):
                self.out.write(f"$scope module {key} $end\n")
                emit(node[key], depth + 1)
                self.out.write("$upscope $end\n")

        emit(tree, 0)

    def change(self, time: int, name: str, value: SignalValue) -> None:
        if self.last.get(name) == value.bits:
            return
        if self.time != time:
            self.out.write(f"#{time}\n")
            self.time = time
        self.last[name] = value.bits
        code = self.codes[name]
        if self.widths[name] == 1:
            self.out.write(f"{value.bits}{code}\n")
        else:
            self.out.write(f"b{value.bits} {code}\n")


def write_vcd(path, signals: Iterable[tuple[str, int]], changes: Iterable[tuple[int, str, SignalValue]]) -> None:
    with open(Path(path), "w", encoding="utf-8") as fh:
        writer = VcdWriter(fh, signals)
        for time, name, value in changes:
            writer.change(time, name, value)
