"""Text-level scan for the lines owned by assigns, always blocks and port connections.

Relies on the corpus coding style: one construct starts per line, port
connections start with ``.name(`` and always blocks either open ``begin`` on
their first line or are a single statement.
"""

from __future__ import annotations

import re

_WORD_BEGIN = re.compile(r"\bbegin\b")
_WORD_END = re.compile(r"\bend\b")


def _code(line: str) -> str:
    return line.split("//", 1)[0]


def construct_lines(text: str) -> set[int]:
    lines = text.splitlines()
    owned: set[int] = set()
    i = 0
    while i < len(lines):
        code = _code(lines[i]).strip()
        start = i
        if code.startswith("assign "):
            while ";" not in _code(lines[i]):
                i += 1
        elif code.startswith("always"):
            depth = len(_WORD_BEGIN.findall(code)) - len(_WORD_END.findall(code))
            if depth == 0:
                while ";" not in _code(lines[i]):
                    i += 1
            while depth > 0:
                i += 1
                c = _code(lines[i])
                depth += len(_WORD_BEGIN.findall(c)) - len(_WORD_END.findall(c))
        elif code.startswith("."):
            depth = code.count("(") - code.count(")")
            while depth > 0:
                i += 1
                c = _code(lines[i])
                depth += c.count("(") - c.count(")")
        else:
            i += 1
            continue
        owned.update(range(start + 1, i + 2))
        i += 1
    return owned
