"""Tokenizer for the supported SystemVerilog subset."""

from __future__ import annotations

import re
from dataclasses import dataclass

from rtlfl.errors import HdlSyntaxError, UnsupportedConstruct

KEYWORDS = frozenset(
    """
    module endmodule input output inout logic wire reg bit assign always
    always_ff always_comb always_latch begin end if else case casez casex
    endcase default posedge negedge or parameter localparam unique unique0
    priority signed unsigned initial final function endfunction task endtask
    class endclass interface endinterface generate endgenerate genvar for
    while repeat forever typedef enum struct union package endpackage import
    integer int modport program endprogram fork join inside
    """.split()
)

# Longest operators first so the regex alternation is greedy.
OPERATORS = [
    "<<<=", ">>>=", "===", "!==", "<<<", ">>>", "~&", "~|", "~^", "^~",
    "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "+:", "-:", "**", "->",
    "::", "+", "-", "*", "/", "%", "&", "|", "^", "~", "!", "<", ">", "=",
    "?", ":", ";", ",", ".", "(", ")", "[", "]", "{", "}", "@", "#", "'",
]

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\f\v]+)
  | (?P<nl>\n)
  | (?P<lcomment>//[^\n]*)
  | (?P<bcomment>/\*.*?\*/)
  | (?P<directive>`[A-Za-z_][A-Za-z0-9_]*)
  | (?P<based>(?:[0-9][0-9_]*\s*)?'[sS]?[bBoOdDhH]\s*[0-9a-fA-FxXzZ?_]+)
  | (?P<fill>'[01xXzZ](?![0-9a-zA-Z_]))
  | (?P<real>[0-9][0-9_]*\.[0-9][0-9_]*)
  | (?P<dec>[0-9][0-9_]*)
  | (?P<sysid>\$[A-Za-z_][A-Za-z0-9_$]*)
  | (?P<id>[A-Za-z_][A-Za-z0-9_$]*)
  | (?P<escid>\\\S+)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<op>"""
    + "|".join(re.escape(op) for op in OPERATORS)
    + r""")
    """,
    re.VERBOSE | re.DOTALL,
)


@dataclass(frozen=True, slots=True)
class Token:
    kind: str  # id | kw | num | op | sysid | eof
    text: str
    line: int
    col: int  # 0-based column of first char
    end_line: int
    end_col: int  # exclusive


def tokenize(text: str, file: str = "<string>") -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    line = 1
    line_start = 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise HdlSyntaxError(file, line, "a valid token", text[pos : pos + 10])
        kind = m.lastgroup
        value = m.group()
        col = pos - line_start
        if kind == "directive":
            # `timescale and `default_nettype are accepted and ignored.
            if value in ("`timescale", "`default_nettype", "`resetall"):
                eol = text.find("\n", pos)
                pos = n if eol < 0 else eol
                continue
            raise UnsupportedConstruct(file, line, f"compiler directive {value}")
        if kind in ("escid", "string", "real"):
            raise UnsupportedConstruct(file, line, f"{kind} literal {value!r}")
        newlines = value.count("\n")
        if kind not in ("ws", "nl", "lcomment", "bcomment"):
            tok_kind = {"based": "num", "fill": "num", "dec": "num"}.get(kind, kind)
            if kind == "id" and value in KEYWORDS:
                tok_kind = "kw"
            end_line = line + newlines
            if newlines:
                end_col = len(value) - value.rfind("\n") - 1
            else:
                end_col = col + len(value)
            tokens.append(Token(tok_kind, value, line, col, end_line, end_col))
        if newlines:
            line += newlines
            line_start = pos + value.rfind("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start, line, pos - line_start))
    return tokens
