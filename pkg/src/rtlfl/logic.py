"""Four-state bit vectors and a compiled expression evaluator.

Values travel through the evaluator as ``(val, unk)`` integer pairs of a
statically known width: bit ``i`` is X (or Z) when ``unk`` has bit ``i`` set,
otherwise it is ``val``'s bit ``i``. Widths follow the usual Verilog sizing
rules for unsigned operands: arithmetic and bitwise operators are
context-determined, comparisons, reductions and concatenations are
self-determined.

X policy: any unknown operand bit that reaches an arithmetic result,
comparison or decision makes that result unknown. Bitwise and/or keep the
dominating known bits (``0 & x == 0``, ``1 | x == 1``).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from rtlfl.errors import UnsupportedOperator
from rtlfl.hdl.ast import (
    Binary,
    CaseMatch,
    Concat,
    Expr,
    Ident,
    Index,
    Number,
    Repl,
    Slice,
    Ternary,
    Unary,
)

Getter = Callable[[str], "tuple[int, int]"]
Compiled = Callable[[Getter], "tuple[int, int]"]


_VAL_MAP = str.maketrans("01xzXZ", "010000")
_UNK_MAP = str.maketrans("01xzXZ", "001111")


@dataclass(frozen=True, slots=True)
class SignalValue:
    """A 4-state vector rendered MSB-first over ``01xz``."""

    bits: str

    @property
    def width(self) -> int:
        return len(self.bits)

    @classmethod
    def from_int(cls, value: int, width: int) -> SignalValue:
        return cls(format(value & ((1 << width) - 1), f"0{width}b"))

    @classmethod
    def from_parts(cls, width: int, val: int, unk: int = 0, zmask: int = 0) -> SignalValue:
        if width == 0:
            return cls("")
        m = (1 << width) - 1
        vbits = format(val & m, f"0{width}b")
        if not (unk | zmask) & m:
            return cls(vbits)
        ubits = format(unk & m, f"0{width}b")
        zbits = format(zmask & m, f"0{width}b")
        return cls("".join("z" if z == "1" else "x" if u == "1" else v for v, u, z in zip(vbits, ubits, zbits)))

    @classmethod
    def unknown(cls, width: int) -> SignalValue:
        return cls("x" * width)

    @property
    def parts(self) -> tuple[int, int]:
        """``(val, unk)`` with Z folded into unknown."""
        if not self.bits:
            return 0, 0
        return int(self.bits.translate(_VAL_MAP), 2), int(self.bits.translate(_UNK_MAP), 2)

    @property
    def is_known(self) -> bool:
        return all(c in "01" for c in self.bits)

    def to_int(self) -> int | None:
        if not self.is_known:
            return None
        return int(self.bits, 2) if self.bits else 0

    def hex(self) -> str:
        digits = []
        padded = self.bits.rjust((self.width + 3) // 4 * 4, "0")
        for i in range(0, len(padded), 4):
            nib = padded[i : i + 4]
            if all(c in "01" for c in nib):
                digits.append(format(int(nib, 2), "x"))
            elif all(c == "z" for c in nib):
                digits.append("z")
            else:
                digits.append("x")
        return "0x" + "".join(digits)

    def truth(self) -> bool | None:
        """Verilog truthiness: True if a known 1 bit exists, False if all bits are 0, else None."""
        return truth(*self.parts)

    def __str__(self) -> str:
        return f"{self.width}'b{self.bits}"


def truth(val: int, unk: int) -> bool | None:
    if val & ~unk:
        return True
    if unk:
        return None
    return False


def mask(width: int) -> int:
    return (1 << width) - 1


def self_width(e: Expr, widthof: Callable[[str], int]) -> int:
    if isinstance(e, Number):
        return 1 if e.fill else (e.width or 32)
    if isinstance(e, Ident):
        return widthof(e.name)
    if isinstance(e, Index):
        return 1
    if isinstance(e, Slice):
        if e.mode == ":":
            return abs(_const(e.msb) - _const(e.lsb)) + 1
        return _const(e.lsb)
    if isinstance(e, Concat):
        return sum(self_width(i, widthof) for i in e.items)
    if isinstance(e, Repl):
        return _const(e.count) * sum(self_width(i, widthof) for i in e.items)
    if isinstance(e, Unary):
        if e.op in ("~", "-", "+"):
            return self_width(e.operand, widthof)
        return 1
    if isinstance(e, Binary):
        if e.op in ("+", "-", "*", "/", "%", "&", "|", "^", "~^", "^~"):
            return max(self_width(e.lhs, widthof), self_width(e.rhs, widthof))
        if e.op in ("<<", ">>", "<<<", ">>>", "**"):
            return self_width(e.lhs, widthof)
        return 1
    if isinstance(e, Ternary):
        return max(self_width(e.then, widthof), self_width(e.else_, widthof))
    if isinstance(e, CaseMatch):
        return 1
    raise TypeError(type(e).__name__)


def _const(e: Expr) -> int:
    if isinstance(e, Number) and not e.unk:
        return e.value
    if isinstance(e, Binary) and e.op in ("+", "-"):
        a, b = _const(e.lhs), _const(e.rhs)
        return a + b if e.op == "+" else a - b
    raise UnsupportedOperator("non-constant select bound")


def compile_expr(e: Expr, widthof: Callable[[str], int], ctx: int | None = None) -> tuple[int, Compiled]:
    """Compile ``e`` to a closure ``fn(get) -> (val, unk)``; returns ``(width, fn)``.

    ``get(name)`` must return the ``(val, unk)`` pair of a signal at its declared
    width. ``ctx`` is the context width imposed by the surrounding expression.
    """
    sw = self_width(e, widthof)
    w = max(sw, ctx or 0)
    m = mask(w)

    if isinstance(e, Number):
        if e.fill:
            val = m if e.value else 0
            unk = m if e.unk else 0
            return w, lambda g: (val & ~unk, unk)
        val, unk = e.value & m, e.unk & m
        return w, lambda g: (val, unk)

    if isinstance(e, Ident):
        name = e.name
        return w, lambda g: g(name)

    if isinstance(e, Index):
        name = e.base.name
        bw = widthof(name)
        lsb_off = _lsb_of(widthof, name)
        iw, idx = compile_expr(e.index, widthof)

        def index(g):
            iv, iu = idx(g)
            if iu:
                return 0, 1
            pos = iv - lsb_off
            if pos < 0 or pos >= bw:
                return 0, 1
            v, u = g(name)
            return (v >> pos) & 1, (u >> pos) & 1

        return w, index

    if isinstance(e, Slice):
        name = e.base.name
        lsb_off = _lsb_of(widthof, name)
        bw = widthof(name)
        if e.mode == ":":
            lo = min(_const(e.msb), _const(e.lsb)) - lsb_off
            sm = mask(sw)
            if lo < 0 or lo + sw > bw:
                raise UnsupportedOperator(f"part-select out of range on {name}")

            def part(g):
                v, u = g(name)
                return (v >> lo) & sm, (u >> lo) & sm

            return w, part
        width_sel = _const(e.lsb)
        sm = mask(width_sel)
        _, base_fn = compile_expr(e.msb, widthof)
        down = e.mode == "-:"

        def indexed(g):
            bv, bu = base_fn(g)
            if bu:
                return 0, sm
            lo = (bv - width_sel + 1 if down else bv) - lsb_off
            if lo < 0 or lo + width_sel > bw:
                return 0, sm
            v, u = g(name)
            return (v >> lo) & sm, (u >> lo) & sm

        return w, indexed

    if isinstance(e, (Concat, Repl)):
        parts = []
        items = e.items
        for item in items:
            iw, fn = compile_expr(item, widthof)
            parts.append((iw, fn))
        reps = _const(e.count) if isinstance(e, Repl) else 1

        def concat(g):
            v = u = 0
            for _ in range(reps):
                for iw, fn in parts:
                    pv, pu = fn(g)
                    v = (v << iw) | pv
                    u = (u << iw) | pu
            return v, u

        return w, concat

    if isinstance(e, Unary):
        op = e.op
        if op in ("~", "-", "+"):
            _, a = compile_expr(e.operand, widthof, w)
            if op == "~":
                def inv(g):
                    v, u = a(g)
                    return ~v & m & ~u, u
                return w, inv
            if op == "+":
                return w, a

            def neg(g):
                v, u = a(g)
                return (0, m) if u else ((-v) & m, 0)

            return w, neg
        aw, a = compile_expr(e.operand, widthof)
        am = mask(aw)
        if op == "!":
            def lnot(g):
                t = truth(*a(g))
                return (0, 1) if t is None else (0 if t else 1, 0)
            return w, lnot
        if op in ("&", "~&"):
            inv = op == "~&"

            def rand(g):
                v, u = a(g)
                if (~v & ~u) & am:
                    r = 0
                elif u:
                    return 0, 1
                else:
                    r = 1
                return (r ^ 1 if inv else r), 0

            return w, rand
        if op in ("|", "~|"):
            inv = op == "~|"

            def ror(g):
                v, u = a(g)
                if v & ~u:
                    r = 1
                elif u:
                    return 0, 1
                else:
                    r = 0
                return (r ^ 1 if inv else r), 0

            return w, ror
        if op in ("^", "~^", "^~"):
            inv = op != "^"

            def rxor(g):
                v, u = a(g)
                if u:
                    return 0, 1
                r = bin(v).count("1") & 1
                return (r ^ 1 if inv else r), 0

            return w, rxor
        raise UnsupportedOperator(op)

    if isinstance(e, Binary):
        return w, _compile_binary(e, widthof, w, m)

    if isinstance(e, Ternary):
        _, c = compile_expr(e.cond, widthof)
        _, t = compile_expr(e.then, widthof, w)
        _, f = compile_expr(e.else_, widthof, w)

        def tern(g):
            tv = truth(*c(g))
            if tv is True:
                return t(g)
            if tv is False:
                return f(g)
            av, au = t(g)
            bv, bu = f(g)
            diff = (av ^ bv) | au | bu
            return av & ~diff, diff

        return w, tern

    if isinstance(e, CaseMatch):
        sw_ = max([self_width(e.subject, widthof)] + [self_width(p, widthof) for p in e.patterns])
        _, subj = compile_expr(e.subject, widthof, sw_)
        pats = [(p, compile_expr(p, widthof, sw_)[1]) for p in e.patterns]
        kind = e.kind

        def match(g):
            sv, su = subj(g)
            unknown = False
            for p, pf in pats:
                pv, pu = pf(g)
                care = mask(sw_)
                if kind == "casez" and isinstance(p, Number):
                    care &= ~_zbits(p, sw_)
                elif kind == "casex" and isinstance(p, Number):
                    care &= ~pu
                if (su | pu) & care:
                    unknown = True
                    continue
                if (sv & care) == (pv & care):
                    return 1, 0
            return (0, 1) if unknown else (0, 0)

        return w, match

    raise TypeError(type(e).__name__)


def _zbits(p: Number, width: int) -> int:
    z = p.zmask
    if p.fill:
        return mask(width) if p.zmask else 0
    return z & mask(width)


def _lsb_of(widthof, name: str) -> int:
    lsb = getattr(widthof, "lsb", None)
    return lsb(name) if lsb is not None else 0


def _compile_binary(e: Binary, widthof, w: int, m: int) -> Compiled:
    op = e.op
    if op in ("+", "-", "*", "&", "|", "^", "~^", "^~"):
        _, a = compile_expr(e.lhs, widthof, w)
        _, b = compile_expr(e.rhs, widthof, w)
        if op == "&":
            def band(g):
                av, au = a(g)
                bv, bu = b(g)
                zero = (~av & ~au) | (~bv & ~bu)
                u = (au | bu) & ~zero
                return av & bv & ~u & m, u & m
            return band
        if op == "|":
            def bor(g):
                av, au = a(g)
                bv, bu = b(g)
                one = (av & ~au) | (bv & ~bu)
                u = (au | bu) & ~one
                return one & m, u & m
            return bor
        if op in ("^", "~^", "^~"):
            inv = op != "^"

            def bxor(g):
                av, au = a(g)
                bv, bu = b(g)
                u = au | bu
                r = av ^ bv
                if inv:
                    r = ~r
                return r & ~u & m, u & m
            return bxor
        arith = {"+": lambda x, y: x + y, "-": lambda x, y: x - y, "*": lambda x, y: x * y}[op]

        def arith_fn(g):
            av, au = a(g)
            bv, bu = b(g)
            if au or bu:
                return 0, m
            return arith(av, bv) & m, 0
        return arith_fn

    if op in ("==", "!=", "===", "!==", "<", "<=", ">", ">="):
        ow = max(self_width(e.lhs, widthof), self_width(e.rhs, widthof))
        _, a = compile_expr(e.lhs, widthof, ow)
        _, b = compile_expr(e.rhs, widthof, ow)
        if op in ("===", "!=="):
            neq = op == "!=="

            def case_eq(g):
                r = a(g) == b(g)
                return (int(r != neq), 0)
            return case_eq
        cmp = {
            "==": lambda x, y: x == y,
            "!=": lambda x, y: x != y,
            "<": lambda x, y: x < y,
            "<=": lambda x, y: x <= y,
            ">": lambda x, y: x > y,
            ">=": lambda x, y: x >= y,
        }[op]

        def compare(g):
            av, au = a(g)
            bv, bu = b(g)
            if au or bu:
                return 0, 1
            return int(cmp(av, bv)), 0
        return compare

    if op in ("&&", "||"):
        _, a = compile_expr(e.lhs, widthof)
        _, b = compile_expr(e.rhs, widthof)
        is_and = op == "&&"

        def logic(g):
            ta = truth(*a(g))
            tb = truth(*b(g))
            if is_and:
                if ta is False or tb is False:
                    return 0, 0
                if ta and tb:
                    return 1, 0
            else:
                if ta or tb:
                    return 1, 0
                if ta is False and tb is False:
                    return 0, 0
            return 0, 1
        return logic

    if op in ("<<", ">>", "<<<", ">>>"):
        _, a = compile_expr(e.lhs, widthof, w)
        _, b = compile_expr(e.rhs, widthof)
        left = op in ("<<", "<<<")

        def shift(g):
            av, au = a(g)
            bv, bu = b(g)
            if bu:
                return 0, m
            if left:
                return (av << bv) & m, (au << bv) & m
            return av >> bv, au >> bv
        return shift

    raise UnsupportedOperator(op)


class WidthTable:
    """Adapter giving :func:`compile_expr` signal widths and LSB offsets."""

    def __init__(self, widths: dict[str, int], lsbs: dict[str, int] | None = None):
        self.widths = widths
        self.lsbs = lsbs or {}

    def __call__(self, name: str) -> int:
        return self.widths[name]

    def lsb(self, name: str) -> int:
        return self.lsbs.get(name, 0)
