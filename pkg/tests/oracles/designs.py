"""Hand-built designs for the slicer and coverage oracles (each at most 12 blocks)."""

from __future__ import annotations

import random

from .dyndep import Module, OracleDesign


def s(n):
    return ("s", n)


def c(w, v):
    return ("c", w, v)


def clkrst(*ports):
    return [("input", "clk", 1), ("input", "rst_n", 1), *ports]


def reset(*pairs, rest=()):
    """``if (!rst_n) <pairs> else <rest>``"""
    return ("if", ("!", s("rst_n")), [("nb", n, v) for n, v in pairs], list(rest))


def chain():
    m = Module(
        "chain",
        clkrst(("input", "a", 8), ("input", "en", 1), ("output", "y", 8)),
        [("x", 8), ("r", 8)],
        [
            ("assign", "x", ("^", s("a"), c(8, 0x3C))),
            ("ff", [reset(("r", c(8, 0)), rest=[("if", s("en"), [("nb", "r", s("x"))], [])])]),
            ("assign", "y", ("+", s("r"), c(8, 1))),
        ],
    )
    return [m], "chain"


def jump_stage():
    m = Module(
        "jump_stage",
        clkrst(("input", "stall", 1), ("input", "jump", 1), ("input", "target", 8), ("output", "pc_id", 8)),
        [("pc_q", 8), ("pc_if", 8), ("we", 1), ("pc_next", 8)],
        [
            ("assign", "pc_next", ("?", s("jump"), s("target"), ("+", s("pc_q"), c(8, 4)))),
            ("ff", [reset(("pc_q", c(8, 0x40)), rest=[("if", s("we"), [("nb", "pc_q", s("pc_next"))], [])])]),
            ("assign", "pc_if", s("pc_q")),
            ("assign", "we", ("!", s("stall"))),
            ("ff", [reset(("pc_id", c(8, 0)), rest=[("if", s("we"), [("nb", "pc_id", s("pc_if"))], [])])]),
        ],
    )
    return [m], "jump_stage"


def load_counter():
    m = Module(
        "load_counter",
        clkrst(("input", "en", 1), ("input", "load", 1), ("input", "val", 8), ("output", "cnt", 8), ("output", "top", 1)),
        [("cnt_d", 8)],
        [
            (
                "comb",
                [
                    ("ba", "cnt_d", s("cnt")),
                    (
                        "if",
                        s("load"),
                        [("ba", "cnt_d", s("val"))],
                        [("if", s("en"), [("ba", "cnt_d", ("+", s("cnt"), c(8, 1)))], [])],
                    ),
                ],
            ),
            ("ff", [reset(("cnt", c(8, 0)), rest=[("nb", "cnt", s("cnt_d"))])]),
            ("assign", "top", ("==", s("cnt"), c(8, 255))),
        ],
    )
    return [m], "load_counter"


def fsm():
    idle, run, done = c(2, 0), c(2, 1), c(2, 2)
    m = Module(
        "fsm",
        clkrst(("input", "go", 1), ("input", "stop", 1), ("output", "busy", 1), ("output", "ticks", 4)),
        [("st", 2)],
        [
            (
                "ff",
                [
                    reset(
                        ("st", idle),
                        ("ticks", c(4, 0)),
                        rest=[
                            (
                                "case",
                                s("st"),
                                [
                                    (idle, [("if", s("go"), [("nb", "st", run), ("nb", "ticks", c(4, 0))], [])]),
                                    (
                                        run,
                                        [
                                            ("nb", "ticks", ("+", s("ticks"), c(4, 1))),
                                            ("if", s("stop"), [("nb", "st", done)], []),
                                        ],
                                    ),
                                ],
                                [("nb", "st", idle)],
                            )
                        ],
                    )
                ],
            ),
            ("assign", "busy", ("==", s("st"), run)),
        ],
    )
    return [m], "fsm"


def blocking_temp():
    m = Module(
        "blocking_temp",
        clkrst(("input", "a", 8), ("input", "b", 8), ("input", "sel", 1), ("output", "r2", 8)),
        [("tmp", 8), ("r1", 8)],
        [
            (
                "ff",
                [
                    ("ba", "tmp", ("?", s("sel"), ("+", s("a"), s("b")), ("-", s("a"), s("b")))),
                    reset(("r1", c(8, 0)), ("r2", c(8, 0)), rest=[("nb", "r1", s("tmp")), ("nb", "r2", ("^", s("r1"), s("tmp")))]),
                ],
            ),
        ],
    )
    return [m], "blocking_temp"


def temp_guard():
    """A guard that reads a blocking temporary computed earlier in the same block."""
    m = Module(
        "temp_guard",
        clkrst(("input", "a", 4), ("input", "b", 4), ("output", "hits", 8), ("output", "last", 4)),
        [("hit", 1)],
        [
            (
                "ff",
                [
                    ("ba", "hit", ("==", ("&", s("a"), c(4, 3)), ("&", s("b"), c(4, 3)))),
                    reset(
                        ("hits", c(8, 0)),
                        ("last", c(4, 0)),
                        rest=[("if", s("hit"), [("nb", "hits", ("+", s("hits"), c(8, 1))), ("nb", "last", s("a"))], [])],
                    ),
                ],
            ),
        ],
    )
    return [m], "temp_guard"


def assign_net():
    m = Module(
        "assign_net",
        clkrst(("input", "a", 8), ("input", "b", 8), ("input", "k", 8), ("output", "y", 8), ("output", "z", 8)),
        [("p", 8), ("q", 8), ("u", 8), ("acc", 8), ("v", 8)],
        [
            ("assign", "p", ("&", s("a"), s("b"))),
            ("assign", "u", ("|", s("k"), c(8, 1))),
            ("assign", "q", ("^", s("p"), s("acc"))),
            ("assign", "y", ("+", s("q"), s("p"))),
            ("ff", [reset(("acc", c(8, 0)), rest=[("nb", "acc", s("v"))])]),
            ("assign", "v", ("-", s("u"), s("acc"))),
            ("assign", "z", ("~", s("v"))),
        ],
    )
    return [m], "assign_net"


def hier():
    sub = Module(
        "dreg",
        clkrst(("input", "d", 8), ("input", "en", 1), ("output", "q", 8)),
        [],
        [("ff", [reset(("q", c(8, 0)), rest=[("if", s("en"), [("nb", "q", s("d"))], [])])])],
    )
    top = Module(
        "hier",
        clkrst(("input", "x", 8), ("input", "en", 1), ("output", "out", 8)),
        [("m", 8)],
        [
            ("inst", "dreg", "u_a", [("clk", s("clk")), ("rst_n", s("rst_n")), ("d", s("x")), ("en", s("en")), ("q", s("m"))]),
            (
                "inst",
                "dreg",
                "u_b",
                [("clk", s("clk")), ("rst_n", s("rst_n")), ("d", ("+", s("m"), s("x"))), ("en", ("!", s("en"))), ("q", s("out"))],
            ),
        ],
    )
    return [sub, top], "hier"


def accum():
    m = Module(
        "accum",
        clkrst(("input", "x", 8), ("input", "mode", 2), ("input", "en", 1), ("output", "acc", 8)),
        [("nxt", 8)],
        [
            (
                "comb",
                [
                    (
                        "if",
                        ("==", s("mode"), c(2, 0)),
                        [("ba", "nxt", ("+", s("acc"), s("x")))],
                        [
                            (
                                "if",
                                ("==", s("mode"), c(2, 1)),
                                [("ba", "nxt", ("-", s("acc"), s("x")))],
                                [("ba", "nxt", ("^", s("acc"), s("x")))],
                            )
                        ],
                    )
                ],
            ),
            ("ff", [reset(("acc", c(8, 1)), rest=[("if", s("en"), [("nb", "acc", s("nxt"))], [])])]),
        ],
    )
    return [m], "accum"


def shift3():
    items = []
    for i, (src, dst) in enumerate([("din", "r0"), ("r0", "r1"), ("r1", "r2")]):
        guard = s("en") if i != 1 else ("&", s("en"), ("bit", "r0", 0))
        items.append(("ff", [reset((dst, c(8, i)), rest=[("if", guard, [("nb", dst, s(src))], [])])]))
    items.append(("assign", "dout", ("|", s("r2"), s("r1"))))
    m = Module(
        "shift3",
        clkrst(("input", "din", 8), ("input", "en", 1), ("output", "dout", 8)),
        [("r0", 8), ("r1", 8), ("r2", 8)],
        items,
    )
    return [m], "shift3"


def comb_chain():
    m = Module(
        "comb_chain",
        clkrst(("input", "a", 8), ("input", "b", 8), ("input", "cc", 8), ("input", "d", 8), ("output", "y", 8), ("output", "w", 8)),
        [("t", 8), ("u", 8), ("y_q", 8)],
        [
            (
                "comb",
                [
                    ("ba", "t", ("&", s("a"), s("b"))),
                    ("ba", "u", ("|", s("t"), s("cc"))),
                    ("ba", "y", ("^", s("u"), s("d"))),
                    ("if", ("bit", "d", 7), [("ba", "w", s("t"))], [("ba", "w", s("y_q"))]),
                ],
            ),
            ("ff", [reset(("y_q", c(8, 0)), rest=[("nb", "y_q", s("y"))])]),
        ],
    )
    return [m], "comb_chain"


def decode():
    m = Module(
        "decode",
        clkrst(("input", "op", 2), ("input", "a", 8), ("input", "b", 8), ("output", "res", 8), ("output", "flag", 1)),
        [("alu", 8), ("hold", 1)],
        [
            (
                "comb",
                [
                    (
                        "case",
                        s("op"),
                        [
                            (c(2, 0), [("ba", "alu", ("+", s("a"), s("b")))]),
                            (c(2, 1), [("ba", "alu", ("&", s("a"), s("b")))]),
                            (c(2, 2), [("ba", "alu", s("res"))]),
                        ],
                        [("ba", "alu", s("b"))],
                    )
                ],
            ),
            ("assign", "hold", ("==", s("op"), c(2, 3))),
            (
                "ff",
                [
                    reset(
                        ("res", c(8, 0)),
                        ("flag", c(1, 0)),
                        rest=[("if", ("!", s("hold")), [("nb", "res", s("alu"))], [("nb", "flag", ("<", s("a"), s("b")))])],
                    )
                ],
            ),
        ],
    )
    return [m], "decode"


def wrap_counter():
    m = Module(
        "wrap_counter",
        clkrst(("input", "lim_we", 1), ("input", "lim_in", 8), ("output", "cnt", 8), ("output", "hit", 1)),
        [("lim", 8)],
        [
            ("ff", [reset(("lim", c(8, 5)), rest=[("if", s("lim_we"), [("nb", "lim", s("lim_in"))], [])])]),
            ("assign", "hit", ("==", s("cnt"), s("lim"))),
            ("ff", [reset(("cnt", c(8, 0)), rest=[("if", s("hit"), [("nb", "cnt", c(8, 0))], [("nb", "cnt", ("+", s("cnt"), c(8, 1)))])])]),
        ],
    )
    return [m], "wrap_counter"


ALL = [
    chain,
    jump_stage,
    load_counter,
    fsm,
    blocking_temp,
    temp_guard,
    assign_net,
    hier,
    accum,
    shift3,
    comb_chain,
    decode,
    wrap_counter,
]


def build(factory) -> OracleDesign:
    modules, top = factory()
    return OracleDesign(modules, top)


def stimulus(design: OracleDesign, cycles: int, seed: int) -> dict[str, list[int]]:
    """Random inputs; reset low at cycle 0 and on rare later cycles."""
    rng = random.Random(seed)
    top = design.modules[design.top]
    out: dict[str, list[int]] = {}
    for d, n, w in top.ports:
        if d != "input" or n == "clk":
            continue
        if n == "rst_n":
            out[n] = [0] + [0 if rng.random() < 0.04 else 1 for _ in range(cycles - 1)]
        elif w == 1:
            # enables lean on so that registers both load and hold
            out[n] = [int(rng.random() < 0.7) for _ in range(cycles)]
        else:
            out[n] = [rng.randrange(1 << w) for _ in range(cycles)]
    return out
