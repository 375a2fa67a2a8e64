"""Tiny two-pass assembler for the toy core's RV32I subset.

Only x0..x7 exist. The program below is what ``rtl/imem.sv`` holds; the
fixture builder regenerates that file from it.
"""

from __future__ import annotations

R_OPS = {
    "add": (0b000, 0),
    "sub": (0b000, 0b0100000),
    "sll": (0b001, 0),
    "slt": (0b010, 0),
    "sltu": (0b011, 0),
    "xor": (0b100, 0),
    "srl": (0b101, 0),
    "or": (0b110, 0),
    "and": (0b111, 0),
}
I_OPS = {"addi": 0b000, "slti": 0b010, "sltiu": 0b011, "xori": 0b100, "ori": 0b110, "andi": 0b111}
SHIFT_I = {"slli": 0b001, "srli": 0b101}
BRANCH = {"beq": 0b000, "bne": 0b001, "blt": 0b100, "bge": 0b101}

PROGRAM = """
        addi x1, x0, 0x123
        addi x2, x0, -45
        add  x3, x1, x2
        sub  x4, x1, x2
        and  x5, x3, x4
        or   x6, x3, x4
        xor  x7, x5, x6
        slt  x1, x2, x3
        sltu x2, x2, x3
        lui  x3, 0xabcde
        addi x3, x3, 0x765
        slli x4, x3, 4
        srli x5, x3, 8
        sll  x6, x4, x1
        srl  x7, x5, x1
        xori x1, x7, 0x5a5
        ori  x2, x6, 0x0f0
        andi x4, x3, 0x7ff
        slti x5, x2, 100
        sltiu x6, x2, -1
        sw   x3, 0(x0)
        sw   x1, 8(x0)
        sw   x2, 28(x0)
        lw   x7, 8(x0)
        add  x4, x7, x3
        lw   x5, 0(x0)
        sw   x5, 12(x0)
        lw   x6, 12(x0)
        beq  x6, x3, skip1
        addi x1, x0, 1
        addi x2, x0, 2
skip1:
        bne  x6, x3, bad
        addi x6, x0, 4
        addi x7, x0, 0
loop:
        add  x7, x7, x6
        slli x1, x7, 2
        sw   x1, 16(x0)
        lw   x2, 16(x0)
        add  x7, x7, x2
        addi x6, x6, -1
        blt  x0, x6, loop
        bge  x7, x0, pos
bad:
        addi x7, x0, -1
pos:
        jal  x5, next
        addi x1, x0, 99
next:
        add  x2, x5, x7
        sw   x2, 20(x0)
        lw   x3, 20(x0)
        xor  x4, x3, x7
        sub  x5, x4, x1
        or   x6, x5, x2
end:
        jal  x0, end
"""


def _reg(tok: str) -> int:
    tok = tok.strip()
    if not tok.startswith("x") or not 0 <= int(tok[1:]) < 8:
        raise ValueError(f"bad register {tok!r}")
    return int(tok[1:])


def _imm(tok: str) -> int:
    return int(tok.strip(), 0)


def _check(value: int, bits: int) -> int:
    lo, hi = -(1 << (bits - 1)), (1 << (bits - 1)) - 1
    if not lo <= value <= hi:
        raise ValueError(f"immediate {value} out of range for {bits} bits")
    return value & ((1 << bits) - 1)


def encode(op: str, args: list[str], pc: int, labels: dict[str, int]) -> int:
    if op in R_OPS:
        f3, f7 = R_OPS[op]
        rd, rs1, rs2 = (_reg(a) for a in args)
        return (f7 << 25) | (rs2 << 20) | (rs1 << 15) | (f3 << 12) | (rd << 7) | 0b0110011
    if op in I_OPS:
        rd, rs1 = _reg(args[0]), _reg(args[1])
        imm = _check(_imm(args[2]), 12)
        return (imm << 20) | (rs1 << 15) | (I_OPS[op] << 12) | (rd << 7) | 0b0010011
    if op in SHIFT_I:
        rd, rs1 = _reg(args[0]), _reg(args[1])
        sh = _imm(args[2]) & 31
        return (sh << 20) | (rs1 << 15) | (SHIFT_I[op] << 12) | (rd << 7) | 0b0010011
    if op == "lui":
        return ((_imm(args[1]) & 0xFFFFF) << 12) | (_reg(args[0]) << 7) | 0b0110111
    if op in ("lw", "sw"):
        r = _reg(args[0])
        off, base = args[1].rstrip(")").split("(")
        imm = _check(_imm(off), 12)
        rs1 = _reg(base)
        if op == "lw":
            return (imm << 20) | (rs1 << 15) | (0b010 << 12) | (r << 7) | 0b0000011
        return ((imm >> 5) << 25) | (r << 20) | (rs1 << 15) | (0b010 << 12) | ((imm & 31) << 7) | 0b0100011
    if op in BRANCH:
        rs1, rs2 = _reg(args[0]), _reg(args[1])
        off = _check(labels[args[2].strip()] - pc, 13)
        return (
            ((off >> 12) & 1) << 31
            | ((off >> 5) & 0x3F) << 25
            | rs2 << 20
            | rs1 << 15
            | BRANCH[op] << 12
            | ((off >> 1) & 0xF) << 8
            | ((off >> 11) & 1) << 7
            | 0b1100011
        )
    if op == "jal":
        rd = _reg(args[0])
        off = _check(labels[args[1].strip()] - pc, 21)
        return (
            ((off >> 20) & 1) << 31
            | ((off >> 1) & 0x3FF) << 21
            | ((off >> 11) & 1) << 20
            | ((off >> 12) & 0xFF) << 12
            | rd << 7
            | 0b1101111
        )
    raise ValueError(f"unknown instruction {op!r}")


def assemble(source: str = PROGRAM) -> list[tuple[int, str]]:
    """Return ``(word, text)`` pairs in program order."""
    lines = []
    labels: dict[str, int] = {}
    for raw in source.splitlines():
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        if text.endswith(":"):
            labels[text[:-1]] = 4 * len(lines)
            continue
        lines.append(text)
    out = []
    for i, text in enumerate(lines):
        op, _, rest = text.partition(" ")
        args = [a.strip() for a in rest.split(",")] if rest.strip() else []
        out.append((encode(op, args, 4 * i, labels), " ".join(text.split())))
    return out


def imem_source(program: list[tuple[int, str]], depth: int = 64) -> str:
    if len(program) > depth:
        raise ValueError("program does not fit")
    rows = [
        "// Generated by fixtures/toycore/asm.py; do not edit by hand.",
        "module imem (",
        "  input  logic [31:0] addr_i,",
        "  output logic [31:0] insn_o",
        ");",
        "  always_comb begin",
        "    case (addr_i[7:2])",
    ]
    for i, (word, text) in enumerate(program):
        rows.append(f"      6'd{i}: insn_o = 32'h{word:08x}; // {text}")
    rows += [
        "      default: insn_o = 32'h00000013;",
        "    endcase",
        "  end",
        "endmodule",
        "",
    ]
    return "\n".join(rows)
