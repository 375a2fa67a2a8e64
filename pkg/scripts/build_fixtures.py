"""Regenerate the bundled waveform fixtures with the built-in simulator.

Run from the repository root:  python3 scripts/build_fixtures.py
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
FIX = ROOT / "fixtures"
sys.path.insert(0, str(ROOT / "src"))
sys.path.insert(0, str(ROOT / "fixtures" / "toycore"))

from rtlfl.agent import Budget, PolicyBackend, RecordingBackend, TestReport, run_localization  # noqa: E402
from rtlfl.harness.bench import first_mismatch  # noqa: E402
from rtlfl.harness.manifest import load_manifest  # noqa: E402
from rtlfl.harness.project import Project, load_stimulus  # noqa: E402
from rtlfl.slicer import build_exec_path  # noqa: E402


def sources(d: Path, sub: str = "rtl") -> dict[str, str]:
    return {p.relative_to(d).as_posix(): p.read_text() for p in sorted((d / sub).glob("*.sv"))}


def dump_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


# --- jump demo -------------------------------------------------------------


def jump_demo_stimulus(stall_at: int | None) -> dict:
    cycles = 24
    inputs = {
        "rst_n": [0] + [1] * (cycles - 1),
        "stall_i": [0] * cycles,
        "jump_valid_i": [0] * cycles,
        "op_a_i": [0] * cycles,
        "op_b_i": [0] * cycles,
    }
    # Operands for the jump land in the execute registers at cycle 16.
    inputs["jump_valid_i"][15] = 1
    inputs["op_a_i"][15] = 0x00100080
    inputs["op_b_i"][15] = 0x0000A0C0
    if stall_at is not None:
        inputs["stall_i"][stall_at] = 1
    return {"cycles": cycles, "inputs": inputs}


def build_jump_demo() -> None:
    d = FIX / "jump_demo"
    buggy = Project.from_files(sources(d), "top")
    fixed_files = dict(buggy.files)
    fixed_files["rtl/alu.sv"] = (d / "golden_rtl" / "alu.sv").read_text()
    fixed = Project.from_files(fixed_files, "top")
    for name, stall in (("stimulus", None), ("stall_stimulus", 17)):
        dump_json(d / f"{name}.json", jump_demo_stimulus(stall))
    stim, cycles = load_stimulus(d / "stimulus.json")
    stall_stim, _ = load_stimulus(d / "stall_stimulus.json")
    text, w = buggy.simulate(stim, cycles)
    (d / "buggy.vcd").write_text(text)
    (d / "stall.vcd").write_text(buggy.simulate(stall_stim, cycles)[0])
    gtext, golden = fixed.simulate(stim, cycles)
    (d / "golden.vcd").write_text(gtext)

    report = TestReport(
        instruction="j 0x0010a140",
        pc="0x00100040",
        signal="top.commit_pc_o",
        cycle=19,
        expected="the jump should retire with target 0x0010a140",
    )
    dump_json(d / "report.json", report.to_json())
    path = build_exec_path(buggy.blocks, report.signal, report.cycle, w, buggy.replay_coverage())
    rec = RecordingBackend(PolicyBackend(golden, confidence=0.9))
    run_localization(path, report, rec, w, Budget(), buggy.source_of_block)
    script = rec.entries
    # Give the final turn a human-style rationale.
    why = "operands match the reference run but the result is their difference, not their sum"
    for call in script[-1]["tool_calls"]:
        call["arguments"]["rationale"] = why
    dump_json(d / "decisions.json", script)
    common = 'sources = ["rtl/alu.sv", "rtl/if_stage.sv", "rtl/top.sv"]\ntop = "top"\nclock = "clk"\n'
    (d / "manifest.toml").write_text(
        common + 'waveform = "buggy.vcd"\nreport = "report.json"\n'
        'backend = "scripted:decisions.json"\ngolden = "golden.vcd"\nstimulus = "stimulus.json"\ncycles = 24\n'
        'observe = ["commit_pc_o"]\n'
    )
    (d / "stall.toml").write_text(common + 'waveform = "stall.vcd"\nstimulus = "stall_stimulus.json"\ncycles = 24\n')


# --- toy core --------------------------------------------------------------

TOY_OBSERVE = [
    "commit_valid_o",
    "commit_pc_o",
    "commit_insn_o",
    "commit_rd_o",
    "commit_rd_wdata_o",
    "commit_mem_we_o",
    "commit_mem_addr_o",
    "commit_mem_wdata_o",
]
TOY_CYCLES = 100


def toy_stimulus() -> dict:
    n = TOY_CYCLES
    return {
        "cycles": n,
        "inputs": {
            "rst_n": [0] + [1] * (n - 1),
            "gpio_in_i": [(i * 37) & 0xFF for i in range(n)],
            "dbg_bp_addr_i": [0x00000088] * n,
            "dbg_clear_i": [1 if i % 40 == 39 else 0 for i in range(n)],
            "perf_clear_i": [0] * n,
        },
    }


def toml_list(items) -> str:
    return "[\n" + "".join(f'    "{i}",\n' for i in items) + "]"


def build_toycore() -> None:
    import asm

    d = FIX / "toycore"
    (d / "rtl" / "imem.sv").write_text(asm.imem_source(asm.assemble()))
    dump_json(d / "stimulus.json", toy_stimulus())
    stim, cycles = load_stimulus(d / "stimulus.json")
    golden_proj = Project.from_files(sources(d), "toy_top")
    gtext, golden = golden_proj.simulate(stim, cycles)
    (d / "golden.vcd").write_text(gtext)
    names = sorted(golden_proj.files)
    (d / "manifest.toml").write_text(
        f"sources = {toml_list(names)}\n"
        'top = "toy_top"\n'
        'clock = "clk"\n'
        'waveform = "golden.vcd"\n'
        'golden = "golden.vcd"\n'
        'stimulus = "stimulus.json"\n'
        f"cycles = {TOY_CYCLES}\n"
        f"observe = {toml_list(TOY_OBSERVE)}\n"
    )

    # An ALU add that subtracts, localized with a recorded decision script.
    b = d / "bug_alu"
    b.mkdir(exist_ok=True)
    alu = (d / "rtl" / "alu.sv").read_text()
    buggy_alu = alu.replace("ALU_ADD: result_o = operand_a_i + operand_b_i;", "ALU_ADD: result_o = operand_a_i - operand_b_i;")
    assert buggy_alu != alu
    (b / "alu.sv").write_text(buggy_alu)
    bug_names = ["alu.sv" if n == "rtl/alu.sv" else "../" + n for n in names]
    (b / "manifest.toml").write_text(
        f"sources = {toml_list(bug_names)}\n"
        'top = "toy_top"\n'
        'clock = "clk"\n'
        'waveform = "buggy.vcd"\n'
        'report = "report.json"\n'
        'backend = "scripted:decisions.json"\n'
        'golden = "../golden.vcd"\n'
    )
    # Block ids carry file names, so record against the manifest's own naming.
    buggy = Project.from_manifest(load_manifest(b / "manifest.toml"))
    btext, w = buggy.simulate(stim, cycles)
    (b / "buggy.vcd").write_text(btext)
    sig, t = first_mismatch(w, golden, [f"toy_top.{s}" for s in TOY_OBSERVE])
    pc = w.value_at("toy_top.commit_pc_o", t).hex()
    insn = w.value_at("toy_top.commit_insn_o", t).hex()
    report = TestReport(
        instruction=f"insn {insn}",
        pc=pc,
        signal=sig,
        cycle=t,
        expected=f"{sig} should be {golden.value_at(sig, t).hex()}",
    )
    dump_json(b / "report.json", report.to_json())
    path = build_exec_path(buggy.blocks, sig, t, w, buggy.replay_coverage())
    rec = RecordingBackend(PolicyBackend(golden))
    run_localization(path, report, rec, w, Budget(), buggy.source_of_block)
    dump_json(b / "decisions.json", rec.entries)


def main() -> None:
    build_jump_demo()
    build_toycore()


if __name__ == "__main__":
    main()
