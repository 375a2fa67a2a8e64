"""Glue shared by the CLI and the benchmark: load, elaborate, blockize, simulate."""

from __future__ import annotations

import io
import json
from dataclasses import dataclass
from pathlib import Path

from rtlfl.blocks import BlockSet, block_source, blockize
from rtlfl.coverage import CoverageSource
from rtlfl.errors import ManifestError
from rtlfl.hdl import DesignHierarchy, SourceUnit, elaborate, parse_sources
from rtlfl.harness.manifest import ProjectManifest
from rtlfl.sim import Simulator
from rtlfl.waveform import Waveform, loads_vcd


@dataclass
class Project:
    files: dict[str, str]
    design: DesignHierarchy
    blocks: BlockSet
    clock: str

    @classmethod
    def from_files(cls, files: dict[str, str], top: str, clock: str = "clk") -> Project:
        ast = parse_sources([SourceUnit(n, t) for n, t in files.items()])
        design = elaborate(ast, top)
        return cls(dict(files), design, blockize(design), clock)

    @classmethod
    def from_manifest(cls, m: ProjectManifest) -> Project:
        return cls.from_files(dict(m.read_sources()), m.top, m.clock)

    @property
    def lsbs(self) -> dict[str, int]:
        return {n: s.lsb for n, s in self.design.signals.items() if s.lsb}

    def hier(self, name: str) -> str:
        """Accept ``top.x`` or a bare top-level name."""
        return name if "." in name else f"{self.design.top}.{name}"

    @property
    def clock_signal(self) -> str:
        return self.hier(self.clock)

    def replay_coverage(self) -> CoverageSource:
        return CoverageSource.replay(self.lsbs)

    def source_of_block(self, block_id: str) -> str:
        return block_source(self.blocks.block(block_id), self.files)

    def simulate(self, stimulus: dict[str, list[int]], cycles: int) -> tuple[str, Waveform]:
        """Run the bundled simulator and return the VCD text and its parsed waveform."""
        sim = Simulator(self.design, self.clock_signal)
        buf = io.StringIO()
        sim.run({self.hier(k): v for k, v in stimulus.items()}, cycles, buf)
        text = buf.getvalue()
        return text, loads_vcd(text, self.clock_signal)


def load_stimulus(path) -> tuple[dict[str, list[int]], int]:
    """Stimulus file: ``{"cycles": N, "inputs": {name: [value per cycle]}}``."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        inputs = {str(k): [None if v is None else int(v) for v in seq] for k, seq in data["inputs"].items()}
        return inputs, int(data["cycles"])
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ManifestError(f"bad stimulus file {path}: {exc}") from exc
