from __future__ import annotations

import json
from pathlib import Path

import pytest

from rtlfl.harness.manifest import load_manifest
from rtlfl.harness.project import Project, load_stimulus
from rtlfl.waveform import load_vcd

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"
JUMP = FIXTURES / "jump_demo"
TOY = FIXTURES / "toycore"
CORPUS = FIXTURES / "corpus"


def corpus_files() -> list[Path]:
    return sorted(CORPUS.glob("*.sv"))


def corpus_project(path: Path) -> Project:
    return Project.from_files({path.name: path.read_text()}, path.stem)


@pytest.fixture(scope="session")
def jump_project() -> Project:
    return Project.from_manifest(load_manifest(JUMP / "manifest.toml"))


@pytest.fixture(scope="session")
def jump_wave():
    return load_vcd(JUMP / "buggy.vcd", "top.clk")


@pytest.fixture(scope="session")
def jump_stall_wave():
    return load_vcd(JUMP / "stall.vcd", "top.clk")


@pytest.fixture(scope="session")
def jump_golden():
    return load_vcd(JUMP / "golden.vcd", "top.clk")


@pytest.fixture(scope="session")
def toy_manifest():
    return load_manifest(TOY / "manifest.toml")


@pytest.fixture(scope="session")
def toy_project(toy_manifest) -> Project:
    return Project.from_manifest(toy_manifest)


@pytest.fixture(scope="session")
def toy_golden():
    return load_vcd(TOY / "golden.vcd", "toy_top.clk")


@pytest.fixture(scope="session")
def toy_stimulus():
    return load_stimulus(TOY / "stimulus.json")


@pytest.fixture(scope="session")
def jump_report() -> dict:
    return json.loads((JUMP / "report.json").read_text())
