"""Project manifests (TOML or JSON)."""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from rtlfl.errors import ManifestError

_PATH_KEYS = ("waveform", "report", "coverage", "golden", "stimulus")


@dataclass(frozen=True)
class ProjectManifest:
    sources: tuple[Path, ...]
    top: str
    clock: str = "clk"
    waveform: Path | None = None
    report: Path | None = None
    backend: str | None = None
    coverage: Path | None = None
    golden: Path | None = None
    stimulus: Path | None = None
    cycles: int | None = None
    observe: tuple[str, ...] = ()
    root: Path = field(default=Path("."))

    def with_overrides(self, **changes) -> ProjectManifest:
        return replace(self, **{k: v for k, v in changes.items() if v is not None})

    def require(self, key: str):
        value = getattr(self, key)
        if value is None:
            raise ManifestError(f"manifest does not set {key!r}")
        return value

    def read_sources(self) -> list[tuple[str, str]]:
        """``(display name, text)`` pairs; names are relative to the manifest directory."""
        out = []
        for p in self.sources:
            try:
                name = p.relative_to(self.root).as_posix()
            except ValueError:
                name = p.as_posix()
            out.append((name, p.read_text(encoding="utf-8")))
        return out


def _resolve(root: Path, value: str) -> Path:
    p = Path(value)
    return p if p.is_absolute() else root / p


def manifest_from_dict(data: dict, root: Path) -> ProjectManifest:
    if not isinstance(data, dict):
        raise ManifestError("manifest must be a table")
    for key in ("sources", "top"):
        if key not in data:
            raise ManifestError(f"manifest is missing required key {key!r}")
    sources = data["sources"]
    if not isinstance(sources, list) or not all(isinstance(s, str) for s in sources):
        raise ManifestError("'sources' must be a list of paths")
    paths = tuple(_resolve(root, s) for s in sources)
    for p in paths:
        if not p.is_file():
            raise ManifestError(f"source file not found: {p}")
    kw: dict = {}
    for key in _PATH_KEYS:
        if data.get(key) is not None:
            p = _resolve(root, str(data[key]))
            if not p.exists():
                raise ManifestError(f"{key} file not found: {p}")
            kw[key] = p
    backend = data.get("backend")
    if backend is not None:
        kw["backend"] = str(backend)
    if "cycles" in data:
        kw["cycles"] = int(data["cycles"])
    return ProjectManifest(
        sources=paths,
        top=str(data["top"]),
        clock=str(data.get("clock", "clk")),
        observe=tuple(str(s) for s in data.get("observe", ())),
        root=root,
        **kw,
    )


def load_manifest(path) -> ProjectManifest:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc.strerror}") from exc
    try:
        if path.suffix == ".json":
            data = json.loads(raw)
        else:
            data = tomllib.loads(raw.decode("utf-8"))
    except (ValueError, UnicodeDecodeError) as exc:
        raise ManifestError(f"cannot parse manifest {path}: {exc}") from exc
    return manifest_from_dict(data, path.resolve().parent)
