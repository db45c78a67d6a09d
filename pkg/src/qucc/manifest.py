"""Scan manifests.

A manifest is an INI file. The optional ``[scan]`` section holds the method
matrix; every other section is one geometry::

    [scan]
    methods = fci, qucc
    L = 30, 50
    track_hf = no
    unit = angstrom

    [h6_1.60]
    geometry = 1.60
    fcidump = h6_1.60.fcidump

Relative ``fcidump`` paths are resolved against the manifest's directory.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple, Union

METHODS = ("hf", "mp2", "fci", "ucc", "qucc")
ANGLE_METHODS = ("ucc", "qucc")


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class ScanEntry:
    label: str
    geometry_parameter: float
    fcidump_path: Path
    nuclear_repulsion: Optional[float] = None


@dataclass
class ScanManifest:
    entries: List[ScanEntry]
    methods: List[Tuple[str, List[int]]]
    track_hf: bool = False
    unit: str = "angstrom"
    source: Optional[Path] = None

    def __post_init__(self):
        labels = [e.label for e in self.entries]
        dup = sorted({x for x in labels if labels.count(x) > 1})
        if dup:
            raise ManifestError(f"duplicate labels: {', '.join(dup)}")
        for e in self.entries:
            if not e.fcidump_path.is_file():
                raise ManifestError(f"{e.label}: no such file {e.fcidump_path}")
        for m, ls in self.methods:
            if m not in METHODS:
                raise ManifestError(f"unknown method {m!r}")
            if m in ANGLE_METHODS and not ls:
                raise ManifestError(f"method {m} needs at least one L value")
            if any(x < 0 for x in ls):
                raise ManifestError("L values must be non-negative")

    def rows(self):
        """(entry, method, L) in output order; L is None for angle-free methods."""
        for entry in self.entries:
            for method, ls in self.methods:
                for n_large in (ls if method in ANGLE_METHODS else [None]):
                    yield entry, method, n_large


def _list(text: str) -> List[str]:
    return [t for t in (x.strip() for x in text.replace(",", " ").split()) if t]


def load_manifest(path: Union[str, Path]) -> ScanManifest:
    path = Path(path)
    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ManifestError(f"{path}: {exc}") from exc
    base = path.parent

    scan = parser["scan"] if parser.has_section("scan") else {}
    methods_raw = _list(scan.get("methods", "fci"))
    try:
        ls = [int(x) for x in _list(scan.get("L", ""))]
    except ValueError as exc:
        raise ManifestError(f"{path}: bad L list: {exc}") from exc
    methods = [(m, ls if m in ANGLE_METHODS else []) for m in methods_raw]
    track = parser.getboolean("scan", "track_hf", fallback=False) if scan else False

    entries = []
    for label in parser.sections():
        if label == "scan":
            continue
        sec = parser[label]
        if "fcidump" not in sec or "geometry" not in sec:
            raise ManifestError(f"{path}: section [{label}] needs 'geometry' and 'fcidump'")
        try:
            geom = float(sec["geometry"])
            enuc = float(sec["nuclear_repulsion"]) if "nuclear_repulsion" in sec else None
        except ValueError as exc:
            raise ManifestError(f"{path}: [{label}]: {exc}") from exc
        entries.append(ScanEntry(label, geom, (base / sec["fcidump"]).resolve(), enuc))
    return ScanManifest(entries, methods, track, scan.get("unit", "angstrom"), path)
