"""Core trace types and the canonical on-disk trace format.

A trace is an ordered sequence of (arrival time, packet size) pairs.
Timestamps are stored as integer nanoseconds since the trace start to keep
long captures exact; they are converted to float seconds only where
formulas need them.  Inter-arrival times (IATs) are derived from the
nanosecond differences, so ``iats[i] == arrival[i+1] - arrival[i]`` holds
exactly.

Canonical file format: CSV with header ``arrival_time_ns,size_bytes``, one
packet per row, UTF-8, LF line endings.  An optional sidecar ``<name>.meta``
holds ``key=value`` lines (``label=``, ``scenario=``).  Datasets are laid
out as ``traces/<label>/<trace_id>.csv``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterator, Optional, Sequence

import numpy as np

NS_PER_S = 1_000_000_000

TRACE_CSV_HEADER = "arrival_time_ns,size_bytes"


class TraceError(ValueError):
    """Raised for malformed or inconsistent trace data."""


class Scenario(Enum):
    LOCAL_HOST = "localhost"
    LAN = "lan"
    REMOTE = "remote"
    VPN = "vpn"
    UNKNOWN = "unknown"

    @classmethod
    def parse(cls, text: str) -> "Scenario":
        text = text.strip().lower()
        for member in cls:
            if member.value == text:
                return member
        raise TraceError(f"unknown scenario {text!r}")


@dataclass(frozen=True)
class PacketRecord:
    """One observed packet: arrival offset (ns since trace start) and size."""

    arrival_ns: int
    size_bytes: int

    @property
    def arrival_time(self) -> float:
        """Arrival offset in seconds."""
        return self.arrival_ns / NS_PER_S


@dataclass(frozen=True)
class ModelLabel:
    """Identity of a traffic-generating model; ``name`` is family+variant."""

    family: str
    variant: str
    class_index: int

    @property
    def name(self) -> str:
        return f"{self.family}{self.variant}"


@dataclass(frozen=True)
class CleanTrace:
    """A validated packet trace.

    ``times_ns`` and ``sizes`` are parallel int64 arrays; ``records`` is a
    convenience view materializing :class:`PacketRecord` objects.  Instances
    are immutable after construction and safe to share across threads.
    """

    times_ns: np.ndarray
    sizes: np.ndarray
    label: Optional[ModelLabel] = None
    scenario: Scenario = Scenario.UNKNOWN

    def __post_init__(self):
        t = np.ascontiguousarray(np.asarray(self.times_ns, dtype=np.int64))
        s = np.ascontiguousarray(np.asarray(self.sizes, dtype=np.int64))
        if t.shape != s.shape or t.ndim != 1:
            raise TraceError("times_ns and sizes must be 1-d arrays of equal length")
        t.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "times_ns", t)
        object.__setattr__(self, "sizes", s)

    @classmethod
    def from_records(
        cls,
        records: Sequence[PacketRecord],
        label: Optional[ModelLabel] = None,
        scenario: Scenario = Scenario.UNKNOWN,
    ) -> "CleanTrace":
        times = np.array([r.arrival_ns for r in records], dtype=np.int64)
        sizes = np.array([r.size_bytes for r in records], dtype=np.int64)
        return cls(times, sizes, label, scenario)

    def __len__(self) -> int:
        return int(self.times_ns.shape[0])

    @property
    def records(self) -> list[PacketRecord]:
        return [PacketRecord(int(t), int(s)) for t, s in zip(self.times_ns, self.sizes)]

    @property
    def iats(self) -> np.ndarray:
        """Inter-arrival times in seconds, length ``len(self) - 1``."""
        out = np.diff(self.times_ns) / NS_PER_S
        out.setflags(write=False)
        return out

    @property
    def duration(self) -> float:
        if len(self) == 0:
            return 0.0
        return float(self.times_ns[-1] - self.times_ns[0]) / NS_PER_S


# Outlier rule shared by clean() and validate_trace(): an IAT is an outlier
# when it exceeds max(100 x median IAT, p99.9 of all IATs).
OUTLIER_MEDIAN_FACTOR = 100.0
OUTLIER_PERCENTILE = 99.9


def outlier_threshold(iats: np.ndarray) -> float:
    """Threshold above which an IAT counts as an outlier gap."""
    if iats.size == 0:
        return math.inf
    med = float(np.median(iats))
    p = float(np.percentile(iats, OUTLIER_PERCENTILE))
    return max(OUTLIER_MEDIAN_FACTOR * med, p)


def validate_trace(trace: CleanTrace) -> list[str]:
    """Return a list of invariant violations (empty when the trace is valid).

    Diagnostic only: never raises, never mutates.
    """
    violations: list[str] = []
    t = trace.times_ns
    s = trace.sizes
    if t.size:
        if int(t[0]) < 0:
            violations.append("negative arrival time")
        if np.any(np.diff(t) < 0):
            violations.append("records not sorted")
    if np.any(s < 1):
        bad = int(np.argmax(s < 1))
        violations.append(f"non-positive size at index {bad}")
    iats = np.diff(t) / NS_PER_S
    if iats.size:
        finite = np.isfinite(iats)
        if not finite.all():
            bad = int(np.argmax(~finite))
            violations.append(f"non-finite iat at index {bad}")
        else:
            if np.any(iats < 0):
                violations.append("records not sorted")
            else:
                thr = outlier_threshold(iats)
                if np.any(iats > thr):
                    bad = int(np.argmax(iats > thr))
                    violations.append(f"outlier iat at index {bad}")
    return violations


# ---------------------------------------------------------------------------
# Canonical CSV serialization


def write_trace_csv(trace: CleanTrace, path: Path | str, sidecar: bool = True) -> None:
    """Write the canonical CSV (and metadata sidecar when labeled)."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(TRACE_CSV_HEADER + "\n")
        for t, s in zip(trace.times_ns.tolist(), trace.sizes.tolist()):
            fh.write(f"{t},{s}\n")
    if sidecar and (trace.label is not None or trace.scenario is not Scenario.UNKNOWN):
        write_sidecar(trace, sidecar_path(path))


def sidecar_path(csv_path: Path | str) -> Path:
    return Path(csv_path).with_suffix(".meta")


def write_sidecar(trace: CleanTrace, path: Path | str) -> None:
    lines = []
    if trace.label is not None:
        lines.append(f"label={trace.label.name}")
        lines.append(f"family={trace.label.family}")
        lines.append(f"variant={trace.label.variant}")
        lines.append(f"class_index={trace.label.class_index}")
    lines.append(f"scenario={trace.scenario.value}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_sidecar(path: Path | str) -> tuple[Optional[ModelLabel], Scenario]:
    meta: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise TraceError(f"{path}: malformed metadata line {lineno}")
        key, value = line.split("=", 1)
        meta[key.strip()] = value.strip()
    label = None
    if "label" in meta:
        family = meta.get("family", meta["label"])
        variant = meta.get("variant", "")
        class_index = int(meta.get("class_index", -1))
        label = ModelLabel(family, variant, class_index)
    scenario = Scenario.parse(meta["scenario"]) if "scenario" in meta else Scenario.UNKNOWN
    return label, scenario


def load_trace(path: Path | str) -> CleanTrace:
    """Load a canonical (already clean) trace CSV plus optional sidecar."""
    path = Path(path)
    times, sizes = _read_csv_arrays(path)
    label, scenario = (None, Scenario.UNKNOWN)
    sc = sidecar_path(path)
    if sc.exists():
        label, scenario = read_sidecar(sc)
    trace = CleanTrace(times, sizes, label, scenario)
    return trace


def _read_csv_arrays(path: Path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != TRACE_CSV_HEADER:
            raise TraceError(f"{path}: expected header {TRACE_CSV_HEADER!r}, got {header!r}")
        times: list[int] = []
        sizes: list[int] = []
        for lineno, line in enumerate(fh, 2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise TraceError(f"{path}: malformed row at line {lineno}")
            try:
                times.append(int(parts[0]))
                sizes.append(int(parts[1]))
            except ValueError:
                raise TraceError(f"{path}: malformed row at line {lineno}") from None
    if not times:
        raise TraceError(f"{path}: no packets")
    return np.array(times, dtype=np.int64), np.array(sizes, dtype=np.int64)


# ---------------------------------------------------------------------------
# Dataset directory layout: traces/<label>/<trace_id>.csv


def dataset_trace_paths(root: Path | str) -> Iterator[tuple[str, Path]]:
    """Yield (label_name, csv_path) pairs in deterministic sorted order."""
    root = Path(root)
    if not root.is_dir():
        raise TraceError(f"{root}: not a dataset directory")
    for label_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        for csv_path in sorted(label_dir.glob("*.csv")):
            yield label_dir.name, csv_path


def save_dataset(traces: Sequence[CleanTrace], root: Path | str, trace_id: str = "trace") -> list[Path]:
    """Write traces under ``root/<label>/<trace_id>.csv``; returns paths."""
    root = Path(root)
    paths = []
    for trace in traces:
        if trace.label is None:
            raise TraceError("dataset traces must be labeled")
        d = root / trace.label.name
        d.mkdir(parents=True, exist_ok=True)
        p = d / f"{trace_id}.csv"
        write_trace_csv(trace, p)
        paths.append(p)
    return paths
