"""Raw capture ingestion: parse, compute IATs, de-noise.

Turns capture files (canonical CSV or classic pcap) into validated
:class:`~trfp.trace_model.CleanTrace` objects.  Cleaning drops invalid
packets and splices out idle-gap IAT outliers so the surviving IAT series
is exactly the original series minus the flagged entries; nothing is ever
interpolated.
"""

from __future__ import annotations

import ipaddress
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .trace_model import (
    NS_PER_S,
    CleanTrace,
    ModelLabel,
    PacketRecord,
    Scenario,
    TraceError,
    outlier_threshold,
)

log = logging.getLogger(__name__)


class IngestError(TraceError):
    """Raised for unreadable or unusable capture input."""


@dataclass
class CleaningReport:
    """Counts of what clean() did; ``n_input >= `` sum of all drops."""

    n_input: int = 0
    n_dropped_nonpositive_size: int = 0
    n_dropped_nonfinite_time: int = 0
    n_dropped_outlier_iat: int = 0
    n_imputed: int = 0

    def as_text(self) -> str:
        return "".join(f"{k}={v}\n" for k, v in vars(self).items())


def parse_csv_trace(path: Path | str) -> list[PacketRecord]:
    """Parse a canonical CSV into raw records, rebased so t[0] = 0.

    Rows with non-positive sizes parse fine; they are flagged and dropped
    later by :func:`clean`.
    """
    path = Path(path)
    records: list[PacketRecord] = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "arrival_time_ns,size_bytes":
            raise IngestError(f"{path}: expected header 'arrival_time_ns,size_bytes', got {header!r}")
        for lineno, line in enumerate(fh, 2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise IngestError(f"{path}: malformed row at line {lineno}")
            try:
                t = int(parts[0])
                s = int(parts[1])
            except ValueError:
                raise IngestError(f"{path}: malformed row at line {lineno}") from None
            records.append(PacketRecord(t, s))
    if not records:
        raise IngestError(f"{path}: no packets")
    base = records[0].arrival_ns
    if base != 0:
        records = [PacketRecord(r.arrival_ns - base, r.size_bytes) for r in records]
    return records


# ---------------------------------------------------------------------------
# Classic pcap parsing (stdlib struct only; Ethernet link type)

_PCAP_MAGICS = {
    0xA1B2C3D4: ("<", 1_000),  # little-endian, microsecond fraction
    0xD4C3B2A1: (">", 1_000),
    0xA1B23C4D: ("<", 1),  # nanosecond variant
    0x4D3CB2A1: (">", 1),
}
_LINKTYPE_ETHERNET = 1
_ETHERTYPE_IPV4 = 0x0800


def parse_pcap_trace(
    path: Path | str,
    src_filter: Optional[str] = None,
    port_filter: Optional[int] = None,
) -> list[PacketRecord]:
    """Extract (arrival, wire length) records from a classic pcap file.

    Only IPv4 over Ethernet is inspected; when ``src_filter`` is given only
    inbound packets (IP source equal to the filter) are kept, and
    ``port_filter`` keeps TCP/UDP packets with that source or destination
    port.  Timestamps are rebased so the first surviving packet is t = 0.
    """
    path = Path(path)
    data = path.read_bytes()
    if len(data) < 24:
        raise IngestError(f"{path}: unsupported capture format")
    magic_le = struct.unpack("<I", data[:4])[0]
    if magic_le not in _PCAP_MAGICS:
        raise IngestError(f"{path}: unsupported capture format")
    endian, frac_to_ns = _PCAP_MAGICS[magic_le]
    _, _, _, _, _, linktype = struct.unpack(endian + "HHiIII", data[4:24])
    if linktype != _LINKTYPE_ETHERNET:
        raise IngestError(f"{path}: unsupported link type {linktype} (need Ethernet)")

    want_src = int(ipaddress.ip_address(src_filter)) if src_filter else None

    records: list[PacketRecord] = []
    offset = 24
    n = len(data)
    while offset < n:
        if offset + 16 > n:
            raise IngestError(f"{path}: truncated record header at byte {offset}")
        ts_sec, ts_frac, incl_len, orig_len = struct.unpack(endian + "IIII", data[offset : offset + 16])
        offset += 16
        if offset + incl_len > n:
            raise IngestError(f"{path}: truncated packet data at byte {offset}")
        frame = data[offset : offset + incl_len]
        offset += incl_len
        if not _frame_passes(frame, want_src, port_filter):
            continue
        arrival_ns = ts_sec * NS_PER_S + ts_frac * frac_to_ns
        records.append(PacketRecord(arrival_ns, int(orig_len)))

    if records:
        base = records[0].arrival_ns
        records = [PacketRecord(r.arrival_ns - base, r.size_bytes) for r in records]
    return records


def _frame_passes(frame: bytes, want_src: Optional[int], port_filter: Optional[int]) -> bool:
    if len(frame) < 14:
        return False
    ethertype = struct.unpack(">H", frame[12:14])[0]
    if ethertype != _ETHERTYPE_IPV4:
        return False
    ip = frame[14:]
    if len(ip) < 20:
        return False
    ihl = (ip[0] & 0x0F) * 4
    if ihl < 20 or len(ip) < ihl:
        return False
    proto = ip[9]
    src = struct.unpack(">I", ip[12:16])[0]
    if want_src is not None and src != want_src:
        return False
    if port_filter is not None:
        if proto not in (6, 17):  # TCP, UDP
            return False
        l4 = ip[ihl:]
        if len(l4) < 4:
            return False
        sport, dport = struct.unpack(">HH", l4[:4])
        if port_filter not in (sport, dport):
            return False
    return True


# ---------------------------------------------------------------------------


def compute_iats(records: Sequence[PacketRecord]) -> list[float]:
    """Inter-arrival times in seconds; requires time-sorted input."""
    out: list[float] = []
    for prev, cur in zip(records, records[1:]):
        d = cur.arrival_ns - prev.arrival_ns
        if d < 0:
            raise IngestError("records not sorted")
        out.append(d / NS_PER_S)
    return out


def clean(
    records: Sequence[PacketRecord],
    label: Optional[ModelLabel] = None,
    scenario: Scenario = Scenario.UNKNOWN,
) -> tuple[CleanTrace, CleaningReport]:
    """De-noise raw records into a validated trace.

    Drops packets with non-positive size or a non-finite timestamp, then
    repeatedly splices out IAT outliers (gap > max(100 x median, p99.9))
    until none remain, so the result is a fixpoint of clean().  Splicing a
    gap removes the packet that follows it and shifts all later timestamps
    left by the gap, which deletes exactly that entry from the IAT series
    and keeps every other IAT intact.
    """
    report = CleaningReport(n_input=len(records))

    times: list[int] = []
    sizes: list[int] = []
    for r in records:
        t = r.arrival_ns
        if isinstance(t, float) and not np.isfinite(t):
            report.n_dropped_nonfinite_time += 1
            continue
        if r.size_bytes < 1:
            report.n_dropped_nonpositive_size += 1
            continue
        times.append(int(t))
        sizes.append(int(r.size_bytes))

    if len(times) < 2:
        raise IngestError("trace too short to clean")

    t = np.array(times, dtype=np.int64)
    s = np.array(sizes, dtype=np.int64)
    if np.any(np.diff(t) < 0):
        raise IngestError("records not sorted")

    while True:
        gaps = np.diff(t)
        thr_ns = outlier_threshold(gaps / NS_PER_S) * NS_PER_S
        bad = np.nonzero(gaps > thr_ns)[0]
        if bad.size == 0:
            break
        # Splice each flagged gap: drop its trailing packet and close the gap.
        shift = np.zeros(t.size, dtype=np.int64)
        np.add.at(shift, bad + 1, gaps[bad])
        t = t - np.cumsum(shift)
        keep = np.ones(t.size, dtype=bool)
        keep[bad + 1] = False
        t = t[keep]
        s = s[keep]
        report.n_dropped_outlier_iat += int(bad.size)
        if t.size < 2:
            raise IngestError("trace too short to clean")

    t = t - t[0]
    trace = CleanTrace(t, s, label, scenario)
    return trace, report


def ingest_file(
    in_path: Path | str,
    *,
    pcap: bool = False,
    src_filter: Optional[str] = None,
    port_filter: Optional[int] = None,
    label: Optional[ModelLabel] = None,
    scenario: Scenario = Scenario.UNKNOWN,
) -> tuple[CleanTrace, CleaningReport]:
    """Parse + clean one capture file (the `ingest` CLI entry point)."""
    if pcap:
        records = parse_pcap_trace(in_path, src_filter, port_filter)
        if not records:
            raise IngestError(f"{in_path}: no packets")
    else:
        records = parse_csv_trace(in_path)
    trace, report = clean(records, label=label, scenario=scenario)
    log.debug("ingested %s: %d -> %d packets", in_path, report.n_input, len(trace))
    return trace, report
