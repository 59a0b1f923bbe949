import math
import struct

import numpy as np
import pytest

from trfp.ingest import (
    CleaningReport,
    IngestError,
    clean,
    compute_iats,
    ingest_file,
    parse_csv_trace,
    parse_pcap_trace,
)
from trfp.trace_model import PacketRecord, validate_trace


def write_csv(path, rows):
    path.write_text("arrival_time_ns,size_bytes\n" + "".join(f"{t},{s}\n" for t, s in rows))


class TestParseCsv:
    def test_two_rows(self, tmp_path):
        p = tmp_path / "t.csv"
        write_csv(p, [(0, 100), (1_000_000, 200)])
        records = parse_csv_trace(p)
        assert [(r.arrival_time, r.size_bytes) for r in records] == [(0.0, 100), (0.001, 200)]

    def test_rebased_to_zero(self, tmp_path):
        p = tmp_path / "t.csv"
        write_csv(p, [(5_000, 100), (6_000, 100)])
        records = parse_csv_trace(p)
        assert records[0].arrival_ns == 0
        assert records[1].arrival_ns == 1_000

    def test_header_only_errors(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text("arrival_time_ns,size_bytes\n")
        with pytest.raises(IngestError, match="no packets"):
            parse_csv_trace(p)

    def test_zero_size_parses(self, tmp_path):
        p = tmp_path / "t.csv"
        write_csv(p, [(0, 0), (1_000, 100)])
        records = parse_csv_trace(p)
        assert records[0].size_bytes == 0  # dropped later by clean()

    def test_malformed_row_names_line(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text("arrival_time_ns,size_bytes\n0,100\nnot-a-number,1\n")
        with pytest.raises(IngestError, match="line 3"):
            parse_csv_trace(p)


# ---------------------------------------------------------------------------
# pcap fixtures built byte-by-byte


def eth_ipv4_udp(src_ip, dst_ip, sport, dport, payload=b"x" * 20):
    eth = b"\x00" * 12 + struct.pack(">H", 0x0800)
    udp = struct.pack(">HHHH", sport, dport, 8 + len(payload), 0) + payload
    total = 20 + len(udp)
    ip = struct.pack(
        ">BBHHHBBH4s4s",
        0x45, 0, total, 1, 0, 64, 17, 0,
        bytes(int(x) for x in src_ip.split(".")),
        bytes(int(x) for x in dst_ip.split(".")),
    )
    return eth + ip + udp


def make_pcap(frames, magic=0xA1B2C3D4, ts_scale=1_000_000):
    out = struct.pack("<IHHiIII", magic, 2, 4, 0, 0, 65535, 1)
    for ts, frame in frames:
        sec = int(ts)
        frac = int(round((ts - sec) * ts_scale))
        out += struct.pack("<IIII", sec, frac, len(frame), len(frame)) + frame
    return out


class TestParsePcap:
    def test_src_filter_keeps_inbound(self, tmp_path):
        frames = [(i * 0.001, eth_ipv4_udp("10.0.0.2", "10.0.0.1", 11434, 5000)) for i in range(3)]
        p = tmp_path / "t.pcap"
        p.write_bytes(make_pcap(frames))
        assert len(parse_pcap_trace(p, src_filter="10.0.0.2")) == 3
        assert parse_pcap_trace(p, src_filter="10.0.0.9") == []

    def test_port_filter(self, tmp_path):
        frames = [
            (0.0, eth_ipv4_udp("10.0.0.2", "10.0.0.1", 11434, 5000)),
            (0.001, eth_ipv4_udp("10.0.0.2", "10.0.0.1", 9999, 5001)),
        ]
        p = tmp_path / "t.pcap"
        p.write_bytes(make_pcap(frames))
        assert len(parse_pcap_trace(p, port_filter=11434)) == 1

    def test_wire_length_used(self, tmp_path):
        frame = eth_ipv4_udp("10.0.0.2", "10.0.0.1", 1, 2)
        p = tmp_path / "t.pcap"
        p.write_bytes(make_pcap([(0.0, frame)]))
        records = parse_pcap_trace(p)
        assert records[0].size_bytes == len(frame)

    def test_nanosecond_magic(self, tmp_path):
        frames = [(0.0, eth_ipv4_udp("1.2.3.4", "5.6.7.8", 1, 2)),
                  (0.5, eth_ipv4_udp("1.2.3.4", "5.6.7.8", 1, 2))]
        p = tmp_path / "t.pcap"
        p.write_bytes(make_pcap(frames, magic=0xA1B23C4D, ts_scale=1_000_000_000))
        records = parse_pcap_trace(p)
        assert records[1].arrival_ns == 500_000_000

    def test_pcapng_rejected(self, tmp_path):
        p = tmp_path / "t.pcapng"
        p.write_bytes(struct.pack("<I", 0x0A0D0D0A) + b"\x00" * 40)
        with pytest.raises(IngestError, match="unsupported capture format"):
            parse_pcap_trace(p)

    def test_truncated_record_names_offset(self, tmp_path):
        data = make_pcap([(0.0, eth_ipv4_udp("1.2.3.4", "5.6.7.8", 1, 2))])
        p = tmp_path / "t.pcap"
        p.write_bytes(data[:-10])
        with pytest.raises(IngestError, match="byte"):
            parse_pcap_trace(p)


class TestComputeIats:
    def test_basic(self):
        records = [PacketRecord(0, 1), PacketRecord(1_000_000, 1), PacketRecord(3_000_000, 1)]
        assert compute_iats(records) == [0.001, 0.002]

    def test_single_packet(self):
        assert compute_iats([PacketRecord(0, 1)]) == []

    def test_coalesced(self):
        records = [PacketRecord(0, 1), PacketRecord(0, 1), PacketRecord(2_000_000, 1)]
        assert compute_iats(records) == [0.0, 0.002]

    def test_unsorted_errors(self):
        with pytest.raises(IngestError, match="not sorted"):
            compute_iats([PacketRecord(1_000, 1), PacketRecord(0, 1)])


class TestClean:
    def test_nan_timestamp_dropped(self):
        records = [PacketRecord(i * 1_000_000, 100) for i in range(100)]
        records[50] = PacketRecord(float("nan"), 100)
        trace, report = clean(records)
        assert len(trace) == 99
        assert report.n_dropped_nonfinite_time == 1
        assert validate_trace(trace) == []

    def test_zero_size_dropped(self):
        records = [PacketRecord(i * 1_000_000, 100 if i != 3 else 0) for i in range(10)]
        trace, report = clean(records)
        assert len(trace) == 9
        assert report.n_dropped_nonpositive_size == 1

    def test_idle_gap_dropped_exactly_once(self):
        # 1000 IATs of 1 ms plus a single 60 s gap: the percentile rule must
        # flag exactly that one gap and leave every other IAT untouched.
        times = [i * 1_000_000 for i in range(501)]
        offset = times[-1] + 60 * 10**9
        times += [offset + i * 1_000_000 for i in range(501)]
        records = [PacketRecord(t, 100) for t in times]
        assert len(records) == 1002 and len(records) - 1 == 1001

        trace, report = clean(records)
        assert report.n_dropped_outlier_iat == 1
        assert len(trace) == 1001
        iats = trace.iats
        assert np.allclose(iats, 0.001)
        assert validate_trace(trace) == []

    def test_already_clean_identity(self):
        records = [PacketRecord(i * 1_000_000, 100 + i) for i in range(50)]
        trace, report = clean(records)
        assert len(trace) == 50
        assert np.array_equal(trace.times_ns, [r.arrival_ns for r in records])
        assert np.array_equal(trace.sizes, [r.size_bytes for r in records])
        assert report.n_dropped_nonpositive_size == 0
        assert report.n_dropped_outlier_iat == 0
        assert report.n_imputed == 0
        assert report.n_input == 50

    def test_idempotent(self):
        rng = np.random.default_rng(7)
        times = np.cumsum(rng.integers(100_000, 5_000_000, size=400))
        times[100:] += 3 * 10**10
        times[300:] += 10**11
        records = [PacketRecord(int(t), 100) for t in times]
        trace1, _ = clean(records)
        trace2, report2 = clean(trace1.records)
        assert np.array_equal(trace1.times_ns, trace2.times_ns)
        assert report2.n_dropped_outlier_iat == 0

    def test_surviving_order_preserved(self):
        records = [PacketRecord(i * 1_000_000, 100 + i) for i in range(100)]
        trace, _ = clean(records)
        assert np.all(np.diff(trace.sizes) == 1)

    def test_too_short_errors(self):
        with pytest.raises(IngestError, match="too short"):
            clean([PacketRecord(0, 100)])

    def test_report_invariant(self):
        records = [PacketRecord(i * 1_000_000, 100) for i in range(20)]
        records[3] = PacketRecord(3_000_000, 0)
        _, report = clean(records)
        drops = (
            report.n_dropped_nonpositive_size
            + report.n_dropped_nonfinite_time
            + report.n_dropped_outlier_iat
        )
        assert report.n_input >= drops

    def test_report_text(self):
        text = CleaningReport(n_input=5).as_text()
        assert "n_input=5" in text


def test_ingest_file_csv(tmp_path):
    p = tmp_path / "t.csv"
    write_csv(p, [(i * 1_000_000, 100) for i in range(10)])
    trace, report = ingest_file(p)
    assert len(trace) == 10
    assert report.n_input == 10
