import numpy as np
import pytest

from trfp.trace_model import (
    CleanTrace,
    ModelLabel,
    PacketRecord,
    Scenario,
    TraceError,
    dataset_trace_paths,
    load_trace,
    read_sidecar,
    save_dataset,
    sidecar_path,
    validate_trace,
    write_trace_csv,
)

from conftest import trace_from_seconds


def test_valid_trace_has_no_violations():
    trace = trace_from_seconds([0.0, 0.001, 0.002])
    assert validate_trace(trace) == []


def test_unsorted_records_flagged():
    trace = CleanTrace(np.array([2_000_000, 1_000_000]), np.array([100, 100]))
    assert any("not sorted" in v for v in validate_trace(trace))


def test_nonpositive_size_flagged():
    trace = CleanTrace(np.array([0, 1_000_000]), np.array([100, 0]))
    assert any("size" in v for v in validate_trace(trace))


def test_outlier_iat_flagged():
    times = list(np.arange(1000) * 1_000_000) + [1_000 * 1_000_000 + 60 * 10**9]
    trace = CleanTrace(np.array(times), np.full(len(times), 100))
    assert any("outlier iat" in v for v in validate_trace(trace))


def test_iats_derived_exactly():
    trace = trace_from_seconds([0.0, 0.001, 0.003])
    assert np.allclose(trace.iats, [0.001, 0.002])
    assert len(trace.iats) == len(trace) - 1


def test_equal_timestamps_allowed():
    trace = trace_from_seconds([0.0, 0.0, 0.002])
    assert validate_trace(trace) == []
    assert trace.iats[0] == 0.0


def test_packet_record_seconds():
    assert PacketRecord(1_500_000_000, 64).arrival_time == 1.5


def test_model_label_name():
    assert ModelLabel("gemma", "2:9b", 1).name == "gemma2:9b"
    assert ModelLabel("mistral", ":7b", 2).name == "mistral:7b"


def test_csv_round_trip_byte_identical(tmp_path):
    trace = trace_from_seconds(
        [0.0, 0.0013, 0.0021, 5.5],
        sizes=[60, 1500, 800, 129],
        label=ModelLabel("gemma", "2:2b", 0),
        scenario=Scenario.LAN,
    )
    p1 = tmp_path / "a.csv"
    write_trace_csv(trace, p1)
    raw1 = p1.read_bytes()
    meta1 = sidecar_path(p1).read_bytes()

    loaded = load_trace(p1)
    p2 = tmp_path / "b.csv"
    write_trace_csv(loaded, p2)
    assert p2.read_bytes() == raw1
    assert sidecar_path(p2).read_bytes() == meta1
    assert loaded.label == trace.label
    assert loaded.scenario is Scenario.LAN


def test_load_rejects_bad_header(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("time,size\n0,100\n")
    with pytest.raises(TraceError):
        load_trace(p)


def test_load_rejects_empty(tmp_path):
    p = tmp_path / "empty.csv"
    p.write_text("arrival_time_ns,size_bytes\n")
    with pytest.raises(TraceError, match="no packets"):
        load_trace(p)


def test_sidecar_without_label(tmp_path):
    p = tmp_path / "t.meta"
    p.write_text("scenario=remote\n")
    label, scenario = read_sidecar(p)
    assert label is None
    assert scenario is Scenario.REMOTE


def test_scenario_parse_rejects_unknown():
    with pytest.raises(TraceError):
        Scenario.parse("carrier-pigeon")


def test_dataset_layout(tmp_path):
    traces = [
        trace_from_seconds([0, 0.001, 0.002], label=ModelLabel("gemma", ":2b", 0)),
        trace_from_seconds([0, 0.002, 0.004], label=ModelLabel("phi", ":2.7b", 1)),
    ]
    save_dataset(traces, tmp_path, trace_id="t0")
    found = list(dataset_trace_paths(tmp_path))
    assert [label for label, _ in found] == ["gemma:2b", "phi:2.7b"]
    assert all(p.name == "t0.csv" for _, p in found)


def test_dataset_requires_labels(tmp_path):
    with pytest.raises(TraceError):
        save_dataset([trace_from_seconds([0, 0.001])], tmp_path)
