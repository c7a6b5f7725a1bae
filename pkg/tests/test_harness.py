import csv
import io
import json

import pytest

from gpboard import harness
from gpboard.config import RunConfig
from gpboard.harness import CheckRecord, Report, run_check, run_suite
from gpboard.sinks import CSV_HEADER, emit, make_sink


def _quick_config(**changes):
    cfg = RunConfig(checks=["golden", "enumerate", "theta", "ledger"], k_max=2, r_max=3)
    cfg.theta_samples = 10
    cfg.theta_r_max = 4
    for key, value in changes.items():
        setattr(cfg, key, value)
    return cfg


def _strip_runtime(obj):
    if isinstance(obj, dict):
        return {k: _strip_runtime(v) for k, v in obj.items() if k != "runtime_ms"}
    if isinstance(obj, list):
        return [_strip_runtime(v) for v in obj]
    return obj


def test_empty_report_passes():
    report = Report([])
    assert report.passed
    assert report.summary() == {"checks": 0, "passed": 0, "failed": [], "runtime_ms": 0}
    assert report.to_dict()["tool"] == "gpboard"


def test_symbolic_checks_pass():
    report = run_suite(_quick_config())
    assert [r.check for r in report.records] == ["golden", "enumerate", "theta", "ledger"]
    for record in report.records:
        assert record.passed, (record.check, record.error, record.failed_items())
    assert report.passed


def test_enumerate_items_carry_class_counts():
    record = run_check("enumerate", _quick_config())
    small = [item for item in record.residuals if item["item"] == "k=1,r=3"]
    assert small[0]["value"] == [5, 6]
    classes = [item for item in record.residuals if item["item"] == "classes"]
    assert len(classes) == 2 * 3
    assert all(item["oracle_mismatches"] == 0 for item in classes)


def test_failing_item_fails_record(monkeypatch):
    def broken(cfg):
        return {}, [{"item": "x", "value": 1.0, "limit": 0.5, "pass": False}]

    monkeypatch.setitem(harness.CHECKS, "golden", broken)
    record = run_check("golden", RunConfig())
    assert not record.passed
    assert record.error is None
    assert len(record.failed_items()) == 1


def test_exception_is_recorded_and_suite_continues(monkeypatch):
    def explode(cfg):
        raise RuntimeError("boom")

    monkeypatch.setitem(harness.CHECKS, "golden", explode)
    report = run_suite(_quick_config(checks=["golden", "ledger"]))
    first, second = report.records
    assert first.error == "RuntimeError: boom"
    assert not first.passed
    assert second.passed
    assert report.summary()["failed"] == ["golden"]
    assert not report.passed


def test_suite_is_deterministic_and_worker_independent():
    one = run_suite(_quick_config())
    two = run_suite(_quick_config(workers=3))
    assert _strip_runtime(one.to_dict()) == _strip_runtime(two.to_dict())


def test_json_report_round_trips_byte_identical():
    report = run_suite(_quick_config(checks=["golden", "ledger"]))
    buf = io.StringIO()
    emit(report, "json", buf)
    text = buf.getvalue()
    again = io.StringIO()
    emit(Report.from_dict(json.loads(text)), "json", again)
    assert again.getvalue() == text


def test_csv_sink_rows():
    report = Report(
        [
            CheckRecord("golden", {"a": 1}, [{"item": "x", "relative": 1e-3, "pass": True}], 1.5),
            CheckRecord("ledger", error="ValueError: bad"),
        ]
    )
    buf = io.StringIO()
    emit(report, "csv", buf)
    rows = list(csv.reader(io.StringIO(buf.getvalue())))
    assert rows[0] == CSV_HEADER
    assert rows[1][:5] == ["golden", "true", "1", "0", "0.001"]
    assert rows[1][-1] == '{"a": 1}'
    assert rows[2][1] == "false" and rows[2][6] == "ValueError: bad"


def test_text_sink_summary_line():
    report = Report([CheckRecord("golden", {}, [{"item": "x", "pass": True}], 2.0)])
    buf = io.StringIO()
    emit(report, "text", buf)
    lines = buf.getvalue().splitlines()
    assert lines[0].startswith("PASS  golden")
    assert lines[-1] == "PASS: 1/1 checks passed"
    with pytest.raises(ValueError):
        make_sink("xml", buf)
