"""Report sinks.

A sink receives a finished :class:`~gpboard.harness.Report` and serializes it
to a text stream. ``emit(report, fmt, stream)`` picks the sink by format name.
"""
from __future__ import annotations

import csv
import json
import sys
from typing import TYPE_CHECKING, Any, Dict, List, Optional, Protocol, TextIO

if TYPE_CHECKING:  # pragma: no cover - typing only
    from rich.console import Console as _Console

    from ..harness import CheckRecord, Report
else:  # runtime optional import
    try:  # noqa: SIM105
        from rich.console import Console as _Console  # type: ignore
    except Exception:  # noqa: BLE001
        _Console = None  # type: ignore

FORMATS = ("json", "csv", "text")

CSV_HEADER = ["check", "pass", "items", "failed", "worst", "runtime_ms", "error", "params"]


class ReportSink(Protocol):  # pragma: no cover - simple protocol
    def emit(self, report: "Report") -> None: ...  # noqa: D401,E701 - protocol stub
    def close(self) -> None: ...


class JsonSink:
    """Indented JSON; field order follows ``Report.to_dict``."""

    def __init__(self, stream: TextIO) -> None:
        self._fh = stream

    def emit(self, report: "Report") -> None:
        self._fh.write(json.dumps(report.to_dict(), indent=2) + "\n")
        self._fh.flush()

    def close(self) -> None:  # pragma: no cover - trivial
        pass


def _worst(record: "CheckRecord") -> Optional[float]:
    values: List[float] = []
    for item in record.residuals:
        value = item.get("relative", item.get("value"))
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            values.append(float(value))
    return max(values) if values else None


def record_row(record: "CheckRecord") -> List[Any]:
    worst = _worst(record)
    return [
        record.check,
        "true" if record.passed else "false",
        len(record.residuals),
        len(record.failed_items()),
        "" if worst is None else repr(worst),
        f"{record.runtime_ms:.3f}",
        record.error or "",
        json.dumps(record.params, sort_keys=True),
    ]


class CsvSink:
    """One row per check record plus a header."""

    def __init__(self, stream: TextIO) -> None:
        self._writer = csv.writer(stream, lineterminator="\n")
        self._fh = stream

    def emit(self, report: "Report") -> None:
        self._writer.writerow(CSV_HEADER)
        for record in report.records:
            self._writer.writerow(record_row(record))
        self._fh.flush()

    def close(self) -> None:  # pragma: no cover - trivial
        pass


class TextSink:
    """Human-readable summary; colorized when a rich console is supplied."""

    def __init__(self, stream: TextIO, console: Optional["_Console"] = None) -> None:
        self._fh = stream
        self._console = console

    def _line(self, text: str, style: str) -> None:
        if self._console is not None:
            self._console.print(text, style=style, highlight=False)
        else:
            self._fh.write(text + "\n")

    def emit(self, report: "Report") -> None:
        for record in report.records:
            status = "PASS" if record.passed else "FAIL"
            line = (
                f"{status}  {record.check:<11} {len(record.residuals):4d} items"
                f"  {record.runtime_ms:9.1f} ms"
            )
            self._line(line, "green" if record.passed else "bold red")
            if record.error:
                self._line(f"      error: {record.error}", "red")
            for item in record.failed_items()[:5]:
                self._line(f"      failed: {_describe(item)}", "yellow")
        summary: Dict[str, Any] = report.summary()
        verdict = "PASS" if report.passed else "FAIL"
        self._line(
            f"{verdict}: {summary['passed']}/{summary['checks']} checks passed",
            "bold green" if report.passed else "bold red",
        )
        self._fh.flush()

    def close(self) -> None:  # pragma: no cover - trivial
        pass


def _describe(item: Dict[str, Any]) -> str:
    name = item.get("item", "?")
    if "relative" in item:
        return f"{name} relative={item['relative']:.3e} tol={item['tolerance']:.1e}"
    if "limit" in item:
        return f"{name} value={item['value']!r} limit={item['limit']!r}"
    return f"{name} value={item.get('value')!r} expected={item.get('expected')!r}"


def make_sink(fmt: str, stream: TextIO, console: Optional["_Console"] = None) -> ReportSink:
    if fmt == "json":
        return JsonSink(stream)
    if fmt == "csv":
        return CsvSink(stream)
    if fmt == "text":
        return TextSink(stream, console)
    raise ValueError(f"unknown report format {fmt!r}; choose from {list(FORMATS)}")


def emit(
    report: "Report",
    fmt: str = "json",
    stream: Optional[TextIO] = None,
    console: Optional["_Console"] = None,
) -> None:
    sink = make_sink(fmt, stream if stream is not None else sys.stdout, console)
    try:
        sink.emit(report)
    finally:
        sink.close()


__all__ = [
    "FORMATS",
    "CSV_HEADER",
    "ReportSink",
    "JsonSink",
    "CsvSink",
    "TextSink",
    "record_row",
    "make_sink",
    "emit",
]
