import json
import os
import subprocess
import sys

import pytest

try:
    import jsonschema  # type: ignore
except Exception:  # pragma: no cover
    jsonschema = None

SCHEMA = os.path.join(os.path.dirname(os.path.dirname(__file__)), "schemas", "report.schema.json")


def _validator():
    if jsonschema is None:
        pytest.skip("jsonschema not installed")
    with open(SCHEMA, "r", encoding="utf-8") as fh:
        return jsonschema.Draft202012Validator(json.load(fh))  # type: ignore


def test_suite_report_validates(tmp_path):
    validator = _validator()
    out = tmp_path / "report.json"
    proc = subprocess.run(
        [
            sys.executable,
            "-m",
            "gpboard.cli",
            "suite",
            "--check",
            "golden",
            "--check",
            "ledger",
            "--check",
            "trace",
            "--format",
            "json",
            "--out",
            str(out),
        ],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    validator.validate(json.loads(out.read_text(encoding="utf-8")))


def test_schema_rejects_unknown_check():
    validator = _validator()
    bad = {
        "tool": "gpboard",
        "version": "0.1.0",
        "records": [
            {
                "check": "bogus",
                "params": {},
                "residuals": [],
                "pass": True,
                "runtime_ms": 0.0,
                "error": None,
            }
        ],
        "summary": {"checks": 1, "passed": 1, "failed": [], "runtime_ms": 0.0},
        "pass": True,
    }
    assert not validator.is_valid(bad)
    bad["records"][0]["check"] = "golden"
    assert validator.is_valid(bad)
