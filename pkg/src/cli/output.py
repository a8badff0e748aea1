"""Data files are a pure function of (config, seed); wall-clock data goes to the sidecar or stderr."""

import io
import json
import math
import sys
from pathlib import Path
from typing import Any

import pandas as pd

from src.cli.types import ExperimentConfig, ExperimentResult, OutputFormat

VERSION = "0.1.0"
FLOAT_FORMAT = "%.12g"


def _json_value(value: Any) -> Any:
    if isinstance(value, float):
        if math.isnan(value):
            return None
        return float(FLOAT_FORMAT % value)
    if hasattr(value, "item"):
        return _json_value(value.item())
    return value


def render(table: pd.DataFrame, config: ExperimentConfig) -> str:
    match config.format:
        case OutputFormat.CSV:
            buffer = io.StringIO()
            table.to_csv(buffer, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
            return buffer.getvalue()
        case OutputFormat.JSON:
            rows = [{k: _json_value(v) for k, v in row.items()} for row in table.to_dict(orient="records")]
            payload = {"metadata": {"version": VERSION, "config": config.resolved()}, "rows": rows}
            return json.dumps(payload, indent=2) + "\n"
    raise ValueError(f"unsupported format {config.format}")


def meta_path(out: Path) -> Path:
    return out.with_name(out.name + ".meta.json")


def metadata(result: ExperimentResult, config: ExperimentConfig, runtime: float) -> dict[str, Any]:
    return {
        "version": VERSION,
        "config": config.resolved(),
        "seed": config.seed,
        "runtime_seconds": runtime,
        "passed": result.passed,
        "checks": result.checks,
    }


def write_result(result: ExperimentResult, config: ExperimentConfig, runtime: float) -> None:
    """Write the data file and its metadata sidecar.

    Without --out the data goes to stdout and the metadata, as one JSON line, to stderr.
    """

    text = render(result.table, config)
    meta = metadata(result, config, runtime)
    if config.out is None:
        sys.stdout.write(text)
        sys.stderr.write(json.dumps(meta) + "\n")
        return
    config.out.parent.mkdir(parents=True, exist_ok=True)
    config.out.write_text(text, encoding="utf-8")
    meta_path(config.out).write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")


def failure_record(result: ExperimentResult, config: ExperimentConfig) -> str:
    return json.dumps(
        {"status": "failed", "subcommand": config.subcommand.value, "seed": config.seed, "failures": result.failures()}
    )


def error_record(exc: Exception) -> str:
    record: dict[str, Any] = {"status": "error", "error": type(exc).__name__, "message": str(exc)}
    diagnostics = getattr(exc, "diagnostics", None)
    if diagnostics:
        record["diagnostics"] = {k: _json_value(v) for k, v in diagnostics.items()}
    return json.dumps(record)
