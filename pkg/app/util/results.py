import csv
import io
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional


class OutputFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


@dataclass
class ExperimentResult:
    """Rows of one grid plus a flat summary; ``summary["passed"]`` decides the exit code."""

    rows: List[Dict[str, Any]]
    summary: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.summary.get("passed", False))


def _plain(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return "inf" if value > 0 else ("-inf" if value < 0 else "nan")
    if isinstance(value, dict):
        return {key: _plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(item) for item in value]
    return value


def compact_json(value: Any) -> str:
    return json.dumps(_plain(value), sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def render_json(result: ExperimentResult, config: Dict[str, Any], version: str) -> str:
    document = {
        "config": config,
        "rows": result.rows,
        "summary": result.summary,
        "version": version,
    }
    return json.dumps(_plain(document), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def render_csv(result: ExperimentResult, config: Dict[str, Any], version: str) -> str:
    """
    A CSV table preceded by ``#`` lines echoing the config, the version and the
    summary. Columns follow the key order of the first row.
    """
    buffer = io.StringIO()
    buffer.write(f"# config: {compact_json(config)}\n")
    buffer.write(f"# version: {version}\n")
    buffer.write(f"# summary: {compact_json(result.summary)}\n")
    if result.rows:
        fieldnames = list(result.rows[0].keys())
        writer = csv.DictWriter(buffer, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        for row in result.rows:
            writer.writerow({key: "" if row.get(key) is None else _plain(row.get(key)) for key in fieldnames})
    return buffer.getvalue()


def render_result(result: ExperimentResult, config: Dict[str, Any], version: str, fmt: OutputFormat) -> str:
    if OutputFormat(fmt) is OutputFormat.JSON:
        return render_json(result, config, version)
    return render_csv(result, config, version)


def write_result(text: str, out: Optional[str]) -> Optional[Path]:
    """Writes ``text`` to ``out``; without a path the caller prints it."""
    if out is None:
        return None
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(text)
    return path
