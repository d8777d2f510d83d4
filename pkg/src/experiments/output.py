"""CSV / JSON writers for result rows."""

import csv
import io
import json
import math
import sys

from src.utils.errors import ConfigError, OutputError
from src.utils.logger import get_module_logger

output_logger = get_module_logger("output")

SCHEMA_VERSION = 3
COLUMNS = (
    "command", "k", "R", "eps", "delta", "inf_ratio", "lambda_min", "lambda_max",
    "norming_constant", "carleson_constant", "berezin_sup", "ball_mass_sup", "tail_mass",
    "leak", "exceptional_ratio", "kernel_bound", "total_mass", "quad_change", "seed",
    "quad_radial", "quad_azimuthal", "config_digest", "version",
)


def format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, ".12g")
    return str(value)


def _json_value(value):
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return float(format(value, ".12g"))
    return value


def render_csv(rows) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(COLUMNS)
    for row in rows:
        record = row.to_record()
        writer.writerow([format_cell(record[column]) for column in COLUMNS])
    return buffer.getvalue()


def render_json(rows) -> str:
    records = [{column: _json_value(row.to_record()[column]) for column in COLUMNS} for row in rows]
    return json.dumps(records, indent=2) + "\n"


def write_output(rows, path=None, fmt="csv"):
    """Write rows to `path` (stdout when None or "-")."""
    if fmt == "csv":
        text = render_csv(rows)
    elif fmt == "json":
        text = render_json(rows)
    else:
        raise ConfigError(f"unknown output format {fmt!r}")

    if path in (None, "-"):
        sys.stdout.write(text)
        sys.stdout.flush()
        return text
    try:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
    except OSError as error:
        output_logger.error(f"Failed to write {path}: {error}")
        raise OutputError(f"cannot write {path}: {error}") from error
    output_logger.info(f"Wrote {len(rows)} rows to {path} ({fmt})")
    return text
