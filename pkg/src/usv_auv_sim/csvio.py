"""Deterministic, atomically-written CSV files.

Every file starts with a schema comment line, then the header row. Values
are formatted with a fixed precision so a repeated run with the same seed
produces byte-identical bytes. Files are written to a temp path in the
same directory and renamed into place.
"""

from __future__ import annotations

import os
import tempfile

SCHEMA_PREFIX = "# usv-auv-sim"


def format_value(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


def atomic_write_text(path: str, text: str):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w", newline="\n") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_csv(path: str, schema: str, header: list[str], rows):
    lines = [f"{SCHEMA_PREFIX} {schema} v1", ",".join(header)]
    for row in rows:
        lines.append(",".join(format_value(v) for v in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_csv(path: str):
    """Read back a file written by atomic_write_csv: (schema_line, header, rows of str)."""
    with open(path) as f:
        lines = [ln.rstrip("\n") for ln in f]
    schema = lines[0]
    header = lines[1].split(",")
    rows = [ln.split(",") for ln in lines[2:] if ln]
    return schema, header, rows
