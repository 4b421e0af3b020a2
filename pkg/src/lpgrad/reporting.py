"""Deterministic JSON/CSV serialization for reports.

CSV cells print floats with 17 significant digits so doubles round-trip
exactly; JSON relies on Python's shortest-round-trip repr, which is also
lossless.  Row and key order are fixed so identical run configurations
produce byte-identical files.
"""

from __future__ import annotations

import json
import os


def fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def write_csv(path, header, rows, config: dict | None = None) -> None:
    lines = []
    if config is not None:
        items = " ".join(f"{k}={fmt(v)}" for k, v in sorted(config.items()))
        lines.append(f"# config: {items}")
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_json(path, payload: dict) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
