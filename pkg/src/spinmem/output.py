"""Deterministic CSV and JSON manifest emission.

Floats are written through repr, the shortest representation that parses
back to the same double, so emitted files are byte-stable across runs and
platforms and re-parsing loses nothing.  Manifests echo the full effective
config so they double as replay inputs.
"""

import csv
import json
import time
from pathlib import Path

from . import __version__
from .config import config_echo

FORMAT_VERSION = 1


def _cell(value):
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (int, str)):
        return str(value)
    # numpy scalars and anything else numeric
    return repr(float(value))


def write_csv(path, header, rows):
    """RFC-4180-style CSV with round-trip float formatting.

    Rows must be rectangular; the final row is newline-terminated.  I/O
    problems carry the path in the message.
    """
    width = len(header)
    formatted = []
    for k, row in enumerate(rows):
        if len(row) != width:
            raise ValueError(
                "row %d has %d cells, header has %d" % (k, len(row), width)
            )
        formatted.append([_cell(v) for v in row])
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(formatted)
    except OSError as exc:
        raise OSError("writing %s: %s" % (path, exc)) from exc


def read_csv(path):
    """Header and float-typed rows of a file written by write_csv."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[_maybe_number(cell) for cell in row] for row in reader]
    return header, rows


def _maybe_number(cell):
    try:
        return float(cell)
    except ValueError:
        return cell


def write_manifest(path, command, cfg, seeds, outputs, wall_time_s):
    """JSON run manifest: config echo, seeds, outputs, timing, version."""
    manifest = {
        "format_version": FORMAT_VERSION,
        "version": "spinmem " + __version__,
        "command": command,
        "config": config_echo(cfg),
        "seeds": seeds,
        "outputs": outputs,
        "wall_time_s": wall_time_s,
        "written_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    path = Path(path)
    try:
        path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OSError("writing %s: %s" % (path, exc)) from exc
    return manifest
