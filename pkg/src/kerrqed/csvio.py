"""Bit-stable CSV artifacts: fixed float formatting, LF, UTF-8.

Floats are written with 17 significant digits ('%.17g'), which
round-trips IEEE doubles exactly, so identical inputs produce
byte-identical files on any platform.
"""

from __future__ import annotations

import csv
import io

from .errors import ConfigError

FLOAT_FORMAT = "%.17g"


def format_value(v) -> str:
    """One CSV cell: floats via FLOAT_FORMAT, bools as 0/1, text as-is."""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return FLOAT_FORMAT % v
    if isinstance(v, int):
        return str(v)
    return str(v)


def write_csv(path, header, rows) -> None:
    """Write one artifact; the header row is mandatory."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(header))
        for row in rows:
            writer.writerow([format_value(v) for v in row])


def read_csv(path):
    """Parse an artifact back: (header, columns) with numeric columns as floats.

    Columns that parse as numbers throughout become lists of floats;
    anything else stays a list of strings. Used by the comparison
    subcommand, so every emitted file must survive this round trip.
    """
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise ConfigError("%s: missing header row" % path)
            raw_rows = [row for row in reader if row]
    except OSError as exc:
        raise ConfigError("%s: %s" % (path, exc.strerror or exc))
    for i, row in enumerate(raw_rows):
        if len(row) != len(header):
            raise ConfigError(
                "%s: row %d has %d fields, header has %d"
                % (path, i + 2, len(row), len(header)))
    columns: dict[str, list] = {}
    for j, name in enumerate(header):
        cells = [row[j] for row in raw_rows]
        try:
            columns[name] = [float(c) for c in cells]
        except ValueError:
            columns[name] = cells
    return header, columns


def render_rows(header, rows) -> str:
    """The exact file content write_csv would produce (for tests)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(header))
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    return buf.getvalue()
