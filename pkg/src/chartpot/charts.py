"""Chart data tables and dataset records.

A chart is represented textually as::

    Chart title: <title>
    Chart type: <type>
    | <label header> | <value header> ... |
    | <label> (color: <name>) | <value> ... |

The ``(color: ...)`` suffix on a row label is optional.  A markdown
alignment row (``|:---|---:|``) and a literal ``Chart table:`` line are
accepted on parse and never emitted on render.  Rendering is canonical:
exactly one space of padding around every cell, numbers in their shortest
round-trip decimal form, so ``parse_table(render_table(t)) == t``.

Dataset records persist as UTF-8 JSON Lines, one object per line with
fields ``image_id``, ``question``, ``pot_answer``, ``source`` and an
optional ``gold_answer``.
"""

from __future__ import annotations

import json
import os
import re
import tempfile
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

Cell = Union[float, str]

RECORD_SOURCES = ("template", "gpt")

_NUMBER_RE = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")
_COLOR_RE = re.compile(r"^(.*?)\s*\(color:\s*([^)]*)\)\s*$")
_SEPARATOR_CELL_RE = re.compile(r"^:?-+:?$")


class MalformedTable(ValueError):
    """Raised when serialized table text cannot be parsed."""

    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class RecordDecodeError(ValueError):
    """Raised when a dataset record line is not a valid record object."""

    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class RecordEncodeError(ValueError):
    """Raised at write time when a record violates the record contract."""

    def __init__(self, index: int, reason: str):
        super().__init__(f"record {index}: {reason}")
        self.index = index
        self.reason = reason


@dataclass(frozen=True)
class Row:
    label: str
    color: str | None
    values: tuple[Cell, ...]


def _check_text(value: str, what: str) -> None:
    # the pipe grammar cannot represent these, so rendering would not
    # round-trip; reject at construction instead
    if "|" in value or "\n" in value:
        raise ValueError(f"{what} cannot contain '|' or newlines: {value!r}")
    if value != value.strip():
        raise ValueError(f"{what} cannot carry leading/trailing whitespace: {value!r}")


@dataclass(frozen=True)
class ChartTable:
    """A titled, typed data table with per-row color annotations.

    Construction enforces everything the text grammar can express, so
    ``parse_table(render_table(t)) == t`` for every valid table: no pipes
    or newlines in any text, labels don't end in a literal color
    annotation, and text cells don't lex as numbers.
    """

    title: str
    chart_type: str
    column_headers: tuple[str, ...]
    rows: tuple[Row, ...]

    def __post_init__(self):
        if len(self.column_headers) < 2:
            raise ValueError("a chart table needs at least two column headers")
        if not self.rows:
            raise ValueError("a chart table needs at least one row")
        _check_text(self.title, "title")
        _check_text(self.chart_type, "chart type")
        for header in self.column_headers:
            _check_text(header, "column header")
        n_values = len(self.column_headers) - 1
        for i, row in enumerate(self.rows):
            if len(row.values) != n_values:
                raise ValueError(
                    f"row {i} has {len(row.values)} values, expected {n_values}"
                )
            _check_text(row.label, f"row {i} label")
            m = _COLOR_RE.match(row.label)
            if m and m.group(2).strip():
                raise ValueError(
                    f"row {i} label ends in a color annotation; use the color field"
                )
            if row.color is not None:
                if not row.color.strip():
                    raise ValueError(f"row {i} has a blank color name")
                _check_text(row.color, f"row {i} color")
                if "(" in row.color or ")" in row.color:
                    raise ValueError(f"row {i} color cannot contain parentheses")
            for value in row.values:
                if isinstance(value, str):
                    _check_text(value, f"row {i} cell")
                    if _NUMBER_RE.match(value):
                        raise ValueError(
                            f"row {i} text cell {value!r} would re-parse as a number"
                        )

    def value_column(self, header: str) -> list[Cell]:
        """All cells of the value column named ``header``."""
        idx = self.column_headers.index(header) - 1
        if idx < 0:
            raise KeyError("the first header names the label column")
        return [row.values[idx] for row in self.rows]

    def numeric_column(self, header: str) -> list[float]:
        """Numeric cells of a value column, skipping text cells."""
        return [v for v in self.value_column(header) if isinstance(v, float)]

    @property
    def labels(self) -> list[str]:
        return [row.label for row in self.rows]


def format_number(x: float) -> str:
    """Shortest round-trip decimal form, integers without a trailing ``.0``."""
    if x == int(x) and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


def parse_cell(text: str) -> Cell:
    text = text.strip()
    if _NUMBER_RE.match(text):
        return float(text)
    return text


def render_cell(value: Cell) -> str:
    if isinstance(value, float):
        return format_number(value)
    return str(value)


def _split_pipe_row(line: str, lineno: int) -> list[str]:
    stripped = line.strip()
    if not stripped.startswith("|") or not stripped.endswith("|") or len(stripped) < 2:
        raise MalformedTable(lineno, f"expected a pipe-delimited row, got {line!r}")
    return [cell.strip() for cell in stripped[1:-1].split("|")]


def _is_separator(cells: Sequence[str]) -> bool:
    return all(_SEPARATOR_CELL_RE.match(c) for c in cells if c) and any(cells)


def parse_table(text: str) -> ChartTable:
    """Parse serialized table text into a :class:`ChartTable`.

    Raises :class:`MalformedTable` with the offending line number on ragged
    rows, missing headers, or unparseable pipe structure.
    """
    lines = text.splitlines()
    title = None
    chart_type = None
    headers: tuple[str, ...] | None = None
    rows: list[Row] = []

    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if title is None:
            if not line.startswith("Chart title:"):
                raise MalformedTable(lineno, "expected a 'Chart title:' line")
            title = line[len("Chart title:"):].strip()
            continue
        if chart_type is None:
            if not line.startswith("Chart type:"):
                raise MalformedTable(lineno, "expected a 'Chart type:' line")
            chart_type = line[len("Chart type:"):].strip()
            continue
        if line == "Chart table:":
            continue
        cells = _split_pipe_row(line, lineno)
        if headers is None:
            if len(cells) < 2:
                raise MalformedTable(lineno, "header row needs at least two columns")
            headers = tuple(cells)
            continue
        if _is_separator(cells):
            continue
        if len(cells) != len(headers):
            raise MalformedTable(
                lineno, f"row has {len(cells)} cells, header has {len(headers)}"
            )
        label_cell = cells[0]
        m = _COLOR_RE.match(label_cell)
        if m and m.group(2).strip():
            label, color = m.group(1).strip(), m.group(2).strip()
        else:
            label, color = label_cell, None
        rows.append(Row(label=label, color=color, values=tuple(parse_cell(c) for c in cells[1:])))

    if title is None or chart_type is None:
        raise MalformedTable(len(lines) or 1, "missing title or chart type line")
    if headers is None:
        raise MalformedTable(len(lines) or 1, "missing header row")
    if not rows:
        raise MalformedTable(len(lines) or 1, "table has no data rows")
    try:
        return ChartTable(title=title, chart_type=chart_type, column_headers=headers, rows=tuple(rows))
    except ValueError as exc:
        raise MalformedTable(len(lines), str(exc)) from exc


def render_table(table: ChartTable) -> str:
    """Serialize a table, byte-stable across runs.

    Cells get exactly one space of padding; labels carry their color suffix
    when present; no alignment separator row is emitted.
    """
    out = [f"Chart title: {table.title}", f"Chart type: {table.chart_type}"]
    out.append("| " + " | ".join(table.column_headers) + " |")
    for row in table.rows:
        label = row.label if row.color is None else f"{row.label} (color: {row.color})"
        cells = [label] + [render_cell(v) for v in row.values]
        out.append("| " + " | ".join(cells) + " |")
    return "\n".join(out)


@dataclass(frozen=True)
class DatasetRecord:
    """One (image, question, program) sample of a generated dataset."""

    image_id: str
    question: str
    pot_answer: str
    source: str
    gold_answer: str | None = None

    def __post_init__(self):
        if self.source not in RECORD_SOURCES:
            raise ValueError(f"source must be one of {RECORD_SOURCES}, got {self.source!r}")


def _record_to_obj(record: DatasetRecord) -> dict:
    obj = {
        "image_id": record.image_id,
        "question": record.question,
        "pot_answer": record.pot_answer,
        "source": record.source,
    }
    if record.gold_answer is not None:
        obj["gold_answer"] = record.gold_answer
    return obj


def read_records(path: str | os.PathLike) -> list[DatasetRecord]:
    """Read a JSON Lines record file; empty file yields an empty list."""
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise RecordDecodeError(lineno, f"invalid JSON: {exc}") from exc
            if not isinstance(obj, dict):
                raise RecordDecodeError(lineno, "record line is not an object")
            try:
                records.append(
                    DatasetRecord(
                        image_id=obj["image_id"],
                        question=obj["question"],
                        pot_answer=obj["pot_answer"],
                        source=obj["source"],
                        gold_answer=obj.get("gold_answer"),
                    )
                )
            except (KeyError, ValueError) as exc:
                raise RecordDecodeError(lineno, str(exc)) from exc
    return records


def write_records(path: str | os.PathLike, records: Iterable[DatasetRecord]) -> int:
    """Write records as JSON Lines via a temp file and atomic rename.

    Every ``pot_answer`` must parse under the program grammar; violations
    raise :class:`RecordEncodeError` and leave the target file untouched.
    Returns the number of records written.
    """
    from . import potlang  # deferred: avoids a cycle at import time

    records = list(records)
    for i, record in enumerate(records):
        check = potlang.check_program(record.pot_answer)
        if not check.ok:
            raise RecordEncodeError(i, f"pot_answer does not parse: {check.detail}")

    directory = os.path.dirname(os.fspath(path)) or "."
    fd, tmp_path = tempfile.mkstemp(prefix=".records-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            for record in records:
                fh.write(json.dumps(_record_to_obj(record), ensure_ascii=False))
                fh.write("\n")
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise
    return len(records)
