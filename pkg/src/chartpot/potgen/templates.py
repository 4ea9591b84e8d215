"""Template-based (question, program) pair construction over chart tables.

A template pairs a question string and a program string, both holding
placeholders that get filled from a chart's data table:

``<series>``
    header of a fully numeric value column
``<column>``
    header of the label column
``<label>`` / ``<label_b>``
    row labels (``<label_q>`` / ``<label_b_q>`` are the quoted forms used
    inside programs)
``<value>``
    a numeric threshold drawn from the column, strictly between its
    minimum and maximum
``<agg>`` / ``<agg_fn>``
    an aggregation word and its builtin (sum/np.sum, average/np.mean, ...)
``<values>`` / ``<labels>``
    list literals of the chosen column's values and of the row labels

Fillings enumerate every constraint-satisfying candidate in a fixed
order, then a seeded sample of at most ``cap_per_template`` per template
is instantiated.  Each emitted record's program must execute, produce a
finite answer, and match an aggregate computed directly from the table by
the plain-Python routines in this module; duplicate (question, answer)
pairs per image are dropped.
"""

from __future__ import annotations

import json
import math
import random
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

from .. import potlang
from ..charts import ChartTable, DatasetRecord, format_number
from ..evalkit import relaxed_match


class TemplateError(ValueError):
    def __init__(self, template_id: str, reason: str):
        super().__init__(f"template {template_id}: {reason}")
        self.template_id = template_id
        self.reason = reason


AGG_CHOICES = (
    ("sum", "np.sum"),
    ("average", "np.mean"),
    ("median", "np.median"),
    ("maximum", "np.max"),
    ("minimum", "np.min"),
)

KNOWN_CONSTRAINTS = (
    "min_rows",           # min_rows:N
    "distinct_values",    # column holds >= 2 distinct values
    "threshold_interior", # threshold strictly between column min and max
    "nonzero_label_b",    # second label's value is nonzero
    "nonzero_min",        # column minimum is nonzero
    "nonzero_total",      # column sum is nonzero
    "unique_max",         # the column maximum occurs once
    "unique_min",         # the column minimum occurs once
)

_PLACEHOLDER_RE = re.compile(r"<([a-z_]+)>")
_KNOWN_PLACEHOLDERS = {
    "series", "column", "label", "label_b", "label_q", "label_b_q",
    "value", "agg", "agg_fn", "values", "labels",
}


@dataclass(frozen=True)
class Template:
    id: str
    question_template: str
    program_template: str
    intent: str
    constraints: tuple[str, ...] = ()

    def placeholders(self) -> set[str]:
        found = set(_PLACEHOLDER_RE.findall(self.question_template))
        found |= set(_PLACEHOLDER_RE.findall(self.program_template))
        return found


@dataclass(frozen=True)
class Filling:
    """One concrete choice of placeholder values for a table."""

    series: str | None = None
    series_values: tuple[float, ...] = ()
    labels: tuple[str, ...] = ()
    column: str = ""
    row: int | None = None
    row_b: int | None = None
    threshold: float | None = None
    agg: tuple[str, str] | None = None

    def text_map(self) -> dict[str, str]:
        mapping: dict[str, str] = {"column": self.column}
        if self.series is not None:
            mapping["series"] = self.series
            mapping["values"] = "[" + ", ".join(format_number(v) for v in self.series_values) + "]"
        if self.labels:
            mapping["labels"] = "[" + ", ".join(repr(l) for l in self.labels) + "]"
        if self.row is not None:
            mapping["label"] = self.labels[self.row]
            mapping["label_q"] = repr(self.labels[self.row])
        if self.row_b is not None:
            mapping["label_b"] = self.labels[self.row_b]
            mapping["label_b_q"] = repr(self.labels[self.row_b])
        if self.threshold is not None:
            mapping["value"] = format_number(self.threshold)
        if self.agg is not None:
            mapping["agg"] = self.agg[0]
            mapping["agg_fn"] = self.agg[1]
        return mapping


def fill_placeholders(text: str, mapping: dict[str, str]) -> str:
    def replace(match: re.Match) -> str:
        key = match.group(1)
        if key not in mapping:
            raise KeyError(key)
        return mapping[key]

    return _PLACEHOLDER_RE.sub(replace, text)


# ---------------------------------------------------------------------------
# Brute-force aggregates, computed directly from the filled values.  These
# are deliberately plain Python, independent of the program interpreter.


def _agg_value(agg_word: str, values: Sequence[float]) -> float:
    if agg_word == "sum":
        return sum(values)
    if agg_word == "average":
        return sum(values) / len(values)
    if agg_word == "median":
        ordered = sorted(values)
        mid = len(ordered) // 2
        if len(ordered) % 2:
            return ordered[mid]
        return (ordered[mid - 1] + ordered[mid]) / 2.0
    if agg_word == "maximum":
        return max(values)
    if agg_word == "minimum":
        return min(values)
    raise ValueError(f"unknown aggregation {agg_word!r}")


def expected_answer(intent: str, filling: Filling):
    """The gold answer for a filled template, straight from the table."""
    values = filling.series_values
    v = filling.threshold
    a = values[filling.row] if filling.row is not None else None
    b = values[filling.row_b] if filling.row_b is not None else None

    if intent == "agg_column":
        return _agg_value(filling.agg[0], values)
    if intent == "sum_above":
        return sum(x for x in values if x > v)
    if intent == "sum_below":
        return sum(x for x in values if x < v)
    if intent == "count_above":
        return float(sum(1 for x in values if x > v))
    if intent == "count_below":
        return float(sum(1 for x in values if x < v))
    if intent == "mean_above":
        kept = [x for x in values if x > v]
        return sum(kept) / len(kept)
    if intent == "range_column":
        return max(values) - min(values)
    if intent == "diff_labels":
        return abs(a - b)
    if intent == "ratio_labels":
        return a / b
    if intent == "value_lookup":
        return a
    if intent == "argmax_label":
        return filling.labels[values.index(max(values))]
    if intent == "argmin_label":
        return filling.labels[values.index(min(values))]
    if intent == "compare_labels":
        return a > b
    if intent == "count_rows":
        return float(len(filling.labels))
    if intent == "sum_labels":
        return a + b
    if intent == "count_above_mean":
        mean = sum(values) / len(values)
        return float(sum(1 for x in values if x > mean))
    if intent == "max_abs_change":
        return max(abs(values[i + 1] - values[i]) for i in range(len(values) - 1))
    if intent == "ratio_max_min":
        return max(values) / min(values)
    if intent == "percent_of_total":
        return a / sum(values) * 100
    if intent == "above_mean":
        return a > sum(values) / len(values)
    if intent == "sum_excluding":
        return sum(values) - a
    if intent == "diff_from_mean":
        return abs(a - sum(values) / len(values))
    if intent == "both_above":
        return a > v and b > v
    if intent == "majority_above":
        return sum(1 for x in values if x > v) > len(values) / 2
    raise ValueError(f"unknown intent {intent!r}")


# ---------------------------------------------------------------------------
# The shipped template pack


def _t(id, intent, question, program, constraints=()):
    return Template(
        id=id,
        intent=intent,
        question_template=question,
        program_template=program,
        constraints=tuple(constraints),
    )


BUILTIN_TEMPLATES: tuple[Template, ...] = (
    _t(
        "agg_of_column", "agg_column",
        "What is the <agg> of <series>?",
        "# Get the values of all '<series>', set to Y\n"
        "Y=<values>\n"
        "# Calculate the <agg> of all elements in Y, set to Answer\n"
        "Answer=<agg_fn>(Y)",
    ),
    _t(
        "sum_above_threshold", "sum_above",
        "What is the sum of the <series> that is greater than <value>?",
        "# Get the values of all '<series>', set to Y\n"
        "Y=<values>\n"
        "# Check whether Y is greater than <value>, set to Greater\n"
        "Greater=np.greater(Y,<value>)\n"
        "# Find the indices where Greater is True, set to Indices\n"
        "Indices=np.where(Greater)[0]\n"
        "# Get the values at position Indices, set to Y\n"
        "Y=np.array(Y)[Indices]\n"
        "# Calculate the sum of all elements in Y, set to Answer\n"
        "Answer=np.sum(Y)",
        ("min_rows:2", "threshold_interior"),
    ),
    _t(
        "sum_below_threshold", "sum_below",
        "What is the sum of the <series> that is less than <value>?",
        "# Get the values of all '<series>', set to Y\n"
        "Y=<values>\n"
        "# Check whether Y is less than <value>, set to Less\n"
        "Less=np.less(Y,<value>)\n"
        "# Find the indices where Less is True, set to Indices\n"
        "Indices=np.where(Less)[0]\n"
        "# Get the values at position Indices, set to Y\n"
        "Y=np.array(Y)[Indices]\n"
        "# Calculate the sum of all elements in Y, set to Answer\n"
        "Answer=np.sum(Y)",
        ("min_rows:2", "threshold_interior"),
    ),
    _t(
        "count_above_threshold", "count_above",
        "How many values of <series> are greater than <value>?",
        "# Get the values of all '<series>', set to Y\n"
        "Y=<values>\n"
        "# Check whether Y is greater than <value>, set to Greater\n"
        "Greater=np.greater(Y,<value>)\n"
        "# Count how many elements of Greater are True, set to Answer\n"
        "Answer=np.count_nonzero(Greater)",
        ("min_rows:2", "threshold_interior"),
    ),
    _t(
        "count_below_threshold", "count_below",
        "How many values of <series> are less than <value>?",
        "# Get the values of all '<series>', set to Y\n"
        "Y=<values>\n"
        "# Check whether Y is less than <value>, set to Less\n"
        "Less=np.less(Y,<value>)\n"
        "# Count how many elements of Less are True, set to Answer\n"
        "Answer=np.count_nonzero(Less)",
        ("min_rows:2", "threshold_interior"),
    ),
    _t(
        "mean_above_threshold", "mean_above",
        "What is the average of the <series> that is greater than <value>?",
        "# Get the values of all '<series>', set to Y\n"
        "Y=<values>\n"
        "# Check whether Y is greater than <value>, set to Greater\n"
        "Greater=np.greater(Y,<value>)\n"
        "# Find the indices where Greater is True, set to Indices\n"
        "Indices=np.where(Greater)[0]\n"
        "# Get the values at position Indices, set to Y\n"
        "Y=np.array(Y)[Indices]\n"
        "# Calculate the average of all elements in Y, set to Answer\n"
        "Answer=np.mean(Y)",
        ("min_rows:2", "threshold_interior"),
    ),
    _t(
        "range_of_column", "range_column",
        "What is the difference between the maximum and minimum values of <series>?",
        "# Get the values of all '<series>', set to Y\n"
        "Y=<values>\n"
        "# Find the maximum of Y, set to Max\n"
        "Max=np.max(Y)\n"
        "# Find the minimum of Y, set to Min\n"
        "Min=np.min(Y)\n"
        "# Calculate the difference between Max and Min, set to Answer\n"
        "Answer=np.subtract(Max,Min)",
        ("min_rows:2", "distinct_values"),
    ),
    _t(
        "difference_two_labels", "diff_labels",
        "What is the difference between <label> and <label_b> in <series>?",
        "# Get the labels of all rows, set to L\n"
        "L=<labels>\n"
        "# Get the values of all '<series>', set to Y\n"
        "Y=<values>\n"
        "# Find the position of '<label>', set to I\n"
        "I=index(L,<label_q>)\n"
        "# Get the value of '<label>', set to A\n"
        "A=Y[I]\n"
        "# Find the position of '<label_b>', set to J\n"
        "J=index(L,<label_b_q>)\n"
        "# Get the value of '<label_b>', set to B\n"
        "B=Y[J]\n"
        "# Calculate the absolute difference between A and B, set to Answer\n"
        "Answer=np.abs(np.subtract(A,B))",
        ("min_rows:2",),
    ),
    _t(
        "ratio_two_labels", "ratio_labels",
        "What is the ratio of <label> to <label_b> in <series>?",
        "# Get the labels of all rows, set to L\n"
        "L=<labels>\n"
        "# Get the values of all '<series>', set to Y\n"
        "Y=<values>\n"
        "# Find the position of '<label>', set to I\n"
        "I=index(L,<label_q>)\n"
        "# Get the value of '<label>', set to A\n"
        "A=Y[I]\n"
        "# Find the position of '<label_b>', set to J\n"
        "J=index(L,<label_b_q>)\n"
        "# Get the value of '<label_b>', set to B\n"
        "B=Y[J]\n"
        "# Calculate the ratio of A to B, set to Answer\n"
        "Answer=np.divide(A,B)",
        ("min_rows:2", "nonzero_label_b"),
    ),
    _t(
        "value_of_label", "value_lookup",
        "What is the value of <label> in <series>?",
        "# Get the labels of all rows, set to L\n"
        "L=<labels>\n"
        "# Get the values of all '<series>', set to Y\n"
        "Y=<values>\n"
        "# Find the position of '<label>', set to I\n"
        "I=index(L,<label_q>)\n"
        "# Get the value of '<label>', set to Answer\n"
        "Answer=Y[I]",
    ),
    _t(
        "label_with_max", "argmax_label",
        "Which <column> has the highest <series>?",
        "# Get the values of all '<series>', set to Y\n"
        "Y=<values>\n"
        "# Find the position of the maximum of Y, set to I\n"
        "I=np.argmax(Y)\n"
        "# Get the labels of all rows, set to L\n"
        "L=<labels>\n"
        "# Get the label at position I, set to Answer\n"
        "Answer=L[I]",
        ("min_rows:2", "unique_max"),
    ),
    _t(
        "label_with_min", "argmin_label",
        "Which <column> has the lowest <series>?",
        "# Get the values of all '<series>', set to Y\n"
        "Y=<values>\n"
        "# Find the position of the minimum of Y, set to I\n"
        "I=np.argmin(Y)\n"
        "# Get the labels of all rows, set to L\n"
        "L=<labels>\n"
        "# Get the label at position I, set to Answer\n"
        "Answer=L[I]",
        ("min_rows:2", "unique_min"),
    ),
    _t(
        "greater_comparison", "compare_labels",
        "Is the value of <label> greater than the value of <label_b> in <series>?",
        "# Get the labels of all rows, set to L\n"
        "L=<labels>\n"
        "# Get the values of all '<series>', set to Y\n"
        "Y=<values>\n"
        "# Find the position of '<label>', set to I\n"
        "I=index(L,<label_q>)\n"
        "# Get the value of '<label>', set to A\n"
        "A=Y[I]\n"
        "# Find the position of '<label_b>', set to J\n"
        "J=index(L,<label_b_q>)\n"
        "# Get the value of '<label_b>', set to B\n"
        "B=Y[J]\n"
        "# Check whether A is greater than B, set to Answer\n"
        "Answer=A>B",
        ("min_rows:2",),
    ),
    _t(
        "count_categories", "count_rows",
        "How many <column> are shown in the chart?",
        "# Get the labels of all rows, set to L\n"
        "L=<labels>\n"
        "# Count the number of labels, set to Answer\n"
        "Answer=len(L)",
    ),
    _t(
        "sum_two_labels", "sum_labels",
        "What is the total of <label> and <label_b> in <series>?",
        "# Get the labels of all rows, set to L\n"
        "L=<labels>\n"
        "# Get the values of all '<series>', set to Y\n"
        "Y=<values>\n"
        "# Find the position of '<label>', set to I\n"
        "I=index(L,<label_q>)\n"
        "# Get the value of '<label>', set to A\n"
        "A=Y[I]\n"
        "# Find the position of '<label_b>', set to J\n"
        "J=index(L,<label_b_q>)\n"
        "# Get the value of '<label_b>', set to B\n"
        "B=Y[J]\n"
        "# Calculate the total of A and B, set to Answer\n"
        "Answer=np.add(A,B)",
        ("min_rows:2",),
    ),
    _t(
        "count_above_mean", "count_above_mean",
        "How many values of <series> are above the average?",
        "# Get the values of all '<series>', set to Y\n"
        "Y=<values>\n"
        "# Calculate the average of Y, set to M\n"
        "M=np.mean(Y)\n"
        "# Check whether Y is greater than M, set to Greater\n"
        "Greater=np.greater(Y,M)\n"
        "# Count how many elements of Greater are True, set to Answer\n"
        "Answer=np.count_nonzero(Greater)",
        ("min_rows:2", "distinct_values"),
    ),
    _t(
        "largest_consecutive_change", "max_abs_change",
        "What is the largest change in <series> between consecutive <column>?",
        "# Get the values of all '<series>', set to Y\n"
        "Y=<values>\n"
        "# Calculate the differences between consecutive elements of Y, set to D\n"
        "D=np.diff(Y)\n"
        "# Take the absolute value of D, set to A\n"
        "A=np.abs(D)\n"
        "# Find the maximum of A, set to Answer\n"
        "Answer=np.max(A)",
        ("min_rows:2",),
    ),
    _t(
        "ratio_max_min", "ratio_max_min",
        "What is the ratio of the largest to the smallest value of <series>?",
        "# Get the values of all '<series>', set to Y\n"
        "Y=<values>\n"
        "# Find the maximum of Y, set to Max\n"
        "Max=np.max(Y)\n"
        "# Find the minimum of Y, set to Min\n"
        "Min=np.min(Y)\n"
        "# Calculate the ratio of Max to Min, set to Answer\n"
        "Answer=np.divide(Max,Min)",
        ("min_rows:2", "nonzero_min"),
    ),
    _t(
        "percentage_of_total", "percent_of_total",
        "What percentage of the total <series> does <label> represent?",
        "# Get the labels of all rows, set to L\n"
        "L=<labels>\n"
        "# Get the values of all '<series>', set to Y\n"
        "Y=<values>\n"
        "# Find the position of '<label>', set to I\n"
        "I=index(L,<label_q>)\n"
        "# Get the value of '<label>', set to A\n"
        "A=Y[I]\n"
        "# Calculate the total of Y, set to T\n"
        "T=np.sum(Y)\n"
        "# Calculate the share of A in T, set to P\n"
        "P=np.divide(A,T)\n"
        "# Convert the share to a percentage, set to Answer\n"
        "Answer=P*100",
        ("nonzero_total",),
    ),
    _t(
        "above_mean_check", "above_mean",
        "Is <label> above the average <series>?",
        "# Get the labels of all rows, set to L\n"
        "L=<labels>\n"
        "# Get the values of all '<series>', set to Y\n"
        "Y=<values>\n"
        "# Find the position of '<label>', set to I\n"
        "I=index(L,<label_q>)\n"
        "# Get the value of '<label>', set to A\n"
        "A=Y[I]\n"
        "# Calculate the average of Y, set to M\n"
        "M=np.mean(Y)\n"
        "# Check whether A is greater than M, set to Answer\n"
        "Answer=A>M",
        ("min_rows:2",),
    ),
    _t(
        "sum_excluding_label", "sum_excluding",
        "What is the sum of <series> excluding <label>?",
        "# Get the labels of all rows, set to L\n"
        "L=<labels>\n"
        "# Get the values of all '<series>', set to Y\n"
        "Y=<values>\n"
        "# Calculate the total of Y, set to T\n"
        "T=np.sum(Y)\n"
        "# Find the position of '<label>', set to I\n"
        "I=index(L,<label_q>)\n"
        "# Get the value of '<label>', set to A\n"
        "A=Y[I]\n"
        "# Subtract A from the total, set to Answer\n"
        "Answer=np.subtract(T,A)",
        ("min_rows:2",),
    ),
    _t(
        "difference_from_mean", "diff_from_mean",
        "How far is <label> from the average <series>?",
        "# Get the labels of all rows, set to L\n"
        "L=<labels>\n"
        "# Get the values of all '<series>', set to Y\n"
        "Y=<values>\n"
        "# Find the position of '<label>', set to I\n"
        "I=index(L,<label_q>)\n"
        "# Get the value of '<label>', set to A\n"
        "A=Y[I]\n"
        "# Calculate the average of Y, set to M\n"
        "M=np.mean(Y)\n"
        "# Calculate the absolute difference between A and M, set to Answer\n"
        "Answer=np.abs(np.subtract(A,M))",
        ("min_rows:2",),
    ),
    _t(
        "both_above_threshold", "both_above",
        "Are both <label> and <label_b> greater than <value> in <series>?",
        "# Get the labels of all rows, set to L\n"
        "L=<labels>\n"
        "# Get the values of all '<series>', set to Y\n"
        "Y=<values>\n"
        "# Find the position of '<label>', set to I\n"
        "I=index(L,<label_q>)\n"
        "# Get the value of '<label>', set to A\n"
        "A=Y[I]\n"
        "# Find the position of '<label_b>', set to J\n"
        "J=index(L,<label_b_q>)\n"
        "# Get the value of '<label_b>', set to B\n"
        "B=Y[J]\n"
        "# Collect A and B into one array, set to Pair\n"
        "Pair=[A,B]\n"
        "# Check whether Pair is greater than <value>, set to Greater\n"
        "Greater=np.greater(Pair,<value>)\n"
        "# Check whether all elements of Greater are True, set to Answer\n"
        "Answer=all(Greater)",
        ("min_rows:2", "threshold_interior"),
    ),
    _t(
        "majority_above_threshold", "majority_above",
        "Do more than half of the <column> exceed <value> in <series>?",
        "# Get the values of all '<series>', set to Y\n"
        "Y=<values>\n"
        "# Check whether Y is greater than <value>, set to Greater\n"
        "Greater=np.greater(Y,<value>)\n"
        "# Count how many elements of Greater are True, set to C\n"
        "C=np.count_nonzero(Greater)\n"
        "# Count the number of values, set to N\n"
        "N=len(Y)\n"
        "# Check whether C is more than half of N, set to Answer\n"
        "Answer=C>N/2",
        ("min_rows:2", "threshold_interior"),
    ),
)


# ---------------------------------------------------------------------------
# Template pack files (one JSON object per line)


def load_templates(path: str) -> list[Template]:
    templates = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                templates.append(Template(
                    id=obj["id"],
                    question_template=obj["question_template"],
                    program_template=obj["program_template"],
                    intent=obj["intent"],
                    constraints=tuple(obj.get("constraints", ())),
                ))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise TemplateError(f"<line {lineno}>", f"bad template object: {exc}")
    return templates


def save_templates(path: str, templates: Iterable[Template]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in templates:
            fh.write(json.dumps({
                "id": t.id,
                "question_template": t.question_template,
                "program_template": t.program_template,
                "intent": t.intent,
                "constraints": list(t.constraints),
            }, ensure_ascii=False))
            fh.write("\n")


# ---------------------------------------------------------------------------
# Filling enumeration and filtering


def validate_template(template: Template) -> None:
    unknown = template.placeholders() - _KNOWN_PLACEHOLDERS
    if unknown:
        raise TemplateError(template.id, f"unknown placeholders {sorted(unknown)}")
    for constraint in template.constraints:
        name = constraint.split(":", 1)[0]
        if name not in KNOWN_CONSTRAINTS:
            raise TemplateError(template.id, f"unknown constraint {constraint!r}")
    try:
        expected_answer(template.intent, _probe_filling())
    except ValueError as exc:
        if "unknown intent" in str(exc):
            raise TemplateError(template.id, str(exc))


def _probe_filling() -> Filling:
    return Filling(
        series="probe", series_values=(1.0, 2.0), labels=("a", "b"),
        column="probe", row=0, row_b=1, threshold=1.5, agg=AGG_CHOICES[0],
    )


def _numeric_columns(table: ChartTable) -> list[tuple[str, tuple[float, ...]]]:
    columns = []
    for idx, header in enumerate(table.column_headers[1:]):
        cells = [row.values[idx] for row in table.rows]
        if cells and all(isinstance(c, float) for c in cells):
            columns.append((header, tuple(cells)))
    return columns


def _passes(constraint: str, table: ChartTable, filling: Filling) -> bool:
    name, _, arg = constraint.partition(":")
    values = filling.series_values
    if name == "min_rows":
        return len(table.rows) >= int(arg)
    if name == "distinct_values":
        return len(set(values)) >= 2
    if name == "threshold_interior":
        return bool(values) and min(values) < filling.threshold < max(values)
    if name == "nonzero_label_b":
        return values[filling.row_b] != 0.0
    if name == "nonzero_min":
        return min(values) != 0.0
    if name == "nonzero_total":
        return sum(values) != 0.0
    if name == "unique_max":
        return values.count(max(values)) == 1
    if name == "unique_min":
        return values.count(min(values)) == 1
    raise ValueError(f"unknown constraint {constraint!r}")


def enumerate_fillings(table: ChartTable, template: Template) -> list[Filling]:
    """All constraint-satisfying fillings, in a fixed deterministic order."""
    placeholders = template.placeholders()
    labels = tuple(table.labels)
    column = table.column_headers[0]

    needs_series = placeholders & {"series", "values"}
    series_options: list[tuple[str | None, tuple[float, ...]]]
    if needs_series:
        series_options = _numeric_columns(table)
        if not series_options:
            return []
    else:
        series_options = [(None, ())]

    needs_pair = "label_b" in placeholders or "label_b_q" in placeholders
    needs_label = needs_pair or placeholders & {"label", "label_q"}
    needs_value = "value" in placeholders
    needs_agg = placeholders & {"agg", "agg_fn"}

    if needs_label and len(set(labels)) != len(labels):
        return []  # duplicated labels make index() lookups ambiguous

    fillings = []
    for series, values in series_options:
        if needs_label:
            if needs_pair:
                row_choices = [
                    (i, j) for i in range(len(labels)) for j in range(len(labels)) if i != j
                ]
            else:
                row_choices = [(i, None) for i in range(len(labels))]
        else:
            row_choices = [(None, None)]
        if needs_value:
            thresholds = sorted(set(values))
        else:
            thresholds = [None]
        aggs = list(AGG_CHOICES) if needs_agg else [None]

        for row, row_b in row_choices:
            for threshold in thresholds:
                for agg in aggs:
                    filling = Filling(
                        series=series, series_values=values, labels=labels,
                        column=column, row=row, row_b=row_b,
                        threshold=threshold, agg=agg,
                    )
                    if not _rule_c_ok(template, filling):
                        continue
                    if all(_passes(c, table, filling) for c in template.constraints):
                        fillings.append(filling)
    return fillings


# ---------------------------------------------------------------------------
# Instantiation


def _is_reasonable(value) -> bool:
    if isinstance(value, float):
        return math.isfinite(value)
    return True


# Intents whose answers compare or rank values; these need at least two
# distinct values to be a reasonable question (filter rule c).
_EXTREMUM_INTENTS = frozenset({
    "argmax_label", "argmin_label", "range_column", "ratio_max_min", "compare_labels",
})


def _needs_distinct_values(template: Template, filling: Filling) -> bool:
    if template.intent in _EXTREMUM_INTENTS:
        return True
    return template.intent == "agg_column" and filling.agg[0] in ("maximum", "minimum")


def _rule_c_ok(template: Template, filling: Filling) -> bool:
    if not _needs_distinct_values(template, filling):
        return True
    return len(filling.series_values) >= 2 and len(set(filling.series_values)) >= 2


def instantiate_templates(
    table: ChartTable,
    image_id: str,
    templates: Sequence[Template] | None = None,
    seed: int = 0,
    cap_per_template: int = 8,
) -> list[DatasetRecord]:
    """Build records for one chart; identical inputs give identical output.

    Every emitted program executed successfully and relaxed-matched the
    aggregate computed directly from the table.  Empty output is legal
    when the table is too small for every template.
    """
    if templates is None:
        templates = BUILTIN_TEMPLATES
    for template in templates:
        validate_template(template)

    rng = random.Random(seed)
    records = []
    seen: set[tuple[str, str]] = set()
    for template in templates:
        fillings = enumerate_fillings(table, template)
        if len(fillings) > cap_per_template:
            chosen = rng.sample(fillings, cap_per_template)
        else:
            chosen = list(fillings)
        for filling in chosen:
            mapping = filling.text_map()
            try:
                question = fill_placeholders(template.question_template, mapping)
                program = fill_placeholders(template.program_template, mapping)
            except KeyError as exc:
                raise TemplateError(template.id, f"placeholder {exc} has no candidates here")
            try:
                parsed = potlang.parse_program(program)
            except potlang.PotParseError as exc:
                raise TemplateError(template.id, f"filled program does not parse: {exc}")
            if parsed.statements[-1].target != "Answer":
                raise TemplateError(template.id, "final statement must assign Answer")
            try:
                result = potlang.execute(parsed)
            except potlang.PotRuntimeError:
                continue  # rule (a): the program must run
            if not _is_reasonable(result.answer):
                continue  # rule (b): numeric answers must be finite
            gold = potlang.render_answer(expected_answer(template.intent, filling))
            if not relaxed_match(potlang.render_answer(result.answer), gold):
                continue
            key = (question, gold)
            if key in seen:
                continue  # rule (e): dedupe (question, answer) per image
            seen.add(key)
            records.append(DatasetRecord(
                image_id=image_id,
                question=question,
                pot_answer=program,
                source="template",
                gold_answer=gold,
            ))
    return records
