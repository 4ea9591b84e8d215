"""Scoring and answer-policy logic for chart question answering.

Covers relaxed accuracy with its 5% numeric tolerance, the keyword
detector that routes questions to program execution, the four answering
policies (direct / pot / combine / oracle), the table-extraction score
built on optimal entry assignment, and BLEU4 for generated text.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import potlang
from .charts import ChartTable

RELAXED_TOLERANCE = 0.05

# Keyword list used to decide whether a question needs calculation.
# Matching is plain lowercase substring ("add" fires inside "added").
CALCULATIVE_KEYWORDS = (
    "sum", "mean", "average", "ratio", "mode", "divide", "dividing",
    "differ", "subtract", "add", "division", "times", "absolute", "minus",
    "exceed", "below", "less", "fewer", "bigger", "biggest", "greater",
    "higher", "longer", "tallest", "lowest", "number", "how many colors",
    "what is the value",
)

SETTINGS = ("direct", "pot", "combine", "oracle")


class EmptySet(ValueError):
    """Raised when accuracy is requested over zero items."""


class MissingField(ValueError):
    def __init__(self, setting: str, fieldname: str):
        super().__init__(f"setting {setting!r} requires field {fieldname!r}")
        self.setting = setting
        self.fieldname = fieldname


def parse_numeric(text: str) -> float | None:
    """Parse a prediction/gold string as a number, or None.

    Strips surrounding whitespace, a trailing ``%`` and thousands commas
    before parsing; this normalization is a pinned convention of this
    scorer, not part of the benchmark definitions.
    """
    cleaned = text.strip().rstrip("%").replace(",", "").strip()
    if not cleaned:
        return None
    try:
        return float(cleaned)
    except ValueError:
        return None


def relaxed_match(pred: str, gold: str) -> bool:
    """True when ``pred`` matches ``gold`` within 5% relative error.

    Both numeric and gold nonzero: ``|pred - gold| / |gold| <= 0.05``
    (inclusive).  Gold zero: exact zero required.  Otherwise case-folded,
    whitespace-trimmed string equality.
    """
    p = parse_numeric(pred)
    g = parse_numeric(gold)
    if p is not None and g is not None:
        if g == 0.0:
            return p == 0.0
        return abs(p - g) / abs(g) <= RELAXED_TOLERANCE
    return pred.strip().casefold() == gold.strip().casefold()


def detect_calculative(question: str, word_boundary: bool = False) -> bool:
    """True when the question contains a calculative keyword.

    ``word_boundary=True`` switches to whole-word matching for
    sensitivity analysis; the default substring mode is the pinned
    behavior.
    """
    lowered = question.lower()
    if not word_boundary:
        return any(k in lowered for k in CALCULATIVE_KEYWORDS)
    return any(re.search(r"\b" + re.escape(k) + r"\b", lowered) for k in CALCULATIVE_KEYWORDS)


@dataclass(frozen=True)
class QAItem:
    question: str
    gold: str
    direct_answer: str | None = None
    pot_program: str | None = None


@dataclass(frozen=True)
class EvalOutcome:
    setting: str
    final_answer: str
    correct: bool
    pot_status: str  # not_used | executed | syntax_fallback | runtime_fallback


def _run_pot(program_text: str) -> tuple[str, str]:
    """Execute a program; returns (rendered answer, status).

    Status is ``executed`` on success, ``syntax_fallback`` when the text
    does not even parse, ``runtime_fallback`` when execution fails.
    """
    check = potlang.check_program(program_text)
    if not check.ok:
        return "", "syntax_fallback"
    try:
        result = potlang.execute_text(program_text)
    except potlang.PotRuntimeError:
        return "", "runtime_fallback"
    return potlang.render_answer(result.answer), "executed"


def answer_under_setting(item: QAItem, setting: str) -> EvalOutcome:
    """Produce the final answer for one item under a named policy.

    * ``direct``: the short answer as given.
    * ``pot``: the executed program's answer (empty string when the
      program fails; the status records why).
    * ``combine``: calculative questions route to the program, falling
      back to the direct answer on syntax errors (and, logged separately,
      on runtime errors); other questions use the direct answer.
    * ``oracle``: correct whenever either candidate matches gold.
    """
    if setting not in SETTINGS:
        raise ValueError(f"unknown setting {setting!r}")
    needs_direct = setting in ("direct", "combine", "oracle")
    needs_pot = setting in ("pot", "combine", "oracle")
    if needs_direct and item.direct_answer is None:
        raise MissingField(setting, "direct_answer")
    if needs_pot and item.pot_program is None:
        raise MissingField(setting, "pot_program")

    if setting == "direct":
        final = item.direct_answer
        return EvalOutcome("direct", final, relaxed_match(final, item.gold), "not_used")

    if setting == "pot":
        answer, status = _run_pot(item.pot_program)
        return EvalOutcome("pot", answer, relaxed_match(answer, item.gold), status)

    if setting == "combine":
        if detect_calculative(item.question):
            answer, status = _run_pot(item.pot_program)
            if status == "executed":
                final = answer
            else:
                final = item.direct_answer
            return EvalOutcome("combine", final, relaxed_match(final, item.gold), status)
        final = item.direct_answer
        return EvalOutcome("combine", final, relaxed_match(final, item.gold), "not_used")

    # oracle: pick the correct answer if either candidate has it
    pot_answer, status = _run_pot(item.pot_program)
    direct_ok = relaxed_match(item.direct_answer, item.gold)
    pot_ok = relaxed_match(pot_answer, item.gold)
    if direct_ok:
        return EvalOutcome("oracle", item.direct_answer, True, status)
    if pot_ok:
        return EvalOutcome("oracle", pot_answer, True, status)
    return EvalOutcome("oracle", item.direct_answer, False, status)


def evaluate_items(items: Sequence[QAItem], setting: str) -> list[EvalOutcome]:
    return [answer_under_setting(item, setting) for item in items]


@dataclass(frozen=True)
class AccuracyReport:
    setting: str
    overall: float
    n: int
    calculative: float | None
    n_calculative: int
    non_calculative: float | None
    n_non_calculative: int


def relaxed_accuracy(items: Sequence[QAItem], setting: str) -> AccuracyReport:
    """Mean correctness under a setting, split by calculative detection."""
    if not items:
        raise EmptySet("no items to evaluate")
    outcomes = evaluate_items(items, setting)
    flags = [detect_calculative(item.question) for item in items]
    n_cal = sum(flags)
    n_non = len(items) - n_cal
    correct_cal = sum(1 for o, f in zip(outcomes, flags) if f and o.correct)
    correct_non = sum(1 for o, f in zip(outcomes, flags) if not f and o.correct)
    return AccuracyReport(
        setting=setting,
        overall=(correct_cal + correct_non) / len(items),
        n=len(items),
        calculative=correct_cal / n_cal if n_cal else None,
        n_calculative=n_cal,
        non_calculative=correct_non / n_non if n_non else None,
        n_non_calculative=n_non,
    )


# ---------------------------------------------------------------------------
# Chart-to-table score

TripleValue = Union[float, str]


@dataclass(frozen=True)
class TableTriples:
    """Flat (row key, column key, value) view of a data table."""

    entries: tuple[tuple[str, str, TripleValue], ...]

    def __post_init__(self):
        for row_key, col_key, _ in self.entries:
            if not row_key or not col_key:
                raise ValueError("triple keys must be non-empty")

    @classmethod
    def from_chart_table(cls, table: ChartTable) -> "TableTriples":
        entries = []
        for row in table.rows:
            for header, value in zip(table.column_headers[1:], row.values):
                entries.append((row.label, header, value))
        return cls(entries=tuple(entries))


@dataclass(frozen=True)
class TableScore:
    precision: float
    recall: float
    f1: float


def levenshtein(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            current.append(min(
                previous[j] + 1,
                current[j - 1] + 1,
                previous[j - 1] + (ca != cb),
            ))
        previous = current
    return previous[-1]


def _normalized_levenshtein(a: str, b: str) -> float:
    longest = max(len(a), len(b))
    if longest == 0:
        return 0.0
    return levenshtein(a, b) / longest


def _coerce_numeric(value: TripleValue) -> float | None:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    return parse_numeric(str(value))


def _entry_similarity(pred: tuple[str, str, TripleValue], gold: tuple[str, str, TripleValue]) -> float:
    # keys joined with "||" so row and column errors share one edit distance
    key_sim = 1.0 - _normalized_levenshtein(
        f"{pred[0]}||{pred[1]}".lower(), f"{gold[0]}||{gold[1]}".lower()
    )
    p_num = _coerce_numeric(pred[2])
    g_num = _coerce_numeric(gold[2])
    if p_num is not None and g_num is not None:
        # normalized by the larger magnitude so the score is symmetric in
        # pred/gold up to swapping precision and recall
        scale = max(abs(p_num), abs(g_num))
        if scale == 0.0:
            distance = 0.0
        else:
            distance = min(1.0, abs(p_num - g_num) / scale)
        value_sim = 1.0 - distance
    else:
        value_sim = 1.0 - _normalized_levenshtein(str(pred[2]).lower(), str(gold[2]).lower())
    return key_sim * value_sim


def rms_f1(pred: TableTriples, gold: TableTriples) -> TableScore:
    """Similarity-weighted precision/recall/F1 over table entries.

    Entries are matched one-to-one by the assignment maximizing total
    similarity, so the score is invariant to entry order on both sides.
    """
    if not pred.entries or not gold.entries:
        return TableScore(0.0, 0.0, 0.0)
    sim = np.zeros((len(pred.entries), len(gold.entries)))
    for i, p in enumerate(pred.entries):
        for j, g in enumerate(gold.entries):
            sim[i, j] = _entry_similarity(p, g)
    rows, cols = linear_sum_assignment(-sim)
    total = float(sim[rows, cols].sum())
    precision = total / len(pred.entries)
    recall = total / len(gold.entries)
    if precision + recall == 0.0:
        return TableScore(precision, recall, 0.0)
    return TableScore(precision, recall, 2 * precision * recall / (precision + recall))


# ---------------------------------------------------------------------------
# BLEU4

_TOKEN_RE = re.compile(r"\d+(?:[.,]\d+)*|[^\W\d_]+|[^\w\s]")


def bleu_tokenize(text: str) -> list[str]:
    """Lowercase and split on whitespace after detaching punctuation.

    Numbers keep their decimal points and digit-group commas.
    """
    return _TOKEN_RE.findall(text.lower())


def _ngram_counts(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu4(candidate: str, references: Iterable[str]) -> float:
    """Geometric mean of clipped 1..4-gram precisions times brevity penalty.

    Orders with no n-grams at all (candidate shorter than n) contribute a
    smoothed (0+1)/(0+1) term instead of zeroing the score.
    """
    cand = bleu_tokenize(candidate)
    refs = [bleu_tokenize(r) for r in references]
    if not refs:
        raise ValueError("bleu4 needs at least one reference")
    if not cand:
        return 0.0

    log_sum = 0.0
    for n in range(1, 5):
        counts = _ngram_counts(cand, n)
        total = sum(counts.values())
        if total == 0:
            if n == 1:
                return 0.0
            continue  # smoothed term is (0+1)/(0+1) = 1, log contribution 0
        max_counts: Counter = Counter()
        for ref in refs:
            ref_counts = _ngram_counts(ref, n)
            for gram, count in ref_counts.items():
                if count > max_counts[gram]:
                    max_counts[gram] = count
        clipped = sum(min(count, max_counts[gram]) for gram, count in counts.items())
        if clipped == 0:
            return 0.0
        log_sum += 0.25 * math.log(clipped / total)

    c = len(cand)
    r = min((len(ref) for ref in refs), key=lambda rl: (abs(rl - c), rl))
    brevity = 1.0 if c > r else math.exp(1.0 - r / c)
    return brevity * math.exp(log_sum)
