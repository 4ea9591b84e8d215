"""Dataset-level statistics: sample and image counts, answer lengths, and
the leading question bigrams after stop-word removal."""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from ..charts import DatasetRecord

# Fixed 50-word English stop-word list used for the bigram statistics.
STOP_WORDS = frozenset({
    "a", "an", "the", "is", "are", "was", "were", "be", "been", "being",
    "of", "in", "on", "at", "to", "for", "from", "by", "with", "about",
    "as", "into", "than", "that", "this", "these", "those", "it", "its",
    "there", "their", "do", "does", "did", "what", "which", "who", "whom",
    "how", "when", "where", "why", "can", "could", "will", "would", "not",
    "no", "or", "and",
})

_WORD_RE = re.compile(r"[a-z0-9]+")


@dataclass(frozen=True)
class DatasetStats:
    num_samples: int
    num_images: int
    avg_answer_chars: float
    avg_answer_tokens: float
    top_bigrams: tuple[tuple[str, int], ...]


def question_first_bigram(question: str) -> str | None:
    """First two stop-word-filtered words of a question, or None."""
    words = [w for w in _WORD_RE.findall(question.lower()) if w not in STOP_WORDS]
    if len(words) < 2:
        return None
    return f"{words[0]} {words[1]}"


def dataset_stats(records: Sequence[DatasetRecord], top_k: int = 10) -> DatasetStats:
    """Counts and averages over a record set; all-zero for an empty one."""
    if not records:
        return DatasetStats(0, 0, 0.0, 0.0, ())
    chars = [len(r.pot_answer) for r in records]
    tokens = [len(r.pot_answer.split()) for r in records]
    bigrams = Counter()
    for record in records:
        bigram = question_first_bigram(record.question)
        if bigram is not None:
            bigrams[bigram] += 1
    top = sorted(bigrams.items(), key=lambda kv: (-kv[1], kv[0]))[:top_k]
    return DatasetStats(
        num_samples=len(records),
        num_images=len({r.image_id for r in records}),
        avg_answer_chars=sum(chars) / len(records),
        avg_answer_tokens=sum(tokens) / len(records),
        top_bigrams=tuple(top),
    )
