"""Execute-and-compare screening of candidate programs, plus the
generation client interface used to produce them."""

from __future__ import annotations

import json
import urllib.error
import urllib.request
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from .. import potlang
from ..charts import ChartTable, DatasetRecord
from ..evalkit import relaxed_match
from .prompting import render_gpt_prompt

VERDICT_STATUSES = ("accepted", "rejected_parse", "rejected_runtime", "rejected_mismatch")


@dataclass(frozen=True)
class ValidationVerdict:
    status: str
    detail: str = ""

    @property
    def accepted(self) -> bool:
        return self.status == "accepted"


def validate_pot(program_text: str, gold_answer: str) -> ValidationVerdict:
    """Screen one candidate program against its annotated answer.

    A program is accepted only when it parses, runs to completion with a
    finite answer, and the answer relaxed-matches the gold.
    """
    if not gold_answer:
        raise ValueError("gold_answer must be non-empty")
    check = potlang.check_program(program_text)
    if not check.ok:
        return ValidationVerdict("rejected_parse", check.detail)
    try:
        result = potlang.execute_text(program_text)
    except potlang.PotRuntimeError as exc:
        return ValidationVerdict("rejected_runtime", str(exc))
    if isinstance(result.answer, float) and result.answer != result.answer:
        return ValidationVerdict("rejected_runtime", "answer is not a number")
    if isinstance(result.answer, float) and result.answer in (float("inf"), float("-inf")):
        return ValidationVerdict("rejected_runtime", "answer is not finite")
    rendered = potlang.render_answer(result.answer)
    if not relaxed_match(rendered, gold_answer):
        return ValidationVerdict("rejected_mismatch", f"got {rendered!r}, expected {gold_answer!r}")
    return ValidationVerdict("accepted", "")


# ---------------------------------------------------------------------------
# Generation clients


class ClientError(Exception):
    pass


class ClientUnavailable(ClientError):
    pass


class ClientTimeout(ClientError):
    pass


class ClientRefusal(ClientError):
    pass


class MockLLMClient:
    """Offline deterministic client: replays canned completions in order.

    A timeout of zero models an immediately expiring deadline and raises
    :class:`ClientTimeout` on every request; an exhausted response list
    raises :class:`ClientUnavailable`.
    """

    def __init__(self, responses: Sequence[str] | Callable[[str], str], timeout: float = 30.0):
        self._responses = responses if callable(responses) else list(responses)
        self._cursor = 0
        self.timeout = timeout

    def generate(self, prompt: str) -> str:
        if self.timeout <= 0:
            raise ClientTimeout("deadline expired before the request was sent")
        if callable(self._responses):
            return self._responses(prompt)
        if self._cursor >= len(self._responses):
            raise ClientUnavailable("mock client has no responses left")
        response = self._responses[self._cursor]
        self._cursor += 1
        return response


class HttpLLMClient:
    """Minimal JSON-over-HTTP client: POST {"prompt": ...}, read "completion".

    Endpoint and key come from the caller (the command-line layer reads
    them from the environment); core code never touches the environment.
    """

    def __init__(self, endpoint: str, api_key: str | None = None, timeout: float = 30.0):
        self.endpoint = endpoint
        self.api_key = api_key
        self.timeout = timeout

    def generate(self, prompt: str) -> str:
        if self.timeout <= 0:
            raise ClientTimeout("deadline expired before the request was sent")
        payload = json.dumps({"prompt": prompt}).encode("utf-8")
        request = urllib.request.Request(
            self.endpoint, data=payload, headers={"Content-Type": "application/json"}
        )
        if self.api_key:
            request.add_header("Authorization", f"Bearer {self.api_key}")
        try:
            with urllib.request.urlopen(request, timeout=self.timeout) as response:
                body = json.loads(response.read().decode("utf-8"))
        except TimeoutError as exc:
            raise ClientTimeout(str(exc)) from exc
        except urllib.error.URLError as exc:
            if isinstance(getattr(exc, "reason", None), TimeoutError):
                raise ClientTimeout(str(exc)) from exc
            raise ClientUnavailable(str(exc)) from exc
        if "completion" not in body:
            raise ClientRefusal(f"no completion in response: {body!r}")
        return str(body["completion"])


def llm_generate(client, prompt: str) -> str:
    """One request against any client; the completion is returned verbatim."""
    return client.generate(prompt)


@dataclass(frozen=True)
class GenerationTask:
    table: ChartTable
    image_id: str
    question: str
    gold_answer: str


@dataclass
class GenerationReport:
    records: list[DatasetRecord]
    rejections: list[tuple[str, str, str]]  # (image_id, question, reason)

    @property
    def accepted(self) -> int:
        return len(self.records)


def generate_gpt_records(client, tasks: Iterable[GenerationTask]) -> GenerationReport:
    """Prompt, screen, and collect records; client failures skip the task.

    Rejected and skipped tasks are reported, never fatal to the batch.
    """
    records: list[DatasetRecord] = []
    rejections: list[tuple[str, str, str]] = []
    for task in tasks:
        prompt = render_gpt_prompt(task.table, task.question, task.gold_answer)
        try:
            completion = llm_generate(client, prompt)
        except ClientError as exc:
            rejections.append((task.image_id, task.question, f"client: {exc}"))
            continue
        verdict = validate_pot(completion, task.gold_answer)
        if verdict.accepted:
            records.append(DatasetRecord(
                image_id=task.image_id,
                question=task.question,
                pot_answer=completion,
                source="gpt",
                gold_answer=task.gold_answer,
            ))
        else:
            rejections.append((task.image_id, task.question, f"{verdict.status}: {verdict.detail}"))
    return GenerationReport(records=records, rejections=rejections)
