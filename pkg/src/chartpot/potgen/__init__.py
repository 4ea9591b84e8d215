"""Dataset construction: template instantiation, prompt rendering,
execute-and-compare validation, and dataset statistics."""

from .templates import (
    AGG_CHOICES,
    BUILTIN_TEMPLATES,
    Filling,
    Template,
    TemplateError,
    enumerate_fillings,
    expected_answer,
    fill_placeholders,
    instantiate_templates,
    load_templates,
    save_templates,
    validate_template,
)
from .prompting import EXAMPLE_INPUT, EXAMPLE_OUTPUT, PROMPT_PREAMBLE, render_gpt_prompt
from .validation import (
    ClientError,
    ClientRefusal,
    ClientTimeout,
    ClientUnavailable,
    GenerationReport,
    GenerationTask,
    HttpLLMClient,
    MockLLMClient,
    VERDICT_STATUSES,
    ValidationVerdict,
    generate_gpt_records,
    llm_generate,
    validate_pot,
)
from .stats import STOP_WORDS, DatasetStats, dataset_stats, question_first_bigram

__all__ = [
    "AGG_CHOICES",
    "BUILTIN_TEMPLATES",
    "Filling",
    "Template",
    "TemplateError",
    "enumerate_fillings",
    "expected_answer",
    "fill_placeholders",
    "instantiate_templates",
    "load_templates",
    "save_templates",
    "validate_template",
    "EXAMPLE_INPUT",
    "EXAMPLE_OUTPUT",
    "PROMPT_PREAMBLE",
    "render_gpt_prompt",
    "ClientError",
    "ClientRefusal",
    "ClientTimeout",
    "ClientUnavailable",
    "GenerationReport",
    "GenerationTask",
    "HttpLLMClient",
    "MockLLMClient",
    "VERDICT_STATUSES",
    "ValidationVerdict",
    "generate_gpt_records",
    "llm_generate",
    "validate_pot",
    "STOP_WORDS",
    "DatasetStats",
    "dataset_stats",
    "question_first_bigram",
]
