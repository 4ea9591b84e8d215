"""chartpot: chart tables, a restricted program language for numerical
chart QA, dataset construction, a token-merging encoder simulator, and
evaluation metrics."""

__version__ = "0.1.0"

from . import charts, evalkit, potgen, potlang, tokmerge
from .charts import ChartTable, DatasetRecord, parse_table, render_table, read_records, write_records
from .potlang import Program, check_program, execute, execute_text, parse_program, render_answer

__all__ = [
    "__version__",
    "charts",
    "evalkit",
    "potgen",
    "potlang",
    "tokmerge",
    "ChartTable",
    "DatasetRecord",
    "parse_table",
    "render_table",
    "read_records",
    "write_records",
    "Program",
    "check_program",
    "execute",
    "execute_text",
    "parse_program",
    "render_answer",
]
