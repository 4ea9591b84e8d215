"""Rendering of the program-generation instruction prompt.

The prompt embeds the operator whitelist, one fixed worked example
(hand-transcribed once and frozen against a golden file in the test
suite), and the target chart serialized with its question and annotated
answer.  Output is byte-stable: same inputs, same prompt.
"""

from __future__ import annotations

from ..charts import ChartTable, render_table

# The advertised operator list.  This is the instruction text shown to the
# generator; the evaluator's whitelist additionally accepts np.array, which
# the worked example itself uses.
PROMPT_FUNCTION_LIST = (
    "'len', 'all', 'any', 'index', 'np.sort', 'np.abs', 'np.add', "
    "'np.argmax', 'np.argmin', 'np.diff', 'np.divide', 'np.greater', "
    "'np.greater_equal', 'np.less', 'np.max', 'np.mean', 'np.median', "
    "'np.min', 'np.subtract', 'np.sum', 'np.count_nonzero', 'np.where', "
    "'+', '-', '*', '/', '>', '<', '='"
)

PROMPT_PREAMBLE = (
    "Please generate a list of assignment statements in Python to answer "
    "the question of a chart. You can only use the following operators in "
    f"each statement: [{PROMPT_FUNCTION_LIST}]. Do not use any circulation "
    "or if-branch. Do not include any unnecessary statement that is not "
    "used. The chart is presented by a data table with color information. "
    "Note that the colors are estimated and may not match the description "
    "in the question. You can choose the most possible data if necessary. "
    "You must provide a one-line comment before each assignment statement. "
    "The last variable must be Answer."
)

EXAMPLE_INPUT = """\
Chart title: Long-term price index in food commodities, 1850-2015, World, 1934
Chart type: Horizontal bar chart
Chart table:
| Food  |  Long-term price index in food commodities, 1850-2015, World, 1934 |
|:---------------------------------------|------------:|
| Lamb (color: steelblue)  |   103.7  |
| Corn (color: sienna)    |   103.13 |
| Barley (color: mediumvioletred)  |  102.46 |
| Rye (color: tomato)  |   87.37 |
| Beef (color: sienna)  |  85.27 |
| Wheat (color: slategray)  |  83.73 |
Question: What is the sum of the price index that is greater than 100?
Answer: 309.29"""

EXAMPLE_OUTPUT = """\
# Get the values of all 'Long-term price index of each food', set to Y
Y=[103.7, 103.13, 102.46, 87.37, 85.27, 83.73]
# Check whether Y is greater than 100, set to Greater
Greater=np.greater(Y,100)
# Find the indices where Greater is True, set to Indices
Indices=np.where(Greater)[0]
# Get the values at position Indices, set to Y
Y=np.array(Y)[Indices]
# Calculate the sum of all elements in Y, set to Answer
Answer=np.sum(Y)"""


def render_gpt_prompt(table: ChartTable, question: str, gold_answer: str) -> str:
    """The full generation prompt for one chart question."""
    rendered = render_table(table).splitlines()
    target = "\n".join(rendered[:2] + ["Chart table:"] + rendered[2:])
    return (
        f"{PROMPT_PREAMBLE}\n"
        "Here are some examples:\n"
        "Example Input #1:\n"
        f"{EXAMPLE_INPUT}\n"
        "Example Output #1:\n"
        f"{EXAMPLE_OUTPUT}\n"
        "Input:\n"
        f"{target}\n"
        f"Question: {question}\n"
        f"Answer: {gold_answer}\n"
        "Output:\n"
    )
