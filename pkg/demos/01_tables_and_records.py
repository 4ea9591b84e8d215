"""Chart tables: parsing, canonical rendering, and record persistence.
=====================================================================

Run with ``python demos/01_tables_and_records.py`` from the repo root
(after ``pip install -e .`` or with ``PYTHONPATH=src``).
"""

import tempfile
from pathlib import Path

from chartpot import charts

# A chart arrives as a small text block: a title line, a type line, and
# pipe-delimited rows.  Labels may carry a color annotation, and a
# markdown alignment row is tolerated.
SOURCE = """\
Chart title: Long-term price index in food commodities, 1850-2015, World, 1934
Chart type: Horizontal bar chart
| Food  |  Long-term price index in food commodities, 1850-2015, World, 1934 |
|:---------------------------------------|------------:|
| Lamb (color: steelblue)  |   103.7  |
| Corn (color: sienna)    |   103.13 |
| Barley (color: mediumvioletred)  |  102.46 |
| Rye (color: tomato)  |   87.37 |
| Beef (color: sienna)  |  85.27 |
| Wheat (color: slategray)  |  83.73 |
"""

table = charts.parse_table(SOURCE)
print("title:     ", table.title)
print("type:      ", table.chart_type)
print("rows:      ", len(table.rows))
print("first row: ", table.rows[0])

# Rendering is canonical: single-space cell padding, shortest decimal
# forms, no separator row.  parse_table(render_table(t)) == t.
canonical = charts.render_table(table)
print("\ncanonical serialization:\n" + canonical)
assert charts.parse_table(canonical) == table

# Numeric cells become floats; anything else stays text.
print("\nnumeric column:", table.numeric_column(table.column_headers[1]))

# Dataset records persist as JSON Lines with an atomic write; multi-line
# programs survive the round trip byte for byte.
records = [
    charts.DatasetRecord(
        image_id="fig-example",
        question="What is the sum of the price index that is greater than 100?",
        pot_answer="Y=[103.7, 103.13, 102.46]\nAnswer=np.sum(Y)",
        source="template",
        gold_answer="309.29",
    )
]
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "records.jsonl"
    charts.write_records(path, records)
    print("\non disk:\n" + path.read_text(), end="")
    assert charts.read_records(path) == records
print("round trip ok")
