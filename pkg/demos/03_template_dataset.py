"""Template-based dataset construction and candidate validation.
===============================================================

Fill question/program templates from a chart's data table, keep only the
pairs whose programs execute and agree with a direct recomputation, and
screen externally produced programs the same way.
"""

from chartpot import charts, potgen

TABLE = charts.parse_table("""\
Chart title: Annual rainfall by region
Chart type: Bar chart
| Region | Rainfall (mm) |
| North (color: steelblue) | 820 |
| South (color: tomato) | 615 |
| East (color: sienna) | 990 |
| West (color: slategray) | 455 |
""")

# The shipped pack holds 24 templates; identical (table, seed) inputs
# reproduce the identical record list.
records = potgen.instantiate_templates(TABLE, "rainfall-2024", seed=42, cap_per_template=2)
print(f"built {len(records)} records from {len(potgen.BUILTIN_TEMPLATES)} templates\n")
for record in records[:6]:
    print("Q:", record.question)
    print("A:", record.gold_answer)
    print(record.pot_answer.splitlines()[-1], "\n")

# Every record is sound by construction: the program's output matches an
# aggregate computed directly from the table.
for record in records:
    assert potgen.validate_pot(record.pot_answer, record.gold_answer).accepted

# Candidate programs from an external generator pass through the same
# execute-and-compare screen.
verdicts = [
    potgen.validate_pot("Answer=np.mean([820, 615, 990, 455])", "720"),
    potgen.validate_pot("Answer=np.sum([820, 615])", "9999"),
    potgen.validate_pot("Answer=np.divide(820, 0)", "1"),
    potgen.validate_pot("while True: pass", "1"),
]
print("verdicts:", [v.status for v in verdicts])

# The generation prompt embeds the operator list, one worked example, and
# the serialized target chart.
prompt = potgen.render_gpt_prompt(TABLE, "What is the average rainfall?", "720")
print("\nprompt tail:\n" + "\n".join(prompt.splitlines()[-9:]))

# An offline mock client stands in for a real endpoint; the pipeline
# validates whatever comes back.
client = potgen.MockLLMClient([
    "# Average the rainfall values, set to Answer\nAnswer=np.mean([820, 615, 990, 455])",
])
task = potgen.GenerationTask(TABLE, "rainfall-2024", "What is the average rainfall?", "720")
report = potgen.generate_gpt_records(client, [task])
print("\nmock pipeline accepted:", report.accepted)

stats = potgen.dataset_stats(records + report.records)
print(f"samples={stats.num_samples} images={stats.num_images} "
      f"avg_chars={stats.avg_answer_chars:.1f}")
print("leading question bigrams:", stats.top_bigrams[:4])
