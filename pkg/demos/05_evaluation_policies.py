"""Scoring chart QA: relaxed accuracy, answer policies, and text metrics.
========================================================================

The same question can be answered directly or by running a generated
program; the policies differ in how they pick between the two.
"""

from chartpot import evalkit

# Relaxed matching: numeric predictions within 5% of gold count as
# correct; strings compare case-insensitively.
for pred, gold in (("95", "100"), ("94", "100"), ("Yes", "yes "), ("0", "0")):
    print(f"relaxed_match({pred!r}, {gold!r}) = {evalkit.relaxed_match(pred, gold)}")

# A keyword detector routes questions that need calculation.
for q in ("What is the sum of the two bars?", "Which segment is orange?"):
    print(f"calculative({q!r}) = {evalkit.detect_calculative(q)}")

items = [
    evalkit.QAItem(
        question="What is the sum of the first two values?",
        gold="5", direct_answer="4", pot_program="Answer=np.sum([2,3])",
    ),
    evalkit.QAItem(
        question="What is the ratio of beef to lamb?",
        gold="2", direct_answer="2", pot_program="Answer=1+",  # broken program
    ),
    evalkit.QAItem(
        question="Which segment is largest?",
        gold="beef", direct_answer="beef", pot_program="Answer='lamb'",
    ),
]

print("\nper-item outcomes under each policy:")
for setting in evalkit.SETTINGS:
    outcomes = evalkit.evaluate_items(items, setting)
    marks = " ".join("Y" if o.correct else "n" for o in outcomes)
    statuses = ",".join(o.pot_status for o in outcomes)
    print(f"  {setting:8s} correct: {marks}   pot: {statuses}")

report = evalkit.relaxed_accuracy(items, "combine")
print(f"\ncombine accuracy: {report.overall:.2f} "
      f"(calculative {report.calculative}, other {report.non_calculative})")

# Chart-to-table scoring: optimal one-to-one matching of
# (row, column, value) entries under key-edit and value-distance
# similarity; entry order never matters.
gold = evalkit.TableTriples(entries=(
    ("North", "Rainfall", 820.0),
    ("South", "Rainfall", 615.0),
))
pred = evalkit.TableTriples(entries=(
    ("South", "Rainfall", 615.0),
    ("North", "Rainfall", 738.0),   # 10% low
))
score = evalkit.rms_f1(pred, gold)
print(f"\ntable score: precision {score.precision:.3f} "
      f"recall {score.recall:.3f} f1 {score.f1:.3f}")

# BLEU4 for generated summaries.
candidate = "rainfall in the east was the highest of all regions"
reference = "rainfall in the east region was highest of all regions"
print(f"bleu4 = {evalkit.bleu4(candidate, [reference]):.4f}")
print(f"bleu4 identity = {evalkit.bleu4(reference, [reference]):.4f}")
