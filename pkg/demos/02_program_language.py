"""The restricted program language: parse, execute, and fail safely.
===================================================================

Programs are plain assignment statements over a whitelist of numeric
builtins -- no loops, no branches, no imports, no attribute access.
"""

from chartpot import potlang

PROGRAM = """\
# Get the values of all 'Long-term price index of each food', set to Y
Y=[103.7, 103.13, 102.46, 87.37, 85.27, 83.73]
# Check whether Y is greater than 100, set to Greater
Greater=np.greater(Y,100)
# Find the indices where Greater is True, set to Indices
Indices=np.where(Greater)[0]
# Get the values at position Indices, set to Y
Y=np.array(Y)[Indices]
# Calculate the sum of all elements in Y, set to Answer
Answer=np.sum(Y)
"""

program = potlang.parse_program(PROGRAM)
print("targets:", program.targets)

result = potlang.execute(program)
print("answer: ", potlang.render_answer(result.answer))
for target, summary in result.trace:
    print(f"  {target:8s} <- {summary}")

# check_program classifies without executing: the Combine policy uses it
# to decide whether a program is even runnable.
for text in (
    PROGRAM,
    "Answer=np.exp(1)",        # not in the whitelist
    "for x in Y: pass",        # control flow is rejected at parse
    "Answer=1+",               # plain syntax error
):
    verdict = potlang.check_program(text)
    label = text.splitlines()[0][:30]
    print(f"{label:32s} -> {verdict.kind}")

# Runtime failures are typed errors, never a crashed interpreter.
for text in (
    "Answer=np.divide(1,0)",
    "Answer=unknown_name",
    "Y=[1,2]\nAnswer=Y[10]",
    "x=1",
):
    try:
        potlang.execute_text(text)
    except potlang.PotError as exc:
        print(f"{text.splitlines()[0]:24s} -> {type(exc).__name__}: {exc}")

# Resource guards bound adversarial inputs.
try:
    potlang.execute_text("\n".join(f"x{i}=1" for i in range(999)) + "\nAnswer=1")
except potlang.StatementLimitExceeded as exc:
    print("guard:", exc)
