"""Restricted assignment-statement program language: parser and evaluator.

Programs are sequences of ``Target=expression`` lines.  A ``#`` line is a
comment attached to the following statement.  There is no control flow, no
imports, no definitions, and no attribute access: surface tokens such as
``np.sum`` are single opaque builtin names, and only whitelisted builtins
can be called.  The final answer is whatever the variable ``Answer`` holds
after the last statement.

Grammar (one statement per source line; ``;`` also separates statements)::

    statement   = IDENT "=" comparison
    comparison  = additive [ (">" | "<" | ">=" | "<=" | "==") additive ]
    additive    = multiplicative { ("+" | "-") multiplicative }
    multiplicative = unary { ("*" | "/") unary }
    unary       = "-" unary | postfix
    postfix     = primary { "[" comparison "]" }
    primary     = NUMBER | STRING | "True" | "False" | list | group | ref
    list        = "[" [ comparison { "," comparison } ] "]"
    group       = "(" comparison ")"
    ref         = IDENT [ "(" [ comparison { "," comparison } ] ")" ]

Values are float64 scalars, strings, booleans, one-dimensional homogeneous
arrays of those, and tuples.  Reductions follow a fixed canonical order so
results are reproducible bit for bit:

* ``np.sum`` / ``np.mean`` fold left to right starting from ``0.0``
  (``np.mean`` divides the fold by the length),
* ``np.max`` / ``np.min`` / ``np.argmax`` / ``np.argmin`` scan left to
  right and keep the first strict extremum,
* ``np.median`` sorts ascending and averages the two middle elements for
  even lengths,
* ``np.diff`` yields forward differences ``x[i+1] - x[i]``,
* ``np.where`` over a boolean array yields a one-element tuple holding the
  array of true positions,
* ``index(xs, v)`` yields the first position of ``v`` (``NotFound`` if
  absent), and division by zero is always an error.

The evaluator touches no files, sockets, or interpreter internals: every
callable reachable from a parsed program lives in the builtin table below.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

# Fixed builtin whitelist.  ``np.array`` is admitted on top of the base
# list because bracket-indexing an index array requires it in practice.
BUILTIN_WHITELIST = frozenset({
    "len", "all", "any", "index",
    "np.sort", "np.abs", "np.add", "np.argmax", "np.argmin", "np.diff",
    "np.divide", "np.greater", "np.greater_equal", "np.less", "np.max",
    "np.mean", "np.median", "np.min", "np.subtract", "np.sum",
    "np.count_nonzero", "np.where", "np.array",
})

RESERVED_WORDS = frozenset({
    "for", "while", "if", "else", "elif", "import", "from", "def",
    "lambda", "class", "with", "try", "except", "finally", "return",
    "yield", "global", "nonlocal", "del", "assert", "pass", "break",
    "continue", "raise", "async", "await", "in", "is", "not", "and", "or",
})

DEFAULT_MAX_STATEMENTS = 256
DEFAULT_MAX_ELEMENTS = 10**6

Value = Union[float, str, bool, list, tuple]


# ---------------------------------------------------------------------------
# Errors


class PotError(Exception):
    """Base class for all program-language errors."""

    def __init__(self, line: int | None, message: str):
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
        self.line = line
        self.message = message


class PotParseError(PotError):
    """Base class for errors raised while parsing."""


class ProgramSyntaxError(PotParseError):
    pass


class DisallowedConstruct(PotParseError):
    def __init__(self, line: int | None, construct: str):
        super().__init__(line, f"disallowed construct: {construct}")
        self.construct = construct


class UnknownBuiltin(PotParseError):
    def __init__(self, line: int | None, name: str):
        super().__init__(line, f"unknown builtin: {name}")
        self.name = name


class PotRuntimeError(PotError):
    """Base class for errors raised while executing."""


class UndefinedVariable(PotRuntimeError):
    def __init__(self, name: str, line: int | None):
        super().__init__(line, f"undefined variable: {name}")
        self.name = name


class TypeMismatch(PotRuntimeError):
    def __init__(self, op: str, kinds: str, line: int | None):
        super().__init__(line, f"type mismatch in {op}: {kinds}")
        self.op = op
        self.kinds = kinds


class IndexOutOfBounds(PotRuntimeError):
    pass


class DivisionByZero(PotRuntimeError):
    def __init__(self, line: int | None):
        super().__init__(line, "division by zero")


class NotFound(PotRuntimeError):
    pass


class MissingAnswer(PotRuntimeError):
    def __init__(self):
        super().__init__(None, "no statement assigns Answer")


class StatementLimitExceeded(PotRuntimeError):
    pass


class ElementLimitExceeded(PotRuntimeError):
    pass


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class NumberLit:
    value: float
    line: int


@dataclass(frozen=True)
class StringLit:
    value: str
    line: int


@dataclass(frozen=True)
class BoolLit:
    value: bool
    line: int


@dataclass(frozen=True)
class ListLit:
    items: tuple
    line: int


@dataclass(frozen=True)
class VarRef:
    name: str
    line: int


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple
    line: int


@dataclass(frozen=True)
class Index:
    base: object
    index: object
    line: int


@dataclass(frozen=True)
class BinOp:
    op: str
    lhs: object
    rhs: object
    line: int


@dataclass(frozen=True)
class Neg:
    operand: object
    line: int


Expr = Union[NumberLit, StringLit, BoolLit, ListLit, VarRef, Call, Index, BinOp, Neg]


@dataclass(frozen=True)
class Statement:
    target: str
    expr: Expr
    line: int
    comment: str | None = None


@dataclass(frozen=True)
class Program:
    statements: tuple[Statement, ...]

    @property
    def targets(self) -> list[str]:
        return [s.target for s in self.statements]


# ---------------------------------------------------------------------------
# Tokenizer

_TWO_CHAR_OPS = (">=", "<=", "==")
_ONE_CHAR_OPS = "+-*/><=()[],"


@dataclass(frozen=True)
class _Token:
    kind: str  # NUMBER | STRING | IDENT | OP
    text: str
    line: int


def _tokenize(text: str, line: int) -> list[_Token]:
    tokens = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c == "#":
            break
        if c in "'\"":
            quote, j, buf = c, i + 1, []
            while j < n and text[j] != quote:
                if text[j] == "\\" and j + 1 < n and text[j + 1] in "\\'\"":
                    buf.append(text[j + 1])
                    j += 2
                else:
                    buf.append(text[j])
                    j += 1
            if j >= n:
                raise ProgramSyntaxError(line, "unterminated string literal")
            tokens.append(_Token("STRING", "".join(buf), line))
            i = j + 1
            continue
        if c.isdigit() or (c == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            while j < n and (text[j].isdigit() or text[j] == "."):
                j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    j = k
                    while j < n and text[j].isdigit():
                        j += 1
            lexeme = text[i:j]
            try:
                value = float(lexeme)
            except ValueError:
                raise ProgramSyntaxError(line, f"bad number literal: {lexeme!r}")
            tokens.append(_Token("NUMBER", lexeme, line))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] in "_"):
                j += 1
            # a dotted name like np.sum is one opaque identifier token
            while j < n and text[j] == "." and j + 1 < n and (text[j + 1].isalpha() or text[j + 1] == "_"):
                j += 1
                while j < n and (text[j].isalnum() or text[j] == "_"):
                    j += 1
            tokens.append(_Token("IDENT", text[i:j], line))
            i = j
            continue
        two = text[i:i + 2]
        if two in _TWO_CHAR_OPS:
            tokens.append(_Token("OP", two, line))
            i += 2
            continue
        if c in _ONE_CHAR_OPS:
            tokens.append(_Token("OP", c, line))
            i += 1
            continue
        if c in ":;{}@.":
            raise DisallowedConstruct(line, f"token {c!r}")
        raise ProgramSyntaxError(line, f"unexpected character {c!r}")
    return tokens


def _split_statements(text: str) -> list[tuple[int, str, str | None]]:
    """Split source into (line, statement_text, comment) triples.

    Full-line ``#`` comments attach to the next statement; ``;`` separates
    statements within a line.
    """
    out = []
    pending: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            pending.append(stripped[1:].strip())
            continue
        # split on top-level semicolons, respecting string literals and
        # trailing comments
        parts, buf, quote = [], [], None
        for ch in raw:
            if quote:
                buf.append(ch)
                if ch == quote:
                    quote = None
            elif ch in "'\"":
                quote = ch
                buf.append(ch)
            elif ch == "#":
                break
            elif ch == ";":
                parts.append("".join(buf))
                buf = []
            else:
                buf.append(ch)
        parts.append("".join(buf))
        for k, part in enumerate(parts):
            if not part.strip():
                continue
            comment = "\n".join(pending) if (k == 0 and pending) else None
            out.append((lineno, part, comment))
        pending = []
    return out


# ---------------------------------------------------------------------------
# Parser


# each nesting level costs several interpreter stack frames; 100 keeps
# the typed error well inside Python's recursion limit
MAX_EXPR_DEPTH = 100


class _Parser:
    def __init__(self, tokens: list[_Token], line: int):
        self.tokens = tokens
        self.line = line
        self.pos = 0
        self.depth = 0

    def peek(self) -> _Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def advance(self) -> _Token:
        token = self.peek()
        if token is None:
            raise ProgramSyntaxError(self.line, "unexpected end of statement")
        self.pos += 1
        return token

    def expect_op(self, text: str) -> None:
        token = self.peek()
        if token is None or token.kind != "OP" or token.text != text:
            found = token.text if token else "end of statement"
            raise ProgramSyntaxError(self.line, f"expected {text!r}, found {found!r}")
        self.pos += 1

    def at_op(self, *texts: str) -> bool:
        token = self.peek()
        return token is not None and token.kind == "OP" and token.text in texts

    def statement(self) -> tuple[str, Expr]:
        token = self.advance()
        if token.kind != "IDENT":
            raise ProgramSyntaxError(self.line, f"statement must start with a target name, found {token.text!r}")
        if "." in token.text:
            raise DisallowedConstruct(self.line, "attribute assignment")
        target = token.text
        nxt = self.peek()
        if nxt is not None and nxt.kind == "OP" and nxt.text == "==":
            raise ProgramSyntaxError(self.line, "a statement must be an assignment, not a comparison")
        self.expect_op("=")
        expr = self.comparison()
        if self.at_op("="):
            raise DisallowedConstruct(self.line, "multiple assignment targets")
        leftover = self.peek()
        if leftover is not None:
            raise ProgramSyntaxError(self.line, f"unexpected trailing token {leftover.text!r}")
        return target, expr

    def comparison(self) -> Expr:
        self.depth += 1
        if self.depth > MAX_EXPR_DEPTH:
            raise ProgramSyntaxError(self.line, "expression nested too deeply")
        try:
            left = self.additive()
            if self.at_op(">", "<", ">=", "<=", "=="):
                op = self.advance().text
                right = self.additive()
                if self.at_op(">", "<", ">=", "<=", "=="):
                    raise ProgramSyntaxError(self.line, "chained comparisons are not supported")
                return BinOp(op, left, right, self.line)
            return left
        finally:
            self.depth -= 1

    def additive(self) -> Expr:
        left = self.multiplicative()
        while self.at_op("+", "-"):
            op = self.advance().text
            left = BinOp(op, left, self.multiplicative(), self.line)
        return left

    def multiplicative(self) -> Expr:
        left = self.unary()
        while self.at_op("*", "/"):
            op = self.advance().text
            left = BinOp(op, left, self.unary(), self.line)
        return left

    def unary(self) -> Expr:
        if self.at_op("-"):
            self.depth += 1
            if self.depth > MAX_EXPR_DEPTH:
                raise ProgramSyntaxError(self.line, "expression nested too deeply")
            try:
                self.advance()
                return Neg(self.unary(), self.line)
            finally:
                self.depth -= 1
        return self.postfix()

    def postfix(self) -> Expr:
        node = self.primary()
        while self.at_op("["):
            self.advance()
            index = self.comparison()
            self.expect_op("]")
            node = Index(node, index, self.line)
        return node

    def primary(self) -> Expr:
        token = self.advance()
        if token.kind == "NUMBER":
            return NumberLit(float(token.text), self.line)
        if token.kind == "STRING":
            return StringLit(token.text, self.line)
        if token.kind == "IDENT":
            name = token.text
            if name in ("True", "False"):
                return BoolLit(name == "True", self.line)
            if name in RESERVED_WORDS:
                raise DisallowedConstruct(self.line, f"keyword {name!r}")
            if self.at_op("("):
                self.advance()
                args = []
                if not self.at_op(")"):
                    args.append(self.comparison())
                    while self.at_op(","):
                        self.advance()
                        args.append(self.comparison())
                self.expect_op(")")
                if name not in BUILTIN_WHITELIST:
                    raise UnknownBuiltin(self.line, name)
                return Call(name, tuple(args), self.line)
            if "." in name:
                raise ProgramSyntaxError(self.line, f"builtin {name!r} can only be called")
            return VarRef(name, self.line)
        if token.kind == "OP" and token.text == "[":
            items = []
            if not self.at_op("]"):
                items.append(self.comparison())
                while self.at_op(","):
                    self.advance()
                    items.append(self.comparison())
            self.expect_op("]")
            return ListLit(tuple(items), self.line)
        if token.kind == "OP" and token.text == "(":
            inner = self.comparison()
            self.expect_op(")")
            return inner
        raise ProgramSyntaxError(self.line, f"unexpected token {token.text!r}")


def parse_program(text: str) -> Program:
    """Parse program text; statements map 1:1 to non-comment source lines."""
    statements = []
    for lineno, stmt_text, comment in _split_statements(text):
        tokens = _tokenize(stmt_text, lineno)
        if not tokens:
            continue
        for token in tokens:
            if token.kind == "IDENT" and token.text in RESERVED_WORDS:
                raise DisallowedConstruct(lineno, f"keyword {token.text!r}")
        parser = _Parser(tokens, lineno)
        target, expr = parser.statement()
        statements.append(Statement(target=target, expr=expr, line=lineno, comment=comment))
    if not statements:
        raise ProgramSyntaxError(1, "program has no statements")
    return Program(statements=tuple(statements))


@dataclass(frozen=True)
class CheckResult:
    """Classification of program text without executing it."""

    kind: str  # "ok" | "syntax" | "disallowed" | "unknown-builtin"
    line: int | None = None
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.kind == "ok"


def check_program(text: str) -> CheckResult:
    """Classify program text as ok / syntax / disallowed / unknown-builtin."""
    try:
        parse_program(text)
    except DisallowedConstruct as exc:
        return CheckResult("disallowed", exc.line, str(exc))
    except UnknownBuiltin as exc:
        return CheckResult("unknown-builtin", exc.line, str(exc))
    except PotParseError as exc:
        return CheckResult("syntax", exc.line, str(exc))
    return CheckResult("ok")


# ---------------------------------------------------------------------------
# Values


def kind_of(value: Value) -> str:
    if isinstance(value, bool):
        return "Bool"
    if isinstance(value, float):
        return "Num"
    if isinstance(value, str):
        return "Str"
    if isinstance(value, tuple):
        return "Tuple"
    if isinstance(value, list):
        if not value:
            return "NumArray"
        first = value[0]
        if isinstance(first, bool):
            return "BoolArray"
        if isinstance(first, float):
            return "NumArray"
        return "StrArray"
    raise TypeError(f"not a program value: {value!r}")


def value_summary(value: Value) -> str:
    kind = kind_of(value)
    if kind in ("NumArray", "BoolArray", "StrArray"):
        return f"{kind}[{len(value)}]"
    if kind == "Tuple":
        return f"Tuple({len(value)})"
    return f"{kind}({render_answer(value)})"


def _display_float(x: float) -> str:
    # 12 significant digits hide accumulation noise far below the 1e-12
    # tolerance used everywhere else, then shortest round-trip form
    if x != x or x in (float("inf"), float("-inf")):
        return str(x)
    rounded = float(f"{x:.12g}")
    if rounded == int(rounded) and abs(rounded) < 1e16:
        return str(int(rounded))
    return repr(rounded)


def render_answer(value: Value) -> str:
    """Text form of a value for printing and answer matching.

    Booleans render as ``Yes`` / ``No`` to align with chart-QA gold style;
    numbers use shortest round-trip decimals at 12 significant digits with
    integer values stripped of ``.0``.
    """
    if isinstance(value, bool):
        return "Yes" if value else "No"
    if isinstance(value, float):
        return _display_float(value)
    if isinstance(value, str):
        return value
    if isinstance(value, list):
        return "[" + ", ".join(_render_element(v) for v in value) + "]"
    if isinstance(value, tuple):
        return "(" + ", ".join(_render_element(v) for v in value) + ")"
    raise TypeError(f"not a program value: {value!r}")


def _render_element(value: Value) -> str:
    if isinstance(value, bool):
        return "True" if value else "False"
    if isinstance(value, float):
        return _display_float(value)
    if isinstance(value, str):
        return repr(value)
    return render_answer(value)


# ---------------------------------------------------------------------------
# Evaluator


@dataclass
class ExecResult:
    answer: Value
    env: dict[str, Value]
    trace: list[tuple[str, str]] = field(default_factory=list)


def _as_number(value: Value, op: str, line: int) -> float:
    if isinstance(value, bool):
        return 1.0 if value else 0.0
    if isinstance(value, float):
        return value
    raise TypeMismatch(op, kind_of(value), line)


def _numeric_array(value: Value, op: str, line: int) -> list[float]:
    if isinstance(value, list):
        kind = kind_of(value)
        if kind == "NumArray":
            return value
        if kind == "BoolArray":
            return [1.0 if v else 0.0 for v in value]
        raise TypeMismatch(op, kind, line)
    raise TypeMismatch(op, kind_of(value), line)


def _array_or_scalar_numbers(value: Value, op: str, line: int) -> list[float]:
    if isinstance(value, list):
        return _numeric_array(value, op, line)
    return [_as_number(value, op, line)]


def _require_nonempty(xs: list, op: str, line: int) -> None:
    if not xs:
        raise TypeMismatch(op, "empty array", line)


def _fold_sum(xs: list[float]) -> float:
    total = 0.0
    for v in xs:
        total += v
    return total


def _first_extremum(xs: list[float], better) -> int:
    best = 0
    for i in range(1, len(xs)):
        if better(xs[i], xs[best]):
            best = i
    return best


def _elementwise(op: str, lhs: Value, rhs: Value, line: int, fn) -> Value:
    lhs_is_arr = isinstance(lhs, list)
    rhs_is_arr = isinstance(rhs, list)
    if lhs_is_arr and rhs_is_arr:
        a = _numeric_array(lhs, op, line)
        b = _numeric_array(rhs, op, line)
        if len(a) != len(b):
            raise TypeMismatch(op, f"arrays of lengths {len(a)} and {len(b)}", line)
        return [fn(x, y) for x, y in zip(a, b)]
    if lhs_is_arr:
        a = _numeric_array(lhs, op, line)
        y = _as_number(rhs, op, line)
        return [fn(x, y) for x in a]
    if rhs_is_arr:
        x = _as_number(lhs, op, line)
        b = _numeric_array(rhs, op, line)
        return [fn(x, y) for y in b]
    return fn(_as_number(lhs, op, line), _as_number(rhs, op, line))


def _checked_div(x: float, y: float, line: int) -> float:
    if y == 0.0:
        raise DivisionByZero(line)
    return x / y


def _equality(lhs: Value, rhs: Value, line: int) -> Value:
    if isinstance(lhs, list) or isinstance(rhs, list):
        a = lhs if isinstance(lhs, list) else [lhs] * len(rhs)
        b = rhs if isinstance(rhs, list) else [rhs] * len(lhs)
        if len(a) != len(b):
            raise TypeMismatch("==", f"arrays of lengths {len(a)} and {len(b)}", line)
        return [bool(_scalar_eq(x, y)) for x, y in zip(a, b)]
    return _scalar_eq(lhs, rhs)


def _scalar_eq(x: Value, y: Value) -> bool:
    x_num = isinstance(x, (bool, float))
    y_num = isinstance(y, (bool, float))
    if x_num and y_num:
        return float(x) == float(y)
    if isinstance(x, str) and isinstance(y, str):
        return x == y
    return False


def _truthy(value: Value, op: str, line: int) -> bool:
    if isinstance(value, bool):
        return value
    if isinstance(value, float):
        return value != 0.0
    raise TypeMismatch(op, kind_of(value), line)


class _Evaluator:
    def __init__(self, env: dict[str, Value], max_elements: int):
        self.env = env
        self.max_elements = max_elements

    def eval(self, node: Expr) -> Value:
        method = getattr(self, "_eval_" + type(node).__name__)
        return method(node)

    def _eval_NumberLit(self, node: NumberLit) -> Value:
        return node.value

    def _eval_StringLit(self, node: StringLit) -> Value:
        return node.value

    def _eval_BoolLit(self, node: BoolLit) -> Value:
        return node.value

    def _eval_ListLit(self, node: ListLit) -> Value:
        if len(node.items) > self.max_elements:
            raise ElementLimitExceeded(node.line, f"list of {len(node.items)} elements")
        items = [self.eval(item) for item in node.items]
        kinds = {kind_of(v) for v in items}
        if not items:
            return []
        if kinds <= {"Num", "Bool"} and "Num" in kinds:
            return [float(v) for v in items]
        if len(kinds) > 1:
            raise TypeMismatch("list literal", " and ".join(sorted(kinds)), node.line)
        kind = kinds.pop()
        if kind not in ("Num", "Str", "Bool"):
            raise TypeMismatch("list literal", kind, node.line)
        return list(items)

    def _eval_VarRef(self, node: VarRef) -> Value:
        if node.name not in self.env:
            raise UndefinedVariable(node.name, node.line)
        return self.env[node.name]

    def _eval_Neg(self, node: Neg) -> Value:
        value = self.eval(node.operand)
        if isinstance(value, list):
            return [-x for x in _numeric_array(value, "unary -", node.line)]
        return -_as_number(value, "unary -", node.line)

    def _eval_BinOp(self, node: BinOp) -> Value:
        lhs = self.eval(node.lhs)
        rhs = self.eval(node.rhs)
        op, line = node.op, node.line
        if op == "+":
            return _elementwise(op, lhs, rhs, line, lambda x, y: x + y)
        if op == "-":
            return _elementwise(op, lhs, rhs, line, lambda x, y: x - y)
        if op == "*":
            return _elementwise(op, lhs, rhs, line, lambda x, y: x * y)
        if op == "/":
            return _elementwise(op, lhs, rhs, line, lambda x, y: _checked_div(x, y, line))
        if op == "==":
            return _equality(lhs, rhs, line)
        cmp = {
            ">": lambda x, y: x > y,
            "<": lambda x, y: x < y,
            ">=": lambda x, y: x >= y,
            "<=": lambda x, y: x <= y,
        }[op]
        result = _elementwise(op, lhs, rhs, line, lambda x, y: bool(cmp(x, y)))
        return result

    def _eval_Index(self, node: Index) -> Value:
        base = self.eval(node.base)
        index = self.eval(node.index)
        line = node.line
        if isinstance(base, tuple):
            i = self._integral_index(index, line)
            if not -len(base) <= i < len(base):
                raise IndexOutOfBounds(line, f"index {i} into tuple of {len(base)}")
            return base[i]
        if isinstance(base, list):
            if isinstance(index, list):
                if kind_of(index) == "BoolArray":
                    if len(index) != len(base):
                        raise TypeMismatch(
                            "index", f"mask of length {len(index)} over array of {len(base)}", line
                        )
                    return [v for v, keep in zip(base, index) if keep]
                positions = [self._integral_index(v, line) for v in _numeric_array(index, "index", line)]
                out = []
                for i in positions:
                    if not -len(base) <= i < len(base):
                        raise IndexOutOfBounds(line, f"index {i} into array of {len(base)}")
                    out.append(base[i])
                return out
            i = self._integral_index(index, line)
            if not -len(base) <= i < len(base):
                raise IndexOutOfBounds(line, f"index {i} into array of {len(base)}")
            return base[i]
        raise TypeMismatch("indexing", kind_of(base), line)

    def _integral_index(self, value: Value, line: int) -> int:
        number = _as_number(value, "index", line)
        if number != int(number):
            raise TypeMismatch("index", f"non-integer {number}", line)
        return int(number)

    def _eval_Call(self, node: Call) -> Value:
        args = [self.eval(arg) for arg in node.args]
        handler = _BUILTINS[node.name]
        return handler(self, args, node.line)


def _arity(name: str, args: list, n: int, line: int) -> None:
    if len(args) != n:
        raise TypeMismatch(name, f"{len(args)} arguments, expected {n}", line)


def _builtin_len(ev, args, line):
    _arity("len", args, 1, line)
    value = args[0]
    if isinstance(value, (list, tuple, str)):
        return float(len(value))
    raise TypeMismatch("len", kind_of(value), line)


def _builtin_all(ev, args, line):
    _arity("all", args, 1, line)
    value = args[0]
    if isinstance(value, list):
        return all(_truthy(v, "all", line) for v in value)
    return _truthy(value, "all", line)


def _builtin_any(ev, args, line):
    _arity("any", args, 1, line)
    value = args[0]
    if isinstance(value, list):
        return any(_truthy(v, "any", line) for v in value)
    return _truthy(value, "any", line)


def _builtin_index(ev, args, line):
    _arity("index", args, 2, line)
    xs, needle = args
    if not isinstance(xs, list):
        raise TypeMismatch("index", kind_of(xs), line)
    for i, v in enumerate(xs):
        if _scalar_eq(v, needle):
            return float(i)
    raise NotFound(line, f"value {needle!r} not found")


def _builtin_sort(ev, args, line):
    _arity("np.sort", args, 1, line)
    return sorted(_array_or_scalar_numbers(args[0], "np.sort", line))


def _builtin_abs(ev, args, line):
    _arity("np.abs", args, 1, line)
    value = args[0]
    if isinstance(value, list):
        return [abs(x) for x in _numeric_array(value, "np.abs", line)]
    return abs(_as_number(value, "np.abs", line))


def _builtin_diff(ev, args, line):
    _arity("np.diff", args, 1, line)
    xs = _numeric_array(args[0], "np.diff", line) if isinstance(args[0], list) else None
    if xs is None:
        raise TypeMismatch("np.diff", kind_of(args[0]), line)
    return [xs[i + 1] - xs[i] for i in range(len(xs) - 1)]


def _reduction(name, pick):
    def handler(ev, args, line):
        _arity(name, args, 1, line)
        value = args[0]
        if isinstance(value, list):
            xs = _numeric_array(value, name, line)
        else:
            xs = [_as_number(value, name, line)]  # scalars act as 1-element arrays
        return pick(xs, line)
    return handler


def _sum_impl(xs, line):
    return _fold_sum(xs)


def _mean_impl(xs, line):
    _require_nonempty(xs, "np.mean", line)
    return _fold_sum(xs) / float(len(xs))


def _median_impl(xs, line):
    _require_nonempty(xs, "np.median", line)
    ordered = sorted(xs)
    mid = len(ordered) // 2
    if len(ordered) % 2:
        return ordered[mid]
    return (ordered[mid - 1] + ordered[mid]) / 2.0


def _max_impl(xs, line):
    _require_nonempty(xs, "np.max", line)
    return xs[_first_extremum(xs, lambda a, b: a > b)]


def _min_impl(xs, line):
    _require_nonempty(xs, "np.min", line)
    return xs[_first_extremum(xs, lambda a, b: a < b)]


def _argmax_impl(xs, line):
    _require_nonempty(xs, "np.argmax", line)
    return float(_first_extremum(xs, lambda a, b: a > b))


def _argmin_impl(xs, line):
    _require_nonempty(xs, "np.argmin", line)
    return float(_first_extremum(xs, lambda a, b: a < b))


def _binary_numeric(name, fn):
    def handler(ev, args, line):
        _arity(name, args, 2, line)
        return _elementwise(name, args[0], args[1], line, lambda x, y: fn(x, y, line))
    return handler


def _comparison_builtin(name, fn):
    def handler(ev, args, line):
        _arity(name, args, 2, line)
        return _elementwise(name, args[0], args[1], line, lambda x, y: bool(fn(x, y)))
    return handler


def _builtin_count_nonzero(ev, args, line):
    _arity("np.count_nonzero", args, 1, line)
    value = args[0]
    if isinstance(value, list):
        return float(sum(1 for v in value if _truthy(v, "np.count_nonzero", line)))
    return 1.0 if _truthy(value, "np.count_nonzero", line) else 0.0


def _builtin_where(ev, args, line):
    _arity("np.where", args, 1, line)
    value = args[0]
    if not isinstance(value, list):
        raise TypeMismatch("np.where", kind_of(value), line)
    positions = [float(i) for i, v in enumerate(value) if _truthy(v, "np.where", line)]
    return (positions,)


def _builtin_array(ev, args, line):
    _arity("np.array", args, 1, line)
    value = args[0]
    if isinstance(value, (list, float, bool)):
        return value
    raise TypeMismatch("np.array", kind_of(value), line)


_BUILTINS = {
    "len": _builtin_len,
    "all": _builtin_all,
    "any": _builtin_any,
    "index": _builtin_index,
    "np.sort": _builtin_sort,
    "np.abs": _builtin_abs,
    "np.add": _binary_numeric("np.add", lambda x, y, line: x + y),
    "np.argmax": _reduction("np.argmax", _argmax_impl),
    "np.argmin": _reduction("np.argmin", _argmin_impl),
    "np.diff": _builtin_diff,
    "np.divide": _binary_numeric("np.divide", _checked_div),
    "np.greater": _comparison_builtin("np.greater", lambda x, y: x > y),
    "np.greater_equal": _comparison_builtin("np.greater_equal", lambda x, y: x >= y),
    "np.less": _comparison_builtin("np.less", lambda x, y: x < y),
    "np.max": _reduction("np.max", _max_impl),
    "np.mean": _reduction("np.mean", _mean_impl),
    "np.median": _reduction("np.median", _median_impl),
    "np.min": _reduction("np.min", _min_impl),
    "np.subtract": _binary_numeric("np.subtract", lambda x, y, line: x - y),
    "np.sum": _reduction("np.sum", _sum_impl),
    "np.count_nonzero": _builtin_count_nonzero,
    "np.where": _builtin_where,
    "np.array": _builtin_array,
}

assert set(_BUILTINS) == set(BUILTIN_WHITELIST)


def execute(
    program: Program,
    *,
    max_statements: int = DEFAULT_MAX_STATEMENTS,
    max_elements: int = DEFAULT_MAX_ELEMENTS,
) -> ExecResult:
    """Run statements in order and return the final ``Answer`` binding.

    Re-assignment shadows earlier bindings.  Raises the ``PotRuntimeError``
    subclasses documented in the module docstring; :class:`MissingAnswer`
    if no statement assigns ``Answer``.
    """
    if len(program.statements) > max_statements:
        raise StatementLimitExceeded(
            None, f"{len(program.statements)} statements exceed the limit of {max_statements}"
        )
    env: dict[str, Value] = {}
    trace: list[tuple[str, str]] = []
    evaluator = _Evaluator(env, max_elements)
    for statement in program.statements:
        value = evaluator.eval(statement.expr)
        env[statement.target] = value
        trace.append((statement.target, value_summary(value)))
    if "Answer" not in env:
        raise MissingAnswer()
    return ExecResult(answer=env["Answer"], env=env, trace=trace)


def execute_text(text: str, **limits) -> ExecResult:
    """Parse then execute program text."""
    return execute(parse_program(text), **limits)
