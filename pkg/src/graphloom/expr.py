"""Function specification: standard reducers plus a small expression language.

Derivation and filtering accept either a *standard* function (count, sum,
mean, ...) or a *custom* expression in a sandboxed mini-language:

    literals        3.5  "text"  true  false  null
    row lookup      row.attr   row["attr with spaces"]
    reduction input values
    arithmetic      + - * / %          (numbers only)
    comparison      = != < <= > >=     (core compare semantics)
    boolean         and  or  not
    conditional     if c then a else b
    reducers        count(e) sum(e) mean(e) median(e) mode(e)
                    concat(e) min(e) max(e) any(e) all(e)
    list transforms filter(e, v -> p)   map(e, v -> e2)

There are no loops, assignments, or host calls: every expression is total
and deterministic. Runtime type errors produce null plus a warning rather
than aborting a batch.
"""

from __future__ import annotations

import functools
import re
from dataclasses import dataclass
from typing import Callable, Optional

from graphloom.errors import ExprError
from graphloom.values import (
    Kind,
    Ordering,
    Value,
    compare,
    kind_of,
    normalize,
    to_text,
    value_key,
)

# --------------------------------------------------------------------------
# Specs
# --------------------------------------------------------------------------

STANDARD_REDUCERS = (
    "count",
    "sum",
    "mean",
    "median",
    "mode",
    "concat",
    "min",
    "max",
    "any",
    "all",
)

COMPARE_OPS = ("<", "<=", ">", ">=", "=", "!=")


@dataclass(frozen=True)
class ExprSpec:
    """Either a standard reducer by name or custom expression source."""

    reducer: Optional[str] = None
    source: Optional[str] = None

    def __post_init__(self):
        if (self.reducer is None) == (self.source is None):
            raise ExprError("expression spec needs exactly one of reducer/source")
        if self.reducer is not None and self.reducer not in STANDARD_REDUCERS:
            raise ExprError(f"unknown standard reducer: {self.reducer}")

    @staticmethod
    def standard(name: str) -> "ExprSpec":
        return ExprSpec(reducer=name)

    @staticmethod
    def custom(source: str) -> "ExprSpec":
        parse(source)  # must parse before acceptance
        return ExprSpec(source=source)


@dataclass(frozen=True)
class PredicateSpec:
    """Attribute comparison against a literal, or a custom boolean expression."""

    attr: Optional[str] = None
    op: Optional[str] = None
    literal: Value = None
    source: Optional[str] = None

    def __post_init__(self):
        if self.source is not None:
            if self.attr is not None or self.op is not None:
                raise ExprError("custom predicate takes no comparison fields")
        else:
            if self.attr is None or self.op is None:
                raise ExprError("comparison predicate needs attr and op")
            if self.op not in COMPARE_OPS:
                raise ExprError(f"unknown comparison operator: {self.op}")

    @staticmethod
    def comparison(attr: str, op: str, literal: Value) -> "PredicateSpec":
        return PredicateSpec(attr=attr, op=op, literal=normalize(literal))

    @staticmethod
    def custom(source: str) -> "PredicateSpec":
        parse(source)
        return PredicateSpec(source=source)


# --------------------------------------------------------------------------
# Tokenizer
# --------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>"(\\.|[^"\\])*")
  | (?P<op>->|<=|>=|!=|[+\-*/%=<>()\[\],.])
    """,
    re.VERBOSE,
)

_KEYWORDS = {"if", "then", "else", "and", "or", "not", "true", "false", "null"}


@dataclass(frozen=True)
class _Token:
    kind: str  # number | ident | string | op | keyword | eof
    text: str
    pos: int  # 1-based column


def _tokenize(source: str) -> list[_Token]:
    tokens: list[_Token] = []
    i = 0
    while i < len(source):
        m = _TOKEN_RE.match(source, i)
        if not m:
            raise ExprError(f"unexpected character {source[i]!r}", position=i + 1)
        i = m.end()
        if m.lastgroup == "ws":
            continue
        text = m.group()
        kind = m.lastgroup
        if kind == "ident" and text in _KEYWORDS:
            kind = "keyword"
        tokens.append(_Token(kind, text, m.start() + 1))
    tokens.append(_Token("eof", "", tokens[-1].pos if tokens else 1))
    return tokens


# --------------------------------------------------------------------------
# AST
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Lit:
    value: Value


@dataclass(frozen=True)
class Attr:
    name: str


@dataclass(frozen=True)
class Values:
    pass


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str
    operand: object


@dataclass(frozen=True)
class Binary:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class If:
    cond: object
    then: object
    other: object


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


@dataclass(frozen=True)
class Lambda:
    param: str
    body: object


_CALLABLES = set(STANDARD_REDUCERS) | {"filter", "map"}


class _Parser:
    def __init__(self, source: str):
        self.tokens = _tokenize(source)
        self.i = 0

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        tok = self.tokens[self.i]
        if tok.kind != "eof":
            self.i += 1
        return tok

    def fail(self, message: str) -> None:
        raise ExprError(message, position=self.peek().pos)

    def expect(self, kind: str, text: str | None = None) -> _Token:
        tok = self.peek()
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text or kind
            self.fail(f"expected {want}, found {tok.text or 'end of input'}")
        return self.advance()

    def parse(self):
        tree = self.expr()
        if self.peek().kind != "eof":
            self.fail(f"unexpected trailing {self.peek().text!r}")
        return tree

    def expr(self):
        if self.peek().kind == "keyword" and self.peek().text == "if":
            self.advance()
            cond = self.expr()
            self.expect("keyword", "then")
            then = self.expr()
            self.expect("keyword", "else")
            other = self.expr()
            return If(cond, then, other)
        return self.or_expr()

    def or_expr(self):
        left = self.and_expr()
        while self.peek().kind == "keyword" and self.peek().text == "or":
            self.advance()
            left = Binary("or", left, self.and_expr())
        return left

    def and_expr(self):
        left = self.not_expr()
        while self.peek().kind == "keyword" and self.peek().text == "and":
            self.advance()
            left = Binary("and", left, self.not_expr())
        return left

    def not_expr(self):
        if self.peek().kind == "keyword" and self.peek().text == "not":
            self.advance()
            return Unary("not", self.not_expr())
        return self.comparison()

    def comparison(self):
        left = self.additive()
        tok = self.peek()
        if tok.kind == "op" and tok.text in COMPARE_OPS:
            self.advance()
            return Binary(tok.text, left, self.additive())
        return left

    def additive(self):
        left = self.multiplicative()
        while self.peek().kind == "op" and self.peek().text in ("+", "-"):
            op = self.advance().text
            left = Binary(op, left, self.multiplicative())
        return left

    def multiplicative(self):
        left = self.unary()
        while self.peek().kind == "op" and self.peek().text in ("*", "/", "%"):
            op = self.advance().text
            left = Binary(op, left, self.unary())
        return left

    def unary(self):
        if self.peek().kind == "op" and self.peek().text == "-":
            self.advance()
            return Unary("-", self.unary())
        return self.postfix()

    def postfix(self):
        base = self.primary()
        while True:
            tok = self.peek()
            if tok.kind == "op" and tok.text == ".":
                self.advance()
                name = self.expect("ident")
                if not isinstance(base, _RowMarker):
                    self.fail("attribute access is only allowed on row")
                base = Attr(name.text)
            elif tok.kind == "op" and tok.text == "[":
                self.advance()
                key = self.expect("string")
                self.expect("op", "]")
                if not isinstance(base, _RowMarker):
                    self.fail("indexing is only allowed on row")
                base = Attr(_unescape(key.text))
            else:
                break
        if isinstance(base, _RowMarker):
            self.fail("row must be followed by an attribute access")
        return base

    def primary(self):
        tok = self.peek()
        if tok.kind == "number":
            self.advance()
            return Lit(float(tok.text))
        if tok.kind == "string":
            self.advance()
            return Lit(_unescape(tok.text))
        if tok.kind == "keyword" and tok.text in ("true", "false", "null"):
            self.advance()
            return Lit({"true": True, "false": False, "null": None}[tok.text])
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            inner = self.expr()
            self.expect("op", ")")
            return inner
        if tok.kind == "ident":
            # lambda parameter: IDENT -> expr
            if self.tokens[self.i + 1].kind == "op" and self.tokens[self.i + 1].text == "->":
                name = self.advance().text
                self.advance()  # ->
                return Lambda(name, self.expr())
            if tok.text == "values":
                self.advance()
                return Values()
            if tok.text == "row":
                self.advance()
                return _RowMarker()
            if self.tokens[self.i + 1].kind == "op" and self.tokens[self.i + 1].text == "(":
                name = self.advance().text
                if name not in _CALLABLES:
                    raise ExprError(f"unknown function: {name}", position=tok.pos)
                self.advance()  # (
                args = [self.expr()]
                while self.peek().kind == "op" and self.peek().text == ",":
                    self.advance()
                    args.append(self.expr())
                self.expect("op", ")")
                return Call(name, tuple(args))
            # bare identifier: lambda parameter reference
            self.advance()
            return Var(tok.text)
        self.fail(f"expected an expression, found {tok.text or 'end of input'}")


class _RowMarker:
    """Parse-time placeholder; never escapes the parser."""


def _unescape(quoted: str) -> str:
    body = quoted[1:-1]
    return (
        body.replace("\\\\", "\x00")
        .replace('\\"', '"')
        .replace("\\n", "\n")
        .replace("\\t", "\t")
        .replace("\x00", "\\")
    )


@functools.lru_cache(maxsize=512)
def parse(source: str):
    """Parse custom expression source into an immutable tree."""
    return _Parser(source).parse()


def attr_names(tree) -> set[str]:
    """Row attributes referenced anywhere in the tree (for bind checks)."""
    out: set[str] = set()
    _walk(tree, out)
    return out


def _walk(node, out: set[str]) -> None:
    if isinstance(node, Attr):
        out.add(node.name)
    elif isinstance(node, Unary):
        _walk(node.operand, out)
    elif isinstance(node, Binary):
        _walk(node.left, out)
        _walk(node.right, out)
    elif isinstance(node, If):
        _walk(node.cond, out)
        _walk(node.then, out)
        _walk(node.other, out)
    elif isinstance(node, Call):
        for a in node.args:
            _walk(a, out)
    elif isinstance(node, Lambda):
        _walk(node.body, out)


# --------------------------------------------------------------------------
# Evaluation
# --------------------------------------------------------------------------


class _EvalError(Exception):
    pass


def _numbers(values: list) -> list[float]:
    return [v for v in values if kind_of(v) is Kind.NUMBER]


def _reduce_count(values: list) -> Value:
    return float(len(values))


def _reduce_sum(values: list) -> Value:
    return float(sum(_numbers(values)))


def _reduce_mean(values: list) -> Value:
    nums = _numbers(values)
    return sum(nums) / len(nums) if nums else None


def _reduce_median(values: list) -> Value:
    nums = sorted(_numbers(values))
    if not nums:
        return None
    mid = len(nums) // 2
    if len(nums) % 2:
        return nums[mid]
    return (nums[mid - 1] + nums[mid]) / 2.0


def _reduce_mode(values: list) -> Value:
    counts: dict[tuple, list] = {}
    for v in values:
        if v is None:
            continue
        entry = counts.setdefault(value_key(v), [0, v])
        entry[0] += 1
    if not counts:
        return None
    return max(counts.values(), key=lambda e: e[0])[1]  # first-seen wins ties


def _reduce_concat(values: list) -> Value:
    return ",".join(to_text(v) for v in values if v is not None)


def _reduce_min(values: list) -> Value:
    nums = _numbers(values)
    return min(nums) if nums else None


def _reduce_max(values: list) -> Value:
    nums = _numbers(values)
    return max(nums) if nums else None


def _reduce_any(values: list) -> Value:
    return any(v is True for v in values if isinstance(v, bool))


def _reduce_all(values: list) -> Value:
    return all(v for v in values if isinstance(v, bool))


_REDUCER_FNS: dict[str, Callable[[list], Value]] = {
    "count": _reduce_count,
    "sum": _reduce_sum,
    "mean": _reduce_mean,
    "median": _reduce_median,
    "mode": _reduce_mode,
    "concat": _reduce_concat,
    "min": _reduce_min,
    "max": _reduce_max,
    "any": _reduce_any,
    "all": _reduce_all,
}


def _eval(node, row: dict, values: Value, env: dict):
    if isinstance(node, Lit):
        return node.value
    if isinstance(node, Attr):
        return row.get(node.name) if row is not None else None
    if isinstance(node, Values):
        if values is None:
            raise _EvalError("values is not available here")
        return values
    if isinstance(node, Var):
        if node.name not in env:
            raise _EvalError(f"unknown identifier: {node.name}")
        return env[node.name]
    if isinstance(node, Unary):
        if node.op == "not":
            v = _eval(node.operand, row, values, env)
            if not isinstance(v, bool):
                raise _EvalError("not requires a boolean")
            return not v
        v = _eval(node.operand, row, values, env)
        if kind_of(v) is not Kind.NUMBER:
            raise _EvalError("negation requires a number")
        return -v
    if isinstance(node, Binary):
        return _eval_binary(node, row, values, env)
    if isinstance(node, If):
        cond = _eval(node.cond, row, values, env)
        if not isinstance(cond, bool):
            raise _EvalError("if condition must be boolean")
        branch = node.then if cond else node.other
        return _eval(branch, row, values, env)
    if isinstance(node, Call):
        return _eval_call(node, row, values, env)
    if isinstance(node, Lambda):
        raise _EvalError("lambdas are only allowed inside filter/map")
    raise _EvalError(f"unevaluable node {node!r}")


def _eval_binary(node: Binary, row, values, env):
    op = node.op
    if op == "and":
        left = _eval(node.left, row, values, env)
        if not isinstance(left, bool):
            raise _EvalError("and requires booleans")
        if not left:
            return False
        right = _eval(node.right, row, values, env)
        if not isinstance(right, bool):
            raise _EvalError("and requires booleans")
        return right
    if op == "or":
        left = _eval(node.left, row, values, env)
        if not isinstance(left, bool):
            raise _EvalError("or requires booleans")
        if left:
            return True
        right = _eval(node.right, row, values, env)
        if not isinstance(right, bool):
            raise _EvalError("or requires booleans")
        return right
    left = _eval(node.left, row, values, env)
    right = _eval(node.right, row, values, env)
    if op in COMPARE_OPS:
        return _apply_comparison(op, left, right)
    if kind_of(left) is not Kind.NUMBER or kind_of(right) is not Kind.NUMBER:
        raise _EvalError(f"arithmetic {op} requires numbers")
    if op == "+":
        result = left + right
    elif op == "-":
        result = left - right
    elif op == "*":
        result = left * right
    elif op == "/":
        if right == 0:
            raise _EvalError("division by zero")
        result = left / right
    elif op == "%":
        if right == 0:
            raise _EvalError("modulo by zero")
        result = left % right
    else:
        raise _EvalError(f"unknown operator {op}")
    normalized = normalize(result)
    if normalized is None:
        raise _EvalError("arithmetic overflow")
    return normalized


def _apply_comparison(op: str, left: Value, right: Value) -> bool:
    order = compare(left, right)
    if order is Ordering.INCOMPARABLE:
        return False
    if op == "=":
        return order is Ordering.EQUAL
    if op == "!=":
        return order is not Ordering.EQUAL
    if op == "<":
        return order is Ordering.LESS
    if op == "<=":
        return order in (Ordering.LESS, Ordering.EQUAL)
    if op == ">":
        return order is Ordering.GREATER
    return order in (Ordering.GREATER, Ordering.EQUAL)


def _eval_call(node: Call, row, values, env):
    if node.name in ("filter", "map"):
        if len(node.args) != 2 or not isinstance(node.args[1], Lambda):
            raise _EvalError(f"{node.name} takes a list and a lambda")
        items = _eval(node.args[0], row, values, env)
        if kind_of(items) is not Kind.LIST:
            raise _EvalError(f"{node.name} requires a list")
        fn: Lambda = node.args[1]
        out = []
        for item in items:
            result = _eval(fn.body, row, values, {**env, fn.param: item})
            if node.name == "filter":
                if not isinstance(result, bool):
                    raise _EvalError("filter lambda must return a boolean")
                if result:
                    out.append(item)
            else:
                out.append(result)
        return out
    if len(node.args) != 1:
        raise _EvalError(f"{node.name} takes exactly one list argument")
    items = _eval(node.args[0], row, values, env)
    if kind_of(items) is not Kind.LIST:
        raise _EvalError(f"{node.name} requires a list")
    return _REDUCER_FNS[node.name](items)


def _run(tree, row, values, warn) -> Value:
    try:
        return normalize(_eval(tree, row, values, {}))
    except _EvalError as err:
        if warn is not None:
            warn(f"expression error: {err}")
        return None


def eval_reduce(spec: ExprSpec, values: list, warn=None) -> Value:
    """Reduce a list of collected values to a single value."""
    if spec.reducer is not None:
        return _REDUCER_FNS[spec.reducer](list(values))
    return _run(parse(spec.source), None, list(values), warn)


def eval_row(spec: ExprSpec, row: dict, warn=None) -> Value:
    """Evaluate a custom per-row expression (in-class derivation)."""
    if spec.reducer is None:
        return _run(parse(spec.source), row, None, warn)
    raise ExprError("per-row derivation requires a custom expression")


def eval_predicate(pred: PredicateSpec, row: dict, warn=None) -> bool:
    """Decide a predicate for one row; incomparable or non-boolean is false."""
    if pred.source is None:
        return _apply_comparison(pred.op, row.get(pred.attr), pred.literal)
    result = _run(parse(pred.source), row, None, warn)
    if not isinstance(result, bool):
        if result is not None and warn is not None:
            warn("custom predicate returned a non-boolean; treated as false")
        return False
    return result


def template_for(reducer: str) -> str:
    """Custom source that, unedited, matches the standard reducer."""
    if reducer not in STANDARD_REDUCERS:
        raise ExprError(f"unknown standard reducer: {reducer}")
    return f"{reducer}(values)"
