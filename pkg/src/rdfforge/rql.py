"""The resource query language used by the list endpoints.

Grammar (`;` binds tighter than `,`):

    or    := and (',' and)*
    and   := comp (';' comp)*
    comp  := '(' or ')' | selector op args
    args  := value | '(' value (',' value)* ')'

Operators: ``==  !=  <  >  <=  >=  =in=  =out=  =regex=  =lang=``.
Values are unquoted tokens or single/double-quoted strings; selectors are the
camelCase attribute names of the queried entities.  `=in=` and `=out=` accept
both the parenthesized list form and a bare single value.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Union


class RqlError(ValueError):
    """Parse or evaluation failure; maps to a client error at the API layer."""


class RqlOp(enum.Enum):
    EQ = "=="
    NE = "!="
    LT = "<"
    GT = ">"
    LE = "<="
    GE = ">="
    IN = "=in="
    OUT = "=out="
    REGEX = "=regex="
    LANG = "=lang="


_LIST_OPS = (RqlOp.IN, RqlOp.OUT)
_ORDER_OPS = (RqlOp.LT, RqlOp.GT, RqlOp.LE, RqlOp.GE)


@dataclass(frozen=True)
class Comparison:
    selector: str
    op: RqlOp
    args: tuple[str, ...]

    def __post_init__(self):
        if not self.args:
            raise RqlError("comparison needs at least one argument")
        if self.op not in _LIST_OPS and len(self.args) != 1:
            raise RqlError(f"operator {self.op.value} takes exactly one argument")


@dataclass(frozen=True)
class And:
    children: tuple["RqlExpr", ...]

    def __post_init__(self):
        if len(self.children) < 2:
            raise RqlError("conjunction needs at least two operands")


@dataclass(frozen=True)
class Or:
    children: tuple["RqlExpr", ...]

    def __post_init__(self):
        if len(self.children) < 2:
            raise RqlError("disjunction needs at least two operands")


RqlExpr = Union[Comparison, And, Or]

_SELECTOR_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_WORD_OP_RE = re.compile(r"=([A-Za-z]+)=")
_UNQUOTED_RE = re.compile(r"""[^,;()'"=<>!\s]+""")
_WORD_OPS = {"in": RqlOp.IN, "out": RqlOp.OUT, "regex": RqlOp.REGEX, "lang": RqlOp.LANG}


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.i = 0

    def error(self, message: str) -> RqlError:
        return RqlError(f"{message} (at position {self.i})")

    def eof(self) -> bool:
        return self.i >= len(self.text)

    def peek(self) -> str:
        return self.text[self.i] if self.i < len(self.text) else ""

    def parse(self) -> RqlExpr:
        expr = self.parse_or()
        if not self.eof():
            raise self.error(f"unexpected {self.peek()!r}")
        return expr

    def parse_or(self) -> RqlExpr:
        nodes = [self.parse_and()]
        while self.peek() == ",":
            self.i += 1
            nodes.append(self.parse_and())
        return nodes[0] if len(nodes) == 1 else Or(tuple(nodes))

    def parse_and(self) -> RqlExpr:
        nodes = [self.parse_comp()]
        while self.peek() == ";":
            self.i += 1
            nodes.append(self.parse_comp())
        return nodes[0] if len(nodes) == 1 else And(tuple(nodes))

    def parse_comp(self) -> RqlExpr:
        if self.peek() == "(":
            self.i += 1
            expr = self.parse_or()
            if self.peek() != ")":
                raise self.error("expected ')'")
            self.i += 1
            return expr
        m = _SELECTOR_RE.match(self.text, self.i)
        if not m:
            raise self.error("expected attribute name")
        selector = m.group(0)
        self.i = m.end()
        op = self.parse_op()
        args = self.parse_args(op)
        return Comparison(selector, op, args)

    def parse_op(self) -> RqlOp:
        for token, op in (("==", RqlOp.EQ), ("!=", RqlOp.NE),
                          ("<=", RqlOp.LE), (">=", RqlOp.GE),
                          ("<", RqlOp.LT), (">", RqlOp.GT)):
            if self.text.startswith(token, self.i):
                self.i += len(token)
                return op
        m = _WORD_OP_RE.match(self.text, self.i)
        if m:
            word = m.group(1).lower()
            if word not in _WORD_OPS:
                raise self.error(f"unknown operator ={word}=")
            self.i = m.end()
            return _WORD_OPS[word]
        raise self.error("expected comparison operator")

    def parse_args(self, op: RqlOp) -> tuple[str, ...]:
        if self.peek() == "(":
            self.i += 1
            values = [self.parse_value()]
            while self.peek() == ",":
                self.i += 1
                values.append(self.parse_value())
            if self.peek() != ")":
                raise self.error("expected ')'")
            self.i += 1
            if op not in _LIST_OPS and len(values) != 1:
                raise self.error(f"operator {op.value} takes exactly one argument")
            return tuple(values)
        return (self.parse_value(),)

    def parse_value(self) -> str:
        c = self.peek()
        if c in "'\"":
            return self.parse_quoted(c)
        m = _UNQUOTED_RE.match(self.text, self.i)
        if not m:
            raise self.error("expected value")
        self.i = m.end()
        return m.group(0)

    def parse_quoted(self, quote: str) -> str:
        i = self.i + 1
        out: list[str] = []
        while i < len(self.text):
            c = self.text[i]
            if c == "\\":
                if i + 1 >= len(self.text):
                    break
                out.append(self.text[i + 1])
                i += 2
                continue
            if c == quote:
                self.i = i + 1
                return "".join(out)
            out.append(c)
            i += 1
        raise self.error("unterminated quoted value")


def parse_rql(text: str) -> RqlExpr:
    if not text.strip():
        raise RqlError("empty filter expression")
    return _Parser(text.strip()).parse()


# --- printing ------------------------------------------------------------------

def _print_value(value: str) -> str:
    if value and _UNQUOTED_RE.fullmatch(value):
        return value
    return "'" + value.replace("\\", "\\\\").replace("'", "\\'") + "'"


def print_rql(expr: RqlExpr) -> str:
    """Canonical text form; parse_rql(print_rql(e)) is structurally e."""
    if isinstance(expr, Comparison):
        if expr.op in _LIST_OPS:
            args = "(" + ",".join(_print_value(v) for v in expr.args) + ")"
        else:
            args = _print_value(expr.args[0])
        return f"{expr.selector}{expr.op.value}{args}"
    sep = ";" if isinstance(expr, And) else ","
    parts = [
        p if isinstance(child, Comparison) else f"({p})"
        for child, p in ((c, print_rql(c)) for c in expr.children)
    ]
    return sep.join(parts)


# --- evaluation ------------------------------------------------------------------

def evaluate(expr: RqlExpr, entity: dict) -> bool:
    """Whether the entity satisfies the filter.

    Attribute values come straight from the database row plus its joined
    lists, so scalars are None/int/float/str and lists hold ids, plain
    values or {"string", "lang"} objects.
    """
    if isinstance(expr, And):
        return all(evaluate(c, entity) for c in expr.children)
    if isinstance(expr, Or):
        return any(evaluate(c, entity) for c in expr.children)
    return _compare(expr, entity)


def _compare(comp: Comparison, entity: dict) -> bool:
    if comp.selector not in entity:
        raise RqlError(f"unknown attribute {comp.selector!r}")
    value = entity[comp.selector]
    op = comp.op

    if op == RqlOp.LANG:
        if not isinstance(value, list) or not all(isinstance(e, dict) for e in value):
            raise RqlError(f"=lang= needs a language-string attribute, not {comp.selector!r}")
        tag = comp.args[0].lower()
        return any(e.get("lang") == tag for e in value)

    if op == RqlOp.REGEX:
        try:
            pattern = re.compile(comp.args[0])
        except re.error as exc:
            raise RqlError(f"invalid regular expression: {exc}") from exc
        if isinstance(value, list):
            return any(pattern.search(_element_text(e)) is not None for e in value)
        if value is None:
            return False
        if not isinstance(value, str):
            raise RqlError(f"=regex= needs a string attribute, not {comp.selector!r}")
        return pattern.search(value) is not None

    if op in _ORDER_OPS:
        if isinstance(value, list):
            raise RqlError(f"ordering comparison on list attribute {comp.selector!r}")
        if value is None:
            return False
        other = _coerce_arg(value, comp.args[0])
        return {"<": value < other, ">": value > other,
                "<=": value <= other, ">=": value >= other}[op.value]

    if op == RqlOp.EQ:
        return _any_match(value, comp.args)
    if op == RqlOp.NE:
        return not _any_match(value, comp.args)
    if op == RqlOp.IN:
        return _any_match(value, comp.args)
    if op == RqlOp.OUT:
        return not _any_match(value, comp.args)
    raise RqlError(f"unsupported operator {op}")


def _element_text(element) -> str:
    if isinstance(element, dict):
        return element.get("string", "")
    return element if isinstance(element, str) else str(element)


def _any_match(value, args: tuple[str, ...]) -> bool:
    if isinstance(value, list):
        return any(_scalar_equals(e, a) for e in value for a in args)
    return any(_scalar_equals(value, a) for a in args)


def _scalar_equals(value, arg: str) -> bool:
    if value is None:
        return False
    if isinstance(value, dict):
        return value.get("string") == arg
    if isinstance(value, (int, float)):
        # a non-numeric argument simply cannot equal a numeric value
        try:
            return float(value) == float(arg)
        except ValueError:
            return False
    return value == arg


def _coerce_arg(value, arg: str):
    if isinstance(value, (int, float)):
        try:
            return float(arg)
        except ValueError as exc:
            raise RqlError(f"numeric attribute compared with non-number {arg!r}") from exc
    return arg
