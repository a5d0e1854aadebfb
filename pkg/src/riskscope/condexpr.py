"""Condition language: boolean expressions over questionnaire answers.

Risk rules and question gates are written in a small infix language and
evaluated with three-valued (strong Kleene) semantics. A question that is
unanswered, or explicitly answered with the unknown marker, makes the
surrounding comparison ``unknown`` instead of collapsing to false, so
missing evidence can still surface a risk downstream.

Grammar (case-sensitive keywords, ASCII only)::

    expr     := or_expr
    or_expr  := and_expr { "or" and_expr }
    and_expr := unary { "and" unary }
    unary    := "not" unary | atom
    atom     := "(" expr ")" | "true" | "false"
              | "unknown(" ID ")" | "answered(" ID ")"
              | ID "==" literal
    literal  := "yes" | "no" | quoted choice token

Question ids match ``[A-Za-z][A-Za-z0-9_.-]*``; the seven keywords are
reserved and cannot be used as question ids.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Mapping, Union

from riskscope.errors import RiskscopeError

#: Canonical answer token meaning "explicitly unknown" (tri-state questions).
UNKNOWN_MARKER = "unknown"

#: Reserved words of the condition language.
KEYWORDS = frozenset({"and", "or", "not", "true", "false", "unknown", "answered"})

QUESTION_ID_RE = re.compile(r"[A-Za-z][A-Za-z0-9_.-]*")


class ConditionParseError(RiskscopeError):
    """Source text does not match the grammar."""

    code = "parse-error"

    def __init__(self, message: str, *, offset: int, expected: frozenset[str] = frozenset()):
        super().__init__(f"{message} at offset {offset}", detail={"offset": offset, "expected": sorted(expected)})
        self.offset = offset
        self.expected = expected


class TypeMismatchError(RiskscopeError):
    """A literal of the wrong kind was compared against a question's answer."""

    code = "type-mismatch"


class TruthValue(str, Enum):
    """Three-valued result of evaluating a condition."""

    YES = "yes"
    NO = "no"
    UNKNOWN = "unknown"

    def and_(self, other: "TruthValue") -> "TruthValue":
        if self is TruthValue.NO or other is TruthValue.NO:
            return TruthValue.NO
        if self is TruthValue.UNKNOWN or other is TruthValue.UNKNOWN:
            return TruthValue.UNKNOWN
        return TruthValue.YES

    def or_(self, other: "TruthValue") -> "TruthValue":
        if self is TruthValue.YES or other is TruthValue.YES:
            return TruthValue.YES
        if self is TruthValue.UNKNOWN or other is TruthValue.UNKNOWN:
            return TruthValue.UNKNOWN
        return TruthValue.NO

    def negate(self) -> "TruthValue":
        if self is TruthValue.YES:
            return TruthValue.NO
        if self is TruthValue.NO:
            return TruthValue.YES
        return TruthValue.UNKNOWN

    @staticmethod
    def from_bool(value: bool) -> "TruthValue":
        return TruthValue.YES if value else TruthValue.NO


# --- Abstract syntax ---------------------------------------------------------


@dataclass(frozen=True)
class AnswerEquals:
    question_id: str
    literal: str
    quoted: bool = False  # quoted choice token vs bare yes/no


@dataclass(frozen=True)
class IsUnknown:
    question_id: str


@dataclass(frozen=True)
class IsAnswered:
    question_id: str


@dataclass(frozen=True)
class Not:
    operand: "ConditionExpr"


@dataclass(frozen=True)
class And:
    left: "ConditionExpr"
    right: "ConditionExpr"


@dataclass(frozen=True)
class Or:
    left: "ConditionExpr"
    right: "ConditionExpr"


@dataclass(frozen=True)
class Const:
    value: bool


ConditionExpr = Union[AnswerEquals, IsUnknown, IsAnswered, Not, And, Or, Const]


@dataclass(frozen=True)
class AnswerBindings:
    """Partial map from question id to canonical answer token.

    Absence means not-yet-answered. ``kinds`` optionally carries question-kind
    metadata ("boolean", "tri-state", "single-choice", "free-text") used to
    reject comparisons against literals of the wrong kind.
    """

    values: Mapping[str, str] = field(default_factory=dict)
    kinds: Mapping[str, str] = field(default_factory=dict)

    @classmethod
    def of(cls, **values: str) -> "AnswerBindings":
        return cls(values=dict(values))

    def get(self, question_id: str) -> str | None:
        return self.values.get(question_id)

    def kind_of(self, question_id: str) -> str | None:
        return self.kinds.get(question_id)


# --- Tokenizer ---------------------------------------------------------------


@dataclass(frozen=True)
class _Token:
    kind: str  # "id" | "keyword" | "string" | "(" | ")" | "==" | "end"
    text: str
    offset: int


def _tokenize(source: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    length = len(source)
    while pos < length:
        ch = source[pos]
        if ch in " \t\r\n":
            pos += 1
            continue
        if ord(ch) > 127:
            raise ConditionParseError("non-ASCII character", offset=pos)
        if ch in "()":
            tokens.append(_Token(ch, ch, pos))
            pos += 1
            continue
        if ch == "=":
            if source.startswith("==", pos):
                tokens.append(_Token("==", "==", pos))
                pos += 2
                continue
            raise ConditionParseError("lone '='", offset=pos, expected=frozenset({"=="}))
        if ch == '"':
            end = source.find('"', pos + 1)
            if end == -1:
                raise ConditionParseError("unterminated string", offset=length, expected=frozenset({'"'}))
            tokens.append(_Token("string", source[pos + 1 : end], pos))
            pos = end + 1
            continue
        m = QUESTION_ID_RE.match(source, pos)
        if m:
            word = m.group(0)
            kind = "keyword" if word in KEYWORDS else "id"
            tokens.append(_Token(kind, word, pos))
            pos = m.end()
            continue
        raise ConditionParseError(f"unexpected character {ch!r}", offset=pos)
    tokens.append(_Token("end", "", length))
    return tokens


# --- Parser ------------------------------------------------------------------

_ATOM_EXPECTED = frozenset({"(", "true", "false", "not", "unknown(", "answered(", "question id"})
_LITERAL_EXPECTED = frozenset({"yes", "no", "quoted choice token"})


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self._tokens = tokens
        self._index = 0

    @property
    def current(self) -> _Token:
        return self._tokens[self._index]

    def _advance(self) -> _Token:
        token = self.current
        self._index += 1
        return token

    def _at_keyword(self, word: str) -> bool:
        return self.current.kind == "keyword" and self.current.text == word

    def _expect(self, kind: str, expected: frozenset[str]) -> _Token:
        if self.current.kind != kind:
            raise ConditionParseError(
                f"unexpected {self._describe(self.current)}",
                offset=self.current.offset,
                expected=expected,
            )
        return self._advance()

    @staticmethod
    def _describe(token: _Token) -> str:
        if token.kind == "end":
            return "end of input"
        return f"token {token.text!r}"

    def or_expr(self) -> ConditionExpr:
        expr = self.and_expr()
        while self._at_keyword("or"):
            self._advance()
            expr = Or(expr, self.and_expr())
        return expr

    def and_expr(self) -> ConditionExpr:
        expr = self.unary()
        while self._at_keyword("and"):
            self._advance()
            expr = And(expr, self.unary())
        return expr

    def unary(self) -> ConditionExpr:
        if self._at_keyword("not"):
            self._advance()
            return Not(self.unary())
        return self.atom()

    def atom(self) -> ConditionExpr:
        token = self.current
        if token.kind == "(":
            self._advance()
            expr = self.or_expr()
            self._expect(")", frozenset({")"}))
            return expr
        if token.kind == "keyword":
            if token.text == "true":
                self._advance()
                return Const(True)
            if token.text == "false":
                self._advance()
                return Const(False)
            if token.text in ("unknown", "answered"):
                self._advance()
                self._expect("(", frozenset({"("}))
                qid = self._expect("id", frozenset({"question id"}))
                self._expect(")", frozenset({")"}))
                return IsUnknown(qid.text) if token.text == "unknown" else IsAnswered(qid.text)
            raise ConditionParseError(
                f"unexpected {self._describe(token)}", offset=token.offset, expected=_ATOM_EXPECTED
            )
        if token.kind == "id":
            qid = self._advance()
            self._expect("==", frozenset({"=="}))
            return AnswerEquals(qid.text, *self._literal())
        raise ConditionParseError(
            f"unexpected {self._describe(token)}", offset=token.offset, expected=_ATOM_EXPECTED
        )

    def _literal(self) -> tuple[str, bool]:
        token = self.current
        if token.kind == "id" and token.text in ("yes", "no"):
            self._advance()
            return token.text, False
        if token.kind == "string":
            if not token.text:
                raise ConditionParseError("empty choice token", offset=token.offset, expected=_LITERAL_EXPECTED)
            self._advance()
            return token.text, True
        raise ConditionParseError(
            f"unexpected {self._describe(token)}", offset=token.offset, expected=_LITERAL_EXPECTED
        )

    def finish(self) -> None:
        if self.current.kind != "end":
            raise ConditionParseError(
                f"unexpected {self._describe(self.current)}",
                offset=self.current.offset,
                expected=frozenset({"and", "or", "end of input"}),
            )


def parse(source: str) -> ConditionExpr:
    """Parse condition source text into an AST.

    Raises :class:`ConditionParseError` with the byte offset and the set of
    tokens that would have been accepted there.
    """
    parser = _Parser(_tokenize(source))
    expr = parser.or_expr()
    parser.finish()
    return expr


# --- Serialization -----------------------------------------------------------

# Precedence: or=1, and=2, not=3, atoms=4. A child is parenthesized when its
# precedence is below the minimum its position requires; right operands of
# binary nodes require strictly higher precedence so that reparsing preserves
# the association of the original tree.


def serialize(expr: ConditionExpr) -> str:
    """Render an AST back to source text with normalized whitespace and parentheses."""
    return _render(expr, 1)


def _render(expr: ConditionExpr, min_prec: int) -> str:
    if isinstance(expr, Or):
        prec = 1
        text = f"{_render(expr.left, 1)} or {_render(expr.right, 2)}"
    elif isinstance(expr, And):
        prec = 2
        text = f"{_render(expr.left, 2)} and {_render(expr.right, 3)}"
    elif isinstance(expr, Not):
        prec = 3
        text = f"not {_render(expr.operand, 3)}"
    elif isinstance(expr, AnswerEquals):
        prec = 4
        literal = f'"{expr.literal}"' if expr.quoted else expr.literal
        text = f"{expr.question_id} == {literal}"
    elif isinstance(expr, IsUnknown):
        prec = 4
        text = f"unknown({expr.question_id})"
    elif isinstance(expr, IsAnswered):
        prec = 4
        text = f"answered({expr.question_id})"
    elif isinstance(expr, Const):
        prec = 4
        text = "true" if expr.value else "false"
    else:
        raise TypeError(f"not a condition node: {expr!r}")
    return f"({text})" if prec < min_prec else text


# --- Evaluation --------------------------------------------------------------


def evaluate(expr: ConditionExpr, bindings: AnswerBindings | Mapping[str, str]) -> TruthValue:
    """Evaluate an expression against (possibly partial) answer bindings.

    Strong Kleene semantics: ``unknown`` propagates through the connectives
    unless the other operand already decides the result. A comparison against
    an unbound question, or one bound to the unknown marker, is ``unknown``;
    ``unknown(Q)`` and ``answered(Q)`` are meta-predicates and always yield
    yes or no.
    """
    if not isinstance(bindings, AnswerBindings):
        bindings = AnswerBindings(values=bindings)
    return _eval(expr, bindings)


def _eval(expr: ConditionExpr, b: AnswerBindings) -> TruthValue:
    if isinstance(expr, Const):
        return TruthValue.from_bool(expr.value)
    if isinstance(expr, AnswerEquals):
        _check_literal(expr, b)
        value = b.get(expr.question_id)
        if value is None or value == UNKNOWN_MARKER:
            return TruthValue.UNKNOWN
        return TruthValue.from_bool(value == expr.literal)
    if isinstance(expr, IsUnknown):
        value = b.get(expr.question_id)
        return TruthValue.from_bool(value is None or value == UNKNOWN_MARKER)
    if isinstance(expr, IsAnswered):
        return TruthValue.from_bool(expr.question_id in b.values)
    if isinstance(expr, Not):
        return _eval(expr.operand, b).negate()
    if isinstance(expr, And):
        return _eval(expr.left, b).and_(_eval(expr.right, b))
    if isinstance(expr, Or):
        return _eval(expr.left, b).or_(_eval(expr.right, b))
    raise TypeError(f"not a condition node: {expr!r}")


def _check_literal(node: AnswerEquals, b: AnswerBindings) -> None:
    kind = b.kind_of(node.question_id)
    if kind is None:
        return
    if kind == "free-text":
        raise TypeMismatchError(
            f"question {node.question_id} is free-text and cannot be compared to a literal"
        )
    if kind in ("boolean", "tri-state") and (node.quoted or node.literal not in ("yes", "no")):
        raise TypeMismatchError(
            f"question {node.question_id} ({kind}) only compares to yes or no, got {node.literal!r}"
        )
    if kind == "single-choice" and not node.quoted:
        raise TypeMismatchError(
            f"question {node.question_id} (single-choice) requires a quoted choice token"
        )


def referenced_questions(expr: ConditionExpr) -> frozenset[str]:
    """The exact set of question ids appearing in the expression's leaves."""
    return frozenset(_leaf_ids(expr))


def _leaf_ids(expr: ConditionExpr) -> Iterator[str]:
    if isinstance(expr, (AnswerEquals, IsUnknown, IsAnswered)):
        yield expr.question_id
    elif isinstance(expr, Not):
        yield from _leaf_ids(expr.operand)
    elif isinstance(expr, (And, Or)):
        yield from _leaf_ids(expr.left)
        yield from _leaf_ids(expr.right)
