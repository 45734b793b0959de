"""Exact arithmetic expressions: parse, evaluate, canonical printing.

All arithmetic is over exact rationals (fractions.Fraction); no floats are
involved at any point.  Decimals in the source text become exact rationals,
so "0.1 + 0.2" evaluates to exactly 3/10.

Grammar (the full frozen precedence table lives in docs/expression-grammar.md):

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := unary ('^' factor)?          right-associative
    unary  := '-' unary | atom
    atom   := integer | decimal | '(' expr ')'

Unary minus binds tighter than '^', so -2^2 parses as (-2)^2 = 4.  Exponents
must evaluate to integers and are capped; magnitudes are capped by decimal
digit count so adversarial inputs fail fast instead of eating the machine.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

EXPONENT_CAP = 64
DIGIT_CAP = 10_000

# conservative bits-per-decimal-digit bound used before computing a power
_BITS_PER_DIGIT = 4

# number tokens longer than this are rejected outright; keeps hostile input
# from forcing multi-megabyte int conversions before evaluation caps apply
_LITERAL_LENGTH_CAP = 2 * DIGIT_CAP + 1

# CPython refuses int<->str conversions beyond ~4300 digits; chunk size used
# to sidestep that for values that are legal under our own digit cap
_CHUNK = 4000


class MathExprError(Exception):
    """Base class for every error this module raises."""


class ExprSyntaxError(MathExprError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class UnsupportedConstruct(MathExprError):
    """Variables, function calls, non-integer exponents."""


class DivisionByZero(MathExprError):
    pass


class ExponentOverflow(MathExprError):
    pass


class MagnitudeOverflow(MathExprError):
    pass


# --- AST ---

@dataclass(frozen=True)
class Literal:
    value: Fraction


@dataclass(frozen=True)
class Negate:
    operand: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str  # one of + - * / ^
    left: "Expr"
    right: "Expr"


Expr = Union[Literal, Negate, Binary]


# --- tokenizer ---

_NUMBER = re.compile(r"\d+(?:\.\d+)?")
_LETTER = re.compile(r"[A-Za-z_]")

# unicode spellings accepted as aliases for the ASCII operators
_ALIASES = {"×": "*", "÷": "/", "−": "-"}


@dataclass(frozen=True)
class _Token:
    kind: str  # "number", "op", "end"
    text: str
    offset: int  # byte offset of the token start


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    byte_pos = 0
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            byte_pos += len(ch.encode("utf-8"))
            i += 1
            continue
        if ch.isdigit():
            m = _NUMBER.match(text, i)
            assert m is not None
            if len(m.group()) > _LITERAL_LENGTH_CAP:
                raise MagnitudeOverflow(
                    f"literal longer than {_LITERAL_LENGTH_CAP} characters"
                )
            tokens.append(_Token("number", m.group(), byte_pos))
            byte_pos += len(m.group().encode("utf-8"))
            i = m.end()
            continue
        op = _ALIASES.get(ch, ch)
        if op in "+-*/^()":
            tokens.append(_Token("op", op, byte_pos))
            byte_pos += len(ch.encode("utf-8"))
            i += 1
            continue
        if _LETTER.match(ch):
            raise UnsupportedConstruct(
                f"identifier at byte offset {byte_pos}: variables and "
                f"function calls are not supported"
            )
        raise ExprSyntaxError(f"unexpected character {ch!r}", byte_pos)
    tokens.append(_Token("end", "", byte_pos))
    return tokens


def _int_from_digits(digits: str) -> int:
    value = 0
    for start in range(0, len(digits), _CHUNK):
        chunk = digits[start:start + _CHUNK]
        value = value * 10 ** len(chunk) + int(chunk)
    return value


def _int_to_str(n: int) -> str:
    sign = "-" if n < 0 else ""
    n = abs(n)
    if n.bit_length() < 14_000:  # safely inside the conversion limit
        return sign + str(n)
    chunks: list[str] = []
    base = 10 ** _CHUNK
    while n:
        n, rem = divmod(n, base)
        chunks.append(str(rem).rjust(_CHUNK, "0") if n else str(rem))
    return sign + "".join(reversed(chunks))


def _literal_value(text: str) -> Fraction:
    if "." in text:
        whole, frac = text.split(".")
        scale = 10 ** len(frac)
        return Fraction(_int_from_digits(whole) * scale + _int_from_digits(frac),
                        scale)
    return Fraction(_int_from_digits(text))


# --- parser ---

class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def take(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, text: str) -> None:
        tok = self.take()
        if tok.kind != "op" or tok.text != text:
            raise ExprSyntaxError(f"expected {text!r}", tok.offset)

    def parse_expr(self) -> Expr:
        node = self.parse_term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.take().text
            node = Binary(op, node, self.parse_term())
        return node

    def parse_term(self) -> Expr:
        node = self.parse_factor()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.take().text
            node = Binary(op, node, self.parse_factor())
        return node

    def parse_factor(self) -> Expr:
        node = self.parse_unary()
        if self.peek().kind == "op" and self.peek().text == "^":
            self.take()
            # recursing into factor (not unary) makes '^' right-associative
            return Binary("^", node, self.parse_factor())
        return node

    def parse_unary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-":
            self.take()
            return Negate(self.parse_unary())
        return self.parse_atom()

    def parse_atom(self) -> Expr:
        tok = self.take()
        if tok.kind == "number":
            return Literal(_literal_value(tok.text))
        if tok.kind == "op" and tok.text == "(":
            node = self.parse_expr()
            self.expect_op(")")
            return node
        if tok.kind == "end":
            raise ExprSyntaxError("unexpected end of input", tok.offset)
        raise ExprSyntaxError(f"unexpected token {tok.text!r}", tok.offset)


def parse(text: str) -> Expr:
    """Parse source text into an AST.

    Raises ExprSyntaxError (with byte offset) or UnsupportedConstruct.
    """
    parser = _Parser(_tokenize(text))
    node = parser.parse_expr()
    tail = parser.peek()
    if tail.kind != "end":
        raise ExprSyntaxError(f"trailing input {tail.text!r}", tail.offset)
    return node


# --- evaluation ---

_thresholds: dict[int, int] = {}


def _check_magnitude(value: Fraction, digit_cap: int) -> Fraction:
    for part in (value.numerator, value.denominator):
        bits = part.bit_length()
        # fast accept by bit length; exact threshold compare only in the
        # band where bit length alone cannot decide
        if bits <= (digit_cap - 1) * 3:
            continue
        threshold = _thresholds.get(digit_cap)
        if threshold is None:
            threshold = _thresholds.setdefault(digit_cap, 10 ** digit_cap)
        if abs(part) >= threshold:
            raise MagnitudeOverflow(
                f"value exceeds {digit_cap} decimal digits"
            )
    return value


def evaluate(expr: Expr, *, exponent_cap: int = EXPONENT_CAP,
             digit_cap: int = DIGIT_CAP) -> Fraction:
    """Evaluate an AST to an exact rational.

    Raises DivisionByZero, ExponentOverflow, MagnitudeOverflow, or
    UnsupportedConstruct (non-integer exponent).
    """
    if isinstance(expr, Literal):
        return _check_magnitude(expr.value, digit_cap)
    if isinstance(expr, Negate):
        return -evaluate(expr.operand, exponent_cap=exponent_cap,
                         digit_cap=digit_cap)
    left = evaluate(expr.left, exponent_cap=exponent_cap, digit_cap=digit_cap)
    if expr.op == "^":
        exp_value = evaluate(expr.right, exponent_cap=exponent_cap,
                             digit_cap=digit_cap)
        if exp_value.denominator != 1:
            raise UnsupportedConstruct("exponent must be an integer")
        exponent = int(exp_value)
        if abs(exponent) > exponent_cap:
            raise ExponentOverflow(
                f"|exponent| {abs(exponent)} exceeds cap {exponent_cap}"
            )
        if left == 0 and exponent < 0:
            raise DivisionByZero("zero raised to a negative power")
        # preflight so we never materialize an astronomically large power
        widest = max(left.numerator.bit_length(),
                     left.denominator.bit_length())
        if widest * abs(exponent) > digit_cap * _BITS_PER_DIGIT:
            raise MagnitudeOverflow(
                f"power would exceed {digit_cap} decimal digits"
            )
        return _check_magnitude(left ** exponent, digit_cap)
    right = evaluate(expr.right, exponent_cap=exponent_cap,
                     digit_cap=digit_cap)
    if expr.op == "+":
        result = left + right
    elif expr.op == "-":
        result = left - right
    elif expr.op == "*":
        result = left * right
    elif expr.op == "/":
        if right == 0:
            raise DivisionByZero("division by zero")
        result = left / right
    else:  # pragma: no cover - parser only emits the five operators
        raise MathExprError(f"unknown operator {expr.op!r}")
    return _check_magnitude(result, digit_cap)


def evaluate_text(text: str, **limits) -> Fraction:
    return evaluate(parse(text), **limits)


def operator_count(expr: Expr) -> int:
    """Number of operator nodes (unary minus counts)."""
    if isinstance(expr, Literal):
        return 0
    if isinstance(expr, Negate):
        return 1 + operator_count(expr.operand)
    return 1 + operator_count(expr.left) + operator_count(expr.right)


# --- printing ---

def _decimal_exponents(den: int) -> tuple[int, int] | None:
    """Return (a, b) with den == 2**a * 5**b, or None."""
    a = 0
    while den % 2 == 0:
        den //= 2
        a += 1
    b = 0
    while den % 5 == 0:
        den //= 5
        b += 1
    return (a, b) if den == 1 else None


def format_rational(value: Fraction) -> str:
    """Canonical value string: integer, exact decimal, or "p/q".

    The decimal form is used whenever it terminates (denominator has no
    prime factors other than 2 and 5); it never carries trailing zeros.
    """
    if value.denominator == 1:
        return _int_to_str(value.numerator)
    exponents = _decimal_exponents(value.denominator)
    if exponents is None:
        return f"{_int_to_str(value.numerator)}/{_int_to_str(value.denominator)}"
    k = max(exponents)
    scaled = abs(value.numerator) * 10 ** k // value.denominator
    digits = _int_to_str(scaled).rjust(k + 1, "0")
    sign = "-" if value.numerator < 0 else ""
    return f"{sign}{digits[:-k]}.{digits[-k:]}"


def parse_rational(text: str) -> Fraction:
    """Inverse of format_rational; also accepts plain decimals."""
    text = text.strip()
    if "/" in text:
        num, den = text.split("/", 1)
        return Fraction(int(num), int(den))
    if "." in text:
        negative = text.startswith("-")
        value = _literal_value(text.lstrip("+-"))
        return -value if negative else value
    return Fraction(int(text))


def _atomic(expr: Expr) -> bool:
    return isinstance(expr, Literal) or (
        isinstance(expr, Negate) and _atomic(expr.operand)
    )


def to_text(expr: Expr) -> str:
    """Canonical source text; parse(to_text(e)) is structurally identical.

    Binary nodes are printed fully parenthesized.  Exact for any tree whose
    literals are decimal-representable, which covers every parser-produced
    tree.
    """
    if isinstance(expr, Literal):
        return format_rational(expr.value)
    if isinstance(expr, Negate):
        inner = to_text(expr.operand)
        return "-" + (inner if _atomic(expr.operand) else f"({inner})")
    if expr.op == "^":
        base = to_text(expr.left)
        if not _atomic(expr.left):
            base = f"({base})"
        exp = to_text(expr.right)
        if not (_atomic(expr.right) or
                (isinstance(expr.right, Binary) and expr.right.op == "^")):
            exp = f"({exp})"
        return f"{base}^{exp}"
    return f"({to_text(expr.left)}{expr.op}{to_text(expr.right)})"
