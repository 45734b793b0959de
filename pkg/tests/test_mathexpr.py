"""Parser/evaluator tests, including agreement with the independent oracle."""

from __future__ import annotations

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

import rational_oracle as oracle
from matharena import mathexpr
from matharena.mathexpr import (
    Binary,
    DivisionByZero,
    ExponentOverflow,
    ExprSyntaxError,
    Literal,
    MagnitudeOverflow,
    Negate,
    UnsupportedConstruct,
    evaluate,
    evaluate_text,
    format_rational,
    operator_count,
    parse,
    parse_rational,
    to_text,
)


# --- frozen precedence and associativity table ---

@pytest.mark.parametrize(
    "text,expected",
    [
        ("2+3*4", Fraction(14)),
        ("(2+3)*4", Fraction(20)),
        ("8/4/2", Fraction(1)),          # '/' left-associative
        ("10-4-3", Fraction(3)),         # '-' left-associative
        ("2^3^2", Fraction(512)),        # '^' right-associative
        ("-2^2", Fraction(4)),           # unary minus binds to the base
        ("-(2^2)", Fraction(-4)),
        ("2^-2", Fraction(1, 4)),
        ("0^0", Fraction(1)),
        ("1/3 + 1/6", Fraction(1, 2)),
        ("0.1 + 0.2", Fraction(3, 10)),
        ("10^3", Fraction(1000)),
        ("2×3", Fraction(6)),       # unicode multiplication sign
        ("8÷2", Fraction(4)),
        ("5−3", Fraction(2)),       # unicode minus
        ("--3", Fraction(3)),
        ("2*-3", Fraction(-6)),
    ],
)
def test_frozen_table(text, expected):
    assert evaluate_text(text) == expected


def test_decimals_are_exact_rationals():
    tree = parse("0.1")
    assert tree == Literal(Fraction(1, 10))
    assert evaluate_text("0.1+0.2") == Fraction(3, 10)  # never 0.30000000000000004


def test_operator_count_examples():
    assert operator_count(parse("(3+4)*2")) == 2
    assert operator_count(parse("-(2+3)^2")) == 3  # neg, add, pow
    assert operator_count(parse("7")) == 0


# --- errors ---

def test_division_by_zero():
    with pytest.raises(DivisionByZero):
        evaluate_text("1/0")
    with pytest.raises(DivisionByZero):
        evaluate_text("1/(2-2)")
    with pytest.raises(DivisionByZero):
        evaluate_text("0^-1")


def test_exponent_overflow_terminates_fast():
    with pytest.raises(ExponentOverflow):
        evaluate_text("9^64^64")
    with pytest.raises(ExponentOverflow):
        evaluate_text("2^65")
    assert evaluate_text("2^64") == Fraction(2**64)


def test_magnitude_overflow():
    with pytest.raises(MagnitudeOverflow):
        evaluate_text("(10^64*10^64*10^64)^64")  # 10^12288: too many digits
    with pytest.raises(MagnitudeOverflow):
        evaluate_text("1" * 10_001)  # oversized literal
    # under the cap is fine
    assert evaluate_text("(10^64)^64") == Fraction(10**4096)


def test_non_integer_exponent_rejected():
    with pytest.raises(UnsupportedConstruct):
        evaluate_text("2^(1/2)")
    assert evaluate_text("2^(4/2)") == Fraction(4)


def test_identifiers_rejected():
    with pytest.raises(UnsupportedConstruct):
        parse("sin(x)")
    with pytest.raises(UnsupportedConstruct):
        parse("2*x")


@pytest.mark.parametrize(
    "text,offset",
    [
        ("2+*3", 2),
        ("(1+2", 4),
        ("", 0),
        ("1 2", 2),
        ("2+π", 2),        # multibyte char right after two ascii bytes
        ("2× $", 4),       # alias op is 2 bytes wide
    ],
)
def test_syntax_error_byte_offsets(text, offset):
    with pytest.raises(ExprSyntaxError) as err:
        parse(text)
    assert err.value.offset == offset


# --- canonical printing ---

@pytest.mark.parametrize(
    "value,expected",
    [
        (Fraction(7), "7"),
        (Fraction(-3), "-3"),
        (Fraction(1, 2), "0.5"),
        (Fraction(-3, 8), "-0.375"),
        (Fraction(1, 10), "0.1"),
        (Fraction(7, 50), "0.14"),
        (Fraction(1, 3), "1/3"),
        (Fraction(-22, 7), "-22/7"),
        (Fraction(0), "0"),
    ],
)
def test_format_rational(value, expected):
    assert format_rational(value) == expected
    assert parse_rational(expected) == value


_literals = st.one_of(
    st.integers(min_value=0, max_value=9999).map(Fraction),
    st.tuples(st.integers(0, 999), st.integers(1, 99)).map(
        lambda t: Fraction(t[0] * 100 + t[1], 100)
    ),
).map(Literal)


def _extend(children):
    return st.one_of(
        children.map(Negate),
        st.tuples(st.sampled_from("+-*/^"), children, children).map(
            lambda t: Binary(t[0], t[1], t[2])
        ),
    )


@settings(max_examples=300, deadline=None)
@given(st.recursive(_literals, _extend, max_leaves=12))
def test_roundtrip_print_parse(tree):
    assert parse(to_text(tree)) == tree


# --- agreement with the independent oracle ---

def _agree(node, rendered: str) -> None:
    try:
        expected = oracle.evaluate(node)
    except oracle.OracleDivisionByZero:
        with pytest.raises(DivisionByZero):
            evaluate_text(rendered)
        return
    got = evaluate_text(rendered)
    assert got == Fraction(*expected), rendered


def test_oracle_agreement_sample():
    rng = random.Random(20260819)
    for i in range(2000):
        node = oracle.random_expression(rng)
        mode = "paren" if i % 2 == 0 else "mixed"
        _agree(node, oracle.render(node, mode))


def test_operator_count_matches_oracle():
    rng = random.Random(7)
    for _ in range(500):
        node = oracle.random_expression(rng)
        parsed = parse(oracle.render(node, "paren"))
        assert operator_count(parsed) == oracle.operator_count(node)
