import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fifdim import ExpressionError, parse_expr, piecewise_linear
from fifdim.expressions import to_source


def test_parse_and_evaluate_sinusoid():
    f = parse_expr("0.5 + sin(2*pi*x)/4")
    assert f(0.0) == pytest.approx(0.5)
    assert f(0.25) == pytest.approx(0.75)
    xs = np.array([0.0, 0.25, 0.5])
    np.testing.assert_allclose(f(xs), [0.5, 0.75, 0.5], atol=1e-15)


def test_zero_and_identity():
    zero = parse_expr("0")
    ident = parse_expr("x")
    assert zero(0.3) == 0.0
    assert ident(0.3) == 0.3


def test_pi_full_precision():
    assert parse_expr("pi")(0.0) == math.pi


def test_precedence_and_negation():
    f = parse_expr("1 - 2*x + x/4")
    assert f(1.0) == pytest.approx(1 - 2 + 0.25)
    g = parse_expr("-x - -2")
    assert g(3.0) == pytest.approx(-1.0)


@pytest.mark.parametrize(
    "src",
    [
        "0.5 + sin(2*pi*x)/4",
        "cos(2*pi*(x + 2)/3)",
        "-x - -2",
        "abs(x - 1/2)",
        "1.5e-3*x + 2",
        "(x + 1)*(x - 1)",
        "sin(cos(x))",
    ],
)
def test_roundtrip_print_parse(src):
    f = parse_expr(src)
    again = parse_expr(to_source(f.ast))
    assert again.ast == f.ast


def test_syntax_error_has_position():
    with pytest.raises(ExpressionError) as err:
        parse_expr("1 + * 2")
    assert err.value.position == 4


def test_unknown_identifier():
    with pytest.raises(ExpressionError, match="unknown identifier"):
        parse_expr("2*y")


def test_unbalanced_parens():
    with pytest.raises(ExpressionError):
        parse_expr("sin(x")


def test_division_requires_constant_divisor():
    with pytest.raises(ExpressionError, match="constant divisor"):
        parse_expr("1/x")
    with pytest.raises(ExpressionError, match="division by zero"):
        parse_expr("x/(1 - 1)")
    # constant divisors are fine, including expressions
    assert parse_expr("x/(2*2)")(8.0) == pytest.approx(2.0)


def test_piecewise_linear_eval_and_errors():
    f = piecewise_linear([(0.0, 0.0), (0.5, 1.0), (1.0, -1.0)])
    assert f(0.25) == pytest.approx(0.5)
    assert f(0.75) == pytest.approx(0.0)
    with pytest.raises(ExpressionError, match="strictly increasing"):
        piecewise_linear([(0.0, 0.0), (0.0, 1.0)])
    with pytest.raises(ExpressionError, match="cover"):
        piecewise_linear([(0.2, 0.0), (0.8, 1.0)], domain=(0.0, 1.0))


def test_vector_eval_broadcasts_constants():
    f = parse_expr("2")
    xs = np.linspace(0, 1, 5)
    out = f(xs)
    assert out.shape == xs.shape
    assert np.all(out == 2.0)


@settings(max_examples=60, deadline=None)
@given(
    a=st.floats(-2, 2, allow_nan=False),
    b=st.floats(-10, 10, allow_nan=False),
    c=st.floats(-4, 4, allow_nan=False),
)
def test_roundtrip_random_sinusoid(a, b, c):
    src = f"{a!r}*sin({b!r}*x + {c!r}) + {c!r}"
    f = parse_expr(src)
    assert parse_expr(to_source(f.ast)).ast == f.ast
