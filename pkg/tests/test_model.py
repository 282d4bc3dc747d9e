from fractions import Fraction

import numpy as np
import pytest

import fifdim as fd
from fifdim import ModelConfig, ModelValidationError

from conftest import make_constant_model, make_line_model, make_weierstrass


def test_example61_is_valid(example61):
    assert example61.n == 3
    assert example61.data.y == (2.0, 0.5, 0.5, 2.0)
    assert example61.interval == (0.0, 1.0)


def test_example61_scaling_not_contractive_variant():
    cfg = fd.builtin_model("example61")
    bad = ModelConfig(
        n=cfg.n,
        interval=cfg.interval,
        y=cfg.y,
        scaling=("1.1",) + cfg.scaling[1:],
        offsets=cfg.offsets,
    )
    with pytest.raises(ModelValidationError) as err:
        fd.validate_model(bad)
    kinds = {v.kind for v in err.value.violations}
    assert "scaling-not-contractive" in kinds


def test_weierstrass_builtin_valid():
    model = make_weierstrass(0.6)
    assert model.n == 3
    # gamma is constant 3 * lambda
    g = fd.gamma_summary(model, k_max=1)
    assert g.constant and g.constant_value == pytest.approx(1.8, abs=1e-12)


def test_weierstrass_small_lambda_flagged():
    cfg = fd.builtin_model("weierstrass", {"lambda": 0.2})
    assert any("box dimension 1" in note for note in cfg.notes)
    fd.validate_model(cfg)  # still a valid model


def test_weierstrass_value_at_zero():
    model = make_weierstrass(0.5)
    assert model.data.y[0] == pytest.approx(2.0, abs=1e-12)  # 1 / (1 - lambda)


def test_affine_builtin_constant_scaling():
    cfg = fd.builtin_model("affine", {"n": 2, "y": [0.0, 0.5, 1.0], "d": [0.5, 0.5]})
    model = fd.validate_model(cfg)
    assert [s.source for s in model.scaling] == ["0.5", "0.5"]


def test_endpoint_mismatch_detected():
    cfg = ModelConfig(
        n=2,
        interval=(0.0, 1.0),
        y=(0.0, 1.0, 0.0),
        scaling=("0.5", "0.5"),
        offsets=("x", "x"),  # wrong offsets
    )
    with pytest.raises(ModelValidationError) as err:
        fd.validate_model(cfg)
    assert any(v.kind == "endpoint-mismatch" for v in err.value.violations)


def test_expression_error_reported_with_index():
    cfg = ModelConfig(
        n=2,
        interval=(0.0, 1.0),
        y=(0.0, 0.5, 1.0),
        scaling=("0.5", "0.5 +"),
        offsets=("0", "0"),
    )
    with pytest.raises(ModelValidationError) as err:
        fd.validate_model(cfg)
    bad = [v for v in err.value.violations if v.kind == "expression-error"]
    assert bad and bad[0].index == 2


def test_non_uniform_knots_rejected():
    cfg = ModelConfig(
        n=2,
        interval=(0.0, 1.0),
        y=(0.0, 0.5, 1.0),
        scaling=("0", "0"),
        offsets=("x/2", "1/2 + x/2"),
        knots=(0.0, 0.4, 1.0),
    )
    with pytest.raises(ModelValidationError) as err:
        fd.validate_model(cfg)
    assert any(v.kind == "non-uniform-knots" for v in err.value.violations)


def test_piecewise_linear_entries():
    cfg = ModelConfig(
        n=2,
        interval=(0.0, 1.0),
        y=(0.0, 0.5, 0.0),
        scaling=(((0.0, 0.3), (1.0, -0.3)), "0.3"),
        offsets=("x/2", "1/2 - x/2"),
    )
    model = fd.validate_model(cfg)
    assert model.scaling[0](0.5) == pytest.approx(0.0)


def test_map_endpoint_conditions(example61, random_models):
    for model in [example61] + random_models[:5]:
        x0, xn = model.interval
        y = model.data.y
        n = model.n
        for i in range(1, n + 1):
            assert model.map_x(i, x0) == pytest.approx(float(model.data.knot(i - 1)), abs=1e-12)
            assert model.map_x(i, xn) == pytest.approx(float(model.data.knot(i)), abs=1e-12)
            assert model.map_y(i, x0, y[0]) == pytest.approx(y[i - 1], abs=1e-9)
            assert model.map_y(i, xn, y[n]) == pytest.approx(y[i], abs=1e-9)


def test_exact_rational_knots(example61):
    data = example61.data
    assert data.knot(0) == Fraction(0)
    assert data.knot(1) == Fraction(1, 3)
    assert data.knot(3) == Fraction(1)


def test_random_models_all_contractive(random_models):
    for model in random_models:
        for s in model.scaling:
            _, mx = fd.interval_extrema_abs(s)
            assert mx.hi < 1.0


def test_unknown_builtin():
    with pytest.raises(ValueError, match="unknown builtin"):
        fd.builtin_model("nope")


def test_constant_and_line_helpers():
    const = make_constant_model()
    line = make_line_model()
    assert fd.grid_values(const, 3).values == pytest.approx(np.full(9, 1.5))
    xs = line.grid(3)
    np.testing.assert_allclose(fd.grid_values(line, 3).values, xs, atol=1e-12)
