import math

import pytest

import fifdim as fd
from fifdim import ModelConfig, Verdict

from conftest import make_constant_model, make_line_model, make_weierstrass

LOG3 = math.log(3.0)


@pytest.fixture(scope="module")
def pipeline61(example61):
    gamma = fd.gamma_summary(example61, k_max=6)
    bounds = fd.engine_bounds(example61)
    cert = fd.divergence_check(example61, 8, 0, gamma, bounds)
    spectral = fd.rho_sequence(example61, 8)
    return gamma, cert, spectral


def test_gamma_bounds_example61(example61, pipeline61):
    gamma, cert, _ = pipeline61
    part = fd.dim_bounds_gamma(example61, gamma, cert)
    assert part.upper.value == pytest.approx(1.0 + math.log(1.75) / LOG3, abs=1e-12)
    assert part.lower.value == pytest.approx(1.0 + math.log(1.25) / LOG3, abs=1e-12)
    assert part.upper.value == pytest.approx(1.5094, abs=1e-4)
    assert part.lower.value == pytest.approx(1.2031, abs=1e-4)
    assert part.exact is None


def test_rho_bounds_example61_k1(example61, pipeline61):
    gamma, cert, _ = pipeline61
    spectral1 = fd.rho_sequence(example61, 1)
    part = fd.dim_bounds_rho(example61, spectral1, cert, gamma=gamma)
    up1, dn1 = spectral1.radii[0][1].value, spectral1.radii[0][2].value
    assert part.upper.value == pytest.approx(1.0 + math.log(up1) / LOG3, abs=1e-6)
    assert part.lower.value == pytest.approx(1.0 + math.log(dn1) / LOG3, abs=1e-6)
    assert part.exact is None  # bracket far from closed at k=1


def test_rho_exact_example61(example61, pipeline61):
    gamma, cert, spectral = pipeline61
    part = fd.dim_bounds_rho(example61, spectral, cert, gamma=gamma)
    assert part.exact is not None
    assert part.exact.value == pytest.approx(1.379, abs=5e-3)
    assert all(
        part.hypotheses[key]
        for key in (
            "scaling-nowhere-zero-on-subintervals",
            "scaling-finitely-many-zeros",
            "min-gamma-ge-1",
            "variation-divergent",
            "scaling-strictly-positive",
            "rho-bracket-closed",
        )
    )


def test_sandwich_ordering(example61, pipeline61):
    gamma, cert, spectral = pipeline61
    pg = fd.dim_bounds_gamma(example61, gamma, cert)
    pr = fd.dim_bounds_rho(example61, spectral, cert, gamma=gamma)
    assert pg.upper.value >= pr.upper.value >= pr.lower.value >= pg.lower.value


def test_assembled_verdict_example61(example61, pipeline61):
    gamma, cert, spectral = pipeline61
    verdict = fd.assemble_verdict(
        [
            fd.dim_bounds_gamma(example61, gamma, cert),
            fd.dim_bounds_rho(example61, spectral, cert, gamma=gamma),
        ]
    )
    assert 1.0 <= verdict.lower.value <= verdict.upper.value <= 2.0
    assert verdict.exact is not None
    assert verdict.lower.value <= verdict.exact.value <= verdict.upper.value
    assert verdict.exact.source == "rho-bracket"
    doc = verdict.to_dict()
    assert set(doc) == {"lower", "upper", "exact", "hypotheses", "notes", "empirical"}


@pytest.mark.parametrize("lam", [0.5, 0.6, 0.8])
def test_weierstrass_exactness_both_routes(lam):
    model = make_weierstrass(lam)
    gamma = fd.gamma_summary(model, k_max=2)
    bounds = fd.engine_bounds(model)
    cert = fd.divergence_check(model, 4, 0, gamma, bounds)
    spectral = fd.rho_sequence(model, 3)
    pg = fd.dim_bounds_gamma(model, gamma, cert)
    pr = fd.dim_bounds_rho(model, spectral, cert, gamma=gamma)
    target = 2.0 + math.log(lam) / LOG3
    assert pg.exact is not None and pg.exact.source == "constant-gamma"
    assert pr.exact is not None and pr.exact.source == "rho-bracket"
    assert pg.exact.value == pytest.approx(target, abs=1e-9)
    assert pr.exact.value == pytest.approx(target, abs=1e-9)
    assert abs(pg.exact.value - pr.exact.value) < 1e-6


def test_small_gamma_exact_one():
    model = make_weierstrass(0.2)  # gamma = 0.6 < 1
    gamma = fd.gamma_summary(model, k_max=2)
    cert = fd.divergence_check(model, 4, 0, gamma)
    part = fd.dim_bounds_gamma(model, gamma, cert)
    assert part.exact is not None and part.exact.value == 1.0
    verdict = fd.assemble_verdict([part])
    assert verdict.exact.value == 1.0


def test_sign_changing_scaling_no_exact_claim():
    # sign-changing scaling with max gamma > 1 > min gamma
    cfg = ModelConfig(
        n=2,
        interval=(0.0, 1.0),
        y=(0.0, 0.3, 0.0),
        scaling=("0.9*sin(2*pi*x)", "0.9*sin(2*pi*x)"),
        offsets=("0.3*x", "0.3 - 0.3*x"),
    )
    model = fd.validate_model(cfg)
    gamma = fd.gamma_summary(model, k_max=2)
    cert = fd.divergence_check(model, 4, 0, gamma)
    spectral = fd.rho_sequence(model, 3)
    pr = fd.dim_bounds_rho(model, spectral, cert, gamma=gamma)
    assert not pr.hypotheses["scaling-strictly-positive"]
    assert pr.exact is None
    assert pr.lower.value == 1.0  # hypotheses for the matrix lower bound fail
    verdict = fd.assemble_verdict([fd.dim_bounds_gamma(model, gamma, cert), pr])
    assert verdict.exact is None
    assert verdict.lower.value <= verdict.upper.value


class TestBoxCount:
    def test_line_slope_one(self):
        line = make_line_model()
        samples = fd.sample_graph(line, 12)
        result = fd.boxcount_dimension(samples, (4, 9), 2)
        assert result.estimate == pytest.approx(1.0, abs=0.02)

    def test_example61_estimate(self, example61):
        samples = fd.sample_graph(example61, 12)
        result = fd.boxcount_dimension(samples, (4, 9), 3)
        assert result.estimate == pytest.approx(1.379, abs=0.1)
        assert result.window > 0.0
        ks = [k for k, _ in result.counts]
        assert ks == list(range(4, 10))

    def test_oscillation_form_estimates(self, example61):
        samples = fd.sample_graph(example61, 11)
        result = fd.boxcount_dimension(samples, (5, 9), 3)
        for _, est in result.osc_estimates:
            assert 1.0 <= est <= 2.0

    def test_insufficient_resolution(self, example61):
        samples = fd.sample_graph(example61, 8)
        with pytest.raises(fd.InsufficientResolutionError):
            fd.boxcount_dimension(samples, (4, 9), 3)
        with pytest.raises(fd.InsufficientResolutionError):
            fd.boxcount_dimension(samples[:100], (1, 3), 3)


def test_empirical_never_tightens(example61, pipeline61):
    gamma, cert, spectral = pipeline61
    parts = [
        fd.dim_bounds_gamma(example61, gamma, cert),
        fd.dim_bounds_rho(example61, spectral, cert, gamma=gamma),
    ]
    samples = fd.sample_graph(example61, 11)
    emp = fd.boxcount_dimension(samples, (4, 8), 3)
    with_emp = fd.assemble_verdict(parts, emp)
    without = fd.assemble_verdict(parts)
    assert with_emp.lower.value == without.lower.value
    assert with_emp.upper.value == without.upper.value
    assert with_emp.empirical is emp


def test_bounded_variation_verdicts():
    const = make_constant_model()
    gamma = fd.gamma_summary(const, k_max=2)
    cert = fd.divergence_check(const, 5, 0, gamma)
    assert cert.verdict is Verdict.BOUNDED
    part = fd.dim_bounds_gamma(const, gamma, cert)
    assert part.exact is not None and part.exact.value == 1.0
