import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.model.geometry import integrate, make_quadrature, point_from_chart, point_from_polar, random_point
from src.model.sections import (
    MAX_DEGREE,
    Section,
    basis_section,
    basis_values,
    eval_pointnorm,
    gram_all,
    kernel_pointnorm,
    kernel_pointnorm_many,
    make_space,
    peak_section,
    peak_tail_closed_form,
    peak_tail_mass,
    pointnorm_many,
    random_section,
    reproduce_residual,
    section_from_polynomial,
)
from src.utils.errors import ConfigError, DomainError, ShapeError


def test_norms_of_low_degrees():
    assert make_space(0).ortho_norm_sq == pytest.approx([math.pi])
    assert make_space(1).ortho_norm_sq == pytest.approx([math.pi / 2, math.pi / 2])
    assert make_space(2).ortho_norm_sq == pytest.approx([math.pi / 3, math.pi / 6, math.pi / 3])


@given(st.integers(min_value=1, max_value=MAX_DEGREE))
def test_norm_ratio_identity(k):
    norms = make_space(k).ortho_norm_sq
    j = np.arange(k)
    assert np.allclose(norms[j + 1] / norms[j], (j + 1) / (k - j), rtol=1e-10)


def test_degree_out_of_range():
    for bad in (-1, MAX_DEGREE + 1):
        with pytest.raises(ConfigError):
            make_space(bad)


@pytest.mark.parametrize("k", [0, 1, 4, 16, 32, 64])
def test_basis_orthonormal_on_exact_rule(k):
    gram = gram_all(k, make_quadrature(k + 2, 4 * k + 1))
    assert np.max(np.abs(gram - np.eye(k + 1))) < 1e-10


@pytest.mark.parametrize("k", [1, 7, 40])
def test_kernel_diagonal_constant(k, rng):
    for _ in range(100):
        p = random_point(rng)
        row = basis_values(k, p.z0, p.z1)[0]
        assert np.sum(np.abs(row) ** 2) == pytest.approx((k + 1) / math.pi, rel=1e-10)
        assert kernel_pointnorm(k, p, p) == pytest.approx((k + 1) / math.pi, rel=1e-12)


@pytest.mark.parametrize("k", [2, 9, 24])
def test_kernel_reproduces_its_diagonal(k, rng):
    x = random_point(rng)
    rule = make_quadrature(k + 2, 2 * k + 1)
    value = integrate(lambda z0, z1: kernel_pointnorm_many(k, x, z0, z1) ** 2, rule)
    assert value == pytest.approx((k + 1) / math.pi, rel=1e-9)


def test_kernel_pointnorm_symmetric(rng):
    for _ in range(50):
        p, q = random_point(rng), random_point(rng)
        assert kernel_pointnorm(11, p, q) == pytest.approx(kernel_pointnorm(11, q, p), abs=1e-12)


@pytest.mark.parametrize("k", [5, 8, 16, 64])
def test_off_diagonal_gaussian_decay(k):
    # |Π_k| ≤ (2/π)·k·exp(−√k·d) on the whole sphere once k ≥ 5
    origin = point_from_chart(0)
    for d in np.linspace(0.0, math.pi / 2, 200):
        p = point_from_polar(math.sin(d) ** 2, 0.3)
        assert kernel_pointnorm(k, origin, p) <= 2 / math.pi * k * math.exp(-math.sqrt(k) * d) + 1e-12


@pytest.mark.parametrize("k", [4, 16, 64])
@pytest.mark.parametrize("R", [0.5, 1.0, 2.0, 3.0])
def test_peak_tail_matches_closed_form(k, R, rng):
    y = random_point(rng)
    rule = make_quadrature(k + 2, 2 * k + 1)
    tail = peak_tail_mass(k, y, R, rule)
    assert tail == pytest.approx(peak_tail_closed_form(k, R), abs=1e-6)
    assert tail <= math.exp(-R * R) + 1e-9


def test_peak_tail_reference_value():
    assert peak_tail_closed_form(16, 2.0) == pytest.approx(math.cos(0.5) ** 34, rel=1e-14)


@pytest.mark.parametrize("k", [1, 4, 16, 64, 256])
def test_peak_tail_below_five_percent_at_fixed_radius(k):
    assert peak_tail_closed_form(k, 1.8) < 0.05


def test_peak_tail_domain_errors():
    rule = make_quadrature(4, 8)
    y = point_from_chart(0)
    with pytest.raises(DomainError):
        peak_tail_mass(4, y, -1.0, rule)
    with pytest.raises(DomainError):
        peak_tail_mass(1, y, 2.0, rule)
    with pytest.raises(DomainError):
        peak_tail_mass(0, y, 1.0, rule)


@pytest.mark.parametrize("k", [3, 20])
def test_peak_section_unit_norm_and_maximal(k, rng):
    y = random_point(rng)
    g = peak_section(k, y)
    assert g.norm_sq == pytest.approx(1.0, abs=1e-9)
    space = make_space(k)
    assert eval_pointnorm(space, g, y) == pytest.approx((k + 1) / math.pi, abs=1e-9)


@pytest.mark.parametrize("k", [2, 10, 30])
def test_pointwise_bound_for_unit_sections(k, rng):
    space = make_space(k)
    points = [random_point(rng) for _ in range(200)]
    z0 = np.array([p.z0 for p in points])
    z1 = np.array([p.z1 for p in points])
    for _ in range(200):
        s = random_section(space, rng)
        assert np.max(pointnorm_many(s, z0, z1)) <= (k + 1) / math.pi + 1e-10


def test_polynomial_sections():
    space = make_space(5)
    onehot = np.zeros(6)
    onehot[2] = 1.0
    s = section_from_polynomial(space, onehot)
    assert s.norm_sq == pytest.approx(space.ortho_norm_sq[2])
    # z² at the chart point z = 2 is 4, divided by (1 + |z|²)^{k/2}
    p = point_from_chart(2.0)
    assert eval_pointnorm(space, s, p) == pytest.approx(16 / 5 ** 5, rel=1e-12)
    with pytest.raises(ShapeError):
        section_from_polynomial(space, np.ones(4))


def test_section_arithmetic():
    space = make_space(3)
    a, b = basis_section(space, 0), basis_section(space, 3)
    assert (a + b).norm_sq == pytest.approx(2.0)
    assert a.scaled(2j).norm_sq == pytest.approx(4.0)
    with pytest.raises(ShapeError):
        a + basis_section(make_space(2), 0)


def test_eval_pointnorm_checks_degree():
    with pytest.raises(ShapeError):
        eval_pointnorm(make_space(3), Section(2, np.ones(3)), point_from_chart(0))


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=0, max_value=24), st.integers(min_value=0, max_value=2 ** 32 - 1))
def test_reproducing_property(k, seed):
    rng = np.random.default_rng(seed)
    s = random_section(make_space(k), rng)
    p = random_point(rng)
    assert reproduce_residual(k, s, p, make_quadrature(k + 2, 2 * k + 1)) < 1e-10


def test_reproduce_rejects_coarse_rule(rng):
    s = random_section(make_space(6), rng)
    with pytest.raises(ConfigError):
        reproduce_residual(6, s, point_from_chart(0), make_quadrature(7, 13))


def test_parseval(rng):
    for _ in range(200):
        k = int(rng.integers(0, 33))
        s = random_section(make_space(k), rng).scaled(complex(*rng.normal(size=2)))
        rule = make_quadrature(k + 2, 2 * k + 1)
        coefficient_sum = float(np.sum(np.abs(s.coeffs) ** 2))
        assert s.norm_sq == pytest.approx(coefficient_sum, rel=1e-14)
        assert integrate(lambda z0, z1: pointnorm_many(s, z0, z1), rule) == pytest.approx(coefficient_sum, rel=1e-10)
