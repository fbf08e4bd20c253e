"""Grids, distributions, quadrature, and sublevel-set primitives."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import qsell
from qsell import dist
from qsell.errors import ValidationError


# ---------------------------------------------------------------------------
# construction and validation


def test_uniform_cdf_pdf_quantile():
    d = qsell.make_uniform(2.0, 5.0, m=301)
    assert d.support_lo == 2.0 and d.support_hi == 5.0
    # analytic: F(x) = (x-2)/3, f = 1/3
    assert qsell.cdf(d, 3.5) == pytest.approx(0.5, abs=1e-12)
    assert qsell.pdf(d, 4.0) == pytest.approx(1.0 / 3.0, abs=1e-12)
    assert qsell.quantile(d, 0.25) == pytest.approx(2.75, abs=1e-12)
    # clamping outside the support
    assert qsell.cdf(d, 0.0) == 0.0
    assert qsell.cdf(d, 9.0) == 1.0


def test_density_normalization():
    # unnormalized f(x) = x on [0,2] has mass 2; construction renormalizes
    d = qsell.make_from_density(0.0, 2.0, lambda x: np.asarray(x, float), m=2001)
    assert d.norm_factor == pytest.approx(2.0, rel=1e-6)
    # F(x) = x^2/4
    assert qsell.cdf(d, 1.0) == pytest.approx(0.25, abs=1e-6)
    assert qsell.quantile(d, 0.25) == pytest.approx(1.0, abs=1e-5)


def test_negative_density_rejected():
    with pytest.raises(ValidationError):
        qsell.make_from_density(0.0, 1.0, lambda x: np.asarray(x, float) - 0.5, m=101)


def test_tiny_density_clamped_with_warning():
    with pytest.warns(RuntimeWarning):
        d = qsell.make_from_density(0.0, 1.0, lambda x: 2.0 * np.asarray(x, float), m=101)
    assert d.pdf_vals[0] == dist.EPS_DENSITY


def test_table_distribution_roundtrip():
    grid = np.linspace(0.0, 1.0, 11)
    d = qsell.make_from_table(grid, np.full(11, 3.0))  # renormalized to uniform
    assert qsell.cdf(d, 0.5) == pytest.approx(0.5, abs=1e-12)
    assert d.norm_factor == pytest.approx(3.0)


def test_gridded_function_validation():
    with pytest.raises(ValidationError):
        dist.GriddedFunction(np.array([0.0, 0.0, 1.0]), np.zeros(3))  # not increasing
    with pytest.raises(ValidationError):
        dist.GriddedFunction(np.array([0.0, 1.0]), np.zeros(3))  # length mismatch
    f = dist.GriddedFunction(np.array([0.0, 1.0]), np.array([1.0, 3.0]))
    assert f.value_at(0.5) == pytest.approx(2.0)
    with pytest.raises(ValidationError):
        f.value_at(float("nan"))


def test_integrate_partial_cells():
    d = qsell.make_uniform(0.0, 1.0, m=101)
    f = dist.GriddedFunction(d.grid, d.pdf_vals)
    # integral of the unit density over [0.252, 0.748], endpoints inside cells
    got = dist.integrate(f, 0.252, 0.748)
    assert got == pytest.approx(0.496, abs=1e-12)
    with pytest.raises(ValidationError):
        dist.integrate(f, 0.9, 0.1)
    with pytest.raises(ValidationError):
        dist.integrate(f, -0.5, 0.5)


# ---------------------------------------------------------------------------
# sublevel primitives: oracle values computed by hand


def test_sublevel_mass_increasing_curve():
    # uniform types, curve(t) = 2t - 1: mass{curve <= c} = F((c+1)/2)
    d = qsell.make_uniform(0.0, 1.0, m=1001)
    curve = 2.0 * d.grid - 1.0
    for c in [-1.0, -0.5, 0.0, 0.3, 1.0]:
        want = np.clip((c + 1.0) / 2.0, 0.0, 1.0)
        got = dist.sublevel_mass(d, curve, c, include_equal=True)
        assert got == pytest.approx(want, abs=1e-12), c


def test_sublevel_mass_flat_cells_strict_vs_weak():
    # curve is 0 on [0, 0.5] then rises: the flat stretch is an atom at level 0
    d = qsell.make_uniform(0.0, 1.0, m=1001)
    curve = np.maximum(0.0, 2.0 * d.grid - 1.0)
    weak = dist.sublevel_mass(d, curve, 0.0, include_equal=True)
    strict = dist.sublevel_mass(d, curve, 0.0, include_equal=False)
    assert weak == pytest.approx(0.5, abs=1e-12)
    assert strict == pytest.approx(0.0, abs=1e-12)
    # just above the atom both coincide
    assert dist.sublevel_mass(d, curve, 1e-9, include_equal=False) == pytest.approx(
        0.5, abs=1e-6
    )


def test_sublevel_mass_decreasing_curve():
    # curve(t) = 1 - t falls; {curve <= c} = {t >= 1 - c}: mass = c for c in [0,1]
    d = qsell.make_uniform(0.0, 1.0, m=1001)
    curve = 1.0 - d.grid
    for c in [0.0, 0.25, 0.7, 1.0]:
        got = dist.sublevel_mass(d, curve, c, include_equal=True)
        assert got == pytest.approx(c, abs=1e-12)


def test_sublevel_integral_v_shape():
    # xi(q) = |q - 1/2| on a uniform grid, integrand == 1:
    # integral over {xi <= c} = length of [1/2 - c, 1/2 + c] = 2c for c <= 1/2
    grid = np.linspace(0.0, 1.0, 1001)
    xi = np.abs(grid - 0.5)
    ones = np.ones_like(grid)
    for c in [0.0, 0.1, 0.25, 0.5]:
        got = dist.sublevel_integral(grid, xi, ones, c, include_equal=True)
        assert got == pytest.approx(2.0 * c, abs=1e-9)
    # weighted integrand g(q) = q: integral of q over [1/2-c, 1/2+c] = 2c * 1/2
    got = dist.sublevel_integral(grid, xi, grid, 0.2, include_equal=True)
    assert got == pytest.approx(0.2, abs=1e-9)


def test_sublevel_integral_vector_levels():
    grid = np.linspace(0.0, 1.0, 101)
    xi = grid.copy()
    c = np.array([-1.0, 0.3, 0.6, 2.0])
    got = dist.sublevel_integral(grid, xi, np.ones_like(grid), c, include_equal=True)
    assert np.allclose(got, [0.0, 0.3, 0.6, 1.0], atol=1e-12)


# ---------------------------------------------------------------------------
# property tests


@settings(deadline=None, max_examples=50)
@given(
    vals=st.lists(st.floats(0.05, 10.0), min_size=3, max_size=24),
    c=st.floats(-2.0, 3.0),
)
def test_sublevel_mass_is_a_probability(vals, c):
    grid = np.linspace(0.0, 1.0, len(vals))
    d = qsell.make_from_table(grid, np.asarray(vals))
    curve = np.sort(np.asarray(vals))[: len(vals)]  # any values; use sorted for monotone
    curve = np.linspace(-1.0, 2.0, len(vals)) * curve / np.max(curve)
    weak = dist.sublevel_mass(d, curve, c, include_equal=True)
    strict = dist.sublevel_mass(d, curve, c, include_equal=False)
    assert -1e-12 <= strict <= weak <= 1.0 + 1e-12


@settings(deadline=None, max_examples=50)
@given(
    vals=st.lists(st.floats(0.05, 10.0), min_size=3, max_size=24),
    u=st.floats(0.0, 1.0),
)
def test_quantile_cdf_consistency(vals, u):
    grid = np.linspace(0.0, 1.0, len(vals))
    d = qsell.make_from_table(grid, np.asarray(vals))
    x = qsell.quantile(d, u)
    assert d.support_lo - 1e-12 <= x <= d.support_hi + 1e-12
    assert qsell.cdf(d, x) == pytest.approx(u, abs=1e-9)


@settings(deadline=None, max_examples=30)
@given(c=st.floats(-0.5, 1.5), shift=st.floats(1e-6, 0.1))
def test_sublevel_mass_monotone_in_level(c, shift):
    d = qsell.make_uniform(0.0, 1.0, m=257)
    curve = np.minimum(d.grid, 0.7)  # has a flat stretch (atom at 0.7)
    lo = dist.sublevel_mass(d, curve, c, include_equal=True)
    hi = dist.sublevel_mass(d, curve, c + shift, include_equal=True)
    assert hi >= lo - 1e-12
