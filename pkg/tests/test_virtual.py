"""Virtual values, ironing, and the grid assumption checks."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import qsell
from qsell.errors import ValidationError
from conftest import make_bimodal


# ---------------------------------------------------------------------------
# virtual values: analytic oracles


def test_uniform_virtual_value():
    # F(t) = t on [0,1]: phi(t) = t - (1-t)/1 = 2t - 1
    d = qsell.make_uniform(0.0, 1.0, m=1001)
    assert qsell.virtual_value(d, 0.5) == pytest.approx(0.0, abs=1e-12)
    assert qsell.virtual_value(d, 1.0) == pytest.approx(1.0, abs=1e-12)
    t = np.array([0.2, 0.7])
    assert np.allclose(qsell.virtual_value(d, t), 2 * t - 1, atol=1e-12)
    assert qsell.is_regular(d)


def test_rising_density_virtual_value():
    # f(t) = 2t, F = t^2: phi = t - (1-t^2)/(2t) = (3t^2-1)/(2t)
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        d = qsell.make_from_density(0.0, 1.0, lambda t: 2.0 * np.asarray(t, float), m=2001)
    assert qsell.virtual_value(d, 0.5) == pytest.approx(-0.25, abs=1e-5)
    assert qsell.virtual_value(d, 1.0) == pytest.approx(1.0, abs=1e-5)
    assert qsell.is_regular(d)


def test_shifted_uniform_virtual_value():
    # uniform on [1, 3]: phi(t) = t - (3 - t)/1 = 2t - 3
    d = qsell.make_uniform(1.0, 3.0, m=1001)
    assert qsell.virtual_value(d, 2.0) == pytest.approx(1.0, abs=1e-10)


# ---------------------------------------------------------------------------
# lower convex envelope (hull of discrete points)


def test_envelope_keeps_convex_points():
    x = np.array([0.0, 1.0, 2.0, 3.0])
    y = np.array([0.0, -1.0, -1.0, 1.0])  # already convex
    idx = qsell.lower_convex_envelope(x, y)
    assert list(idx) == [0, 1, 2, 3]


def test_envelope_removes_bumps():
    x = np.array([0.0, 1.0, 2.0])
    y = np.array([0.0, 1.0, 0.0])  # middle point above the chord
    idx = qsell.lower_convex_envelope(x, y)
    assert list(idx) == [0, 2]


def test_envelope_removes_collinear():
    x = np.array([0.0, 1.0, 2.0])
    y = np.array([0.0, 0.5, 1.0])
    idx = qsell.lower_convex_envelope(x, y)
    assert list(idx) == [0, 2]


# ---------------------------------------------------------------------------
# ironing


def test_iron_identity_on_regular():
    d = qsell.make_uniform(0.0, 1.0, m=513)
    phi = qsell.virtual_value_table(d)
    curve = qsell.iron(d, phi)
    assert curve.regular
    assert curve.ironed_intervals == []
    assert np.array_equal(curve.phi_ironed, phi)


def test_iron_bimodal_single_plateau():
    d = make_bimodal(1025)
    phi = qsell.virtual_value_table(d)
    assert not qsell.is_regular(d)
    curve = qsell.iron(d, phi)
    assert not curve.regular
    assert len(curve.ironed_intervals) == 1
    lo, hi = curve.ironed_intervals[0]
    plateau = curve.phi_ironed[lo : hi + 1]
    # exactly constant inside
    assert np.max(np.abs(plateau - plateau[0])) == 0.0
    # exactly phi outside
    outside = np.ones(d.grid.size, dtype=bool)
    outside[lo : hi + 1] = False
    assert np.array_equal(curve.phi_ironed[outside], phi[outside])
    # monotone overall
    assert np.all(np.diff(curve.phi_ironed) >= -1e-9)


def test_iron_idempotent():
    d = make_bimodal(1025)
    curve = qsell.iron(d, qsell.virtual_value_table(d))
    again = qsell.iron(d, curve.phi_ironed)
    assert np.allclose(again.phi_ironed, curve.phi_ironed, atol=1e-9)
    assert again.ironed_intervals == []


def test_iron_plateau_value_averages_raw_curve():
    # chord-slope plateau = F-conditional mean of the raw curve on the interval
    d = make_bimodal(1025)
    phi = qsell.virtual_value_table(d)
    curve = qsell.iron(d, phi)
    lo, hi = curve.ironed_intervals[0]
    # conditional mean of phi over [t_lo, t_hi] under the type density
    seg = slice(lo, hi + 1)
    w = d.pdf_vals[seg]
    mean = np.trapezoid(phi[seg] * w, d.grid[seg]) / np.trapezoid(w, d.grid[seg])
    assert curve.phi_ironed[lo] == pytest.approx(mean, abs=2e-3)


def test_iron_mismatched_grid_rejected():
    d = qsell.make_uniform(0.0, 1.0, m=101)
    other = qsell.GriddedFunction(np.linspace(0, 1, 51), np.zeros(51))
    with pytest.raises(ValidationError):
        qsell.iron(d, other)


# ---------------------------------------------------------------------------
# generalized virtual values and assumption checks


def test_generalized_matches_linear_for_alpha_one():
    d = qsell.make_uniform(0.0, 1.0, m=501)
    G = qsell.make_uniform(0.0, 1.0, m=65)
    qm = qsell.make_quality_model(G, 1.0, 0.0)
    inst = qsell.ProblemInstance(buyers=(d,), quality=qm)
    joint = qsell.as_joint_valuation(inst)
    for t in [0.3, 0.6, 0.9]:
        for q in [0.1, 0.8]:
            got = qsell.generalized_virtual_value(joint, d, t, q)
            assert got == pytest.approx(qsell.virtual_value(d, t), abs=1e-12)


def test_generalized_power_form():
    # v = q * t^2 on t in [1,2], uniform types: dv/dt = 2qt,
    # w_gen = v/dv - (1-F)/f has the (1-F)/f term unscaled by q
    d = qsell.make_uniform(1.0, 2.0, m=501)
    val = qsell.GeneralValuation(
        value=lambda t, q: np.asarray(q, float) * np.asarray(t, float) ** 2,
        deriv=lambda t, q: 2.0 * np.asarray(q, float) * np.asarray(t, float),
    )
    got = qsell.generalized_virtual_value(val, d, 1.5, 0.7)
    want = 1.5 / 2.0 - (1.0 - 0.5) / 1.0
    assert got == pytest.approx(want, abs=1e-9)


def test_nonpositive_derivative_rejected():
    d = qsell.make_uniform(0.0, 1.0, m=101)
    val = qsell.GeneralValuation(
        value=lambda t, q: -np.asarray(t, float),
        deriv=lambda t, q: -np.ones_like(np.asarray(t, float)),
    )
    with pytest.raises(ValidationError):
        qsell.generalized_virtual_value(val, d, 0.5, 0.5)


def test_check_assumptions_passes_separable_convex():
    d = qsell.make_uniform(1.0, 2.0, m=257)
    val = qsell.GeneralValuation(
        value=lambda t, q: (1.0 + np.asarray(q, float)) * np.asarray(t, float) ** 2,
        deriv=lambda t, q: (1.0 + np.asarray(q, float)) * 2.0 * np.asarray(t, float),
    )
    report = qsell.check_assumptions(val, d, np.linspace(0, 1, 9))
    assert report.ok, report.violations


def test_check_assumptions_flags_decreasing_value():
    d = qsell.make_uniform(0.0, 1.0, m=257)
    val = qsell.GeneralValuation(
        value=lambda t, q: 1.0 - np.asarray(t, float),
        deriv=lambda t, q: -np.ones_like(np.asarray(t, float)),
    )
    report = qsell.check_assumptions(val, d, np.linspace(0, 1, 5))
    assert not report.ok
    names = {v[0] for v in report.violations}
    assert "monotonicity" in names or "positive-derivative" in names


# ---------------------------------------------------------------------------
# property tests


@settings(deadline=None, max_examples=40)
@given(vals=st.lists(st.floats(0.05, 5.0), min_size=8, max_size=40))
def test_ironed_curve_is_monotone_and_below_nothing(vals):
    grid = np.linspace(0.0, 1.0, len(vals))
    d = qsell.make_from_table(grid, np.asarray(vals))
    phi = qsell.virtual_value_table(d)
    curve = qsell.iron(d, phi, n_omega=512)
    # wobbles below the run-detection tolerance survive ironing, so the
    # monotonicity guarantee is tol/cell-width, not exact
    assert np.all(np.diff(curve.phi_ironed) >= -5e-6)
    # ironing only changes values inside declared intervals
    outside = np.ones(len(vals), dtype=bool)
    for lo, hi in curve.ironed_intervals:
        outside[lo : hi + 1] = False
    assert np.array_equal(curve.phi_ironed[outside], phi[outside])


@settings(deadline=None, max_examples=40)
@given(vals=st.lists(st.floats(0.05, 5.0), min_size=8, max_size=40))
def test_iron_idempotent_property(vals):
    grid = np.linspace(0.0, 1.0, len(vals))
    d = qsell.make_from_table(grid, np.asarray(vals))
    curve = qsell.iron(d, qsell.virtual_value_table(d), n_omega=512)
    again = qsell.iron(d, curve.phi_ironed, n_omega=512)
    assert np.allclose(again.phi_ironed, curve.phi_ironed, atol=1e-7)
