"""Gridded one-dimensional distributions and quadrature.

Every other module works with bounded, atomless distributions stored as
(grid, pdf, cdf) triples plus plain tabulated functions on the same kind
of grid.  The helpers here also provide the two sublevel-set primitives
the mechanism machinery is built on: the probability mass of
``{x : curve(x) <= c}`` under a distribution, and the integral of a
tabulated integrand over ``{q : level(q) <= c}``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

__all__ = [
    "EPS_DENSITY",
    "GriddedFunction",
    "GriddedDistribution",
    "make_uniform",
    "make_from_density",
    "make_from_table",
    "constant_curve",
    "curve_from_callable",
    "cdf",
    "pdf",
    "quantile",
    "integrate",
    "sublevel_integral",
    "sublevel_mass",
]

EPS_DENSITY = 1e-12


def _as_float_array(x, name):
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ValidationError(f"{name} must be one-dimensional")
    if np.any(np.isnan(arr)):
        raise ValidationError(f"{name} contains NaN")
    return arr


def _check_grid(grid):
    if grid.size < 2:
        raise ValidationError("grid needs at least 2 nodes")
    if np.any(np.diff(grid) <= 0):
        raise ValidationError("grid must be strictly increasing")


@dataclass(frozen=True)
class GriddedFunction:
    """A function tabulated on a strictly increasing grid, interpolated linearly."""

    grid: np.ndarray
    vals: np.ndarray

    def __post_init__(self):
        grid = _as_float_array(self.grid, "grid")
        vals = np.asarray(self.vals, dtype=float)
        if vals.ndim != 1 or vals.size != grid.size:
            raise ValidationError("vals must match the grid length")
        _check_grid(grid)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "vals", vals)

    def value_at(self, x):
        """Evaluate by linear interpolation, clamping outside the grid span."""
        x = np.asarray(x, dtype=float)
        if np.any(np.isnan(x)):
            raise ValidationError("query point is NaN")
        out = np.interp(np.clip(x, self.grid[0], self.grid[-1]), self.grid, self.vals)
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class GriddedDistribution:
    """Bounded distribution on [support_lo, support_hi] with gridded pdf/cdf.

    ``cdf_vals`` is the running trapezoid integral of ``pdf_vals``,
    renormalized so the endpoint is exactly 1.  ``norm_factor`` records the
    raw mass of the user-supplied density before renormalization.
    """

    support_lo: float
    support_hi: float
    grid: np.ndarray
    pdf_vals: np.ndarray
    cdf_vals: np.ndarray
    norm_factor: float = field(default=1.0, compare=False)

    def __post_init__(self):
        grid = _as_float_array(self.grid, "grid")
        _check_grid(grid)
        pdf_vals = _as_float_array(self.pdf_vals, "pdf_vals")
        cdf_vals = _as_float_array(self.cdf_vals, "cdf_vals")
        if pdf_vals.size != grid.size or cdf_vals.size != grid.size:
            raise ValidationError("pdf/cdf arrays must match the grid length")
        if not (self.support_lo == grid[0] and self.support_hi == grid[-1]):
            raise ValidationError("support endpoints must coincide with the grid ends")
        if np.any(pdf_vals < EPS_DENSITY):
            raise ValidationError(f"pdf values must be >= {EPS_DENSITY}")
        if abs(cdf_vals[0]) > 1e-9 or abs(cdf_vals[-1] - 1.0) > 1e-9:
            raise ValidationError("cdf must run from 0 to 1")
        if np.any(np.diff(cdf_vals) < 0):
            raise ValidationError("cdf must be non-decreasing")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "pdf_vals", pdf_vals)
        object.__setattr__(self, "cdf_vals", cdf_vals)

    @property
    def m(self):
        return self.grid.size


def _finalize(lo, hi, grid, raw_pdf):
    """Clamp, normalize and assemble a GriddedDistribution from raw samples."""
    if np.any(raw_pdf < 0):
        raise ValidationError("density is negative somewhere on the grid")
    if np.any(raw_pdf < EPS_DENSITY):
        warnings.warn(
            "density values below 1e-12 were clamped up to keep the grid usable",
            RuntimeWarning,
            stacklevel=3,
        )
        raw_pdf = np.maximum(raw_pdf, EPS_DENSITY)
    raw_cdf = np.concatenate(
        ([0.0], np.cumsum(0.5 * (raw_pdf[1:] + raw_pdf[:-1]) * np.diff(grid)))
    )
    mass = raw_cdf[-1]
    if mass < 1e-12:
        raise ValidationError("density integrates to (numerically) zero mass")
    pdf_vals = raw_pdf / mass
    if np.any(pdf_vals < EPS_DENSITY):
        # normalization can push clamped values back under the floor
        pdf_vals = np.maximum(pdf_vals, EPS_DENSITY)
        cdf_vals = np.concatenate(
            ([0.0], np.cumsum(0.5 * (pdf_vals[1:] + pdf_vals[:-1]) * np.diff(grid)))
        )
        cdf_vals = cdf_vals / cdf_vals[-1]
    else:
        cdf_vals = raw_cdf / mass
    cdf_vals[0] = 0.0
    cdf_vals[-1] = 1.0
    return GriddedDistribution(
        support_lo=float(lo),
        support_hi=float(hi),
        grid=grid,
        pdf_vals=pdf_vals,
        cdf_vals=cdf_vals,
        norm_factor=float(mass),
    )


def make_uniform(lo, hi, m=1024):
    """Uniform distribution on [lo, hi] tabulated on m nodes."""
    if not (np.isfinite(lo) and np.isfinite(hi)) or lo >= hi:
        raise ValidationError("need finite lo < hi")
    if m < 2:
        raise ValidationError("need at least 2 grid nodes")
    grid = np.linspace(lo, hi, int(m))
    raw = np.full(int(m), 1.0 / (hi - lo))
    return _finalize(lo, hi, grid, raw)


def make_from_density(lo, hi, density, m=1024):
    """Sample a density callable on m nodes over [lo, hi] and normalize it."""
    if not (np.isfinite(lo) and np.isfinite(hi)) or lo >= hi:
        raise ValidationError("need finite lo < hi")
    if m < 2:
        raise ValidationError("need at least 2 grid nodes")
    grid = np.linspace(lo, hi, int(m))
    raw = np.asarray(density(grid), dtype=float)
    if raw.shape != grid.shape:
        raw = np.array([float(density(x)) for x in grid])
    if np.any(np.isnan(raw)):
        raise ValidationError("density evaluated to NaN")
    return _finalize(lo, hi, grid, raw)


def make_from_table(grid, pdf_vals):
    """Build a distribution from explicitly tabulated density values."""
    grid = _as_float_array(grid, "grid")
    _check_grid(grid)
    raw = _as_float_array(pdf_vals, "pdf_vals")
    if raw.size != grid.size:
        raise ValidationError("pdf table must match the grid length")
    return _finalize(grid[0], grid[-1], grid, raw)


def constant_curve(grid, value):
    grid = _as_float_array(grid, "grid")
    return GriddedFunction(grid, np.full(grid.size, float(value)))


def curve_from_callable(grid, fn):
    grid = _as_float_array(grid, "grid")
    vals = np.asarray(fn(grid), dtype=float)
    if vals.shape != grid.shape:
        vals = np.array([float(fn(x)) for x in grid])
    return GriddedFunction(grid, vals)


def _validated_query(x):
    x = np.asarray(x, dtype=float)
    if np.any(np.isnan(x)):
        raise ValidationError("query point is NaN")
    return x


def cdf(d, x):
    """F(x) by linear interpolation; queries outside the support clamp."""
    x = _validated_query(x)
    out = np.interp(np.clip(x, d.support_lo, d.support_hi), d.grid, d.cdf_vals)
    return float(out) if out.ndim == 0 else out


def pdf(d, x):
    """f(x) by linear interpolation; queries outside the support clamp."""
    x = _validated_query(x)
    out = np.interp(np.clip(x, d.support_lo, d.support_hi), d.grid, d.pdf_vals)
    return float(out) if out.ndim == 0 else out


def quantile(d, u):
    """Inverse cdf by linear interpolation on the tabulated cdf."""
    u = _validated_query(u)
    if np.any(u < -1e-12) or np.any(u > 1.0 + 1e-12):
        raise ValidationError("quantile argument must lie in [0, 1]")
    out = np.interp(np.clip(u, 0.0, 1.0), d.cdf_vals, d.grid)
    return float(out) if out.ndim == 0 else out


def integrate(f, lo, hi):
    """Composite trapezoid integral of a GriddedFunction over [lo, hi].

    End cells are handled by interpolating the integrand at lo and hi, so
    the bounds need not be grid nodes.  lo > hi is a validation error.
    """
    if np.isnan(lo) or np.isnan(hi):
        raise ValidationError("integration bound is NaN")
    if lo > hi:
        raise ValidationError("integrate() needs lo <= hi")
    g0, g1 = f.grid[0], f.grid[-1]
    if lo < g0 - 1e-9 or hi > g1 + 1e-9:
        raise ValidationError("integration bounds outside the grid span")
    lo = min(max(lo, g0), g1)
    hi = min(max(hi, g0), g1)
    if lo == hi:
        return 0.0
    i0 = np.searchsorted(f.grid, lo, side="right")
    i1 = np.searchsorted(f.grid, hi, side="left")
    xs = np.concatenate(([lo], f.grid[i0:i1], [hi]))
    ys = np.concatenate(([f.value_at(lo)], f.vals[i0:i1], [f.value_at(hi)]))
    return float(np.trapezoid(ys, xs))


def _cell_fractions(a, b, c):
    """Fraction lambda in [0,1] where the linear segment (a -> b) crosses c.

    Works for rising and falling segments; callers combine it with the
    orientation to pick the included sub-interval.  Flat segments are left
    to the caller (division yields inf/nan and is masked out there).
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        lam = (c - a) / (b - a)
    return np.clip(lam, 0.0, 1.0)


def sublevel_integral(grid, level_vals, integrand_vals, c, include_equal=True):
    """Integral of a tabulated integrand over the sublevel set {level <= c}.

    Both ``level_vals`` and ``integrand_vals`` are treated as piecewise
    linear on ``grid``.  Partial cells are integrated exactly for the
    piecewise-linear model, so step-like level curves do not smear.  With
    ``include_equal=False`` flat stretches sitting exactly at c are
    excluded (the strict sublevel set {level < c}).

    Vectorized over c; returns a scalar for scalar c.
    """
    grid = np.asarray(grid, dtype=float)
    lv = np.asarray(level_vals, dtype=float)
    iv = np.asarray(integrand_vals, dtype=float)
    c_arr = np.atleast_1d(np.asarray(c, dtype=float))[:, None]

    a, b = lv[:-1][None, :], lv[1:][None, :]
    w0, w1 = iv[:-1][None, :], iv[1:][None, :]
    dq = np.diff(grid)[None, :]

    flat = np.isclose(a, b, rtol=0.0, atol=0.0)
    lam = _cell_fractions(a, b, c_arr)
    wlam = w0 + (w1 - w0) * lam

    rising = 0.5 * lam * dq * (w0 + wlam)
    falling = 0.5 * (1.0 - lam) * dq * (wlam + w1)
    sloped = np.where(b > a, rising, falling)

    full = 0.5 * dq * (w0 + w1)
    inside = (a <= c_arr) if include_equal else (a < c_arr)
    flat_part = np.where(inside, full, 0.0)

    contrib = np.where(flat, flat_part, sloped)
    out = contrib.sum(axis=1)
    return float(out[0]) if np.isscalar(c) or np.asarray(c).ndim == 0 else out


def sublevel_mass(d, curve_vals, c, include_equal=True):
    """P(curve(X) <= c) for X ~ d, with the curve tabulated on d's grid.

    The cdf is treated as piecewise linear between nodes (consistent with
    ``cdf``).  ``include_equal`` controls whether flat stretches of the
    curve sitting exactly at level c contribute their probability mass,
    which is how ties at ironed plateaus get split between buyers.

    Vectorized over c; returns a scalar for scalar c.
    """
    cv = np.asarray(curve_vals, dtype=float)
    if cv.size != d.grid.size:
        raise ValidationError("curve table must match the distribution grid")
    c_arr = np.atleast_1d(np.asarray(c, dtype=float))[:, None]

    a, b = cv[:-1][None, :], cv[1:][None, :]
    dF = np.diff(d.cdf_vals)[None, :]

    flat = np.isclose(a, b, rtol=0.0, atol=0.0)
    lam = _cell_fractions(a, b, c_arr)
    sloped = np.where(b > a, lam, 1.0 - lam) * dF

    inside = (a <= c_arr) if include_equal else (a < c_arr)
    flat_part = np.where(inside, dF, 0.0)

    contrib = np.where(flat, flat_part, sloped)
    out = contrib.sum(axis=1)
    return float(out[0]) if np.isscalar(c) or np.asarray(c).ndim == 0 else out
