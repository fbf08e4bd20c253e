"""Virtual values, regularity detection, and ironing.

The ironed curve is produced the classical way: transport the curve to
quantile space, integrate it, take the lower convex envelope of the
integral, and read the envelope's slopes back through the cdf.  On the
type grid the result is assembled so that it exactly equals the raw curve
outside the detected flat segments and is exactly constant inside them.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import dist
from .errors import ValidationError

__all__ = [
    "VirtualValueCurve",
    "virtual_value",
    "virtual_value_table",
    "is_regular",
    "iron",
    "lower_convex_envelope",
    "generalized_virtual_value",
    "AssumptionReport",
    "check_assumptions",
]

MONOTONE_SLACK = 1e-9
IRON_GAP_TOL = 1e-9
DEFAULT_OMEGA_NODES = 2048


@dataclass
class VirtualValueCurve:
    """A buyer's (possibly ironed) virtual value curve on their type grid.

    ``ironed_intervals`` holds (lo_idx, hi_idx) index pairs into
    ``type_grid``; ``phi_ironed`` is constant on each of them and equal to
    ``phi`` everywhere else.  ``interp_residual`` is a diagnostic: the
    largest gap between the assembled curve and the raw envelope-slope
    composition, which grows when the quantile transform is poorly
    resolved near the support edges.
    """

    type_grid: np.ndarray
    phi: np.ndarray
    phi_ironed: np.ndarray
    ironed_intervals: list
    regular: bool
    interp_residual: float = field(default=0.0, compare=False)

    def phi_at(self, t):
        out = np.interp(t, self.type_grid, self.phi)
        return float(out) if np.ndim(out) == 0 else out

    def phi_ironed_at(self, t):
        out = np.interp(t, self.type_grid, self.phi_ironed)
        return float(out) if np.ndim(out) == 0 else out

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["type", "phi", "phi_ironed"])
            for t, p, pi in zip(self.type_grid, self.phi, self.phi_ironed):
                writer.writerow([f"{t:.12g}", f"{p:.12g}", f"{pi:.12g}"])


def virtual_value(d, t):
    """phi(t) = t - (1 - F(t)) / f(t) from the gridded cdf and pdf."""
    t_arr = np.asarray(t, dtype=float)
    out = t_arr - (1.0 - dist.cdf(d, t_arr)) / dist.pdf(d, t_arr)
    return float(out) if out.ndim == 0 else out


def virtual_value_table(d):
    """phi evaluated at every node of d's grid."""
    return d.grid - (1.0 - d.cdf_vals) / d.pdf_vals


def is_regular(d):
    """True when phi is non-decreasing on the grid, up to a 1e-9 slack."""
    return bool(np.all(np.diff(virtual_value_table(d)) >= -MONOTONE_SLACK))


def lower_convex_envelope(x, y):
    """Indices of the lower convex hull vertices of the points (x, y).

    Monotone-chain construction: scan left to right, popping the stack
    while the last turn is not strictly convex.  x must be increasing.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    hull = [0]
    for k in range(1, x.size):
        while len(hull) >= 2:
            i, j = hull[-2], hull[-1]
            cross = (x[j] - x[i]) * (y[k] - y[i]) - (y[j] - y[i]) * (x[k] - x[i])
            if cross <= 0.0:
                hull.pop()
            else:
                break
        hull.append(k)
    return np.asarray(hull, dtype=int)


def _envelope_values(omega, hull_idx, H):
    """Envelope values and per-cell slopes on the omega grid."""
    L = np.interp(omega, omega[hull_idx], H[hull_idx])
    slopes = np.diff(L) / np.diff(omega)
    return L, slopes


def iron(d, psi, n_omega=DEFAULT_OMEGA_NODES):
    """Iron a curve psi given on d's type grid.

    Returns a VirtualValueCurve whose ``phi`` is psi sampled on the grid
    and whose ``phi_ironed`` replaces each detected non-convex stretch by
    the constant slope of the lower convex envelope.  Flat segments are
    the maximal runs where the envelope sits more than 1e-9 below the
    integrated curve; shallower wobbles are left alone.
    """
    if isinstance(psi, dist.GriddedFunction):
        if psi.grid.size != d.grid.size or not np.allclose(psi.grid, d.grid):
            raise ValidationError("psi must be tabulated on the distribution's grid")
        psi_vals = psi.vals
    else:
        psi_vals = np.asarray(psi, dtype=float)
        if psi_vals.size != d.grid.size:
            raise ValidationError("psi table must match the distribution grid")

    # Include the nodes' own quantile positions so a dip confined to a
    # single type cell is always visible on the integration grid.
    omega = np.union1d(np.linspace(0.0, 1.0, int(n_omega)), d.cdf_vals)
    t_of_omega = dist.quantile(d, omega)
    h = np.interp(t_of_omega, d.grid, psi_vals)
    H = np.concatenate(([0.0], np.cumsum(0.5 * (h[1:] + h[:-1]) * np.diff(omega))))

    hull_idx = lower_convex_envelope(omega, H)
    L, slopes = _envelope_values(omega, hull_idx, H)
    gap = H - L

    # Maximal runs where the envelope is strictly below the integral.
    above = gap > IRON_GAP_TOL
    intervals = []
    phi_ironed = psi_vals.copy()
    F_nodes = d.cdf_vals
    k = 0
    while k < above.size:
        if not above[k]:
            k += 1
            continue
        j = k
        while j + 1 < above.size and above[j + 1]:
            j += 1
        lo_w, hi_w = k - 1, j + 1  # contact nodes bracketing the run
        w_a, w_b = omega[lo_w], omega[hi_w]
        plateau = (L[hi_w] - L[lo_w]) / (w_b - w_a)
        # Interior contacts are tangency points, so boundary grid nodes
        # stay on the raw curve; at the support edges the envelope takes
        # a chord without tangency and the edge node belongs inside.
        lo_ok = F_nodes >= w_a if lo_w == 0 else F_nodes > w_a
        hi_ok = F_nodes <= w_b if hi_w == omega.size - 1 else F_nodes < w_b
        inside = np.nonzero(lo_ok & hi_ok)[0]
        if inside.size:
            lo_idx, hi_idx = int(inside[0]), int(inside[-1])
        else:
            # Run interior holds no node (the dip lives inside one type
            # cell); start from an empty range so the expansion below can
            # still pull in boundary nodes that contradict the plateau.
            lo_idx = int(np.searchsorted(F_nodes, w_a, side="right"))
            hi_idx = lo_idx - 1
        # A contact can land exactly on (or within one omega cell of) a
        # grid node.  A neighbor whose raw value contradicts the plateau
        # ordering belongs inside the flat segment — the ironed curve is
        # monotone — so swallow it rather than keep the raw value.
        while lo_idx - 1 >= 0 and phi_ironed[lo_idx - 1] > plateau:
            lo_idx -= 1
        while hi_idx + 1 < phi_ironed.size and phi_ironed[hi_idx + 1] < plateau:
            hi_idx += 1
        if hi_idx >= lo_idx:
            phi_ironed[lo_idx : hi_idx + 1] = plateau
            intervals.append((lo_idx, hi_idx))
        k = j + 1

    regular = bool(np.all(np.diff(psi_vals) >= -MONOTONE_SLACK))

    slope_at_nodes = np.interp(
        np.clip(F_nodes, omega[0], omega[-1]),
        0.5 * (omega[:-1] + omega[1:]),
        slopes,
    )
    residual = float(np.max(np.abs(slope_at_nodes - phi_ironed))) if F_nodes.size else 0.0

    return VirtualValueCurve(
        type_grid=d.grid.copy(),
        phi=psi_vals.copy(),
        phi_ironed=phi_ironed,
        ironed_intervals=intervals,
        regular=regular and not intervals,
        interp_residual=residual,
    )


def generalized_virtual_value(valuation, d, t, q):
    """v / (dv/dt) - (1 - F) / f for a general valuation form.

    Raises when the type derivative is not strictly positive at (t, q).
    """
    v = valuation.value(t, q)
    dv = valuation.deriv(t, q)
    if np.any(np.asarray(dv) <= 0.0):
        raise ValidationError("valuation derivative in type must be positive")
    return v / dv - (1.0 - dist.cdf(d, t)) / dist.pdf(d, t)


@dataclass
class AssumptionReport:
    """Grid-check outcome for a general valuation form.

    Each violation is a (check_name, t, q) triple located on the probe
    grid, so callers can see where a form went wrong rather than just
    that it did.
    """

    ok: bool
    violations: list

    def worst(self, name):
        return [v for v in self.violations if v[0] == name]


def check_assumptions(valuation, d, quality_grid, slack=1e-9):
    """Check convexity/monotonicity in type and the no-ironing condition.

    Three families of grid checks per quality node: the valuation must be
    non-decreasing and convex in the type, and the generalized virtual
    value must be non-decreasing in the type (the condition that lets the
    build skip ironing entirely for general forms).
    """
    t = d.grid
    violations = []
    for q in np.atleast_1d(np.asarray(quality_grid, dtype=float)):
        v = np.asarray(valuation.value(t, q), dtype=float)
        dv = np.asarray(valuation.deriv(t, q), dtype=float)
        dt = np.diff(t)
        first = np.diff(v)
        if np.any(first < -slack):
            k = int(np.argmin(np.diff(v)))
            violations.append(("monotonicity", float(t[k]), float(q)))
        second = np.diff(first / dt)
        if np.any(second < -1e-7):
            k = int(np.argmin(second))
            violations.append(("convexity", float(t[k + 1]), float(q)))
        if np.any(dv <= 0.0):
            k = int(np.argmin(dv))
            violations.append(("positive-derivative", float(t[k]), float(q)))
            continue
        gv = v / dv - (1.0 - d.cdf_vals) / d.pdf_vals
        if np.any(np.diff(gv) < -slack):
            k = int(np.argmin(np.diff(gv)))
            violations.append(("virtual-monotonicity", float(t[k]), float(q)))
    return AssumptionReport(ok=not violations, violations=violations)
