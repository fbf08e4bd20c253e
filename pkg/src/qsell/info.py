"""What a purchase recommendation reveals about quality.

Asking a buyer discloses exactly that the quality-adjusted reserve
xi(q) lies below the buyer's threshold level, so the buyer's posterior
over quality is the prior truncated to a sublevel set of xi.  This
module extracts those sets as interval unions, classifies the reserve
curve's shape, and sweeps winner types into a partition summary.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import dist
from .errors import ValidationError

__all__ = [
    "IntervalUnion",
    "acceptance_set",
    "classify_structure",
    "partition_summary",
    "partition_summary_csv",
]

MONOTONE_SLACK = 1e-9


@dataclass(frozen=True)
class IntervalUnion:
    """Disjoint closed intervals, sorted by left endpoint."""

    intervals: tuple

    def __post_init__(self):
        ivs = tuple((float(a), float(b)) for a, b in self.intervals)
        for a, b in ivs:
            if b < a:
                raise ValidationError("interval endpoints out of order")
        for (a0, b0), (a1, b1) in zip(ivs, ivs[1:]):
            if a1 <= b0:
                raise ValidationError("intervals must be disjoint and sorted")
        object.__setattr__(self, "intervals", ivs)

    @property
    def is_empty(self):
        return not self.intervals

    @property
    def measure(self):
        return float(sum(b - a for a, b in self.intervals))

    def contains(self, q, tol=1e-12):
        q = float(q)
        return any(a - tol <= q <= b + tol for a, b in self.intervals)


def acceptance_set(qm, v):
    """Qualities cleared for sale at threshold level v.

    The sublevel set {q : xi(q) <= v} of the quality support, with
    endpoints located by linear interpolation inside grid cells.
    Boundary points with xi(q) = v exactly are included, matching the
    weak inequality used by the allocation rule.
    """
    qgrid = qm.xi.grid
    xi = qm.xi.vals
    c = float(v)

    mask = xi <= c
    if not mask.any():
        return IntervalUnion(intervals=())

    intervals = []
    k = 0
    n = qgrid.size
    while k < n:
        if not mask[k]:
            k += 1
            continue
        # left endpoint: either the support edge or a crossing in cell k-1
        if k == 0:
            left = float(qgrid[0])
        else:
            a, b = xi[k - 1], xi[k]
            frac = (a - c) / (a - b) if a != b else 0.0
            left = float(qgrid[k - 1] + frac * (qgrid[k] - qgrid[k - 1]))
        j = k
        while j + 1 < n and mask[j + 1]:
            j += 1
        if j == n - 1:
            right = float(qgrid[-1])
        else:
            a, b = xi[j], xi[j + 1]
            frac = (c - a) / (b - a) if b != a else 1.0
            right = float(qgrid[j] + frac * (qgrid[j + 1] - qgrid[j]))
        intervals.append((left, right))
        k = j + 1

    # merge intervals that touch through numerical coincidence
    merged = [intervals[0]]
    for a, b in intervals[1:]:
        if a <= merged[-1][1] + 1e-15:
            merged[-1] = (merged[-1][0], max(merged[-1][1], b))
        else:
            merged.append((a, b))
    return IntervalUnion(intervals=tuple(merged))


def classify_structure(qm):
    """Shape class of the quality-adjusted reserve curve.

    "lower" when xi is non-decreasing (every acceptance set starts at
    the bottom of the support), "upper" when non-increasing, and
    "segments" otherwise.  A constant curve counts as "lower".
    """
    steps = np.diff(qm.xi.vals)
    if np.all(steps >= -MONOTONE_SLACK):
        return "lower"
    if np.all(steps <= MONOTONE_SLACK):
        return "upper"
    return "segments"


def _threshold_level(m, i, t):
    c = m.curves[i]
    return float(np.interp(t, c.type_grid, c.phi_ironed))


def _set_mass_and_mean(qm, s):
    """Prior G-measure of the set and the posterior mean quality on it."""
    if s.is_empty:
        return 0.0, math.nan
    g = dist.GriddedFunction(qm.G.grid, qm.G.pdf_vals)
    qg = dist.GriddedFunction(qm.G.grid, qm.G.grid * qm.G.pdf_vals)
    mass = sum(dist.integrate(g, a, b) for a, b in s.intervals)
    if mass <= 1e-15:
        return float(mass), math.nan
    mean = sum(dist.integrate(qg, a, b) for a, b in s.intervals) / mass
    return float(mass), float(mean)


def partition_summary(inst, m, i=0, types=None, n_types=21):
    """Sweep winner types and tabulate what acceptance reveals.

    One row per type: the threshold level, the acceptance set written
    as "lo:hi" segments, its prior mass, and the posterior mean quality
    (NaN when the type is never asked).
    """
    grid = m.curves[i].type_grid
    if types is None:
        types = np.linspace(grid[0], grid[-1], n_types)
    qm = m.quality
    rows = []
    for t in np.asarray(types, dtype=float):
        level = _threshold_level(m, i, float(t))
        s = acceptance_set(qm, level)
        mass, mean = _set_mass_and_mean(qm, s)
        rows.append(
            {
                "type": float(t),
                "phi_bar": level,
                "segment_list": ";".join(
                    f"{a:.12g}:{b:.12g}" for a, b in s.intervals
                ),
                "mass": mass,
                "posterior_mean": mean,
            }
        )
    return rows


def partition_summary_csv(rows, path):
    """Write a partition summary to CSV (RFC-4180, 12-significant-digit floats)."""
    fields = ["type", "phi_bar", "segment_list", "mass", "posterior_mean"]
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in rows:
            out = dict(row)
            for key in ("type", "phi_bar", "mass"):
                out[key] = f"{row[key]:.12g}"
            out["posterior_mean"] = (
                "" if math.isnan(row["posterior_mean"])
                else f"{row['posterior_mean']:.12g}"
            )
            writer.writerow(out)
    return path
