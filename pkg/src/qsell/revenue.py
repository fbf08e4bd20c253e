"""Revenue accounting for threshold mechanisms.

Two independent routes compute expected revenue: the direct route sums
interim payments weighted by win probabilities plus the reserve value of
retained items; the virtual route integrates virtual surplus against the
allocation.  Agreement between the two is a strong end-to-end check and
is exposed as such.  A Monte-Carlo simulator and two benchmark sellers
(a quality-blind auction and the best constant posted price with a
binary disclosure) complete the module.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import dist
from .errors import ValidationError
from .mechanism import (
    WIN_PROB_FLOOR,
    _opponent_product,
    _QualitySide,
    _type_factor_fns,
    allocate_many,
    interim_tables,
    xi_at,
)

__all__ = [
    "revenue_direct",
    "revenue_virtual",
    "simulate",
    "SimulationReport",
    "myerson_baseline",
    "QualityBlindBaseline",
    "best_constant_price",
    "ConstantPriceBaseline",
]


# ---------------------------------------------------------------------------
# expected revenue, direct route


def _no_sale_quality_integral(inst, curves):
    """Integral over quality of reserve * g * P(nobody clears xi(q)).

    The probability factor jumps where xi crosses a level at which some
    buyer's threshold curve carries probability mass, so those crossings
    are inserted as one-sided points before applying the trapezoid rule.
    """
    qs = _QualitySide(inst)
    qgrid, xi, rg = qs.grid, qs.xi, qs.rg

    def mass_prod(levels, include_equal):
        out = np.ones_like(np.atleast_1d(levels), dtype=float)
        for j, d in enumerate(inst.buyers):
            out = out * dist.sublevel_mass(
                d, curves[j].phi_ironed, np.atleast_1d(levels), include_equal
            )
        return out

    atom_levels = set()
    from .mechanism import _curve_atom_levels

    for j, d in enumerate(inst.buyers):
        atom_levels.update(_curve_atom_levels(d, curves[j].phi_ironed))

    base_vals = rg * mass_prod(xi, False)
    pts_t = list(qgrid)
    pts_rank = [1] * len(qgrid)
    pts_val = list(base_vals)
    for lev in sorted(atom_levels):
        strict = mass_prod(np.asarray([lev]), False)[0]
        weak = mass_prod(np.asarray([lev]), True)[0]
        if weak - strict <= 1e-14:
            continue
        for k in range(qgrid.size - 1):
            a, b = xi[k], xi[k + 1]
            r_at = None
            if a < lev < b:
                frac = (lev - a) / (b - a)
                q_star = qgrid[k] + frac * (qgrid[k + 1] - qgrid[k])
                rg_star = np.interp(q_star, qgrid, rg)
                pts_t += [q_star, q_star]
                pts_rank += [0, 2]
                pts_val += [rg_star * strict, rg_star * weak]
            elif a > lev > b:
                frac = (a - lev) / (a - b)
                q_star = qgrid[k] + frac * (qgrid[k + 1] - qgrid[k])
                rg_star = np.interp(q_star, qgrid, rg)
                pts_t += [q_star, q_star]
                pts_rank += [0, 2]
                pts_val += [rg_star * weak, rg_star * strict]
            elif a == lev and b > lev:
                pts_t.append(qgrid[k])
                pts_rank.append(2)
                pts_val.append(rg[k] * weak)
            elif b == lev and a > lev:
                pts_t.append(qgrid[k + 1])
                pts_rank.append(0)
                pts_val.append(rg[k + 1] * weak)
    order = np.lexsort((np.asarray(pts_rank), np.asarray(pts_t)))
    t = np.asarray(pts_t)[order]
    v = np.asarray(pts_val)[order]
    return float(np.trapezoid(v, t))


def revenue_direct(inst, m):
    """Expected revenue as payments collected plus reserve value retained."""
    tables = interim_tables(inst, m.curves)
    total = _no_sale_quality_integral(inst, m.curves)
    for i in range(inst.n_buyers):
        if m.active_from is None or m.active_from[i] < 0:
            continue
        tab = tables[i]
        pay = m.payment_at(i, tab.t_comb)
        integrand = np.where(
            tab.W_comb > WIN_PROB_FLOOR, pay * tab.W_comb * tab.f_comb, 0.0
        )
        total += float(np.trapezoid(integrand, tab.t_comb))
    return total


def revenue_virtual(inst, m):
    """Expected revenue as reserve value plus allocated virtual surplus.

    Uses the raw virtual value inside the integrand while the allocation
    ranks by the ironed one; over each ironed interval the two integrate
    identically against the type density, so the routes must agree.
    """
    qs = _QualitySide(inst)
    total = float(np.trapezoid(qs.rg, qs.grid))
    tables = interim_tables(inst, m.curves)
    for i in range(inst.n_buyers):
        tab = tables[i]
        integrand = tab.f_comb * tab.opp_comb * (
            tab.phiraw_comb * tab.A_comb - tab.C_comb
        )
        total += float(np.trapezoid(integrand, tab.t_comb))
    return total


# ---------------------------------------------------------------------------
# simulation


@dataclass(frozen=True)
class SimulationReport:
    """Empirical summary of running a mechanism on sampled profiles.

    ``allocation_frequency`` lists the no-sale frequency first, then one
    entry per buyer, and sums to 1.  ``per_buyer_utility_mean`` averages
    realized value minus payment over all samples (zero when not asked).
    """

    n_samples: int
    seed: int
    revenue_mean: float
    revenue_stderr: float
    per_buyer_utility_mean: tuple
    allocation_frequency: tuple
    obedience_violations: int

    @property
    def sale_frequency(self):
        return 1.0 - self.allocation_frequency[0]


def simulate(inst, m, n_samples, seed):
    """Monte-Carlo run of a mechanism; reproducible for a fixed seed.

    Types and quality are drawn by quantile transform from independent
    child streams of one seed sequence, so reports are bit-identical
    across runs with the same arguments.
    """
    if n_samples <= 0:
        raise ValidationError("n_samples must be positive")
    n = inst.n_buyers
    children = np.random.SeedSequence(seed).spawn(n + 1)
    types = np.column_stack(
        [
            dist.quantile(d, np.random.Generator(np.random.PCG64(children[i])).random(n_samples))
            for i, d in enumerate(inst.buyers)
        ]
    )
    qualities = dist.quantile(
        inst.quality.G,
        np.random.Generator(np.random.PCG64(children[n])).random(n_samples),
    )

    winners = allocate_many(m, types, qualities)
    revenue = inst.quality.reserve.value_at(qualities).copy()

    tables = interim_tables(inst, m.curves)
    b_fn, _ = _type_factor_fns(inst)
    alloc_freq = [float(np.mean(winners < 0))]
    utility_mean = []
    violations = 0
    for i in range(n):
        mask = winners == i
        alloc_freq.append(float(np.mean(mask)))
        if not mask.any():
            utility_mean.append(0.0)
            continue
        t_won = types[mask, i]
        pay = m.payment_at(i, t_won)
        revenue[mask] = pay
        value = m.value_of(i, t_won, qualities[mask])
        utility_mean.append(float(np.sum(value - pay)) / n_samples)
        # expected surplus of an asked buyer, interpolated from grid nodes
        tab = tables[i]
        defined = tab.W > WIN_PROB_FLOOR
        grid = inst.buyers[i].grid
        with np.errstate(invalid="ignore", divide="ignore"):
            s_nodes = np.where(
                defined,
                b_fn(grid) * tab.A / np.where(defined, tab.B, 1.0)
                - m.payment[i].vals,
                np.nan,
            )
        g_def = grid[defined]
        s_def = s_nodes[defined]
        if g_def.size:
            s_won = np.interp(np.clip(t_won, g_def[0], g_def[-1]), g_def, s_def)
            violations += int(np.sum(s_won < -1e-9))

    mean = float(np.mean(revenue))
    se = float(np.std(revenue, ddof=1) / np.sqrt(n_samples)) if n_samples > 1 else 0.0
    return SimulationReport(
        n_samples=int(n_samples),
        seed=int(seed),
        revenue_mean=mean,
        revenue_stderr=se,
        per_buyer_utility_mean=tuple(utility_mean),
        allocation_frequency=tuple(alloc_freq),
        obedience_violations=int(violations),
    )


# ---------------------------------------------------------------------------
# benchmark: quality-blind auction (no disclosure, constant quality curves)


@dataclass(frozen=True)
class QualityBlindBaseline:
    """Optimal auction computed as if quality were fixed at its known level.

    Valid only when alpha and reserve are constant, in which case
    revealing quality is worthless and this classic benchmark must agree
    with the threshold mechanism exactly.
    """

    type_grids: tuple
    phi_tables: tuple
    alpha_bar: float
    reserve_bar: float
    xi_bar: float
    revenue: float

    def allocate_many(self, types):
        types = np.asarray(types, dtype=float)
        levels = np.column_stack(
            [
                np.interp(
                    np.clip(types[:, i], g[0], g[-1]), g, p
                )
                for i, (g, p) in enumerate(zip(self.type_grids, self.phi_tables))
            ]
        )
        winners = np.argmax(levels, axis=1)
        best = levels[np.arange(levels.shape[0]), winners]
        return np.where(best >= self.xi_bar, winners, -1)


def myerson_baseline(inst):
    """Build the quality-blind benchmark from first principles.

    Deliberately shares no code with the mechanism construction: virtual
    values, the allocation rule, and the revenue quadrature are inlined
    here so the benchmark is an independent witness.  Requires constant
    alpha and reserve and regular buyers.
    """
    qm = inst.quality
    for name, curve in (("alpha", qm.alpha), ("reserve", qm.reserve)):
        if float(np.max(curve.vals) - np.min(curve.vals)) > 1e-12:
            raise ValidationError(
                f"quality-blind benchmark needs a constant {name} curve"
            )
    if inst.valuation.kind != "linear":
        raise ValidationError("quality-blind benchmark covers the linear form only")
    alpha_bar = float(qm.alpha.vals[0])
    reserve_bar = float(qm.reserve.vals[0])
    xi_bar = reserve_bar / alpha_bar

    grids = []
    phis = []
    for d in inst.buyers:
        phi = d.grid - (1.0 - d.cdf_vals) / d.pdf_vals
        if np.any(np.diff(phi) < -1e-9):
            raise ValidationError("quality-blind benchmark assumes regular buyers")
        grids.append(d.grid)
        phis.append(np.maximum.accumulate(phi))

    # revenue = reserve + sum_i E[ 1{i wins} * (alpha*phi_i - reserve) ]
    total = reserve_bar
    for i, d in enumerate(inst.buyers):
        phi = phis[i]
        opp = np.ones_like(phi)
        for j, dj in enumerate(inst.buyers):
            if j == i:
                continue
            tj = np.interp(
                phi, phis[j], dj.grid, left=dj.grid[0] - 1.0, right=dj.grid[-1]
            )
            Fj = np.where(
                tj < dj.grid[0],
                0.0,
                np.interp(tj, dj.grid, dj.cdf_vals),
            )
            opp = opp * Fj
        gain = alpha_bar * phi - reserve_bar
        integrand = np.where(phi >= xi_bar, d.pdf_vals * opp * gain, 0.0)
        t_pts = d.grid
        # insert the participation point to remove the kink error
        idx = int(np.searchsorted(phi, xi_bar, side="left"))
        if 0 < idx < phi.size:
            a, b = phi[idx - 1], phi[idx]
            if b > a:
                frac = (xi_bar - a) / (b - a)
                t_star = d.grid[idx - 1] + frac * (d.grid[idx] - d.grid[idx - 1])
                t_pts = np.insert(d.grid, idx, t_star)
                integrand = np.insert(integrand, idx, 0.0)
        total += float(np.trapezoid(integrand, t_pts))

    return QualityBlindBaseline(
        type_grids=tuple(grids),
        phi_tables=tuple(phis),
        alpha_bar=alpha_bar,
        reserve_bar=reserve_bar,
        xi_bar=xi_bar,
        revenue=total,
    )


# ---------------------------------------------------------------------------
# benchmark: best constant posted price with binary disclosure


@dataclass(frozen=True)
class ConstantPriceBaseline:
    """Best single posted price with a public pass/fail quality signal."""

    price: float
    cutoff: float
    revenue: float


def _constant_price_revenue(inst, qs, prices, cutoff):
    """Revenue of each posted price after announcing whether xi(q) <= cutoff."""
    prices = np.atleast_1d(np.asarray(prices, dtype=float))
    b_fn, _ = _type_factor_fns(inst)
    B1 = qs.B(cutoff, True)
    A1 = qs.A(cutoff, True)
    A_tot = qs.A(qs.xi_max, True)
    C1 = qs.C(cutoff, True)
    C_tot = qs.C(qs.xi_max, True)
    total = np.zeros_like(prices)
    for mass, alpha_mean, retained in (
        (B1, A1 / B1 if B1 > 1e-12 else 0.0, C1),
        (1.0 - B1, (A_tot - A1) / (1.0 - B1) if 1.0 - B1 > 1e-12 else 0.0, C_tot - C1),
    ):
        if mass <= 1e-12:
            continue
        prob_no_buyer = np.ones_like(prices)
        if alpha_mean > 0.0:
            for d in inst.buyers:
                b_vals = b_fn(d.grid)
                # smallest type whose expected value clears each price
                tau = np.interp(
                    prices / alpha_mean, b_vals, d.grid,
                    left=d.grid[0], right=d.grid[-1] + 1.0,
                )
                f_tau = np.where(
                    tau > d.grid[-1],
                    1.0,
                    np.interp(np.clip(tau, d.grid[0], d.grid[-1]), d.grid, d.cdf_vals),
                )
                prob_no_buyer = prob_no_buyer * f_tau
        total += prices * (1.0 - prob_no_buyer) * mass + prob_no_buyer * retained
    return total


def best_constant_price(inst, n_price=241):
    """Grid-search the best constant posted price and binary disclosure cutoff.

    The search is exhaustive over quality-grid cutoffs and a price grid
    with one local refinement, so the reported revenue is a lower bound
    on what this restricted family can achieve; the family itself is
    incentive compatible, hence never better than the optimal mechanism.
    """
    qs = _QualitySide(inst)
    b_fn, _ = _type_factor_fns(inst)
    cutoffs = np.unique(
        np.concatenate((qs.xi, [qs.xi_min - 1.0, qs.xi_max + 1.0]))
    )
    alpha_max = float(np.max(inst.quality.alpha.vals))
    p_hi = max(float(np.max(b_fn(d.grid))) for d in inst.buyers) * alpha_max
    prices = np.linspace(0.0, p_hi, n_price)

    def sweep(price_grid, best):
        for cut in cutoffs:
            revs = _constant_price_revenue(inst, qs, price_grid, float(cut))
            j = int(np.argmax(revs))
            if revs[j] > best[2]:
                best = (float(price_grid[j]), float(cut), float(revs[j]))
        return best

    best = sweep(prices, (0.0, float(cutoffs[-1]), -np.inf))

    # one refinement pass around the best price
    step = prices[1] - prices[0] if n_price > 1 else 1.0
    fine = np.linspace(max(best[0] - step, 0.0), best[0] + step, 81)
    best = sweep(fine, best)

    return ConstantPriceBaseline(price=best[0], cutoff=best[1], revenue=best[2])
