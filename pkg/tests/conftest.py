"""Shared fixtures: the instance suite used across verification tests.

The suite spans one to three buyers, constant / increasing / decreasing /
V-shaped / inverse-V reserve-ratio curves, and regular as well as
irregular (bimodal) type distributions.
"""

import warnings

import numpy as np
import pytest

import qsell


def bimodal_density(x, s=0.08):
    """Equal mixture of two normal bumps at 0.25 and 0.75 (irregular)."""
    x = np.asarray(x, dtype=float)
    z = 1.0 / (s * np.sqrt(2.0 * np.pi))
    return 0.5 * z * (
        np.exp(-0.5 * ((x - 0.25) / s) ** 2)
        + np.exp(-0.5 * ((x - 0.75) / s) ** 2)
    )


def make_bimodal(m=1025):
    return qsell.make_from_density(0.0, 1.0, bimodal_density, m=m)


def make_rising_density(m=1025):
    """f(t) = 2t on [0, 1]; density vanishes at 0 and is clamped there."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return qsell.make_from_density(0.0, 1.0, lambda t: 2.0 * np.asarray(t, float), m=m)


def _uniform_quality(m=257):
    return qsell.make_uniform(0.0, 1.0, m=m)


def build_suite():
    """name -> ProblemInstance covering the shapes the checks must span."""
    suite = {}

    # 1 buyer, constant xi == 0, regular
    qm = qsell.make_quality_model(_uniform_quality(), 1.0, 0.0)
    suite["posted-price"] = qsell.ProblemInstance(
        buyers=(qsell.make_uniform(0.0, 1.0, m=1025),), quality=qm
    )

    # 2 iid buyers, constant xi == 0, regular
    suite["two-uniform"] = qsell.ProblemInstance(
        buyers=(
            qsell.make_uniform(0.0, 1.0, m=1025),
            qsell.make_uniform(0.0, 1.0, m=1025),
        ),
        quality=qm,
    )

    # 1 buyer, increasing xi = q, regular
    qm_inc = qsell.make_quality_model(
        _uniform_quality(513), 1.0, lambda q: np.asarray(q, float)
    )
    suite["reserve-ramp"] = qsell.ProblemInstance(
        buyers=(qsell.make_uniform(0.0, 1.0, m=1025),), quality=qm_inc
    )

    # 2 heterogeneous buyers, decreasing xi = 1/(1+q), regular
    qm_dec = qsell.make_quality_model(
        _uniform_quality(513), lambda q: 1.0 + np.asarray(q, float), 1.0
    )
    suite["mixed-decreasing"] = qsell.ProblemInstance(
        buyers=(qsell.make_uniform(0.0, 1.0, m=1025), make_rising_density(1025)),
        quality=qm_dec,
    )

    # 3 iid buyers, V-shaped xi = |q - 1/2|, regular
    qm_v = qsell.make_quality_model(
        _uniform_quality(513), 1.0, lambda q: np.abs(np.asarray(q, float) - 0.5)
    )
    suite["three-v-shape"] = qsell.ProblemInstance(
        buyers=tuple(qsell.make_uniform(0.0, 1.0, m=513) for _ in range(3)),
        quality=qm_v,
    )

    # 1 irregular (bimodal) buyer, increasing xi = q
    suite["bimodal-ramp"] = qsell.ProblemInstance(
        buyers=(make_bimodal(1025),), quality=qm_inc
    )

    # bimodal + uniform buyers, inverse-V xi (two-piece acceptance sets)
    qm_hat = qsell.make_quality_model(
        _uniform_quality(513),
        2.0,
        lambda q: 2.0 * (0.5 - np.abs(np.asarray(q, float) - 0.5)),
    )
    suite["bimodal-inverse-v"] = qsell.ProblemInstance(
        buyers=(make_bimodal(1025), qsell.make_uniform(0.0, 1.0, m=1025)),
        quality=qm_hat,
    )

    return suite


@pytest.fixture(scope="session")
def suite():
    return build_suite()


@pytest.fixture(scope="session")
def solved_suite(suite):
    return {name: (inst, qsell.build_optimal_mechanism(inst)) for name, inst in suite.items()}


@pytest.fixture(scope="session")
def two_uniform(solved_suite):
    return solved_suite["two-uniform"]


@pytest.fixture(scope="session")
def posted_price(solved_suite):
    return solved_suite["posted-price"]
