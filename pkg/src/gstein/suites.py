"""Scenario catalogs and seeded random case generators.

Everything here is deterministic given a numpy Generator: the axiom,
bound and rate suites used by the tests and the command line both draw
from these builders, so a fixed seed reproduces a run exactly.
"""

from __future__ import annotations

import math

import numpy as np

from .clt import NonIidSpec
from .functions import cosine, ramp, smoothed_hat, smoothed_ramp
from .gheat import GCoeff
from .measures import DiscreteMeasure, TestFunction, UncertaintySet, variance_bounds

__all__ = [
    "two_scale_rademacher",
    "classical_rademacher",
    "rademacher_pair",
    "geometric_noniid",
    "identical_noniid",
    "identity_suite_sets",
    "identity_suite_functions",
    "regularity_phi_suite",
    "random_symmetric_measure",
    "random_centered_measure",
    "random_measure",
    "random_uncertainty_set",
    "random_poly_trig",
    "random_smooth_c2",
]


# -- fixed scenarios --------------------------------------------------------

def two_scale_rademacher(a_small: float = 0.5, a_big: float = 1.0) -> UncertaintySet:
    """{symmetric two-point at a_small, symmetric two-point at a_big}:
    centered, variance band [a_small^2, a_big^2]."""
    return UncertaintySet.of(DiscreteMeasure.rademacher(a_small),
                             DiscreteMeasure.rademacher(a_big))


def classical_rademacher(a: float = 1.0) -> UncertaintySet:
    """Singleton set: the classical symmetric two-point measure."""
    return UncertaintySet.of(DiscreteMeasure.rademacher(a))


def rademacher_pair() -> UncertaintySet:
    """{two-point at 1, two-point at 2}: variance band [1, 4]."""
    return two_scale_rademacher(1.0, 2.0)


def _band_component(sigma_mid: float, beta: float) -> UncertaintySet:
    """Two-scale component with midpoint volatility sigma_mid and ratio beta."""
    a = 2.0 * beta * sigma_mid / (1.0 + beta)
    return two_scale_rademacher(a / beta, a)


def geometric_noniid(ratio: float = 1.2, n: int = 8, beta: float = 2.0) -> NonIidSpec:
    """Components with midpoint volatilities ratio^1, ..., ratio^n and a
    common variance ratio."""
    return NonIidSpec(components=tuple(_band_component(ratio**i, beta)
                                       for i in range(1, n + 1)))


def identical_noniid(n: int, beta: float = 2.0) -> NonIidSpec:
    """n identical components with midpoint volatility 1 (so the normalized
    sum coincides with the i.i.d. pipeline at scale sqrt(n))."""
    return NonIidSpec(components=tuple(_band_component(1.0, beta) for _ in range(n)))


def identity_suite_sets() -> list[tuple[str, UncertaintySet, GCoeff]]:
    """Three centered sets with their matching volatility bands."""
    out = []
    for name, theta in [
        ("rademacher1", classical_rademacher(1.0)),
        ("pair12", rademacher_pair()),
        ("two_scale", two_scale_rademacher()),
    ]:
        under_sq, bar_sq = variance_bounds(theta)
        out.append((name, theta, GCoeff.from_variance_bounds(under_sq, bar_sq)))
    return out


def identity_suite_functions() -> list[TestFunction]:
    """Four smooth test functions for the identity suite.

    The asymmetric wave keeps the quadrature error meaningfully nonzero at
    the base resolution for every set, so refinement ratios are well
    defined (a shifted smoothed ramp turned out to sit at the rounding
    floor for two of the sets).
    """
    return [
        smoothed_ramp(0.0, 0.3),
        cosine(),
        smoothed_hat(0.0, 1.5, 0.3),
        cosine(amplitude=0.8, freq=1.3, phase=0.7),
    ]


def regularity_phi_suite() -> tuple[TestFunction, ...]:
    """Unit-Lipschitz data for the regularity scan: genuine kinks (whose
    curvature attains the parabolic scaling), their mollified versions and
    a smooth wave."""
    return (
        ramp(0.0),
        ramp(0.5),
        smoothed_ramp(0.0, 0.25),
        smoothed_hat(0.0, 1.0, 0.25),
        cosine(),
    )


# -- seeded random generators ------------------------------------------------

def random_symmetric_measure(rng: np.random.Generator, max_pairs: int = 2,
                             scale: float = 2.0, with_zero: bool | None = None) -> DiscreteMeasure:
    """Symmetric measure: pairs at +-p with equal weights, optional atom at 0."""
    n_pairs = int(rng.integers(1, max_pairs + 1))
    pos = np.sort(rng.uniform(0.1, scale, size=n_pairs))
    pos += np.arange(n_pairs) * 1e-3  # keep positions distinct
    w = rng.uniform(0.2, 1.0, size=n_pairs)
    if with_zero is None:
        with_zero = bool(rng.integers(0, 2))
    weights = list(w / 2) + list(w / 2) + ([rng.uniform(0.2, 1.0)] if with_zero else [])
    positions = list(pos) + list(-pos) + ([0.0] if with_zero else [])
    weights = np.asarray(weights)
    weights = weights / weights.sum()
    return DiscreteMeasure(positions=np.asarray(positions), weights=weights)


def random_centered_measure(rng: np.random.Generator, scale: float = 2.0) -> DiscreteMeasure:
    """Mean-zero but not necessarily symmetric: atoms a < 0 < b with weights
    proportional to (b, -a), optionally diluted by an atom at 0."""
    a = -rng.uniform(0.1, scale)
    b = rng.uniform(0.1, scale)
    w0 = rng.uniform(0.0, 0.5) if rng.integers(0, 2) else 0.0
    wa = (1.0 - w0) * b / (b - a)
    wb = (1.0 - w0) * (-a) / (b - a)
    if w0 > 0.0:
        return DiscreteMeasure(positions=[a, 0.0, b], weights=[wa, w0, wb])
    return DiscreteMeasure(positions=[a, b], weights=[wa, wb])


def random_measure(rng: np.random.Generator, max_atoms: int = 4,
                   scale: float = 2.0) -> DiscreteMeasure:
    """General measure with distinct random atoms (not centered)."""
    n = int(rng.integers(1, max_atoms + 1))
    pos = np.sort(rng.uniform(-scale, scale, size=n))
    pos += np.arange(n) * 1e-3
    w = rng.uniform(0.1, 1.0, size=n)
    return DiscreteMeasure(positions=pos, weights=w / w.sum())


def random_uncertainty_set(rng: np.random.Generator, max_measures: int = 3,
                           centered: bool = False, symmetric: bool = False) -> UncertaintySet:
    n = int(rng.integers(1, max_measures + 1))
    if symmetric:
        ms = [random_symmetric_measure(rng) for _ in range(n)]
    elif centered:
        ms = [random_symmetric_measure(rng) if rng.integers(0, 2)
              else random_centered_measure(rng) for _ in range(n)]
    else:
        ms = [random_measure(rng) for _ in range(n)]
    return UncertaintySet(measures=tuple(ms))


def random_poly_trig(rng: np.random.Generator) -> TestFunction:
    """Random cubic-free polynomial plus wave, with exact derivatives.

    Used by the axiom suite; no Lipschitz or seminorm metadata needed.
    """
    a2, a1, a0 = rng.uniform(-1.0, 1.0, size=3)
    amp = rng.uniform(-1.5, 1.5)
    k = rng.uniform(0.3, 3.0)
    b = rng.uniform(0.0, 2.0 * math.pi)

    def f(x):
        x = np.asarray(x, dtype=float)
        return (a2 * x + a1) * x + a0 + amp * np.cos(k * x + b)

    return TestFunction(f=f, name="poly_trig")


def random_smooth_c2(rng: np.random.Generator) -> TestFunction:
    """Random wave plus quadratic with exact curvature seminorm metadata.

    The quadratic part shifts the second derivative by a constant, which
    leaves its Holder seminorm equal to that of the wave part alone.
    """
    amp = rng.uniform(0.2, 2.0) * (1.0 if rng.integers(0, 2) else -1.0)
    k = rng.uniform(0.3, 3.0)
    b = rng.uniform(0.0, 2.0 * math.pi)
    a2, a1, a0 = rng.uniform(-1.0, 1.0, size=3)
    wave = cosine(amplitude=amp, freq=k, phase=b)

    def f(x):
        x = np.asarray(x, dtype=float)
        return wave.f(x) + (a2 * x + a1) * x + a0

    def d1(x):
        x = np.asarray(x, dtype=float)
        return wave.d1(x) + 2.0 * a2 * x + a1

    def d2(x):
        x = np.asarray(x, dtype=float)
        return wave.d2(x) + 2.0 * a2

    return TestFunction(f=f, d1=d1, d2=d2, d2_holder=wave.d2_holder,
                        name=f"smooth_c2({amp:.3g},{k:.3g})")
