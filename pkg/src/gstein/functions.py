"""Builders for the test functions used throughout the library.

Every builder returns a :class:`~gstein.measures.TestFunction` whose
callable is numpy-vectorized.  Where a closed form exists, the Lipschitz
constant, both derivatives and the Holder seminorm of the second
derivative are attached, so downstream inequalities can be checked against
honest constants instead of estimates.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq
from scipy.special import ndtr

from .measures import TestFunction

__all__ = [
    "constant",
    "affine",
    "quadratic",
    "cubic",
    "cosine",
    "sine_wave",
    "ramp",
    "abs_value",
    "smoothed_ramp",
    "smoothed_hat",
    "cos_second_holder",
    "gauss_bump_holder",
    "dense_holder_seminorm",
]

_SQRT2PI = math.sqrt(2.0 * math.pi)


def _npdf(z):
    return np.exp(-0.5 * np.square(z)) / _SQRT2PI


def constant(c: float) -> TestFunction:
    return TestFunction(
        f=lambda x: np.full_like(np.asarray(x, dtype=float), c),
        lipschitz=0.0,
        d1=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        d2=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        d2_holder=lambda alpha: 0.0,
        name=f"const({c:g})",
    )


def affine(a: float, b: float = 0.0) -> TestFunction:
    return TestFunction(
        f=lambda x: a * np.asarray(x, dtype=float) + b,
        lipschitz=abs(a),
        d1=lambda x: np.full_like(np.asarray(x, dtype=float), a),
        d2=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        d2_holder=lambda alpha: 0.0,
        name=f"affine({a:g},{b:g})",
    )


def quadratic(a: float, b: float = 0.0, c: float = 0.0) -> TestFunction:
    """a*x^2 + b*x + c; no global Lipschitz constant, constant curvature."""
    return TestFunction(
        f=lambda x: (a * np.asarray(x, dtype=float) + b) * np.asarray(x, dtype=float) + c,
        lipschitz=None,
        d1=lambda x: 2.0 * a * np.asarray(x, dtype=float) + b,
        d2=lambda x: np.full_like(np.asarray(x, dtype=float), 2.0 * a),
        d2_holder=lambda alpha: 0.0,
        name=f"quad({a:g},{b:g},{c:g})",
    )


def cubic() -> TestFunction:
    """x^3; [f'']_alpha is finite only at alpha = 1 (value 6)."""

    def holder(alpha: float) -> float:
        if alpha != 1.0:
            raise ValueError("x^3 has a global second-derivative seminorm only at alpha=1")
        return 6.0

    return TestFunction(
        f=lambda x: np.asarray(x, dtype=float) ** 3,
        lipschitz=None,
        d1=lambda x: 3.0 * np.square(np.asarray(x, dtype=float)),
        d2=lambda x: 6.0 * np.asarray(x, dtype=float),
        d2_holder=holder,
        name="cubic",
    )


@lru_cache(maxsize=None)
def cos_second_holder(alpha: float) -> float:
    """[cos]_alpha = sup 2*sin(d/2)/d^alpha over d in (0, 2*pi].

    |cos u - cos v| = 2 |sin((u-v)/2)| |sin((u+v)/2)| and the second factor
    can be made 1 for any gap, so the sup reduces to a one-dimensional
    problem solved here by a bracketed root of the stationarity condition.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    if alpha == 1.0:
        return 1.0

    def stationarity(d):
        return d * math.cos(d / 2.0) - 2.0 * alpha * math.sin(d / 2.0)

    d_star = brentq(stationarity, 1e-12, math.pi)
    return 2.0 * math.sin(d_star / 2.0) / d_star**alpha


def cosine(amplitude: float = 1.0, freq: float = 1.0, phase: float = 0.0) -> TestFunction:
    """A*cos(k*x + b) with exact derivative and seminorm metadata."""
    a, k, b = float(amplitude), float(freq), float(phase)

    def holder(alpha: float) -> float:
        return abs(a) * k ** (2.0 + alpha) * cos_second_holder(alpha)

    return TestFunction(
        f=lambda x: a * np.cos(k * np.asarray(x, dtype=float) + b),
        lipschitz=abs(a * k),
        d1=lambda x: -a * k * np.sin(k * np.asarray(x, dtype=float) + b),
        d2=lambda x: -a * k * k * np.cos(k * np.asarray(x, dtype=float) + b),
        d2_holder=holder,
        name=f"cos({a:g},{k:g},{b:g})",
    )


def sine_wave(freq: float = 1.0) -> TestFunction:
    """sin(k*x)/k: unit Lipschitz for every k > 0."""
    k = float(freq)
    return cosine(amplitude=1.0 / k, freq=k, phase=-math.pi / 2.0)


def ramp(center: float = 0.0) -> TestFunction:
    """max(x - c, 0): unit Lipschitz with a kink, no classical derivatives."""
    c = float(center)
    return TestFunction(
        f=lambda x: np.maximum(np.asarray(x, dtype=float) - c, 0.0),
        lipschitz=1.0,
        name=f"ramp({c:g})",
    )


def abs_value(center: float = 0.0) -> TestFunction:
    c = float(center)
    return TestFunction(
        f=lambda x: np.abs(np.asarray(x, dtype=float) - c),
        lipschitz=1.0,
        name=f"abs({c:g})",
    )


@lru_cache(maxsize=None)
def gauss_bump_holder(alpha: float, span: float = 8.0, n: int = 4001) -> float:
    """Holder seminorm of the standard normal density, by dense pair search."""
    xs = np.linspace(-span, span, n)
    return dense_holder_seminorm(_npdf(xs), xs[1] - xs[0], alpha)


def dense_holder_seminorm(values: np.ndarray, dx: float, alpha: float) -> float:
    """max |f_i - f_j| / ((j - i) dx)^alpha over all grid pairs.

    For each lag the max absolute difference is computed vectorized, so the
    cost is O(n^2) elementwise operations but only O(n) numpy calls.
    """
    values = np.asarray(values, dtype=float)
    n = values.size
    best = 0.0
    for lag in range(1, n):
        m = float(np.max(np.abs(values[lag:] - values[:-lag])))
        best = max(best, m / (lag * dx) ** alpha)
    return best


def smoothed_ramp(center: float = 0.0, width: float = 0.25) -> TestFunction:
    """Heat-kernel mollified ramp: the ramp max(x-c, 0) smoothed at scale w.

    f(x) = w*pdf(z) + (x-c)*Phi(z) with z = (x-c)/w, so f' = Phi(z) in
    [0, 1] (unit Lipschitz) and f'' = pdf(z)/w is a Gaussian bump whose
    Holder seminorm is known in closed form up to the pdf seminorm.
    """
    c, w = float(center), float(width)
    if w <= 0.0:
        raise ValueError("width must be positive")

    def f(x):
        z = (np.asarray(x, dtype=float) - c) / w
        return w * _npdf(z) + (np.asarray(x, dtype=float) - c) * ndtr(z)

    return TestFunction(
        f=f,
        lipschitz=1.0,
        d1=lambda x: ndtr((np.asarray(x, dtype=float) - c) / w),
        d2=lambda x: _npdf((np.asarray(x, dtype=float) - c) / w) / w,
        d2_holder=lambda alpha: gauss_bump_holder(alpha) / w ** (1.0 + alpha),
        name=f"sramp({c:g},{w:g})",
    )


def smoothed_hat(center: float = 0.0, halfwidth: float = 1.0, width: float = 0.2) -> TestFunction:
    """Mollified tent max(0, r - |x-c|): rises with slope 1, falls with -1.

    Built as sramp(c-r) - 2*sramp(c) + sramp(c+r); the second derivative is
    a signed combination of three Gaussian bumps and its seminorm is
    estimated by dense pair search on a grid covering all three bumps.
    """
    c, r, w = float(center), float(halfwidth), float(width)
    if r <= 0.0 or w <= 0.0:
        raise ValueError("halfwidth and width must be positive")
    left = smoothed_ramp(c - r, w)
    mid = smoothed_ramp(c, w)
    right = smoothed_ramp(c + r, w)

    def d2(x):
        return left.d2(x) - 2.0 * mid.d2(x) + right.d2(x)

    @lru_cache(maxsize=None)
    def holder(alpha: float) -> float:
        xs = np.linspace(c - r - 8.0 * w, c + r + 8.0 * w, 4001)
        return dense_holder_seminorm(d2(xs), xs[1] - xs[0], alpha)

    return TestFunction(
        f=lambda x: left.f(x) - 2.0 * mid.f(x) + right.f(x),
        lipschitz=1.0,
        d1=lambda x: left.d1(x) - 2.0 * mid.d1(x) + right.d1(x),
        d2=d2,
        d2_holder=holder,
        name=f"shat({c:g},{r:g},{w:g})",
    )
