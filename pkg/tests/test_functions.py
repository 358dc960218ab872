"""Builder metadata: Lipschitz constants, derivatives, Holder seminorms."""

import math

import numpy as np
import pytest

from gstein.functions import (
    abs_value,
    affine,
    cos_second_holder,
    cosine,
    cubic,
    dense_holder_seminorm,
    gauss_bump_holder,
    quadratic,
    ramp,
    sine_wave,
    smoothed_hat,
    smoothed_ramp,
)

ALL_LIPSCHITZ = [
    affine(0.7, -0.2),
    cosine(0.5, 1.7, 0.3),
    sine_wave(2.5),
    ramp(0.3),
    abs_value(-0.4),
    smoothed_ramp(0.2, 0.3),
    smoothed_hat(0.0, 1.2, 0.25),
]


@pytest.mark.parametrize("phi", ALL_LIPSCHITZ, ids=lambda p: p.name)
def test_declared_lipschitz_holds_on_pairs(phi):
    rng = np.random.default_rng(42)
    x, y = rng.uniform(-5, 5, size=(2, 400))
    gaps = np.abs(np.asarray(phi(x)) - np.asarray(phi(y)))
    assert np.all(gaps <= phi.lipschitz * np.abs(x - y) + 1e-12)


@pytest.mark.parametrize("phi", [cosine(1.2, 2.3, 0.7), smoothed_ramp(0.0, 0.4),
                                 smoothed_hat(0.5, 1.0, 0.3), quadratic(0.8, -0.1, 2.0),
                                 cubic()], ids=lambda p: p.name)
def test_analytic_derivatives_match_central_differences(phi):
    xs = np.linspace(-2.0, 2.0, 31)
    h = 1e-5 * (1.0 + np.abs(xs))
    fd1 = (phi(xs + h) - phi(xs - h)) / (2 * h)
    fd2 = (phi(xs + h) - 2 * phi(xs) + phi(xs - h)) / h**2
    assert np.allclose(fd1, phi.d1(xs), atol=5e-9 * (1 + np.abs(phi.d1(xs)).max()))
    assert np.allclose(fd2, phi.d2(xs), atol=5e-5 * (1 + np.abs(phi.d2(xs)).max()))


def test_cos_second_holder_against_dense_search():
    for alpha in (0.2, 0.5, 0.8):
        xs = np.linspace(0.0, 2.0 * math.pi, 2001)
        dense = dense_holder_seminorm(np.cos(xs), xs[1] - xs[0], alpha)
        assert cos_second_holder(alpha) == pytest.approx(dense, rel=1e-4)
    assert cos_second_holder(1.0) == 1.0


def test_cosine_seminorm_scales_with_frequency():
    k, amp, alpha = 2.2, 1.4, 0.6
    phi = cosine(amp, k, 0.3)
    xs = np.linspace(-8.0, 8.0, 8001)
    dense = dense_holder_seminorm(phi.d2(xs), xs[1] - xs[0], alpha)
    assert phi.d2_holder(alpha) == pytest.approx(dense, rel=1e-3)


def test_gauss_bump_holder_matches_smoothed_ramp_curvature():
    w, alpha = 0.35, 0.45
    phi = smoothed_ramp(0.0, w)
    xs = np.linspace(-4.0, 4.0, 4001)
    dense = dense_holder_seminorm(phi.d2(xs), xs[1] - xs[0], alpha)
    assert phi.d2_holder(alpha) == pytest.approx(dense, rel=1e-3)
    assert phi.d2_holder(alpha) == pytest.approx(gauss_bump_holder(alpha) / w ** (1 + alpha))


def test_smoothed_ramp_limits():
    phi = smoothed_ramp(0.0, 0.1)
    assert float(phi(np.asarray(-3.0))) == pytest.approx(0.0, abs=1e-12)
    assert float(phi(np.asarray(3.0))) == pytest.approx(3.0, abs=1e-12)
    assert float(phi.d1(np.asarray(0.0))) == pytest.approx(0.5)


def test_smoothed_hat_shape():
    # mollifying the central kink shaves 2*w*pdf(0) off the unit peak
    w = 0.05
    hat = smoothed_hat(0.0, 1.0, w)
    peak = 1.0 - 2.0 * w / math.sqrt(2.0 * math.pi)
    assert float(hat(np.asarray(0.0))) == pytest.approx(peak, abs=1e-6)
    assert float(hat(np.asarray(3.0))) == pytest.approx(0.0, abs=1e-9)
    assert float(hat(np.asarray(-3.0))) == pytest.approx(0.0, abs=1e-9)


def test_cubic_holder_only_at_one():
    c = cubic()
    assert c.holder_d2(1.0) == 6.0
    with pytest.raises(ValueError):
        c.holder_d2(0.5)


def test_quadratic_has_constant_curvature():
    q = quadratic(1.5, 0.0, -1.0)
    xs = np.linspace(-3, 3, 7)
    assert np.allclose(q.d2(xs), 3.0)
    assert q.d2_holder(0.7) == 0.0
