"""Monotone explicit solver for the fully nonlinear heat equation u_t = G(u_xx).

G(a) = (sigma_bar^2 a^+ - sigma_under^2 a^-) / 2 switches the diffusivity
between an upper and a lower volatility according to the sign of the
curvature.  The explicit central scheme

    u^{k+1}_i = u^k_i + dt * G((u^k_{i-1} - 2 u^k_i + u^k_{i+1}) / dx^2)

is monotone whenever sigma_bar^2 * dt / dx^2 <= 1/2, hence converges to
the viscosity solution as the grid refines.  The two boundary nodes use a
zero second difference (linear extrapolation), which freezes them at the
initial datum; Lipschitz data are asymptotically affine at the accuracy
scales used here, and the comparison principle keeps the boundary error
away from the evaluation region.

The module also estimates the interior Holder regularity of the solved
curvature: for unit-Lipschitz data the scaled seminorm
t^{(1+alpha)/2} [u_xx(., t)]_alpha stays bounded in t, and the largest
exponent for which the estimate is stable under grid refinement is
reported together with its constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .measures import TestFunction

__all__ = [
    "UnstableGridError",
    "OutsideGridError",
    "NoStableExponentError",
    "GCoeff",
    "SpaceTimeGrid",
    "SolutionField",
    "SampledCurve",
    "RegularityEstimate",
    "RegularityScan",
    "g_apply",
    "make_grid",
    "solve_gheat",
    "gnormal_expect",
    "eval_field",
    "second_deriv",
    "holder_seminorm",
    "estimate_regularity",
    "field_to_csv",
]

CFL_LIMIT = 0.5


class UnstableGridError(ValueError):
    """CFL/monotonicity bound sigma_bar^2 dt/dx^2 <= 1/2 is violated."""


class OutsideGridError(ValueError):
    """A field query left the space-time box of the stored solution."""


class NoStableExponentError(RuntimeError):
    """No Holder exponent candidate was stable under grid refinement."""


@dataclass(frozen=True)
class GCoeff:
    """Volatility band (sigma_bar >= sigma_under > 0) defining G."""

    sigma_bar: float
    sigma_under: float

    def __post_init__(self):
        if not (self.sigma_bar >= self.sigma_under > 0.0):
            raise ValueError("need sigma_bar >= sigma_under > 0")

    @property
    def beta(self) -> float:
        """Ratio of the two volatilities, >= 1."""
        return self.sigma_bar / self.sigma_under

    @property
    def sigma_mid(self) -> float:
        """Midpoint volatility (sigma_bar + sigma_under) / 2."""
        return 0.5 * (self.sigma_bar + self.sigma_under)

    def g(self, a):
        """G(a) = (sigma_bar^2 a^+ - sigma_under^2 a^-) / 2, elementwise."""
        a = np.asarray(a, dtype=float)
        out = 0.5 * (
            self.sigma_bar**2 * np.maximum(a, 0.0)
            - self.sigma_under**2 * np.maximum(-a, 0.0)
        )
        return float(out) if out.ndim == 0 else out

    @classmethod
    def from_variance_bounds(cls, under_sq: float, bar_sq: float) -> "GCoeff":
        return cls(sigma_bar=math.sqrt(bar_sq), sigma_under=math.sqrt(under_sq))

    @classmethod
    def from_beta(cls, beta: float) -> "GCoeff":
        """Normalized band with midpoint volatility 1 and given ratio."""
        if beta < 1.0:
            raise ValueError("beta must be >= 1")
        return cls(sigma_bar=2.0 * beta / (1.0 + beta), sigma_under=2.0 / (1.0 + beta))


def g_apply(coeff: GCoeff, a) -> float:
    """Functional form of :meth:`GCoeff.g`."""
    return coeff.g(a)


@dataclass(frozen=True)
class SpaceTimeGrid:
    """Uniform grid on [x_min, x_max] x [0, t_final] with step dt.

    t_final must be an integer number of steps.  The CFL bound is checked
    against a concrete coefficient at solve time (the grid alone does not
    know sigma_bar).
    """

    x_min: float
    x_max: float
    nx: int
    t_final: float
    dt: float

    def __post_init__(self):
        if not (self.x_min < 0.0 < self.x_max):
            raise ValueError("grid must contain 0 in its interior")
        if self.nx < 3:
            raise ValueError("need at least 3 spatial nodes")
        if self.dt <= 0.0 or self.t_final <= 0.0:
            raise ValueError("dt and t_final must be positive")
        if abs(round(self.t_final / self.dt) * self.dt - self.t_final) > 1e-9 * max(self.t_final, 1.0):
            raise ValueError("dt must divide t_final")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.nx - 1)

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))

    def cfl_ratio(self, coeff: GCoeff) -> float:
        return coeff.sigma_bar**2 * self.dt / self.dx**2

    def nodes(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.nx)

    @classmethod
    def from_bounds(cls, x_min: float, x_max: float, dx: float, t_final: float,
                    coeff: GCoeff, cfl: float = 0.45) -> "SpaceTimeGrid":
        nx = int(round((x_max - x_min) / dx)) + 1
        dt_target = cfl * dx**2 / coeff.sigma_bar**2
        n_steps = max(1, math.ceil(t_final / dt_target))
        return cls(x_min=x_min, x_max=x_max, nx=nx, t_final=t_final, dt=t_final / n_steps)


def make_grid(coeff: GCoeff, *, dx: float, t_final: float = 1.0, x_span: float = 0.0,
              x_eval: float = 0.0, safety_width: float = 8.0, cfl: float = 0.45) -> SpaceTimeGrid:
    """Symmetric grid whose half-width covers |x_eval| + x_span plus a
    parabolic safety margin of ``safety_width * sigma_bar * sqrt(t_final)``."""
    half = abs(x_eval) + x_span + safety_width * coeff.sigma_bar * math.sqrt(t_final)
    m = max(2, math.ceil(half / dx))
    half = m * dx
    return SpaceTimeGrid.from_bounds(-half, half, dx, t_final, coeff, cfl=cfl)


def _stored_indices(n_steps: int, cap: int) -> np.ndarray:
    """Which time layers to keep: all if they fit, otherwise a uniform
    stride plus geometric windows at both ends (early and late times are
    where downstream quadratures cluster)."""
    if n_steps + 1 <= cap:
        return np.arange(n_steps + 1)
    keep = {0, n_steps}
    p = 1
    while p < n_steps:
        keep.add(p)
        keep.add(n_steps - p)
        p *= 2
    stride = max(1, math.ceil(n_steps / max(cap - len(keep), 1)))
    keep.update(range(0, n_steps + 1, stride))
    return np.array(sorted(keep))


@dataclass(frozen=True)
class SolutionField:
    """Solved space-time field with its grid, datum and coefficients.

    ``values[k]`` is the solution on the stored layer at ``times[k]``;
    layer 0 is the initial datum exactly.
    """

    grid: SpaceTimeGrid
    coeff: GCoeff
    phi: TestFunction
    xs: np.ndarray
    times: np.ndarray
    values: np.ndarray

    def eval(self, x, t: float):
        """Bilinear interpolation between the four surrounding stored nodes.

        Exact at nodes; raises :class:`OutsideGridError` outside the box.
        """
        return eval_field(self, x, t)

    def layer_at(self, t: float) -> np.ndarray:
        """Time-interpolated layer over the full spatial grid."""
        j, w = self._bracket(t)
        if w == 0.0:
            return self.values[j]
        return (1.0 - w) * self.values[j] + w * self.values[j + 1]

    def nearest_layer_index(self, t: float) -> int:
        return int(np.argmin(np.abs(self.times - t)))

    def _bracket(self, t: float) -> tuple[int, float]:
        tol = 1e-9 * max(self.grid.t_final, 1.0)
        if t < -tol or t > self.grid.t_final + tol:
            raise OutsideGridError(f"time {t} outside [0, {self.grid.t_final}]")
        t = min(max(t, 0.0), self.grid.t_final)
        j = int(np.searchsorted(self.times, t, side="right")) - 1
        j = min(max(j, 0), len(self.times) - 2)
        w = (t - self.times[j]) / (self.times[j + 1] - self.times[j])
        return j, float(min(max(w, 0.0), 1.0))


def solve_gheat(coeff: GCoeff, phi: TestFunction, grid: SpaceTimeGrid,
                max_stored_layers: int = 4096) -> SolutionField:
    """Explicit monotone time stepping of u_t = G(u_xx) with datum ``phi``.

    Parameters
    ----------
    coeff : GCoeff
        Volatility band defining G.
    phi : TestFunction
        Initial datum; must carry a finite Lipschitz constant (the scheme's
        accuracy and the domain-truncation rationale both rely on it).
    grid : SpaceTimeGrid
        Discretization; rejected with :class:`UnstableGridError` when
        sigma_bar^2 dt / dx^2 > 1/2.
    max_stored_layers : int
        Snapshot budget; when the step count exceeds it, layers are kept on
        a uniform stride plus geometric windows at both time ends.

    Returns
    -------
    SolutionField
    """
    if phi.lipschitz is None:
        raise ValueError("initial datum needs a finite Lipschitz constant")
    ratio = grid.cfl_ratio(coeff)
    if ratio > CFL_LIMIT + 1e-12:
        raise UnstableGridError(
            f"unstable grid: sigma_bar^2*dt/dx^2 = {ratio:.6g} > {CFL_LIMIT}")

    xs = grid.nodes()
    u = np.asarray(phi(xs), dtype=float).copy()
    if u.shape != xs.shape:
        raise ValueError("datum must evaluate elementwise on the grid nodes")

    n_steps = grid.n_steps
    stored = _stored_indices(n_steps, max_stored_layers)
    values = np.empty((stored.size, xs.size))
    values[0] = u
    next_slot = 1
    dt, inv_dx2 = grid.dt, 1.0 / grid.dx**2
    sb2, su2 = coeff.sigma_bar**2, coeff.sigma_under**2

    # preallocated scratch; the update below is the same operation chain as
    # u[1:-1] += dt * G((u[:-2] - 2 u[1:-1] + u[2:]) / dx^2), allocation-free
    d2 = np.empty(xs.size - 2)
    pos = np.empty_like(d2)
    neg = np.empty_like(d2)
    lo, mid, hi = u[:-2], u[1:-1], u[2:]

    for k in range(1, n_steps + 1):
        np.multiply(mid, 2.0, out=d2)
        np.subtract(lo, d2, out=d2)
        np.add(d2, hi, out=d2)
        d2 *= inv_dx2
        np.maximum(d2, 0.0, out=pos)
        pos *= sb2
        np.negative(d2, out=neg)
        np.maximum(neg, 0.0, out=neg)
        neg *= su2
        np.subtract(pos, neg, out=pos)
        pos *= 0.5
        pos *= dt
        mid += pos
        if next_slot < stored.size and stored[next_slot] == k:
            values[next_slot] = u
            next_slot += 1

    times = stored * dt
    times[-1] = grid.t_final
    times.setflags(write=False)
    values.setflags(write=False)
    xs.setflags(write=False)
    return SolutionField(grid=grid, coeff=coeff, phi=phi, xs=xs, times=times, values=values)


def eval_field(fld: SolutionField, x, t: float):
    """Field value at (x, t); ``x`` may be a scalar or an array."""
    xq = np.asarray(x, dtype=float)
    tol = 1e-9 * max(fld.grid.x_max - fld.grid.x_min, 1.0)
    if np.any(xq < fld.grid.x_min - tol) or np.any(xq > fld.grid.x_max + tol):
        raise OutsideGridError("spatial query outside the grid box")
    layer = fld.layer_at(t)
    out = np.interp(np.clip(xq, fld.grid.x_min, fld.grid.x_max), fld.xs, layer)
    return float(out) if xq.ndim == 0 else out


@dataclass(frozen=True)
class SampledCurve:
    """A function sampled on uniformly spaced nodes."""

    x: np.ndarray
    values: np.ndarray
    t: float

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])


def second_deriv(fld: SolutionField, t: float) -> SampledCurve:
    """Central second differences on interior nodes of the stored layer
    nearest to ``t`` (no temporal interpolation)."""
    if not (0.0 < t <= fld.grid.t_final + 1e-12):
        raise ValueError("t must lie in (0, t_final]")
    j = fld.nearest_layer_index(t)
    u = fld.values[j]
    d2 = (u[:-2] - 2.0 * u[1:-1] + u[2:]) / fld.grid.dx**2
    return SampledCurve(x=fld.xs[1:-1], values=d2, t=float(fld.times[j]))


def holder_seminorm(values: np.ndarray, dx: float, alpha: float,
                    window_radius: float) -> float:
    """max |f_i - f_j| / |x_i - x_j|^alpha over pairs with gap <= window.

    A lower bound for the continuum seminorm that converges under
    refinement.  The window keeps the pair count linear in the lag budget;
    pass a window covering the whole sample for full-pair mode.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    if window_radius < dx:
        raise ValueError("window radius must be at least one grid spacing")
    values = np.asarray(values, dtype=float)
    max_lag = min(values.size - 1, int(math.floor(window_radius / dx + 1e-9)))
    best = 0.0
    for lag in range(1, max_lag + 1):
        m = float(np.max(np.abs(values[lag:] - values[:-lag])))
        best = max(best, m / (lag * dx) ** alpha)
    return best


@dataclass(frozen=True)
class RegularityScan:
    """Per-exponent diagnostics from :func:`estimate_regularity`."""

    alphas: np.ndarray
    m_coarse: np.ndarray
    m_fine: np.ndarray
    stable: np.ndarray
    dx_coarse: float
    dx_fine: float


@dataclass(frozen=True)
class RegularityEstimate:
    """Empirical interior regularity: exponent, constant, and the derived
    rate constant c_rate = 4 * c_alpha / (1 - alpha)."""

    alpha: float
    c_alpha: float
    c_rate: float
    scan: Optional[RegularityScan] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.c_alpha <= 0.0:
            raise ValueError("c_alpha must be positive")
        expected = 4.0 * self.c_alpha / (1.0 - self.alpha)
        if abs(self.c_rate - expected) > 1e-9 * expected:
            raise ValueError("c_rate must equal 4*c_alpha/(1-alpha)")


def _scaled_seminorm_curve(coeff: GCoeff, phi: TestFunction, dx: float,
                           t_grid: Sequence[float], alphas: np.ndarray,
                           window_radius: float, est_halfwidth: float,
                           cfl: float) -> np.ndarray:
    """max over t of t^{(1+alpha)/2} [u_xx(., t)]_alpha, one entry per alpha,
    measured on the interior window |x| <= est_halfwidth."""
    grid = make_grid(coeff, dx=dx, t_final=1.0, x_span=est_halfwidth, cfl=cfl)
    fld = solve_gheat(coeff, phi, grid)
    out = np.zeros_like(alphas)
    for t in t_grid:
        curve = second_deriv(fld, t)
        mask = np.abs(curve.x) <= est_halfwidth + 1e-12
        vals = curve.values[mask]
        max_lag = min(vals.size - 1, int(math.floor(window_radius / curve.dx + 1e-9)))
        gaps = np.array([np.max(np.abs(vals[k:] - vals[:-k])) for k in range(1, max_lag + 1)])
        lags = np.arange(1, max_lag + 1) * curve.dx
        for i, alpha in enumerate(alphas):
            semi = float(np.max(gaps / lags**alpha))
            out[i] = max(out[i], curve.t ** (0.5 * (1.0 + alpha)) * semi)
    return out


def estimate_regularity(coeff: GCoeff, phi_suite: Sequence[TestFunction],
                        alpha_grid: Sequence[float], t_grid: Sequence[float],
                        *, dx: float = 0.01, refine: float = 2.0,
                        window_radius: float = 1.0, est_halfwidth: float = 3.0,
                        stability_rtol: float = 0.10, safety: float = 0.10,
                        cfl: float = 0.45) -> RegularityEstimate:
    """Estimate the interior Holder exponent and constant empirically.

    For each candidate alpha the scaled seminorm

        M(alpha) = max over phi in suite, t in t_grid of
                   t^{(1+alpha)/2} [u_xx(., t)]_alpha

    is computed at resolutions dx and dx/refine.  The largest candidate
    whose M changes by at most ``stability_rtol`` between the two grids is
    selected; its constant is inflated by ``safety`` and the companion
    rate constant is 4*c/(1-alpha).  The outputs are empirical: they are
    reported and used self-consistently, never asserted as ground truth.

    Raises
    ------
    NoStableExponentError
        When no candidate is stable (in particular when every candidate's
        M grows more than twofold under refinement).
    """
    for phi in phi_suite:
        if phi.lipschitz is None or phi.lipschitz > 1.0 + 1e-12:
            raise ValueError("regularity suite must consist of unit-Lipschitz functions")
    t_grid = sorted(float(t) for t in t_grid)
    if not t_grid or t_grid[0] <= 0.0 or t_grid[-1] > 1.0:
        raise ValueError("t_grid must lie in (0, 1]")
    alphas = np.asarray(sorted(float(a) for a in alpha_grid), dtype=float)
    if np.any(alphas <= 0.0) or np.any(alphas >= 1.0):
        raise ValueError("alpha candidates must lie in (0, 1)")

    m_coarse = np.zeros_like(alphas)
    m_fine = np.zeros_like(alphas)
    for phi in phi_suite:
        m_coarse = np.maximum(m_coarse, _scaled_seminorm_curve(
            coeff, phi, dx, t_grid, alphas, window_radius, est_halfwidth, cfl))
        m_fine = np.maximum(m_fine, _scaled_seminorm_curve(
            coeff, phi, dx / refine, t_grid, alphas, window_radius, est_halfwidth, cfl))

    scale = np.maximum(np.maximum(m_coarse, m_fine), 1e-300)
    stable = (np.abs(m_fine - m_coarse) <= stability_rtol * scale) & (m_fine > 0.0)
    scan = RegularityScan(alphas=alphas, m_coarse=m_coarse, m_fine=m_fine,
                          stable=stable, dx_coarse=dx, dx_fine=dx / refine)
    if not np.any(stable):
        growth = m_fine / np.maximum(m_coarse, 1e-300)
        raise NoStableExponentError(
            f"no stable exponent: refinement growth factors {np.round(growth, 3)}")
    idx = int(np.max(np.nonzero(stable)[0]))
    alpha = float(alphas[idx])
    c_alpha = float(m_fine[idx]) * (1.0 + safety)
    return RegularityEstimate(alpha=alpha, c_alpha=c_alpha,
                              c_rate=4.0 * c_alpha / (1.0 - alpha), scan=scan)


def gnormal_expect(coeff: GCoeff, phi: TestFunction, grid: Optional[SpaceTimeGrid] = None,
                   field: Optional[SolutionField] = None) -> float:
    """Sublinear Gaussian expectation of ``phi``: the solved field at (0, 1)."""
    if field is None:
        if grid is None:
            raise ValueError("provide either a grid or a solved field")
        field = solve_gheat(coeff, phi, grid)
    if field.grid.t_final < 1.0 - 1e-12:
        raise ValueError("field must reach t = 1")
    return field.eval(0.0, 1.0)


def field_to_csv(fld: SolutionField, stream) -> None:
    """Write ``t,x,u`` rows, row-major by time layer, 17 significant digits."""
    stream.write("t,x,u\n")
    for k, t in enumerate(fld.times):
        row = fld.values[k]
        for x, u in zip(fld.xs, row):
            stream.write(f"{t:.17g},{x:.17g},{u:.17g}\n")
