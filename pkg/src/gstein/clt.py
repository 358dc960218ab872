"""Worst-case expectations of independent sums, and convergence-rate runs.

Sequential independence under a sublinear expectation means the worst-case
measure of each summand may adapt to the realized partial sum, so the
expectation of phi(sum / scale) is a backward dynamic program:

    psi_n = phi,
    psi_{i-1}(x) = max over mu in Theta_i of sum_k w_k psi_i(x + pos_k / scale),

and the value is psi_0(0).  The default mode enumerates the exact
reachable support of the partial sums (no interpolation at all); a grid
mode with piecewise-linear interpolation exists for supports too large to
enumerate.  A brute-force enumeration of all adaptive measure policies
and a classical convolution serve as independent oracles.

Rate experiments compare these values against the solved sublinear
Gaussian expectation over a family of unit-Lipschitz test functions and
check them against the bound  c_rate * N[|X|^(2+alpha)] / n^(alpha/2)
with the empirically estimated regularity (alpha, c).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .functions import smoothed_hat, smoothed_ramp, sine_wave
from .gheat import GCoeff, RegularityEstimate, SolutionField, gnormal_expect, make_grid, solve_gheat
from .measures import (
    DiscreteMeasure,
    TestFunction,
    UncertaintySet,
    abs_moment,
    centered_check,
    variance_bounds,
)

__all__ = [
    "EnumerationBudgetError",
    "DomainBudgetError",
    "MixedBetaError",
    "IidSpec",
    "NonIidSpec",
    "LipschitzFamily",
    "InterpolationTrace",
    "RateReport",
    "dp_sum_expect",
    "brute_force_policy_oracle",
    "conv_sum_expect",
    "clt_error",
    "interpolation_trace",
    "rate_experiment",
    "noniid_experiment",
    "default_lipschitz_family",
]


class EnumerationBudgetError(RuntimeError):
    """Policy or path enumeration would exceed the stated budget."""


class DomainBudgetError(RuntimeError):
    """Grid-mode domain truncation error bound exceeds the run budget."""


class MixedBetaError(ValueError):
    """Components do not share a common variance ratio."""


@dataclass(frozen=True)
class IidSpec:
    """n independent copies of a centered uncertainty set."""

    theta: UncertaintySet
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if not centered_check(self.theta):
            raise ValueError("uncertainty set must be centered")
        variance_bounds(self.theta)  # raises when degenerate


@dataclass(frozen=True)
class NonIidSpec:
    """Independent, centered components sharing one variance ratio.

    sigma_i is the midpoint of each component's volatility band,
    sigma^2 their sum of squares, and the breakpoints t_i partition [0, 1]
    proportionally to the variance profile.
    """

    components: tuple[UncertaintySet, ...]
    beta_tol: float = 1e-9

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValueError("need at least one component")
        object.__setattr__(self, "components", comps)
        betas = []
        for theta in comps:
            if not centered_check(theta):
                raise ValueError("every component must be centered")
            under_sq, bar_sq = variance_bounds(theta)
            betas.append(math.sqrt(bar_sq / under_sq))
        if max(betas) - min(betas) > self.beta_tol * (1.0 + max(betas)):
            raise MixedBetaError(f"mixed variance ratios across components: {betas}")

    @property
    def beta(self) -> float:
        under_sq, bar_sq = variance_bounds(self.components[0])
        return math.sqrt(bar_sq / under_sq)

    @property
    def sigmas(self) -> np.ndarray:
        out = []
        for theta in self.components:
            under_sq, bar_sq = variance_bounds(theta)
            out.append(0.5 * (math.sqrt(bar_sq) + math.sqrt(under_sq)))
        return np.asarray(out)

    @property
    def sigma_total(self) -> float:
        return float(math.sqrt(np.sum(self.sigmas**2)))

    @property
    def breakpoints(self) -> np.ndarray:
        s = self.sigmas**2
        return np.concatenate([[0.0], np.cumsum(s) / np.sum(s)])

    @property
    def gcoeff(self) -> GCoeff:
        """Normalized band with midpoint 1 and the common ratio."""
        return GCoeff.from_beta(self.beta)


@dataclass(frozen=True)
class LipschitzFamily:
    """A finite inner approximation of the unit-Lipschitz ball."""

    members: tuple[TestFunction, ...]

    def __post_init__(self):
        ms = tuple(self.members)
        if not ms:
            raise ValueError("family must be nonempty")
        for phi in ms:
            if phi.lipschitz is None or phi.lipschitz > 1.0 + 1e-12:
                raise ValueError(f"{phi.name!r} is not declared unit-Lipschitz")
        object.__setattr__(self, "members", ms)

    def __iter__(self):
        return iter(self.members)

    def __len__(self):
        return len(self.members)


def default_lipschitz_family() -> LipschitzFamily:
    """24 members: 12 shifted smoothed ramps, 6 scaled sine waves and
    6 smoothed hats, all unit-Lipschitz."""
    ramps = [smoothed_ramp(c, 0.3) for c in np.linspace(-3.0, 3.0, 12)]
    sines = [sine_wave(k) for k in (0.5, 0.8, 1.2, 1.7, 2.5, 3.5)]
    hats = [smoothed_hat(c, r, 0.3)
            for c, r in ((-1.0, 1.0), (0.0, 1.0), (1.0, 1.0),
                         (-0.5, 2.0), (0.0, 1.5), (0.5, 2.0))]
    return LipschitzFamily(members=tuple(ramps + sines + hats))


def _shifted_atoms(components: Sequence[UncertaintySet], scale: float):
    return [[(mu.positions / scale, mu.weights) for mu in theta.measures]
            for theta in components]


def _reach(shifted) -> float:
    return float(sum(max(np.max(np.abs(pos)) for pos, _ in comp) for comp in shifted))


def _eval_array(phi, x: np.ndarray) -> np.ndarray:
    return np.asarray(phi(x), dtype=float)


def dp_sum_expect(components: Sequence[UncertaintySet], phi, scale: float,
                  *, mode: str = "auto", max_exact_support: int = 500_000,
                  grid_step: float = 1e-3, domain_halfwidth: Optional[float] = None,
                  truncation_budget: Optional[float] = None) -> float:
    """Worst-case expectation of phi(sum of one draw per component / scale).

    Modes
    -----
    ``"exact"``
        Backward recursion on the exact reachable support of the partial
        sums (floating-point identical to the forward enumeration, so
        lookups are exact and there is no interpolation error).
    ``"grid"``
        Values stored on a uniform grid with piecewise-linear
        interpolation; nonexpansive, preserves Lipschitz constants.  By
        default the domain covers the whole reachable support plus a unit
        pad, so the returned value carries no truncation error.
    ``"auto"``
        Exact while the support stays within ``max_exact_support``,
        otherwise grid.
    """
    components = list(components)
    if not components:
        raise ValueError("empty component list")
    if scale <= 0.0:
        raise ValueError("scale must be positive")
    shifted = _shifted_atoms(components, scale)

    if mode not in ("auto", "exact", "grid"):
        raise ValueError(f"unknown mode {mode!r}")

    if mode in ("auto", "exact"):
        supports = _exact_supports(shifted, max_exact_support)
        if supports is not None:
            return _dp_exact(shifted, phi, supports)
        if mode == "exact":
            raise EnumerationBudgetError(
                f"exact support exceeds {max_exact_support} points")
    return _dp_grid(shifted, phi, grid_step, domain_halfwidth, truncation_budget)


def _exact_supports(shifted, cap: int):
    supports = [np.zeros(1)]
    for comp in shifted:
        prev = supports[-1]
        layers = [np.add.outer(prev, pos).ravel() for pos, _ in comp]
        nxt = np.unique(np.concatenate(layers))
        if nxt.size > cap:
            return None
        supports.append(nxt)
    return supports


def _dp_exact(shifted, phi, supports) -> float:
    psi = _eval_array(phi, supports[-1])
    for i in range(len(shifted), 0, -1):
        prev, cur = supports[i - 1], supports[i]
        best = None
        for pos, w in shifted[i - 1]:
            pts = np.add.outer(prev, pos)  # same fp expression as the forward pass
            vals = psi[np.searchsorted(cur, pts.ravel()).reshape(pts.shape)] @ w
            best = vals if best is None else np.maximum(best, vals)
        psi = best
    return float(psi[0])


def _dp_grid(shifted, phi, grid_step: float, domain_halfwidth, budget) -> float:
    reach = _reach(shifted)
    auto_half = reach + 1.0
    half = auto_half if domain_halfwidth is None else float(domain_halfwidth)
    if half < reach:
        lip = phi.lipschitz if isinstance(phi, TestFunction) else None
        if lip is None:
            raise DomainBudgetError("grid domain misses reachable sums and the "
                                    "datum has no Lipschitz constant to bound the error")
        bound = len(shifted) * lip * (reach - half)
        if budget is None or bound > budget:
            raise DomainBudgetError(
                f"grid truncation error bound {bound:.3g} exceeds the run budget")
    m = max(1, math.ceil(half / grid_step))
    xs = np.arange(-m, m + 1) * grid_step
    psi = _eval_array(phi, xs)
    for comp in reversed(shifted):
        best = None
        for pos, w in comp:
            acc = np.zeros_like(psi)
            for p, wk in zip(pos, w):
                acc += wk * np.interp(xs + p, xs, psi)
            best = acc if best is None else np.maximum(best, acc)
        psi = best
    return float(psi[m])


def _policy_count(shifted, cap: float) -> float:
    count = 1.0
    for comp in reversed(shifted):
        total = 0.0
        for pos, _ in comp:
            total += count ** len(pos)
            if total > cap:
                return math.inf
        count = total
    return count


def brute_force_policy_oracle(components: Sequence[UncertaintySet], phi, scale: float,
                              *, max_policies: float = 1e6) -> float:
    """Enumerate every adaptive measure policy and take the best expectation.

    A policy picks a measure at each step as a function of the realized
    partial sum; the recursion below carries the full multiset of policy
    values instead of maximizing early, so it is an independent check of
    the dynamic program rather than a restatement of it.
    """
    components = list(components)
    if not components:
        raise ValueError("empty component list")
    shifted = _shifted_atoms(components, scale)
    if _policy_count(shifted, max_policies) > max_policies:
        raise EnumerationBudgetError(f"more than {max_policies:.3g} adaptive policies")

    n = len(shifted)

    def values(i: int, x: float) -> np.ndarray:
        if i == n:
            return np.array([float(np.asarray(phi(np.asarray(x))))])
        out = []
        for pos, w in shifted[i]:
            combo = np.zeros(1)
            for p, wk in zip(pos, w):
                combo = np.add.outer(combo, wk * values(i + 1, x + p)).ravel()
            out.append(combo)
        return np.concatenate(out)

    return float(np.max(values(0, 0.0)))


def conv_sum_expect(measures: Sequence[DiscreteMeasure], phi, scale: float) -> float:
    """Classical expectation of phi(sum / scale) for one fixed measure per
    step, by exact convolution of the atom lists."""
    pos = np.zeros(1)
    pr = np.ones(1)
    for mu in measures:
        p2 = np.add.outer(pos, mu.positions / scale).ravel()
        w2 = np.multiply.outer(pr, mu.weights).ravel()
        pos, inverse = np.unique(p2, return_inverse=True)
        pr = np.zeros_like(pos)
        np.add.at(pr, inverse, w2)
    return float(np.dot(pr, _eval_array(phi, pos)))


def _check_matching_coeff(theta: UncertaintySet, coeff: GCoeff, tol: float = 1e-9):
    under_sq, bar_sq = variance_bounds(theta)
    if (abs(coeff.sigma_bar**2 - bar_sq) > tol * (1.0 + bar_sq)
            or abs(coeff.sigma_under**2 - under_sq) > tol * (1.0 + under_sq)):
        raise ValueError("coefficients must match the set's variance bounds")


def clt_error(spec: IidSpec, phi: TestFunction, coeff: GCoeff, *,
              grid=None, field: Optional[SolutionField] = None,
              gnormal_value: Optional[float] = None, **dp_kwargs) -> float:
    """|worst-case E[phi(W_n)] - sublinear Gaussian value of phi|."""
    _check_matching_coeff(spec.theta, coeff)
    dp = dp_sum_expect([spec.theta] * spec.n, phi, math.sqrt(spec.n), **dp_kwargs)
    if gnormal_value is None:
        gnormal_value = gnormal_expect(coeff, phi, grid=grid, field=field)
    return abs(dp - gnormal_value)


@dataclass(frozen=True)
class InterpolationTrace:
    """The deformation A_i = worst-case E[u(W_i, 1 - i/n)] from the solved
    field (i = 0) to the summed datum (i = n)."""

    a: np.ndarray
    increments: np.ndarray
    step_bounds: Optional[np.ndarray]

    @property
    def telescoped(self) -> float:
        return float(np.sum(self.increments))

    def to_csv(self, stream) -> None:
        stream.write("i,A_i,increment,step_bound\n")
        for i, val in enumerate(self.a):
            if i == 0:
                stream.write(f"0,{val:.17g},,\n")
            else:
                sb = "" if self.step_bounds is None else f"{self.step_bounds[i-1]:.17g}"
                stream.write(f"{i},{val:.17g},{self.increments[i-1]:.17g},{sb}\n")


def interpolation_trace(spec: IidSpec, coeff: GCoeff, phi: TestFunction, *,
                        grid=None, field: Optional[SolutionField] = None,
                        reg: Optional[RegularityEstimate] = None) -> InterpolationTrace:
    """Trace the telescoping deformation between the Gaussian value and the
    summed datum; per-step bounds are attached when a regularity estimate
    is supplied."""
    _check_matching_coeff(spec.theta, coeff)
    if field is None:
        field = solve_gheat(coeff, phi, grid)
    if field.grid.t_final < 1.0 - 1e-12:
        raise ValueError("field must reach t = 1")
    n = spec.n
    scale = math.sqrt(n)
    a = np.empty(n + 1)
    a[0] = field.eval(0.0, 1.0)
    for i in range(1, n + 1):
        t_i = 1.0 - i / n

        def layer_fn(x, _t=t_i):
            return field.eval(x, _t)

        psi = TestFunction(f=layer_fn, lipschitz=phi.lipschitz,
                           name=f"u(.,{t_i:.4g})")
        a[i] = dp_sum_expect([spec.theta] * i, psi, scale)

    increments = np.abs(np.diff(a))
    step_bounds = None
    if reg is not None:
        moment = abs_moment(spec.theta, 2.0 + reg.alpha)
        i_arr = np.arange(1, n + 1)
        hi = (1.0 - (i_arr - 1) / n) ** (0.5 * (1.0 - reg.alpha))
        lo = (1.0 - i_arr / n) ** (0.5 * (1.0 - reg.alpha))
        step_bounds = (2.0 * reg.c_alpha / n ** (0.5 * reg.alpha) * moment
                       * 2.0 / (1.0 - reg.alpha) * (hi - lo))
    return InterpolationTrace(a=a, increments=increments, step_bounds=step_bounds)


@dataclass(frozen=True)
class RateReport:
    """Per-n errors against the theoretical bound, plus the regularity
    estimate actually used and the fitted log-log slope."""

    n_values: np.ndarray
    errors: np.ndarray
    bounds: np.ndarray
    passes: np.ndarray
    budget: float
    regularity: RegularityEstimate
    slope: Optional[float]

    @property
    def all_pass(self) -> bool:
        return bool(np.all(self.passes))

    def to_csv(self, stream) -> None:
        stream.write("n,error,bound,pass,alpha,C_alpha,budget\n")
        for n, e, b, p in zip(self.n_values, self.errors, self.bounds, self.passes):
            stream.write(f"{int(n)},{e:.17g},{b:.17g},{str(bool(p)).lower()},"
                         f"{self.regularity.alpha:.17g},{self.regularity.c_rate:.17g},"
                         f"{self.budget:.17g}\n")


def _fit_slope(n_values: np.ndarray, errors: np.ndarray) -> Optional[float]:
    if len(n_values) < 2 or np.any(errors <= 0.0):
        return None
    return float(np.polyfit(np.log(n_values.astype(float)), np.log(errors), 1)[0])


def rate_experiment(theta: UncertaintySet, n_list: Sequence[int], family: LipschitzFamily,
                    reg: RegularityEstimate, coeff: GCoeff, *, dx: float = 0.005,
                    coarse_factor: float = 2.0, budget_atol: float = 1e-9,
                    x_span: float = 0.0, executor=None) -> RateReport:
    """error(n) = max over the family of the summed-vs-Gaussian gap;
    bound(n) = c_rate * N[|X|^(2+alpha)] / n^(alpha/2).

    The Gaussian side is solved once per test function at resolution
    ``dx`` and once at ``coarse_factor * dx``; the Richardson gap of the
    two resolutions (for an O(dx^2) scheme) is the PDE line item of the
    budget.  The dynamic programs run in exact mode, so they add nothing.
    ``executor``: optional concurrent.futures executor for the per-function
    solves; results are assembled in a fixed order either way.
    """
    _check_matching_coeff(theta, coeff)
    n_values = np.asarray(sorted(int(n) for n in n_list))
    if np.any(n_values < 1):
        raise ValueError("n values must be positive")

    def solve_pair(phi: TestFunction) -> tuple[float, float]:
        fine = gnormal_expect(coeff, phi, grid=make_grid(coeff, dx=dx, x_span=x_span))
        coarse = gnormal_expect(coeff, phi,
                                grid=make_grid(coeff, dx=coarse_factor * dx, x_span=x_span))
        return fine, abs(fine - coarse) / (coarse_factor**2 - 1.0)

    mapper = map if executor is None else executor.map
    pairs = list(mapper(solve_pair, family.members))
    g_values = np.array([p[0] for p in pairs])
    budget = float(max(p[1] for p in pairs)) + budget_atol

    def error_for(n: int) -> float:
        comps = [theta] * n
        scale = math.sqrt(n)
        return max(abs(dp_sum_expect(comps, phi, scale) - g)
                   for phi, g in zip(family.members, g_values))

    errors = np.array(list(mapper(error_for, n_values.tolist())))
    moment = abs_moment(theta, 2.0 + reg.alpha)
    bounds = reg.c_rate * moment / n_values.astype(float) ** (0.5 * reg.alpha)
    passes = errors <= bounds + budget
    return RateReport(n_values=n_values, errors=errors, bounds=bounds, passes=passes,
                      budget=budget, regularity=reg, slope=_fit_slope(n_values, errors))


def noniid_experiment(spec: NonIidSpec, family: LipschitzFamily,
                      reg: RegularityEstimate, *, dx: float = 0.01,
                      coarse_factor: float = 2.0, budget_atol: float = 1e-9,
                      executor=None) -> RateReport:
    """Rate check for independent but non-identically distributed sums.

    The sum is normalized by the total midpoint volatility sigma and
    compared against the Gaussian law of the normalized band (midpoint 1,
    common ratio beta); the bound takes the worst component:

        c_rate * max_i N_i[|x|^(2+alpha)] / sigma_i^(2+alpha) * (sigma_i/sigma)^alpha.
    """
    coeff = spec.gcoeff
    sigma = spec.sigma_total
    sigmas = spec.sigmas

    def solve_pair(phi: TestFunction) -> tuple[float, float]:
        fine = gnormal_expect(coeff, phi, grid=make_grid(coeff, dx=dx))
        coarse = gnormal_expect(coeff, phi, grid=make_grid(coeff, dx=coarse_factor * dx))
        return fine, abs(fine - coarse) / (coarse_factor**2 - 1.0)

    mapper = map if executor is None else executor.map
    pairs = list(mapper(solve_pair, family.members))
    budget = float(max(p[1] for p in pairs)) + budget_atol

    error = max(abs(dp_sum_expect(spec.components, phi, sigma) - g)
                for phi, (g, _) in zip(family.members, pairs))

    alpha = reg.alpha
    worst = max(abs_moment(th, 2.0 + alpha) / s ** (2.0 + alpha) * (s / sigma) ** alpha
                for th, s in zip(spec.components, sigmas))
    bound = reg.c_rate * worst
    n = len(spec.components)
    return RateReport(n_values=np.array([n]), errors=np.array([error]),
                      bounds=np.array([bound]), passes=np.array([error <= bound + budget]),
                      budget=budget, regularity=reg, slope=None)
