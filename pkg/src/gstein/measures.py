"""Finitely supported measures and uncertainty sets for sublinear expectations.

An uncertainty set is a nonempty finite collection of finitely supported
probability measures on the real line.  Its upper expectation

    N[phi] = max_mu  E_mu[phi(x)]

is a sublinear expectation: monotone, positively homogeneous, constant
preserving and subadditive.  Keeping everything finite makes each
expectation an exact weighted sum and turns the supremum into an attained
maximum, so maximizer sets, variance bounds and absolute moments are all
computable without any truncation argument.  Tail regularity holds for
free: beyond the largest atom every truncated moment vanishes identically,
and monotone limits of test functions pass through the finite max, so both
are recorded as test invariants rather than implemented as limits.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

__all__ = [
    "DegenerateVarianceError",
    "DiscreteMeasure",
    "UncertaintySet",
    "TestFunction",
    "measure_expect",
    "sublinear_expect",
    "maximizer_set",
    "centered_check",
    "variance_bounds",
    "abs_moment",
    "step_expect",
    "format_measure",
    "format_sets",
    "parse_sets",
]

WEIGHT_SUM_TOL = 1e-12
CENTERING_TOL = 1e-12


class DegenerateVarianceError(ValueError):
    """Lower variance bound of an uncertainty set is not strictly positive."""


def _readonly(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class DiscreteMeasure:
    """A finitely supported probability measure.

    Atoms are stored sorted by position and the arrays are frozen, so every
    expectation is a fixed-order weighted sum: results are reproducible
    across runs and thread counts.
    """

    positions: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float).ravel()
        w = np.asarray(self.weights, dtype=float).ravel()
        if pos.size == 0 or pos.size != w.size:
            raise ValueError("positions and weights must be nonempty and of equal length")
        order = np.argsort(pos, kind="stable")
        pos, w = pos[order], w[order]
        if np.any(np.diff(pos) <= 0.0):
            raise ValueError("atom positions must be pairwise distinct")
        if np.any(w <= 0.0):
            raise ValueError("atom weights must be strictly positive")
        if abs(w.sum() - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"weights sum to {w.sum()!r}, not 1 within {WEIGHT_SUM_TOL}")
        object.__setattr__(self, "positions", _readonly(pos))
        object.__setattr__(self, "weights", _readonly(w))

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[float, float]]) -> "DiscreteMeasure":
        """Build from ``(weight, position)`` pairs."""
        pairs = list(pairs)
        return cls(positions=[p for _, p in pairs], weights=[w for w, _ in pairs])

    @classmethod
    def point_mass(cls, x: float) -> "DiscreteMeasure":
        return cls(positions=[x], weights=[1.0])

    @classmethod
    def rademacher(cls, a: float, weight: float = 0.5) -> "DiscreteMeasure":
        """Symmetric two-point measure ``weight`` at -a and ``1-weight`` at +a."""
        if a == 0.0:
            return cls.point_mass(0.0)
        return cls(positions=[-a, a], weights=[weight, 1.0 - weight])

    def expect(self, f: Callable[[np.ndarray], np.ndarray]) -> float:
        """Weighted sum of ``f`` over the atoms, in ascending-position order."""
        return float(np.dot(self.weights, np.asarray(f(self.positions), dtype=float)))

    def __len__(self) -> int:
        return self.positions.size


@dataclass(frozen=True)
class UncertaintySet:
    """A nonempty finite set of discrete measures; ``sublinear_expect`` is its
    upper expectation."""

    measures: tuple[DiscreteMeasure, ...]

    def __post_init__(self):
        ms = tuple(self.measures)
        if not ms:
            raise ValueError("uncertainty set must contain at least one measure")
        object.__setattr__(self, "measures", ms)

    @classmethod
    def of(cls, *measures: DiscreteMeasure) -> "UncertaintySet":
        return cls(measures=measures)

    def __len__(self) -> int:
        return len(self.measures)

    def support_bound(self) -> float:
        """Largest absolute atom position across all measures."""
        return max(float(np.max(np.abs(mu.positions))) for mu in self.measures)


@dataclass(frozen=True)
class TestFunction:
    """A scalar test function together with optional regularity metadata.

    ``f`` (and the optional derivatives) must accept numpy arrays and map
    them elementwise.  ``lipschitz`` is a global Lipschitz constant or
    ``None`` when unknown.  ``d2_holder`` maps a Holder exponent
    ``alpha`` in (0, 1] to the seminorm ``[f'']_alpha``; leave it ``None``
    when no closed form is available.

    When analytic derivatives are absent, ``deriv1``/``deriv2`` fall back to
    central differences with step ``1e-5 * (1 + |x|)``; the second
    derivative is Richardson-extrapolated from steps ``2h`` and ``h``.
    """

    __test__ = False  # pytest: a domain type, not a test case

    f: Callable[[np.ndarray], np.ndarray]
    lipschitz: Optional[float] = None
    d1: Optional[Callable[[np.ndarray], np.ndarray]] = None
    d2: Optional[Callable[[np.ndarray], np.ndarray]] = None
    d2_holder: Optional[Callable[[float], float]] = None
    name: str = ""

    def __call__(self, x):
        return self.f(x)

    def deriv1(self, x):
        if self.d1 is not None:
            return self.d1(x)
        x = np.asarray(x, dtype=float)
        h = 1e-5 * (1.0 + np.abs(x))
        return (self.f(x + h) - self.f(x - h)) / (2.0 * h)

    def deriv2(self, x):
        if self.d2 is not None:
            return self.d2(x)
        x = np.asarray(x, dtype=float)
        h = 1e-5 * (1.0 + np.abs(x))
        fx = self.f(x)

        def second(step):
            return (self.f(x + step) - 2.0 * fx + self.f(x - step)) / step**2

        return (4.0 * second(h) - second(2.0 * h)) / 3.0

    def holder_d2(self, alpha: float) -> float:
        """Seminorm [f'']_alpha; raises when no closed form was attached."""
        if self.d2_holder is None:
            raise ValueError(f"test function {self.name!r} carries no d2 Holder data")
        return float(self.d2_holder(alpha))


def _eval_of(phi) -> Callable:
    """Accept a TestFunction or a bare vectorized callable."""
    return phi.f if isinstance(phi, TestFunction) else phi


def measure_expect(mu: DiscreteMeasure, phi) -> float:
    """E_mu[phi]: exact weighted sum over the atoms in ascending order."""
    return mu.expect(_eval_of(phi))


def sublinear_expect(theta: UncertaintySet, phi) -> float:
    """Upper expectation N[phi] = max over the set's measures; attained."""
    f = _eval_of(phi)
    return max(mu.expect(f) for mu in theta.measures)


def maximizer_set(theta: UncertaintySet, phi, tol: float = 1e-12) -> UncertaintySet:
    """Measures attaining N[phi] up to a relative slack ``tol * (1 + |N[phi]|)``."""
    if tol < 0.0:
        raise ValueError("tol must be nonnegative")
    f = _eval_of(phi)
    vals = [mu.expect(f) for mu in theta.measures]
    best = max(vals)
    cut = best - tol * (1.0 + abs(best))
    kept = tuple(mu for mu, v in zip(theta.measures, vals) if v >= cut)
    return UncertaintySet(measures=kept)


def centered_check(theta: UncertaintySet, tol: float = CENTERING_TOL) -> bool:
    """True iff N[x] and N[-x] both vanish, i.e. every measure has mean zero."""
    up = sublinear_expect(theta, lambda x: x)
    down = sublinear_expect(theta, lambda x: -x)
    return abs(up) <= tol and abs(down) <= tol


def variance_bounds(theta: UncertaintySet) -> tuple[float, float]:
    """(sigma_under^2, sigma_bar^2) = (-N[-x^2], N[x^2]).

    Raises :class:`DegenerateVarianceError` when the lower bound is not
    strictly positive; everything downstream assumes it is.
    """
    bar_sq = sublinear_expect(theta, lambda x: x * x)
    under_sq = -sublinear_expect(theta, lambda x: -(x * x))
    if under_sq <= 0.0:
        raise DegenerateVarianceError("degenerate variance: sigma_under^2 <= 0")
    return under_sq, bar_sq


def abs_moment(theta: UncertaintySet, p: float) -> float:
    """N[|x|^p] for p > 0."""
    if p <= 0.0:
        raise ValueError("moment order p must be positive")
    return sublinear_expect(theta, lambda x: np.abs(x) ** p)


def step_expect(theta: UncertaintySet, phi) -> TestFunction:
    """One independence step: psi(x) = max_mu sum_k w_k phi(x + pos_k).

    A max of L-Lipschitz averages is L-Lipschitz, so the constant carries
    over unchanged.
    """
    f = _eval_of(phi)

    def psi(x):
        xa = np.asarray(x, dtype=float)
        scalar = xa.ndim == 0
        xa = np.atleast_1d(xa)
        best = None
        for mu in theta.measures:
            vals = np.asarray(f(xa[:, None] + mu.positions[None, :]), dtype=float)
            avg = vals @ mu.weights
            best = avg if best is None else np.maximum(best, avg)
        return float(best[0]) if scalar else best

    lip = phi.lipschitz if isinstance(phi, TestFunction) else None
    base = phi.name if isinstance(phi, TestFunction) else getattr(phi, "__name__", "phi")
    return TestFunction(f=psi, lipschitz=lip, name=f"step[{base}]")


# ---------------------------------------------------------------------------
# Text serialization: one measure per line as "w1@x1 w2@x2 ...", uncertainty
# sets separated by blank lines.  Numbers carry 17 significant digits.
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def format_measure(mu: DiscreteMeasure) -> str:
    return " ".join(f"{_fmt(w)}@{_fmt(p)}" for w, p in zip(mu.weights, mu.positions))


def format_sets(sets: Sequence[UncertaintySet]) -> str:
    blocks = ["\n".join(format_measure(mu) for mu in theta.measures) for theta in sets]
    return "\n\n".join(blocks) + "\n"


def _parse_measure(line: str) -> DiscreteMeasure:
    pairs = []
    for token in line.split():
        try:
            w, p = token.split("@")
            pairs.append((float(w), float(p)))
        except ValueError as exc:
            raise ValueError(f"malformed atom token {token!r}") from exc
    return DiscreteMeasure.from_pairs(pairs)


def parse_sets(text: str) -> list[UncertaintySet]:
    sets: list[UncertaintySet] = []
    block: list[DiscreteMeasure] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            if block:
                sets.append(UncertaintySet(measures=tuple(block)))
                block = []
            continue
        block.append(_parse_measure(line))
    if block:
        sets.append(UncertaintySet(measures=tuple(block)))
    return sets
