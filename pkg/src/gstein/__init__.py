"""Sublinear expectations, the G-heat equation, and Stein-type rates.

The package evaluates worst-case expectations over finite uncertainty
sets, solves the fully nonlinear heat equation that characterizes the
sublinear analogue of the Gaussian law, verifies the Stein-type identity
and remainder bound connecting the two, and measures how fast normalized
independent sums converge to that law.
"""

from .measures import (
    DegenerateVarianceError,
    DiscreteMeasure,
    TestFunction,
    UncertaintySet,
    abs_moment,
    centered_check,
    format_sets,
    maximizer_set,
    measure_expect,
    parse_sets,
    step_expect,
    sublinear_expect,
    variance_bounds,
)
from .gheat import (
    GCoeff,
    NoStableExponentError,
    OutsideGridError,
    RegularityEstimate,
    SolutionField,
    SpaceTimeGrid,
    UnstableGridError,
    estimate_regularity,
    eval_field,
    g_apply,
    gnormal_expect,
    holder_seminorm,
    make_grid,
    second_deriv,
    solve_gheat,
)
from .stein import (
    CenteringError,
    QuadSpec,
    QuadratureUnresolvedError,
    classical_stein_residual,
    interpolant_phi_s,
    one_sided_derivative_check,
    stein_bound,
    stein_identity,
    stein_operator,
    taylor_remainders,
    w_curve,
)
from .clt import (
    DomainBudgetError,
    EnumerationBudgetError,
    IidSpec,
    LipschitzFamily,
    MixedBetaError,
    NonIidSpec,
    RateReport,
    brute_force_policy_oracle,
    clt_error,
    conv_sum_expect,
    default_lipschitz_family,
    dp_sum_expect,
    interpolation_trace,
    noniid_experiment,
    rate_experiment,
)

__version__ = "0.1.0"
