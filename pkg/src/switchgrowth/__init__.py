"""Growth-rate optimization of switched positive linear systems.

Computes the maximal exponential growth rate lambda(M) of xdot = M(t)x
over compact sets of irreducible Metzler matrices by solving the ergodic
Hamilton-Jacobi equation on the simplex, and evaluates second-order
Perron/Floquet criteria that classify the optimal control as constant or
periodic (limit cycle).
"""

from .errors import SwitchGrowthError
from .matrices import (
    ControlSet,
    MetzlerMatrix,
    Segment,
    SpectralData,
    Vertices,
    at,
    control_set_to_dict,
    load_control_set,
    spectral,
    validate_metzler,
    vertices,
)
from .hilbert import (
    ContractionReport,
    contraction_rate_bound,
    finsler_seminorm,
    hilbert_distance,
    payoff_lipschitz_bound,
    verify_contraction,
)
from .dynamics import (
    ControlSignal,
    Trajectory,
    as_simplex,
    field,
    growth_rate,
    integrate_ambient,
    integrate_projected,
    payoff,
)
from .criteria import (
    AlphaStar,
    CriteriaReport,
    build_report,
    find_alpha_star,
    floquet_exponent_monodromy,
    floquet_second_derivative_cos,
    floquet_second_derivative_general,
    high_frequency_criterion,
    legendre_value,
    perron_derivative,
    perron_second_derivative,
)
from .hj import (
    Attractor,
    HJSolution,
    SimplexGrid,
    SlackReport,
    ValueOperator,
    classify_attractor,
    dump_solution,
    feedback_growth_rates,
    feedback_trajectory,
    lambda_vs_constant,
    solve_discounted,
    solve_ergodic,
)
from .ergodic_set import (
    ErgodicBoundary,
    InvarianceReport,
    contains,
    distance_to_set,
    invariance_check,
    trace_boundary,
)
from .models import (
    PRESET_NAMES,
    Preset,
    classify_pmca,
    pmca_conservation_check,
    preset,
)

__version__ = "0.1.0"
