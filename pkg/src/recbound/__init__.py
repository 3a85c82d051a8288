"""recbound: boundedness certificates for linear difference equations.

Decides and certifies boundedness of solutions of x(n+1) = A x(n) + y(n).
Off the unit circle the answer is structural (contracting: everything
bounded; expanding: exactly one bounded initial value, computed here).  On
the circle boundedness reduces to boundedness of exponential sums
sum e(f(n)), which this package analyzes via the cot(pi*theta/2) envelope
for monotone slopes, a summation-by-parts identity, slope-limit criteria,
and, for Jordan cells, a constructive series for the initial values.
"""

from .errors import (
    ConfigError,
    OverflowGuardError,
    PhaseEvalError,
    PhaseSyntaxError,
    PoleError,
    RecboundError,
    RefusedError,
    SourceExhaustedError,
    TransformError,
)
from .expsum import (
    Certificate,
    KLCheck,
    SumAnalysis,
    Verdict,
    abel_identity_residual,
    certify_bounded,
    certify_unbounded,
    check_kl_hypothesis,
    kusmin_landau_bound,
    partial_sums,
    tail_sum_bound,
    unit_phase,
)
from .factpoly import binomial_ext, falling, raising, raising_over_factorial, shifted_binomial_sides
from .jordan import (
    CellSolutionEvaluator,
    CriticalCellProblem,
    CriticalInitResult,
    JordanBlock,
    JordanSystem,
    SpectrumReport,
    SystemVerdict,
    apply_transform,
    bounded_initial_state,
    classify_spectrum,
    critical_init_values,
    explicit_cell_solution,
    hs_norm,
    measure_input_bounds,
    perturbation_probe,
    required_init_expanding,
    simulate_block,
    transform_condition,
)
from .numerics import GrowthFit, fit_growth
from .phasefn import (
    PhaseExpr,
    SequenceSource,
    TailSum,
    eval_phase,
    explicit_source,
    file_source,
    finite_difference,
    parse_phase,
    phase_source,
    phase_source_radians,
    scaled_source,
    second_difference_tail,
    to_text,
)
from .scalar import (
    Declarations,
    Regime,
    ScalarEquation,
    Trajectory,
    WphiReport,
    WphiVerdict,
    classify_scalar,
    closed_form_scalar,
    criterion_partial_sums,
    required_init_scalar,
    simulate_scalar,
    wphi_membership,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
