"""Exact desk-scale engine for singular integrals, commutators and
Morrey/Campanato norms over the p-adic vector spaces Q_p^n."""

__version__ = "0.1.0"

from .core import (
    Ball,
    Context,
    ContextMismatch,
    DeskScaleError,
    INFINITY,
    Point,
    Relation,
    Sphere,
    compare,
    is_prime,
    join,
    p_power,
    scalar_norm,
    sphere_cells,
    valuation,
)
from .functions import (
    BallWeight,
    CommutatorSymbols,
    CorpusProfile,
    HomogeneousKernel,
    PowerWeight,
    StepFunction,
    StepIntegralWeight,
    TabulatedWeight,
    WeightDomainError,
    WeightPositivityError,
    combine,
    dini_modulus,
    kernel_eval,
    random_kernel,
    random_point,
    random_step,
    weight_of,
)
from .norms import (
    NormPolicy,
    NormReport,
    TailCertificate,
    TailMode,
    cbmo_norm,
    cm_norm,
    gc_norm,
    gm_norm,
    lipschitz_norm,
    lq_norm,
)
from .operators import (
    Annulus,
    GridFunction,
    StabilizationError,
    WindowedStep,
    annulus_kernel_integral,
    apply_T,
    apply_T_commutator,
    apply_Tk,
    apply_Tk_as_step,
    apply_commutator,
    apply_commutator_as_step,
    integrate,
    integrate_region,
    local_constancy_scale,
    riesz,
    riesz_as_grid,
    riesz_normalizer,
)
from .verify import (
    CheckPolicy,
    ConditionKind,
    ConditionReport,
    ExperimentReport,
    RatioExperiment,
    SeriesCondition,
    SuiteReport,
    campanato_commutator_experiment,
    check_series,
    commutator_domination_suite,
    lipschitz_commutator_experiment,
    mean_gap_suite,
    mean_shift_suite,
    riesz_experiment,
    run_ratio_experiment,
    singular_experiment,
    tail_bound_suite,
)
