"""Shadowing, hyperbolicity and structural stability of weighted shift operators.

Weighted bilateral backward shifts B_w e_k = w_k e_{k-1} with eventually
periodic weights, acting on lp(Z) or c0(Z).
"""

__version__ = "0.1.0"

from .classify import (
    ClassificationReport,
    FhcReport,
    bounded_orbit_witness,
    classify_shadowing,
    classify_unilateral,
    fhc_check,
    stable_set_member,
    uniform_expansivity_class,
)
from .conjugacy import (
    ConjugacyResult,
    PerturbationMap,
    conjugacy_residual,
    conjugate_forward,
    conjugate_inverse,
    constant_map,
    coordinate_rank_one,
    cutoff_affine,
    epsilon_budget,
    extend_lipschitz,
    f_inverse_eval,
)
from .errors import (
    BudgetExceededError,
    ClassificationError,
    ConvergenceError,
    ShadowshiftError,
    TrajectoryError,
    WeightSpecError,
)
from .shadowing import (
    PseudoTrajectory,
    ShadowResult,
    adversarial_pseudotrajectory,
    defect,
    oracle_best_shadow,
    random_pseudotrajectory,
    shadow_bilateral,
    shadow_positive,
    verify_shadow,
)
from .spaces import C0, SeqVector, SpaceSpec, iterate, norm, split_MN
from .weights import (
    DichotomyConstants,
    TailRates,
    WeightSequence,
    dichotomy_constants,
    finite_sup_geomean,
    parse_weight_spec,
    partial_product,
    tail_rates,
    unilateral_sums,
    weight_at,
)
