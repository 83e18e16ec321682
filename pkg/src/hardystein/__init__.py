"""Numerical companion for Hardy-Stein identities of pure-jump Levy processes.

Modules
-------
levy_measures
    Jump measures, characteristic exponents, symmetrization.
spectral
    Periodic grids, Fourier transforms, semigroups, ultracontractivity.
hardy_stein
    Taylor remainders and both sides of the Hardy-Stein identity.
square_functions
    Littlewood-Paley square functions of the symmetrized semigroup.
multipliers
    Bilinear increment forms and their Fourier multipliers.
jump_sim
    Monte-Carlo paths, compensated integrals, martingale identity.
cli
    Command-line front end.
"""

__version__ = "0.1.0"

from .hardy_stein import (  # noqa: E402
    F_eps_value,
    F_value,
    K_value,
    TaylorRemainder,
    comparability_scan,
    hardy_stein_rhs,
    lhs_value,
    verify_identity,
)
from .increments import QuadSpec  # noqa: E402
from .jump_sim import (  # noqa: E402
    JumpPath,
    MartingaleSpec,
    compensated_integral,
    martingale_hardy_stein_mc,
    sample_path,
    semigroup_mc_crosscheck,
)
from .levy_measures import (  # noqa: E402
    CharacteristicExponent,
    LevyMeasure,
    char_exponent,
    hartman_wintner_profile,
    integrability_value,
    make_measure,
    measure_from_config,
    symmetrize,
)
from .multipliers import (  # noqa: E402
    MultiplierSpec,
    SymbolGrid,
    adjoint_identity_check,
    apply_multiplier,
    lambda_form,
    multiplier_symbol,
    phi_from_config,
    symmetrized_form,
)
from .spectral import (  # noqa: E402
    GridFunction,
    SemigroupOperator,
    semigroup_apply,
    transition_density,
    ultra_constant,
)
from .square_functions import norm_equivalence_report, square_function  # noqa: E402

__all__ = [
    "CharacteristicExponent",
    "F_eps_value",
    "F_value",
    "GridFunction",
    "JumpPath",
    "K_value",
    "LevyMeasure",
    "MartingaleSpec",
    "MultiplierSpec",
    "QuadSpec",
    "SemigroupOperator",
    "SymbolGrid",
    "TaylorRemainder",
    "adjoint_identity_check",
    "apply_multiplier",
    "char_exponent",
    "comparability_scan",
    "compensated_integral",
    "hardy_stein_rhs",
    "hartman_wintner_profile",
    "integrability_value",
    "lambda_form",
    "lhs_value",
    "make_measure",
    "martingale_hardy_stein_mc",
    "measure_from_config",
    "multiplier_symbol",
    "norm_equivalence_report",
    "phi_from_config",
    "sample_path",
    "semigroup_apply",
    "semigroup_mc_crosscheck",
    "square_function",
    "symmetrize",
    "symmetrized_form",
    "transition_density",
    "ultra_constant",
    "verify_identity",
]
