"""specdelay: forward and inverse spectral problems for constant-delay operators."""

from specdelay.builtins import BUILTIN_NAMES, builtin_potential, random_potential
from specdelay.characterization import (
    CharacterizationReport,
    build_report,
    check_A4,
    check_asymptotics,
    check_overdetermination,
    estimate_exponential_type,
    model_exponential_type,
    theta_functions,
)
from specdelay.core import (
    CharFnModel,
    DelayParameter,
    GridSpec,
    PotentialPair,
    build_w_functions,
    relative_l2_error,
    split_potential,
)
from specdelay.forward import (
    CharFnEvaluator,
    SpectralSequence,
    compute_spectrum,
    eval_char_fn,
    forward_spectra,
    oracle_tolerance,
    solve_ivp_method_of_steps,
)
from specdelay.inverse import (
    InverseResult,
    ProductCharFn,
    SeriesTail,
    estimate_omega_ratio,
    estimate_omega_sample,
    fit_series_tail,
    product_char_fn,
    run_algorithm1,
)

__version__ = "0.1.0"

__all__ = [
    "BUILTIN_NAMES",
    "CharFnEvaluator",
    "CharFnModel",
    "CharacterizationReport",
    "DelayParameter",
    "GridSpec",
    "InverseResult",
    "PotentialPair",
    "ProductCharFn",
    "SeriesTail",
    "SpectralSequence",
    "build_report",
    "build_w_functions",
    "builtin_potential",
    "check_A4",
    "check_asymptotics",
    "check_overdetermination",
    "compute_spectrum",
    "estimate_exponential_type",
    "estimate_omega_ratio",
    "estimate_omega_sample",
    "eval_char_fn",
    "fit_series_tail",
    "forward_spectra",
    "model_exponential_type",
    "oracle_tolerance",
    "product_char_fn",
    "random_potential",
    "relative_l2_error",
    "run_algorithm1",
    "solve_ivp_method_of_steps",
    "split_potential",
    "theta_functions",
]
