"""Equilibrium solver and simulator for competitive data markets."""

from ._core import (
    EffortVarianceModel,
    EquilibriumResult,
    DerivedParameters,
    Scenario,
    alpha_sweep,
    certify,
    derive_parameters,
    equilibrium,
    generate_scenario,
    load_scenario,
    ols_coefficients,
    parse_scenario,
    price_of_anarchy,
    result_to_json,
    run_cli,
    solve,
    spectral_radius,
    validate_scenario,
)

__all__ = [
    "EffortVarianceModel",
    "EquilibriumResult",
    "DerivedParameters",
    "Scenario",
    "alpha_sweep",
    "certify",
    "derive_parameters",
    "equilibrium",
    "generate_scenario",
    "load_scenario",
    "ols_coefficients",
    "parse_scenario",
    "price_of_anarchy",
    "result_to_json",
    "run_cli",
    "solve",
    "spectral_radius",
    "validate_scenario",
]
