"""Nanowire-condensate coupling: Thomas-Fermi cloud, coupling density, level
shift, poles, amplification thresholds and time traces.

Rates are angular frequencies in 1/s throughout; scenario configs may give
them in Hz with ``"frequency_input": "cyclic"``.
"""

from ._core import (
    ConfigError,
    ConvergenceError,
    CouplingDensity,
    DomainError,
    Error,
    LevelShift,
    Propagator,
    Scenario,
    ScenarioConfig,
    SingularityError,
    chemical_potential,
    closed_form_density,
    gain_map,
    load_config,
    lorentzian_density,
    parse_config,
    threshold_exact,
    threshold_report,
)

__all__ = [
    "ConfigError",
    "ConvergenceError",
    "CouplingDensity",
    "DomainError",
    "Error",
    "LevelShift",
    "Propagator",
    "Scenario",
    "ScenarioConfig",
    "SingularityError",
    "chemical_potential",
    "closed_form_density",
    "gain_map",
    "load_config",
    "lorentzian_density",
    "parse_config",
    "threshold_exact",
    "threshold_report",
]
