"""Reaction kinetics toolkit: network parsing, mass-action ODEs, jump
simulation, Volpert indexing, decomposition into elementary steps and
rate-coefficient estimation."""

from .builtins import AVOGADRO, BUILTINS, builtin
from .decomposition import (
    ElementaryStep,
    atomic_matrix,
    enumerate_decompositions,
    generate_steps,
    lp_bounds,
    volpert_filter,
)
from .deterministic import IntegratorConfig, Trajectory, integrate, simulate
from .estimation import Dataset, FitConfig, FitResult, fit_arrhenius, fit_rates, objective, synth_data
from .formula import format_formula, parse_formula
from .graphs import export_dot, volpert_graph, volpert_index
from .network import (
    Complex,
    Composition,
    KineticSystem,
    ReactionNetwork,
    ReactionStep,
    Species,
    arrhenius,
    conserved_quantities,
    mass_action_jacobian,
    mass_action_rhs,
    stoichiometry,
)
from .parser import ParseError, parse_network, parse_reaction, parse_species_file, parse_steps, serialize_network
from .stochastic import (
    LeapConfig,
    SimulationError,
    convert_rate,
    direct_method,
    ensemble,
    explicit_tau_leap,
    implicit_tau_leap,
    propensity,
    select_tau,
    stochastic_rates,
    trapezoidal_tau_leap,
)

__all__ = [
    "AVOGADRO",
    "BUILTINS",
    "builtin",
    "ElementaryStep",
    "atomic_matrix",
    "enumerate_decompositions",
    "generate_steps",
    "lp_bounds",
    "volpert_filter",
    "IntegratorConfig",
    "Trajectory",
    "integrate",
    "simulate",
    "Dataset",
    "FitConfig",
    "FitResult",
    "fit_arrhenius",
    "fit_rates",
    "objective",
    "synth_data",
    "format_formula",
    "parse_formula",
    "export_dot",
    "volpert_graph",
    "volpert_index",
    "Complex",
    "Composition",
    "KineticSystem",
    "ReactionNetwork",
    "ReactionStep",
    "Species",
    "arrhenius",
    "conserved_quantities",
    "mass_action_jacobian",
    "mass_action_rhs",
    "stoichiometry",
    "ParseError",
    "parse_network",
    "parse_reaction",
    "parse_species_file",
    "parse_steps",
    "serialize_network",
    "LeapConfig",
    "SimulationError",
    "convert_rate",
    "direct_method",
    "ensemble",
    "explicit_tau_leap",
    "implicit_tau_leap",
    "propensity",
    "select_tau",
    "stochastic_rates",
    "trapezoidal_tau_leap",
]

__version__ = "0.1.0"
