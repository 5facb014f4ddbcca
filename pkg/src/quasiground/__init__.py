"""Ground states of quasilinear Schrodinger equations with critical growth.

The quasilinear problem is reduced by the dual transform ``v = G(u)`` to a
semilinear one; ground states are found by descent on the Nehari manifold.
"""

from .critical import InstantonParams, eps_sweep, instanton, level_bound_check, level_sweep, test_function
from .estimator import DualTransformer, GroundStateSolver
from .exceptions import (
    AssumptionFailure,
    BracketNotFound,
    ConfigError,
    DomainError,
    InvariantViolation,
    NotOnManifold,
    PSBoundViolation,
    QuadratureError,
    QuasigroundError,
    ResolutionError,
)
from .functional import energy, gradient, level_threshold, sobolev_constant, talenti_constant
from .grid import BoxGrid, Field, RadialGrid
from .nehari import fibering_map, m_map, project_nehari, psi
from .nonlinearity import (
    ConstantPotential,
    CosinePotential,
    ModelSpec,
    TransformedPower,
    ZeroNonlinearity,
    check_growth_conditions,
)
from .solver import SolveConfig, SolveReport, level_certificate, minimize_ground_state
from .transform import TransformSpec, check_g_assumptions

__version__ = "0.1.0"

__all__ = [
    "AssumptionFailure",
    "BoxGrid",
    "BracketNotFound",
    "ConfigError",
    "ConstantPotential",
    "CosinePotential",
    "DomainError",
    "DualTransformer",
    "Field",
    "GroundStateSolver",
    "InstantonParams",
    "InvariantViolation",
    "ModelSpec",
    "NotOnManifold",
    "PSBoundViolation",
    "QuadratureError",
    "QuasigroundError",
    "RadialGrid",
    "ResolutionError",
    "SolveConfig",
    "SolveReport",
    "TransformSpec",
    "TransformedPower",
    "ZeroNonlinearity",
    "check_g_assumptions",
    "check_growth_conditions",
    "energy",
    "eps_sweep",
    "fibering_map",
    "gradient",
    "instanton",
    "level_bound_check",
    "level_certificate",
    "level_sweep",
    "level_threshold",
    "m_map",
    "minimize_ground_state",
    "project_nehari",
    "psi",
    "sobolev_constant",
    "talenti_constant",
    "test_function",
]
