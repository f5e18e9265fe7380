"""Scattering by repulsive singular potentials through the matching-distance formalism."""

import logging
import os

from .errors import (
    DomainError,
    MatchingError,
    NegativeStageError,
    NoSolutionError,
    NotAsymptoticError,
    OracleError,
    ParameterError,
    PreAsymptoticError,
    QuadratureError,
    ScatteringError,
)
from .localwave import Region, convergence_integral, discriminant, k_squared, residual_delta
from .matching import (
    AngularTriad,
    MatchingSolution,
    free_solution,
    lambda_triad,
    master_residual,
    matching_solution,
    matching_solution_from_stage,
    solve_matching_radius,
    solve_stage,
)
from .oracle import OracleConfig, integrate_regular, phase_shift_oracle
from .potentials import CLASS_TAGS, PotentialClass, coupling, log_potential, potential_value
from .series import MatchCoefficients, ScatteringResult, WaveTerm, solve_series, wavefunction

__version__ = "0.1.0"

_level = os.environ.get("SCATTER_LOG")
if _level:
    logging.basicConfig(level=getattr(logging, _level.upper(), logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
logging.getLogger(__name__).addHandler(logging.NullHandler())
