"""Thermodynamic formalism and ergodic optimization for weighted shifts.

Transfer-operator spectra, Gibbs states, entropy and pressure, zero
temperature sweeps, maximizing orbits, Mane potentials and sub-actions for
weighted backward shifts on truncated c0 / l^p sequence spaces.
"""

__version__ = "0.1.0"

from .space import SpaceSpec, TruncatedVector, distance, norm, project_depth  # noqa: E402
from .shift import ShiftOperator, WeightSequence  # noqa: E402
from .potentials import Potential  # noqa: E402
from .apriori import AprioriMeasure, adapted_tails  # noqa: E402
from .grid import FunctionGrid, GridSpec  # noqa: E402
from .transfer import (SpectralData, apply_transfer, check_normalized,  # noqa: E402
                       normalize, power_iteration)

__all__ = [
    "SpaceSpec", "TruncatedVector", "distance", "norm", "project_depth",
    "ShiftOperator", "WeightSequence", "Potential", "AprioriMeasure",
    "adapted_tails", "FunctionGrid", "GridSpec", "SpectralData",
    "apply_transfer", "check_normalized", "normalize", "power_iteration",
]
