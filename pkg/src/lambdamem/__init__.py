"""Soliton storage, displacement and retrieval of pulses in a Doppler-broadened Lambda medium.

Analytic soliton solutions live in :mod:`lambdamem.ist`, the direct
Maxwell-Bloch solver in :mod:`lambdamem.cmb`; :mod:`lambdamem.analysis`
extracts observables from either.
"""

from .core import (DensityField, DopplerSpec, FieldGrid, MediumConfig, NormingConstantInit,
                   SolverSettings, SpectralParameter, check_density, ground_state, is_density_matrix)
from .doppler import BroadeningCoefficients, broadening_coefficients
from .ist import SolitonSolution, final_density, reconstruct_fields
from .cmb import SimulationResult, simulate
from .analysis import Variant, locate_imprint, coherence_survival, peak_trajectory
from .config import RunConfig, validate_config

__all__ = [
    "BroadeningCoefficients", "DensityField", "DopplerSpec", "FieldGrid", "MediumConfig",
    "NormingConstantInit", "RunConfig", "SimulationResult", "SolitonSolution", "SolverSettings",
    "SpectralParameter", "Variant", "broadening_coefficients", "check_density", "coherence_survival",
    "final_density", "ground_state", "is_density_matrix", "locate_imprint", "peak_trajectory",
    "reconstruct_fields", "simulate", "validate_config",
]
