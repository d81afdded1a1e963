"""State estimation for a nonlinear servo-hydraulic test plant.

Simulates an actuator/specimen plant, adds measurement noise, and compares
a discrete Kalman filter (identified linear model) against a bootstrap
particle filter (nonlinear nominal model) by interval NRMSE.
"""

__version__ = "0.1.0"

from .model import (PlantState, SpecimenKind, SpecimenParams,
                    TransferSystemParams)
from .plants import (LinearModel, MeasurementSet, NoiseLevel, PlantTrajectory,
                     simulate_actual, simulate_linear, simulate_nominal,
                     synthesize_measurements)
from .kalman import DiscreteLinearModel, discretize_zoh, kf_run
from .particle import (LikelihoodSpec, PfResult, PriorSpec, ProcessNoiseSpec,
                       pf_run)
from .metrics import IntervalSpec, ensemble_stats, interval_nrmse, nrmse
from .signals import RngStream, TimeSeries, chirp, sinusoid

__all__ = [
    "__version__",
    "PlantState", "SpecimenKind", "SpecimenParams", "TransferSystemParams",
    "LinearModel", "MeasurementSet", "NoiseLevel", "PlantTrajectory",
    "simulate_actual", "simulate_linear", "simulate_nominal",
    "synthesize_measurements",
    "DiscreteLinearModel", "discretize_zoh", "kf_run",
    "LikelihoodSpec", "PfResult", "PriorSpec", "ProcessNoiseSpec", "pf_run",
    "IntervalSpec", "ensemble_stats", "interval_nrmse", "nrmse",
    "RngStream", "TimeSeries", "chirp", "sinusoid",
]
