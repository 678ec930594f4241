"""Amplitude-estimation credit risk analysis on a dense statevector simulator."""
from ._backend import BACKEND, available_backends
from .circuit import Operator, RegisterLayout, StateVector, apply, controlled, permutation_operator, probability_of
from .distributions import Asset, LatentGrid, Portfolio, build_latent_grid
from .errors import DimensionError, QCreditError, ReversibilityError, SizeError
from .model_circuits import build_A, build_Q
from .qae import QaeResult, error_bound, run_qae
from .resources import ResourceParams, estimate
from .risk import DiscreteDistribution, RiskReport, ecr, exact_loss_distribution, var_exact

__version__ = "0.1.0"

TWO_ASSET = Portfolio([Asset(1, 0.15, 0.1), Asset(2, 0.25, 0.05)])

__all__ = [
    "Asset",
    "BACKEND",
    "DimensionError",
    "DiscreteDistribution",
    "LatentGrid",
    "Operator",
    "Portfolio",
    "QCreditError",
    "QaeResult",
    "RegisterLayout",
    "ResourceParams",
    "ReversibilityError",
    "RiskReport",
    "SizeError",
    "StateVector",
    "TWO_ASSET",
    "apply",
    "available_backends",
    "build_A",
    "build_Q",
    "build_latent_grid",
    "controlled",
    "ecr",
    "error_bound",
    "estimate",
    "exact_loss_distribution",
    "permutation_operator",
    "probability_of",
    "run_qae",
    "var_exact",
]
