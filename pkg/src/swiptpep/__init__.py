"""Pairwise error probability of two-relay SWIPT distributed-Alamouti
relaying in Middleton Class-A impulsive noise."""

from .mca_noise import McaParams, NoiseEnvironment, SpatialModel
from .channel import Topology, FadingRealization
from .phy import (
    ALL_VARIANTS,
    CodewordPair,
    RelayParams,
    SchemeVariant,
    SystemConfig,
    WORST_CASE_PAIR,
)
from .analysis import PepEstimate, PepMethod, diversity_order, pep_bound

__version__ = "0.1.0"

__all__ = [
    "McaParams",
    "NoiseEnvironment",
    "SpatialModel",
    "Topology",
    "FadingRealization",
    "ALL_VARIANTS",
    "CodewordPair",
    "RelayParams",
    "SchemeVariant",
    "SystemConfig",
    "WORST_CASE_PAIR",
    "PepEstimate",
    "PepMethod",
    "diversity_order",
    "pep_bound",
]
