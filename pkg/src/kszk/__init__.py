"""Spectral Galerkin simulator and verification harness for the
Kuramoto-Sivashinsky-Zakharov-Kuznetsov gradient system on boxes."""

from .errors import BlowUpError, ConfigurationError, FitError, ShapeError, SolverError
from .geometry import (
    AdmissibilityReport,
    DomainSpec,
    analyze_domain,
    compute_a,
    compute_theta,
    estimate_embedding_constant,
)
from .spectral import ModeGrid, PhysicalField, SpectralField, analyze, sobolev_norms, synthesize
from .solver import InitialData, SolverConfig, VectorState, curl_residual, initial_from_potential, run, step

__version__ = "0.1.0"
