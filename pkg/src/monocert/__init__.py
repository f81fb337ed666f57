"""Contraction certificates and separable Lyapunov functions for monotone systems."""

from .certify import (CertKind, CertStatus, WeightCertificate, certify_model, find_max_weights,
                      find_sum_weights, sample_jacobians, verify_certificate)
from .core import DomainBox, NormKind, SystemModel, WeightedNorm
from .lyapunov import LyapunovForm, LyapunovFunction, build
from .measures import mu1, mu_inf, mu_weighted

__version__ = "0.1.0"

__all__ = [
    "CertKind", "CertStatus", "DomainBox", "LyapunovForm", "LyapunovFunction", "NormKind",
    "SystemModel", "WeightCertificate", "WeightedNorm", "build", "certify_model",
    "find_max_weights", "find_sum_weights", "mu1", "mu_inf", "mu_weighted", "sample_jacobians",
    "verify_certificate",
]
