"""Periodic spectral backend for certifying the expansion numerically."""
from __future__ import annotations

from .definetti import DiscreteMeasure, chebyshev_support, h_trace, mixture_hierarchy
from .evaluate import Binding, evaluate
from .grid import Grid, GridField, free_propagate, nls_energy, nls_flow, random_field
from .lowrank import KernelProductSum, LowRankKernel, TensorSum, hs_norm, trace_norm
from .quadrature import simplex_integrate, simplex_nodes
from .verify import ResidualReport

__all__ = [
    "Binding",
    "DiscreteMeasure",
    "Grid",
    "GridField",
    "KernelProductSum",
    "LowRankKernel",
    "ResidualReport",
    "TensorSum",
    "chebyshev_support",
    "evaluate",
    "free_propagate",
    "h_trace",
    "hs_norm",
    "mixture_hierarchy",
    "nls_energy",
    "nls_flow",
    "random_field",
    "simplex_integrate",
    "simplex_nodes",
    "trace_norm",
]
