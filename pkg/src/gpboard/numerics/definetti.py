"""Discrete de Finetti mixtures ``gamma^(k) = sum_a w_a (|phi_a><phi_a|)^(x)k``."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations
from typing import Sequence, Tuple

import numpy as np

from .grid import Grid, GridField, bessel_potential, sobolev_norm
from .lowrank import KernelProductSum, LowRankKernel, trace_norm

_WEIGHT_TOL = 1e-12


def rank_one(f: GridField) -> np.ndarray:
    """Operator matrix of ``|f><f|``."""
    v = f.values.reshape(-1)
    return f.grid.dv * np.outer(v, np.conj(v))


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    atoms: Tuple[Tuple[float, GridField], ...]

    def __post_init__(self) -> None:
        atoms = tuple((float(w), f) for w, f in self.atoms)
        if not atoms:
            raise ValueError("a measure needs at least one atom")
        grids = {f.grid for _, f in atoms}
        if len(grids) != 1:
            raise ValueError("all atoms must live on the same grid")
        if any(w < 0 for w, _ in atoms):
            raise ValueError("atom weights must be nonnegative")
        total = sum(w for w, _ in atoms)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"atom weights must sum to 1 (got {total})")
        for w, f in atoms:
            if f.l2_norm() > 1.0 + _WEIGHT_TOL:
                raise ValueError(f"atom of L2 norm {f.l2_norm():.6g} lies outside the unit ball")
        object.__setattr__(self, "atoms", atoms)

    @classmethod
    def uniform(cls, fields: Sequence[GridField]) -> "DiscreteMeasure":
        return cls(tuple((1.0 / len(fields), f) for f in fields))

    @property
    def grid(self) -> Grid:
        return self.atoms[0][1].grid

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.atoms])

    def support(self) -> Tuple[Tuple[float, GridField], ...]:
        return tuple((w, f) for w, f in self.atoms if w > 0)


def mixture_hierarchy(mu: DiscreteMeasure, k: int) -> KernelProductSum:
    """``gamma^(k)`` with every slot kept as its atom vectors."""
    vectors = np.stack([f.values.reshape(-1) for _, f in mu.atoms])
    return KernelProductSum.rank_ones(mu.grid.dv, mu.weights, vectors, k)


def mixture_kernel(mu: DiscreteMeasure) -> LowRankKernel:
    """``gamma^(1)`` as a low-rank kernel."""
    return LowRankKernel.from_terms(mu.grid, [(w, f, f) for w, f in mu.atoms])


def admissibility_residual(mu: DiscreteMeasure, k: int) -> Tuple[float, float]:
    """``|| Tr_{k+1} gamma^(k+1) - gamma^(k) ||_HS`` and ``|| gamma^(k) ||_HS``."""
    lower = mixture_hierarchy(mu, k)
    traced = mixture_hierarchy(mu, k + 1).partial_trace()
    return (traced - lower).hs_norm(), lower.hs_norm()


def min_gram_eigenvalue(mu: DiscreteMeasure, k: int) -> float:
    """Smallest eigenvalue of ``sqrt(w_a w_b) <phi_a, phi_b>^k``; shares the nonzero spectrum."""
    fields = [f for _, f in mu.atoms]
    g = mu.grid
    overlaps = np.array([[g.inner(a.values, b.values) for b in fields] for a in fields])
    root = np.sqrt(mu.weights)
    gram = root[:, None] * overlaps**k * root[None, :]
    return float(np.min(np.linalg.eigvalsh(gram)))


def hermiticity_residual(gamma: KernelProductSum) -> float:
    return (gamma - gamma.adjoint()).hs_norm()


def symmetry_residual(gamma: KernelProductSum) -> float:
    """Largest HS distance to a slot-permuted copy."""
    worst = 0.0
    for order in permutations(range(gamma.k)):
        worst = max(worst, (gamma - gamma.permuted(order)).hs_norm())
    return worst


@dataclass(frozen=True)
class ChebyshevSupport:
    moments: Tuple[float, ...]
    roots: Tuple[float, ...]
    bound: float

    @property
    def monotone(self) -> bool:
        return all(a <= b * (1 + 1e-12) for a, b in zip(self.roots, self.roots[1:]))

    @property
    def within_bound(self) -> bool:
        return all(r <= self.bound * (1 + 1e-12) for r in self.roots)


def chebyshev_support(mu: DiscreteMeasure, max_order: int) -> ChebyshevSupport:
    """``H^1`` moments ``int ||phi||^{2k} dmu`` and their ``2k``-th roots.

    The roots increase to the largest ``H^1`` norm on the support, which
    bounds the support of the measure in ``H^1``.
    """
    if max_order < 1:
        raise ValueError(f"moment order must be >= 1 (got {max_order})")
    support = mu.support()
    norms = np.array([f.h1_norm() for _, f in support])
    weights = np.array([w for w, _ in support])
    bound = float(norms.max())
    moments = []
    roots = []
    for k in range(1, max_order + 1):
        # scale by the bound before powering to keep large orders finite
        scaled = float(np.sum(weights * (norms / bound) ** (2 * k))) if bound > 0 else 0.0
        moments.append(scaled * bound ** (2 * k))
        roots.append(scaled ** (1.0 / (2 * k)) * bound)
    return ChebyshevSupport(tuple(moments), tuple(roots), bound)


def h_trace(mu: DiscreteMeasure, k: int, alpha: float = 1.0) -> float:
    """``Tr | S^(k,alpha) gamma^(k) |`` with ``S = prod_j <nabla_j>^alpha <nabla'_j>^alpha``."""
    if k < 1:
        raise ValueError(f"k must be >= 1 (got {k})")
    lifted = [(w, bessel_potential(f, alpha)) for w, f in mu.atoms]
    if k == 1:
        return trace_norm(LowRankKernel.from_terms(mu.grid, [(w, f, f) for w, f in lifted]))
    # each term is a positive product, so the trace norm is the trace
    return float(sum(w * sobolev_norm(f, 0.0) ** (2 * k) for w, f in lifted))


__all__ = [
    "rank_one",
    "DiscreteMeasure",
    "mixture_hierarchy",
    "mixture_kernel",
    "admissibility_residual",
    "min_gram_eigenvalue",
    "hermiticity_residual",
    "symmetry_residual",
    "ChebyshevSupport",
    "chebyshev_support",
    "h_trace",
]
