"""Evaluation of symbolic kernel expressions on a grid.

Evaluation is batched over a leading node axis: the bound ``phi`` has shape
``(P, *grid.shape)`` and ``times`` has shape ``(P, R+1)`` with column 0 the
horizon. Factor values are memoized per evaluator, so subexpressions shared
between terms, slots and trees are computed once per batch.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from ..errors import MissingTimeIndex, UnboundSymbol
from ..kernels import PHI, PSI_TILDE, FactorExpr, OneParticleKernelExpr, Product
from .grid import Grid, GridField
from .lowrank import KernelProductSum, LowRankKernel

AUTO = "auto"


@dataclass(frozen=True, eq=False)
class Binding:
    """Fields bound to the base symbols; ``psi_tilde="auto"`` means ``|phi|^2 phi``."""

    phi: Optional[np.ndarray]
    psi_tilde: Union[np.ndarray, str, None] = AUTO

    @classmethod
    def of(cls, phi: GridField, psi_tilde: Union[GridField, str, None] = AUTO) -> "Binding":
        psi = psi_tilde.values[None] if isinstance(psi_tilde, GridField) else psi_tilde
        return cls(phi.values[None], psi)


@dataclass(frozen=True, eq=False)
class BatchedKernel:
    grid: Grid
    weights: np.ndarray
    left: np.ndarray
    right: np.ndarray

    @property
    def batch(self) -> int:
        return int(self.left.shape[0])

    def operators(self) -> np.ndarray:
        """Operator matrices ``(P, N, N)``."""
        mats = np.einsum("ptn,t,ptm->pnm", self.left, self.weights, np.conj(self.right))
        return self.grid.dv * mats

    def at(self, p: int) -> LowRankKernel:
        return LowRankKernel(self.grid, self.weights, self.left[p], self.right[p])


def product_sum(kernels: Sequence[BatchedKernel], weights: np.ndarray) -> KernelProductSum:
    """Node-wise tensor product of batched slot kernels, still in factor form."""
    if not kernels:
        raise ValueError("need at least one slot kernel")
    signs = tuple(np.broadcast_to(bk.weights, (bk.batch, len(bk.weights))) for bk in kernels)
    return KernelProductSum(
        kernels[0].grid.dv,
        weights,
        signs,
        tuple(bk.left for bk in kernels),
        tuple(bk.right for bk in kernels),
    )


class Evaluator:
    def __init__(self, grid: Grid, binding: Binding, times: np.ndarray) -> None:
        self.grid = grid
        self.times = np.atleast_2d(np.asarray(times, dtype=float))
        self.binding = binding
        self._bases: Dict[Product, np.ndarray] = {}
        self._memo: Dict[FactorExpr, np.ndarray] = {}

    @property
    def batch(self) -> int:
        return int(self.times.shape[0])

    def _symbol(self, name: str) -> np.ndarray:
        phi = self.binding.phi
        if name == PHI:
            if phi is None:
                raise UnboundSymbol(PHI)
            return np.broadcast_to(phi, (self.batch,) + self.grid.shape)
        psi = self.binding.psi_tilde
        if psi is None:
            raise UnboundSymbol(PSI_TILDE)
        if isinstance(psi, str):
            if psi != AUTO:
                raise ValueError(f"unknown binding mode {psi!r}")
            base = self._symbol(PHI)
            return np.abs(base) ** 2 * base
        return np.broadcast_to(psi, (self.batch,) + self.grid.shape)

    def _base(self, f: FactorExpr) -> np.ndarray:
        if not isinstance(f.base, Product):
            return self._symbol(f.base)
        key = f.base
        if key not in self._bases:
            out = np.ones((self.batch,) + self.grid.shape, dtype=np.complex128)
            for child, conj in f.base.factors:
                v = self.factor(child)
                out = out * (np.conj(v) if conj else v)
            self._bases[key] = out
        return self._bases[key]

    def _elapsed(self, f: FactorExpr) -> Optional[np.ndarray]:
        if not f.chain:
            return None
        width = self.times.shape[1]
        total = np.zeros(self.batch)
        for a, b in f.chain:
            for idx in (a, b):
                if not 0 <= idx < width:
                    raise MissingTimeIndex(f"time index {idx} not in 0..{width - 1}")
            total = total + self.times[:, a] - self.times[:, b]
        return total

    def factor(self, f: FactorExpr) -> np.ndarray:
        cached = self._memo.get(f)
        if cached is not None:
            return cached
        base = self._base(f)
        elapsed = self._elapsed(f)
        if elapsed is None:
            out = np.asarray(base, dtype=np.complex128)
        else:
            # propagators commute, so a chain is one multiplier
            out = self.grid.ifft(self.grid.fft(base) * self.grid.propagator(elapsed))
        self._memo[f] = out
        return out

    def kernel(self, expr: OneParticleKernelExpr) -> BatchedKernel:
        n = self.grid.size
        left = np.stack([self.factor(t.left).reshape(self.batch, n) for t in expr.terms], axis=1)
        right = np.stack([self.factor(t.right).reshape(self.batch, n) for t in expr.terms], axis=1)
        weights = np.array([t.sign for t in expr.terms], dtype=np.complex128)
        return BatchedKernel(self.grid, weights, left, right)


def evaluate(
    expr: OneParticleKernelExpr,
    grid: Grid,
    binding: Binding,
    times: Sequence[float],
) -> LowRankKernel:
    """Concrete kernel of ``expr`` at one set of times."""
    return Evaluator(grid, binding, np.asarray(times, dtype=float)[None]).kernel(expr).at(0)


def evaluate_many(
    exprs: Sequence[OneParticleKernelExpr],
    grid: Grid,
    binding: Binding,
    times: np.ndarray,
) -> List[BatchedKernel]:
    ev = Evaluator(grid, binding, times)
    return [ev.kernel(e) for e in exprs]


__all__ = [
    "AUTO",
    "Binding",
    "BatchedKernel",
    "Evaluator",
    "evaluate",
    "evaluate_many",
    "product_sum",
]
