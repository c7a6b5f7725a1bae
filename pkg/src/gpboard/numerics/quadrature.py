"""Iterated Gauss-Legendre quadrature over ordered time simplices.

The ordered region ``t >= s_1 >= s_2 >= ... >= s_r >= 0`` is parametrized by
``s_1 = t x_1, s_2 = s_1 x_2, ...`` with each ``x_i`` on a Gauss-Legendre rule
over ``[0, 1]``. A permutation ``pi`` places the sorted times into columns:
column ``pi(i)`` receives ``s_i``.
"""
from __future__ import annotations

import math
from typing import Callable, Optional, Sequence, Tuple, TypeVar

import numpy as np

from ..errors import DepthExceeded

DEFAULT_ORDER = 8
DEFAULT_MAX_DEPTH = 4

T = TypeVar("T")


def gauss_legendre_nodes(q: int, a: float = 0.0, b: float = 1.0) -> Tuple[np.ndarray, np.ndarray]:
    if q < 1:
        raise ValueError(f"quadrature order must be >= 1 (got {q})")
    x, w = np.polynomial.legendre.leggauss(q)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def simplex_nodes(r: int, t: float, q: int = DEFAULT_ORDER) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes ``(q**r, r)`` in decreasing order along each row, and weights."""
    if r < 0:
        raise ValueError(f"depth must be nonnegative (got {r})")
    if r == 0:
        return np.zeros((1, 0)), np.ones(1)
    x, w = gauss_legendre_nodes(q)
    grids = np.meshgrid(*([x] * r), indexing="ij")
    wgrids = np.meshgrid(*([w] * r), indexing="ij")
    xs = np.stack([g.reshape(-1) for g in grids], axis=1)
    weights = np.prod(np.stack([g.reshape(-1) for g in wgrids], axis=1), axis=1)
    sorted_times = t * np.cumprod(xs, axis=1)
    # ds_1 ... ds_r = t * s_1 * ... * s_{r-1} dx_1 ... dx_r
    jac = t * np.prod(sorted_times[:, :-1], axis=1) if r > 1 else np.full(len(xs), t)
    return sorted_times, weights * jac


def column_times(sorted_times: np.ndarray, pi: Optional[Sequence[int]] = None) -> np.ndarray:
    """Reorder sorted simplex times into column order for the permutation ``pi``."""
    r = sorted_times.shape[1]
    if pi is None:
        return sorted_times.copy()
    if sorted(pi) != list(range(1, r + 1)):
        raise ValueError(f"{tuple(pi)} is not a permutation of 1..{r}")
    out = np.empty_like(sorted_times)
    for i, col in enumerate(pi):
        out[:, col - 1] = sorted_times[:, i]
    return out


def simplex_integrate(
    f: Callable[[np.ndarray], T],
    r: int,
    t: float,
    pi: Optional[Sequence[int]] = None,
    q: int = DEFAULT_ORDER,
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> T:
    """Integrate ``f(times)`` over the region of ``pi``; ``times`` is in column order."""
    if r > max_depth:
        raise DepthExceeded(f"depth {r} exceeds the configured maximum {max_depth}")
    nodes, weights = simplex_nodes(r, t, q)
    times = column_times(nodes, pi)
    total = None
    for row, w in zip(times, weights):
        term = w * f(row)
        total = term if total is None else total + term
    return total  # type: ignore[return-value]


def simplex_volume(r: int, t: float) -> float:
    return t**r / math.factorial(r)


def monte_carlo_simplex(
    f: Callable[[np.ndarray], np.ndarray],
    r: int,
    t: float,
    samples: int,
    rng: Optional[np.random.Generator] = None,
) -> Tuple[float, float]:
    """Estimate and standard error from sorted uniform samples; ``f`` is vectorized over rows."""
    gen = rng if rng is not None else np.random.default_rng(0)
    draws = -np.sort(-gen.uniform(0.0, t, size=(samples, r)), axis=1)
    values = np.asarray(f(draws), dtype=float)
    vol = simplex_volume(r, t)
    return float(vol * values.mean()), float(vol * values.std(ddof=1) / math.sqrt(samples))


__all__ = [
    "DEFAULT_ORDER",
    "DEFAULT_MAX_DEPTH",
    "gauss_legendre_nodes",
    "simplex_nodes",
    "column_times",
    "simplex_integrate",
    "simplex_volume",
    "monte_carlo_simplex",
]
