"""Low-rank one-particle kernels and norms of separable sums.

Kernels act on ``L^2`` of the grid with the quadrature measure ``dv``. Their
*operator matrix* is ``dv * K(x, x')``; trace, trace norm and Hilbert-Schmidt
norm of the operator are those of that matrix.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple, Union

import numpy as np

from ..errors import GridTooLarge
from ..logutil import get_logger
from .grid import Grid, GridField

# Khatri-Rao folds larger than this many entries fall back to Gram matrices
FOLD_CAP = 20_000_000
# Flattened slot matrices with more entries than this are refused
DENSE_CAP = 50_000_000
# Multi-slot sums with at most this many rank-one terms are normed term by term
EXPAND_CAP = 256


@dataclass(frozen=True, eq=False)
class LowRankKernel:
    """``sum_i c_i chi_i(x) conj(psi_i(x'))`` with flattened factor rows."""

    grid: Grid
    weights: np.ndarray
    left: np.ndarray
    right: np.ndarray

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=np.complex128).reshape(-1)
        left = np.asarray(self.left, dtype=np.complex128)
        right = np.asarray(self.right, dtype=np.complex128)
        if left.size != len(w) * self.grid.size or right.size != len(w) * self.grid.size:
            raise ValueError("kernel factors do not match the grid size")
        left = left.reshape(len(w), self.grid.size)
        right = right.reshape(len(w), self.grid.size)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)

    @classmethod
    def from_terms(
        cls, grid: Grid, terms: Iterable[Tuple[complex, GridField, GridField]]
    ) -> "LowRankKernel":
        items = list(terms)
        if not items:
            empty = np.zeros((0, grid.size), dtype=np.complex128)
            return cls(grid, np.zeros(0), empty, empty)
        return cls(
            grid,
            np.array([c for c, _, _ in items], dtype=np.complex128),
            np.stack([chi.values.reshape(-1) for _, chi, _ in items]),
            np.stack([psi.values.reshape(-1) for _, _, psi in items]),
        )

    def __len__(self) -> int:
        return len(self.weights)

    def __add__(self, other: "LowRankKernel") -> "LowRankKernel":
        return LowRankKernel(
            self.grid,
            np.concatenate([self.weights, other.weights]),
            np.concatenate([self.left, other.left]),
            np.concatenate([self.right, other.right]),
        )

    def __sub__(self, other: "LowRankKernel") -> "LowRankKernel":
        return self + other.scaled(-1.0)

    def scaled(self, c: complex) -> "LowRankKernel":
        return LowRankKernel(self.grid, c * self.weights, self.left, self.right)

    def adjoint(self) -> "LowRankKernel":
        return LowRankKernel(self.grid, np.conj(self.weights), self.right, self.left)

    def operator(self) -> np.ndarray:
        """Dense operator matrix ``dv * K``."""
        return self.grid.dv * (self.left.T * self.weights) @ np.conj(self.right)

    def apply(self, f: GridField) -> GridField:
        coeff = self.grid.dv * (np.conj(self.right) @ f.values.reshape(-1))
        out = (self.weights * coeff) @ self.left
        return GridField(self.grid, out.reshape(self.grid.shape))

    def trace(self) -> complex:
        diag = np.sum(self.left * np.conj(self.right), axis=1)
        return complex(self.grid.dv * np.sum(self.weights * diag))

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        scale = max(hs_norm(self), 1e-300)
        return hs_norm(self - self.adjoint()) <= tol * scale

    def _cores(self) -> np.ndarray:
        root = np.sqrt(self.grid.dv)
        rx = np.linalg.qr(root * self.left.T, mode="r")
        ry = np.linalg.qr(root * self.right.T, mode="r")
        return (rx * self.weights) @ np.conj(ry).T


def trace_norm(kern: LowRankKernel) -> float:
    """Exact trace norm from QR factors of the term matrices and a small SVD."""
    if len(kern) == 0:
        return 0.0
    return float(np.sum(np.linalg.svd(kern._cores(), compute_uv=False)))


def hs_norm(kern: LowRankKernel) -> float:
    if len(kern) == 0:
        return 0.0
    return float(np.linalg.norm(kern._cores()))


def dense_trace_norm(kern: LowRankKernel) -> float:
    return float(np.sum(np.linalg.svd(kern.operator(), compute_uv=False)))


def _r_factor(cols: np.ndarray) -> np.ndarray:
    return np.linalg.qr(cols, mode="r")


def _gram_hadamard_norms(weights: np.ndarray, factors: Sequence[np.ndarray]) -> np.ndarray:
    gram = np.ones((weights.shape[1], weights.shape[1]), dtype=np.complex128)
    for f in factors:
        gram = gram * (np.conj(f).T @ f)
    values = np.real(np.einsum("sp,pq,sq->s", np.conj(weights), gram, weights))
    return np.sqrt(np.maximum(values, 0.0))


def separable_sum_norms(weight_sets: np.ndarray, factors: Sequence[np.ndarray]) -> np.ndarray:
    """Euclidean norms of ``sum_p w_p (x)_j factors[j][:, p]`` for each row ``w``.

    Each factor is a ``(D_j, P)`` column matrix. Orthogonal factors are peeled
    off by QR so the sums are formed in at most ``P``-dimensional coordinates
    and cancellation between terms costs no precision. All weight rows share
    one factorization.
    """
    w = np.atleast_2d(np.asarray(weight_sets, dtype=np.complex128))
    if not factors:
        raise ValueError("need at least one factor")
    if w.shape[1] == 0:
        return np.zeros(len(w))
    if len(factors) == 1:
        return np.linalg.norm(factors[0] @ w.T, axis=0)
    rs = [_r_factor(f) for f in factors]
    acc = rs[0]
    for r in rs[1:-1]:
        if acc.shape[0] * r.shape[0] * w.shape[1] > FOLD_CAP:
            get_logger().info("separable norm: fold too large, using Gram matrices")
            return _gram_hadamard_norms(w, factors)
        acc = _r_factor((acc[:, None, :] * r[None, :, :]).reshape(-1, w.shape[1]))
    return np.array([np.linalg.norm((acc * row) @ rs[-1].T) for row in w])


def separable_sum_norm(weights: np.ndarray, factors: Sequence[np.ndarray]) -> float:
    return float(separable_sum_norms(np.asarray(weights)[None], factors)[0])


@dataclass(frozen=True, eq=False)
class TensorSum:
    """``sum_p w_p A_{p,1} (x) ... (x) A_{p,k}`` of dense operator matrices.

    ``factors[j]`` has shape ``(P, N, N)``.
    """

    weights: np.ndarray
    factors: Tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=np.complex128).reshape(-1)
        facs = tuple(np.asarray(f, dtype=np.complex128) for f in self.factors)
        if not facs:
            raise ValueError("a tensor sum needs at least one slot")
        for f in facs:
            if f.ndim != 3 or f.shape[0] != len(w) or f.shape[1] != f.shape[2]:
                raise ValueError(f"slot matrices must have shape ({len(w)}, N, N), got {f.shape}")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "factors", facs)

    @classmethod
    def product(cls, mats: Sequence[np.ndarray], weight: complex = 1.0) -> "TensorSum":
        return cls(np.array([weight]), tuple(np.asarray(m)[None] for m in mats))

    @property
    def k(self) -> int:
        return len(self.factors)

    def __len__(self) -> int:
        return len(self.weights)

    def __add__(self, other: "TensorSum") -> "TensorSum":
        if other.k != self.k:
            raise ValueError(f"cannot add {self.k}- and {other.k}-particle sums")
        return TensorSum(
            np.concatenate([self.weights, other.weights]),
            tuple(np.concatenate([a, b]) for a, b in zip(self.factors, other.factors)),
        )

    def __sub__(self, other: "TensorSum") -> "TensorSum":
        return self + other.scaled(-1.0)

    def scaled(self, c: complex) -> "TensorSum":
        return TensorSum(c * self.weights, self.factors)

    def collapsed(self) -> "TensorSum":
        """One-particle sums fold into a single matrix; others are returned as is."""
        if self.k != 1 or len(self) <= 1:
            return self
        total = np.tensordot(self.weights, self.factors[0], axes=1)
        return TensorSum.product([total])

    def permuted(self, order: Sequence[int]) -> "TensorSum":
        return TensorSum(self.weights, tuple(self.factors[i] for i in order))

    def adjoint(self) -> "TensorSum":
        return TensorSum(
            np.conj(self.weights), tuple(np.conj(np.swapaxes(f, 1, 2)) for f in self.factors)
        )

    def partial_trace(self) -> "TensorSum":
        """Trace out the last slot."""
        if self.k < 2:
            raise ValueError("partial trace needs at least two slots")
        traces = np.trace(self.factors[-1], axis1=1, axis2=2)
        return TensorSum(self.weights * traces, self.factors[:-1])

    def trace(self) -> complex:
        traces = np.ones(len(self), dtype=np.complex128)
        for f in self.factors:
            traces = traces * np.trace(f, axis1=1, axis2=2)
        return complex(np.sum(self.weights * traces))

    def flat_factors(self) -> List[np.ndarray]:
        """Slot matrices flattened into ``(N*N, P)`` columns."""
        return [f.reshape(len(self), -1).T for f in self.factors]

    def norm_terms(self, rows: np.ndarray) -> Tuple[np.ndarray, List[np.ndarray]]:
        return np.atleast_2d(rows), self.flat_factors()

    def hs_norm(self) -> float:
        return separable_sum_norm(self.weights, self.flat_factors())


def _pad_terms(a: np.ndarray, width: int) -> np.ndarray:
    extra = width - a.shape[1]
    if extra == 0:
        return a
    pad = [(0, 0)] * a.ndim
    pad[1] = (0, extra)
    return np.pad(a, pad)


def _recompress(
    signs: np.ndarray, left: np.ndarray, right: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The operator ``sum_t s_t |l_t><r_t|`` rewritten with at most ``N`` orthogonal terms."""
    ql, rl = np.linalg.qr(left.T)
    qr, rr = np.linalg.qr(right.T)
    u, sv, vh = np.linalg.svd((rl * signs) @ np.conj(rr).T)
    return sv.astype(np.complex128), (ql @ u).T, (qr @ np.conj(vh).T).T


@dataclass(frozen=True, eq=False)
class KernelProductSum:
    """``sum_p w_p K_{p,1} (x) ... (x) K_{p,k}`` with low-rank slot kernels.

    Slot ``j`` of node ``p`` is the operator
    ``dv * sum_t signs[j][p, t] |left[j][p, t]><right[j][p, t]|``. ``signs[j]``
    has shape ``(P, T_j)``; ``left[j]`` and ``right[j]`` have shape
    ``(P, T_j, N)``. Zero signs pad slots that had fewer terms. No ``N x N``
    matrix is formed except for norms of many-term sums with several slots.
    """

    dv: float
    weights: np.ndarray
    signs: Tuple[np.ndarray, ...]
    left: Tuple[np.ndarray, ...]
    right: Tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=np.complex128).reshape(-1)
        signs = tuple(np.asarray(s, dtype=np.complex128) for s in self.signs)
        left = tuple(np.asarray(a, dtype=np.complex128) for a in self.left)
        right = tuple(np.asarray(b, dtype=np.complex128) for b in self.right)
        if not signs or not len(signs) == len(left) == len(right):
            raise ValueError("every slot needs signs, left and right factors")
        n = left[0].shape[-1]
        for s, a, b in zip(signs, left, right):
            if s.ndim != 2 or s.shape[0] != len(w):
                raise ValueError(f"slot signs must have shape ({len(w)}, T), got {s.shape}")
            if a.shape != s.shape + (n,) or b.shape != a.shape:
                raise ValueError(f"slot factors must have shape {s.shape + (n,)}")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "signs", signs)
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)

    @classmethod
    def rank_ones(
        cls, dv: float, weights: np.ndarray, vectors: np.ndarray, k: int
    ) -> "KernelProductSum":
        """``sum_p w_p (|v_p><v_p|)^(x)k`` for rows ``v_p`` of ``vectors``."""
        if k < 1:
            raise ValueError(f"k must be >= 1 (got {k})")
        v = np.asarray(vectors, dtype=np.complex128)
        v = v.reshape(v.shape[0], 1, -1)
        ones = np.ones(v.shape[:2])
        return cls(dv, weights, (ones,) * k, (v,) * k, (v,) * k)

    @classmethod
    def join(cls, parts: Sequence["KernelProductSum"]) -> "KernelProductSum":
        if not parts:
            raise ValueError("nothing to concatenate")
        k = parts[0].k
        if any(p.k != k for p in parts):
            raise ValueError("cannot concatenate sums with different particle numbers")
        if len({p.n for p in parts}) != 1 or len({p.dv for p in parts}) != 1:
            raise ValueError("cannot concatenate sums on different grids")
        widths = [max(p.signs[j].shape[1] for p in parts) for j in range(k)]

        def stacked(attr: str, j: int) -> np.ndarray:
            return np.concatenate([_pad_terms(getattr(p, attr)[j], widths[j]) for p in parts])

        return cls(
            parts[0].dv,
            np.concatenate([p.weights for p in parts]),
            tuple(stacked("signs", j) for j in range(k)),
            tuple(stacked("left", j) for j in range(k)),
            tuple(stacked("right", j) for j in range(k)),
        )

    @property
    def k(self) -> int:
        return len(self.signs)

    @property
    def n(self) -> int:
        return int(self.left[0].shape[-1])

    def __len__(self) -> int:
        return len(self.weights)

    def __add__(self, other: "KernelProductSum") -> "KernelProductSum":
        if other.k != self.k:
            raise ValueError(f"cannot add {self.k}- and {other.k}-particle sums")
        return KernelProductSum.join([self, other])

    def __sub__(self, other: "KernelProductSum") -> "KernelProductSum":
        return self + other.scaled(-1.0)

    def scaled(self, c: complex) -> "KernelProductSum":
        return KernelProductSum(self.dv, c * self.weights, self.signs, self.left, self.right)

    def permuted(self, order: Sequence[int]) -> "KernelProductSum":
        return KernelProductSum(
            self.dv,
            self.weights,
            tuple(self.signs[i] for i in order),
            tuple(self.left[i] for i in order),
            tuple(self.right[i] for i in order),
        )

    def adjoint(self) -> "KernelProductSum":
        return KernelProductSum(
            self.dv,
            np.conj(self.weights),
            tuple(np.conj(s) for s in self.signs),
            self.right,
            self.left,
        )

    def slot_traces(self, j: int) -> np.ndarray:
        """Trace of slot ``j`` at every node."""
        return self.dv * np.einsum(
            "pt,ptn,ptn->p", self.signs[j], self.left[j], np.conj(self.right[j])
        )

    def partial_trace(self) -> "KernelProductSum":
        """Trace out the last slot."""
        if self.k < 2:
            raise ValueError("partial trace needs at least two slots")
        return KernelProductSum(
            self.dv,
            self.weights * self.slot_traces(self.k - 1),
            self.signs[:-1],
            self.left[:-1],
            self.right[:-1],
        )

    def trace(self) -> complex:
        traces = np.ones(len(self), dtype=np.complex128)
        for j in range(self.k):
            traces = traces * self.slot_traces(j)
        return complex(np.sum(self.weights * traces))

    def slot_operators(self, j: int) -> np.ndarray:
        """Operator matrices ``(P, N, N)`` of slot ``j``."""
        return self.dv * np.einsum(
            "pt,ptn,ptm->pnm", self.signs[j], self.left[j], np.conj(self.right[j])
        )

    def to_dense(self) -> TensorSum:
        return TensorSum(self.weights, tuple(self.slot_operators(j) for j in range(self.k)))

    def collapsed(self) -> "KernelProductSum":
        """One-particle sums merge into one node; past ``N`` terms they are recompressed."""
        if self.k != 1 or len(self) == 0:
            return self
        signs = (self.weights[:, None] * self.signs[0]).reshape(-1)
        left = self.left[0].reshape(-1, self.n)
        right = self.right[0].reshape(-1, self.n)
        if len(signs) > self.n:
            signs, left, right = _recompress(signs, left, right)
        return KernelProductSum(self.dv, np.ones(1), (signs[None],), (left[None],), (right[None],))

    def norm_terms(self, rows: np.ndarray) -> Tuple[np.ndarray, List[np.ndarray]]:
        """Weight rows and factor columns for :func:`separable_sum_norms`.

        One-particle and few-term sums expand into rank-one terms with two
        ``N``-vector factors per slot. Other sums use flattened slot matrices.
        """
        rows = np.atleast_2d(np.asarray(rows, dtype=np.complex128))
        widths = [s.shape[1] for s in self.signs]
        if self.k == 1 or len(self) * math.prod(widths) <= EXPAND_CAP:
            combos = list(itertools.product(*(range(t) for t in widths)))
            coeff = np.concatenate(
                [
                    np.prod([self.signs[j][:, t] for j, t in enumerate(c)], axis=0)
                    for c in combos
                ]
            )
            root = np.sqrt(self.dv)
            factors: List[np.ndarray] = []
            for j in range(self.k):
                factors.append(
                    root * np.concatenate([self.left[j][:, c[j]] for c in combos]).T
                )
                factors.append(
                    root * np.conj(np.concatenate([self.right[j][:, c[j]] for c in combos])).T
                )
            return np.tile(rows, (1, len(combos))) * coeff, factors
        if self.n * self.n * len(self) > DENSE_CAP:
            raise GridTooLarge(
                f"{len(self)} slot matrices of {self.n}x{self.n} entries exceed the dense cap"
            )
        flat = [self.slot_operators(j).reshape(len(self), -1).T for j in range(self.k)]
        return rows, flat

    def hs_norm(self) -> float:
        rows, factors = self.norm_terms(self.weights[None])
        return float(separable_sum_norms(rows, factors)[0])


SlotSum = Union[TensorSum, KernelProductSum]


def hs_distance(a: SlotSum, b: SlotSum) -> float:
    return (a - b).hs_norm()  # type: ignore[operator]


def relative_distance(a: SlotSum, b: SlotSum) -> Tuple[float, float]:
    """``||a - b||_HS`` and ``max(||a||_HS, ||b||_HS)`` from one shared factorization."""
    if a.k != b.k:
        raise ValueError(f"cannot compare {a.k}- and {b.k}-particle sums")
    if type(a) is not type(b):
        raise TypeError("cannot compare dense and low-rank sums")
    joined = a + b  # type: ignore[operator]
    za, zb = np.zeros(len(a), dtype=np.complex128), np.zeros(len(b), dtype=np.complex128)
    sets = np.stack(
        [
            np.concatenate([a.weights, -b.weights]),
            np.concatenate([a.weights, zb]),
            np.concatenate([za, b.weights]),
        ]
    )
    rows, factors = joined.norm_terms(sets)
    diff, na, nb = separable_sum_norms(rows, factors)
    return float(diff), float(max(na, nb))


def concat(parts: Sequence[SlotSum]) -> SlotSum:
    if not parts:
        raise ValueError("nothing to concatenate")
    if all(isinstance(p, KernelProductSum) for p in parts):
        return KernelProductSum.join(parts)  # type: ignore[arg-type]
    if not all(isinstance(p, TensorSum) for p in parts):
        raise TypeError("cannot concatenate dense and low-rank sums")
    if len({p.k for p in parts}) != 1:
        raise ValueError("cannot concatenate sums with different particle numbers")
    dense: Sequence[TensorSum] = parts  # type: ignore[assignment]
    return TensorSum(
        np.concatenate([p.weights for p in dense]),
        tuple(np.concatenate([p.factors[j] for p in dense]) for j in range(dense[0].k)),
    )


__all__ = [
    "FOLD_CAP",
    "DENSE_CAP",
    "EXPAND_CAP",
    "LowRankKernel",
    "trace_norm",
    "hs_norm",
    "dense_trace_norm",
    "separable_sum_norm",
    "separable_sum_norms",
    "TensorSum",
    "KernelProductSum",
    "SlotSum",
    "hs_distance",
    "relative_distance",
    "concat",
]
