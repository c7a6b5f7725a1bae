"""Numerical certification of the exact identities of the expansion.

Integrands are evaluated in the interaction picture: the rank-one input at
the last column's time ``t_r`` is ``U(t_r) phi0`` (or the NLS state
``S_{t_r} phi0`` for Duhamel remainders), so an acceptable move maps the
integrand of one side onto the other after swapping two time coordinates.
Both sides are integrated on the same sorted simplex nodes, placed into
columns by each side's permutation.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..boardgame import (
    CollapseMap,
    EchelonClass,
    apply_move,
    enumerate_collapse_maps,
    identity_permutation,
    move_applicable,
    partition_classes,
)
from ..errors import GridTooLarge, InapplicableMove
from ..kernels import ForestExpansion, assemble_jk
from ..logutil import get_logger
from .definetti import DiscreteMeasure, rank_one
from .evaluate import Binding, Evaluator, product_sum
from .grid import Grid, GridField, nls_trajectory, random_field, sobolev_norm
from .lowrank import (
    DENSE_CAP,
    KernelProductSum,
    LowRankKernel,
    SlotSum,
    TensorSum,
    dense_trace_norm,
    relative_distance,
    trace_norm,
)
from .quadrature import DEFAULT_ORDER, column_times, gauss_legendre_nodes, simplex_nodes

DEFAULT_CHUNK = 512
# Values held by one memoized factor batch, nodes times grid points
BATCH_ENTRIES = 2**19

LeafState = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ResidualReport:
    check: str
    params: Dict[str, Any]
    residual: float
    reference: float
    tolerance: float
    extra: Dict[str, Any] = field(default_factory=dict)

    @property
    def relative(self) -> float:
        return self.residual / self.reference if self.reference > 0 else self.residual

    @property
    def passed(self) -> bool:
        return bool(self.relative < self.tolerance)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "check": self.check,
            "params": dict(self.params),
            "residual": self.residual,
            "reference": self.reference,
            "relative": self.relative,
            "tolerance": self.tolerance,
            "pass": self.passed,
            **self.extra,
        }


@lru_cache(maxsize=256)
def _expansion(m: CollapseMap) -> ForestExpansion:
    return assemble_jk(m)


def free_leaves(phi0: GridField) -> LeafState:
    """``t_r -> U(t_r) phi0`` for a batch of times."""
    g = phi0.grid

    def state(times: np.ndarray) -> np.ndarray:
        return g.ifft(phi0.spectrum * g.propagator(times))

    return state


def nls_leaves(phi0: GridField, lam: float, dt: float) -> LeafState:
    """``t_r -> S_{t_r} phi0``; states are evolved once per distinct time."""
    cache: Dict[float, np.ndarray] = {}

    def state(times: np.ndarray) -> np.ndarray:
        missing = sorted({float(s) for s in times} - set(cache))
        for s, f in zip(missing, nls_trajectory(phi0, lam, missing, dt)):
            cache[s] = f.values
        return np.stack([cache[float(s)] for s in times])

    return state


def chunk_for(grid: Grid, chunk: int) -> int:
    """Nodes per batch, lowered so a factor batch holds at most ``BATCH_ENTRIES`` values."""
    return max(1, min(chunk, BATCH_ENTRIES // grid.size))


def integrate_map(
    m: CollapseMap,
    grid: Grid,
    leaves: LeafState,
    t: float,
    pi: Optional[Sequence[int]] = None,
    q: int = DEFAULT_ORDER,
    chunk: int = DEFAULT_CHUNK,
    weight: complex = 1.0,
) -> KernelProductSum:
    """``weight * int J^k(m; t_1..t_r)`` over the ordered region of ``pi``.

    Slot kernels stay in factor form; one-particle sums are recompressed after
    every batch.
    """
    expansion = _expansion(m)
    nodes, w = simplex_nodes(m.r, t, q)
    cols = column_times(nodes, pi if pi is not None else identity_permutation(m.r))
    times = np.hstack([np.full((len(cols), 1), float(t)), cols])
    step = chunk_for(grid, chunk)
    parts: List[KernelProductSum] = []
    for start in range(0, len(times), step):
        tt = times[start : start + step]
        ev = Evaluator(grid, Binding(leaves(tt[:, m.r])), tt)
        kernels = [ev.kernel(f.expr) for f in expansion.factors]
        parts.append(product_sum(kernels, weight * w[start : start + step]))
        if m.k == 1:
            parts = [KernelProductSum.join(parts).collapsed()]
    return KernelProductSum.join(parts).collapsed()


def _residual(
    check: str, params: Dict[str, Any], a: SlotSum, b: SlotSum, tol: float
) -> ResidualReport:
    diff, ref = relative_distance(a, b)
    report = ResidualReport(check, params, diff, ref, tol)
    if not report.passed:
        get_logger().warning(
            "%s failed: relative residual %.3e (tol %.1e)", check, report.relative, tol
        )
    return report


def verify_move_invariance(
    m: CollapseMap,
    col: int,
    grid: Grid,
    phi0: GridField,
    t: float,
    q: int = DEFAULT_ORDER,
    tol: float = 1e-6,
    chunk: int = DEFAULT_CHUNK,
) -> ResidualReport:
    if not move_applicable(m, col):
        raise InapplicableMove(f"no acceptable move at column {col} for rho={list(m.rho)}")
    pi = identity_permutation(m.r)
    moved, moved_pi = apply_move(m, pi, col)
    leaves = free_leaves(phi0)
    left = integrate_map(m, grid, leaves, t, pi, q, chunk)
    right = integrate_map(moved, grid, leaves, t, moved_pi, q, chunk)
    params = {"k": m.k, "rho": list(m.rho), "col": col, "moved": list(moved.rho), "t": t, "q": q}
    return _residual("moves", params, left, right, tol)


def _class_sides(
    cls: EchelonClass, grid: Grid, leaves: LeafState, t: float, q: int, chunk: int
) -> Tuple[KernelProductSum, KernelProductSum]:
    left = KernelProductSum.join(
        [integrate_map(mem.source, grid, leaves, t, None, q, chunk) for mem in cls.members]
    )
    right = KernelProductSum.join(
        [integrate_map(cls.form, grid, leaves, t, mem.pi, q, chunk) for mem in cls.members]
    )
    return left.collapsed(), right.collapsed()


def verify_resummation(
    cls: EchelonClass,
    grid: Grid,
    phi0: GridField,
    t: float,
    q: int = DEFAULT_ORDER,
    tol: float = 1e-6,
    chunk: int = DEFAULT_CHUNK,
) -> ResidualReport:
    """Class members on the standard simplex against the echelon integrand on the class domain."""
    left, right = _class_sides(cls, grid, free_leaves(phi0), t, q, chunk)
    params = {"k": cls.form.k, "form": list(cls.form.rho), "members": len(cls), "t": t, "q": q}
    return _residual("resum", params, left, right, tol)


def verify_full_sum(
    k: int,
    r: int,
    grid: Grid,
    phi0: GridField,
    t: float,
    q: int = DEFAULT_ORDER,
    tol: float = 1e-6,
    chunk: int = DEFAULT_CHUNK,
) -> ResidualReport:
    """Direct sum over every map against the sum of the class-domain integrals."""
    leaves = free_leaves(phi0)
    direct = KernelProductSum.join(
        [integrate_map(m, grid, leaves, t, None, q, chunk) for m in enumerate_collapse_maps(k, r)]
    )
    resummed = KernelProductSum.join(
        [
            integrate_map(cls.form, grid, leaves, t, pi, q, chunk)
            for cls in partition_classes(k, r).values()
            for pi in cls.perms
        ]
    )
    params = {"k": k, "r": r, "t": t, "q": q}
    return _residual("full-sum", params, direct.collapsed(), resummed.collapsed(), tol)


def _propagate_columns(grid: Grid, mat: np.ndarray, dt: float) -> np.ndarray:
    n = grid.size
    cols = mat.T.reshape((n,) + grid.shape)
    out = grid.ifft(grid.fft(cols) * grid.propagator(dt))
    return out.reshape(n, n).T


def conjugate_by_propagator(grid: Grid, mat: np.ndarray, dt: float) -> np.ndarray:
    """``U(dt) A U(dt)^*`` for an operator matrix ``A``."""
    if dt == 0:
        return mat
    left = _propagate_columns(grid, mat, dt)
    return np.conj(_propagate_columns(grid, np.conj(left.T), dt)).T


def dense_contract(kept: np.ndarray, traced: np.ndarray, dv: float) -> np.ndarray:
    """``B(A (x) C) = A(x;x') [C(x;x) - C(x';x')]`` on operator matrices."""
    diag = np.diag(traced) / dv
    return kept * (diag[:, None] - diag[None, :])


def dense_direct(
    m: CollapseMap, grid: Grid, phi: GridField, times: Sequence[float]
) -> List[np.ndarray]:
    """Step-by-step construction on dense one-particle matrices, no trees involved."""
    slots = [rank_one(phi)] * (m.k + m.r)
    for col in range(m.r, 0, -1):
        row = m.row(col)
        slots[row - 1] = dense_contract(slots[row - 1], slots[-1], grid.dv)
        slots.pop()
        dt = float(times[col - 1] - times[col])
        slots = [conjugate_by_propagator(grid, s, dt) for s in slots]
    return slots


def verify_factorization(
    m: CollapseMap,
    grid: Grid,
    phi0: GridField,
    times: Sequence[float],
    tol: float = 1e-10,
) -> ResidualReport:
    """Tree-assembled product against the dense left-to-right construction.

    ``times`` holds the horizon followed by one time per column.
    """
    times_arr = np.asarray(times, dtype=float)
    if times_arr.shape != (m.r + 1,):
        raise ValueError(
            f"need {m.r + 1} times (horizon and one per column), got {times_arr.shape}"
        )
    if grid.size**2 * (m.k + m.r) > DENSE_CAP:
        raise GridTooLarge(
            f"dense construction needs {m.k + m.r} matrices of {grid.size}x{grid.size} entries"
        )
    leaf = free_leaves(phi0)(times_arr[m.r : m.r + 1])[0]
    ev = Evaluator(grid, Binding(leaf[None]), times_arr[None])
    tree = TensorSum.product([ev.kernel(f.expr).operators()[0] for f in _expansion(m).factors])
    dense = TensorSum.product(dense_direct(m, grid, GridField(grid, leaf), times_arr))
    params = {"k": m.k, "rho": list(m.rho), "times": [float(s) for s in times_arr]}
    return _residual("factorize", params, tree, dense, tol)


def evolved_hierarchy(
    mu: DiscreteMeasure, k: int, lam: float, t: float, dt: float
) -> KernelProductSum:
    states = [nls_trajectory(f, lam, [t], dt)[0] for _, f in mu.atoms]
    vectors = np.stack([s.values.reshape(-1) for s in states])
    return KernelProductSum.rank_ones(mu.grid.dv, mu.weights, vectors, k)


def verify_duhamel_expansion(
    mu: DiscreteMeasure,
    k: int,
    r: int,
    lam: float,
    t: float,
    dt: float,
    q: int = 16,
    tol: float = 1e-5,
    chunk: int = DEFAULT_CHUNK,
) -> ResidualReport:
    """``gamma^(k)(t)`` of the NLS mixture against its ``r``-fold Duhamel expansion.

    Terms of depth ``j < r`` integrate the freely evolved mixture; the depth
    ``r`` remainder integrates the NLS-evolved mixture at the last time.
    """
    if r < 1:
        raise ValueError(f"expansion depth must be >= 1 (got {r})")
    g = mu.grid
    target = evolved_hierarchy(mu, k, lam, t, dt)
    free0 = np.stack([free_leaves(f)(np.array([t]))[0].reshape(-1) for _, f in mu.atoms])
    parts = [KernelProductSum.rank_ones(g.dv, mu.weights, free0, k)]
    coupling = -1j * lam
    for depth in range(1, r + 1):
        for m in enumerate_collapse_maps(k, depth):
            for w, f in mu.atoms:
                leaves = free_leaves(f) if depth < r else nls_leaves(f, lam, dt)
                parts.append(integrate_map(m, g, leaves, t, None, q, chunk, w * coupling**depth))
    expansion = KernelProductSum.join(parts).collapsed()
    check = "mild" if r == 1 else "duhamel"
    params = {"k": k, "r": r, "lam": lam, "t": t, "dt": dt, "q": q, "atoms": len(mu.atoms)}
    return _residual(check, params, target.collapsed(), expansion, tol)


def verify_mild_solution(
    mu: DiscreteMeasure,
    k: int,
    lam: float,
    t: float,
    dt: float,
    q: int = 16,
    tol: float = 1e-5,
) -> ResidualReport:
    """``gamma(t) = U(t) gamma(0) - i lam int_0^t U(t-s) B gamma^(k+1)(s) ds``."""
    return verify_duhamel_expansion(mu, k, 1, lam, t, dt, q, tol)


@dataclass(frozen=True)
class StrichartzStats:
    n: int
    count: int
    max_ratio: float
    mean_ratio: float


def strichartz_ratio(
    f1: GridField, f2: GridField, f3: GridField, window: float, q: int = 16
) -> float:
    """``||U f1 conj(U f2) U f3||_{L^2_t L^2_x}`` on ``[0, window]``.

    Divided by ``||f1||_{H^1} ||f2||_{H^1} ||f3||_{L^2}``; zero data give 0.
    """
    denom = sobolev_norm(f1, 1.0) * sobolev_norm(f2, 1.0) * f3.l2_norm()
    if denom == 0:
        return 0.0
    g = f1.grid
    ts, ws = gauss_legendre_nodes(q, 0.0, window)
    u1, u2, u3 = (g.ifft(f.spectrum * g.propagator(ts)) for f in (f1, f2, f3))
    prod = u1 * np.conj(u2) * u3
    sq = np.real(g.inner(prod, prod))
    return float(np.sqrt(np.sum(ws * sq)) / denom)


def strichartz_ratio_probe(
    samples: Sequence[Tuple[GridField, GridField, GridField]], window: float, q: int = 16
) -> StrichartzStats:
    if not samples:
        raise ValueError("need at least one sample triple")
    ratios = [strichartz_ratio(a, b, c, window, q) for a, b, c in samples]
    return StrichartzStats(samples[0][0].grid.n, len(ratios), max(ratios), float(np.mean(ratios)))


def trace_norm_oracle(
    grid: Grid, samples: int = 50, seed: int = 0, max_terms: int = 6
) -> Tuple[float, int]:
    """Worst relative gap between the low-rank and dense trace norms, and the sample count."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        m = int(rng.integers(1, max_terms + 1))
        terms = [
            (
                complex(rng.standard_normal(), rng.standard_normal()),
                random_field(grid, rng),
                random_field(grid, rng),
            )
            for _ in range(m)
        ]
        kern = LowRankKernel.from_terms(grid, terms)
        dense = dense_trace_norm(kern)
        worst = max(worst, abs(trace_norm(kern) - dense) / dense)
    return worst, samples


__all__ = [
    "DEFAULT_CHUNK",
    "BATCH_ENTRIES",
    "ResidualReport",
    "free_leaves",
    "nls_leaves",
    "chunk_for",
    "integrate_map",
    "verify_move_invariance",
    "verify_resummation",
    "verify_full_sum",
    "conjugate_by_propagator",
    "dense_contract",
    "dense_direct",
    "verify_factorization",
    "evolved_hierarchy",
    "verify_duhamel_expansion",
    "verify_mild_solution",
    "StrichartzStats",
    "strichartz_ratio",
    "strichartz_ratio_probe",
    "trace_norm_oracle",
]
