"""Symbolic bound ledger for the tree expansion.

Each internal vertex contributes one factor 2 (the doubling of terms) and one
Strichartz constant ``C``; every regular vertex also contributes ``T^(1/2)``
from the time integration. Leaves are counted in powers of ``||phi||_{H^1}``:
a regular leaf gives 2, the distinguished pair gives 4 (``||psi~|| <= C
||phi||^3`` times its partner ``phi``).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Tuple

from .boardgame import CollapseMap
from .trees import TreeForest, build_forest, extract_labeling, subtree_stats

KIND_DISTINGUISHED = "distinguished"
KIND_REGULAR = "regular"
KIND_BARE = "bare"


@dataclass(frozen=True)
class TreeBound:
    j: int
    m: int
    kind: str
    pow2: int
    pow_c: int
    pow_t: Fraction
    phi_exp: int

    def value(self, T: float, M: float, C: float) -> float:
        return float(2**self.pow2 * C**self.pow_c * T ** float(self.pow_t) * M**self.phi_exp)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "tree": self.j,
            "m": self.m,
            "kind": self.kind,
            "pow2": self.pow2,
            "powC": self.pow_c,
            "powT": str(self.pow_t),
            "phi_exp": self.phi_exp,
        }


@dataclass(frozen=True)
class BoundLedger:
    k: int
    r: int
    trees: Tuple[TreeBound, ...]
    # time integrations applied on top of the per-tree product
    extra_t: Fraction = field(default=Fraction(0))

    @property
    def pow2(self) -> int:
        return sum(t.pow2 for t in self.trees)

    @property
    def pow_c(self) -> int:
        return sum(t.pow_c for t in self.trees)

    @property
    def pow_t(self) -> Fraction:
        return sum((t.pow_t for t in self.trees), Fraction(0)) + self.extra_t

    @property
    def phi_exp(self) -> int:
        return sum(t.phi_exp for t in self.trees)

    def closing_integral(self) -> "BoundLedger":
        """Bound after the outermost integration over ``[0, T]``."""
        return BoundLedger(self.k, self.r, self.trees, self.extra_t + 1)

    def value(self, T: float, M: float, C: float) -> float:
        return float(2**self.pow2 * C**self.pow_c * T ** float(self.pow_t) * M**self.phi_exp)

    def shape(self) -> str:
        return f"{2 ** self.pow2} C^{self.pow_c} T^{self.pow_t} M^{self.phi_exp}"

    def rows(self) -> List[Dict[str, Any]]:
        out = [t.to_dict() for t in self.trees]
        out.append(
            {
                "tree": "total",
                "m": self.r,
                "kind": "forest",
                "pow2": self.pow2,
                "powC": self.pow_c,
                "powT": str(self.pow_t),
                "phi_exp": self.phi_exp,
            }
        )
        return out


def _tree_bound(f: TreeForest, j: int) -> TreeBound:
    if f.is_bare_edge(j):
        return TreeBound(j, 0, KIND_BARE, 0, 0, Fraction(0), 2)
    lab = extract_labeling(f, j)
    d, b = subtree_stats(lab, 1)
    if lab.distinguished:
        return TreeBound(j, d, KIND_DISTINGUISHED, d, d, Fraction(d - 1, 2), 2 * b + 4)
    return TreeBound(j, d, KIND_REGULAR, d, d, Fraction(d, 2), 2 * b)


def bound_ledger(f: TreeForest) -> BoundLedger:
    return BoundLedger(f.k, f.r, tuple(_tree_bound(f, j) for j in range(1, f.k + 1)))


def ledger_for(m: CollapseMap) -> BoundLedger:
    return bound_ledger(build_forest(m))


def final_bound(k: int, r: int, T: float, M: float, C: float) -> float:
    """``2 M^(2k-2) (2 C M^4 T)^((r+1)/2)``."""
    if k < 1 or r < 0:
        raise ValueError(f"need k >= 1 and r >= 0 (got k={k}, r={r})")
    if min(T, M, C) < 0:
        raise ValueError("T, M and C must be nonnegative")
    return float(2 * M ** (2 * k - 2) * (2 * C * M**4 * T) ** ((r + 1) / 2))


def critical_horizon(M: float, C: float) -> float:
    """Horizon below which ``final_bound`` decreases in ``r``."""
    if M <= 0 or C <= 0:
        raise ValueError("M and C must be positive")
    return 1.0 / (2 * C * M**4)


__all__ = [
    "TreeBound",
    "BoundLedger",
    "bound_ledger",
    "ledger_for",
    "final_bound",
    "critical_horizon",
]
