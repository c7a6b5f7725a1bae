"""Symbolic algebra of signed separable kernels.

A one-particle kernel expression is a signed sum of terms
``sign * chi(x) * conj(psi)(x')``. Each factor is a base symbol (``phi``,
the opaque cubic ``psi~``, or a pointwise product of three factors, some
conjugated) followed by a chain of free propagators. A chain entry
``(a, b)`` stands for ``U(t_a - t_b) = exp(i (t_a - t_b) Laplacian)``; time
index 0 is the horizon ``t`` and index ``l`` the time of column ``l``.

The contraction ``B`` acts on a product ``A (x) C`` as
``A(x;x') [C(x;x) - C(x';x')]``: ``A`` is the kept factor, ``C`` the factor
being traced out, and each pair of terms yields two new terms.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Any, Dict, Iterable, List, NamedTuple, Optional, Set, Tuple, Union

from .boardgame import CollapseMap
from .errors import SlotOutOfRange
from .trees import TreeForest, TreeLabeling, build_forest, extract_labeling

PHI = "phi"
PSI_TILDE = "psi~"

TimePair = Tuple[int, int]


@dataclass(frozen=True)
class Product:
    """Pointwise product of three factors; ``(factor, conjugated)`` pairs.

    Children are kept in a canonical order so that products differing only in
    the order of multiplication compare equal.
    """

    factors: Tuple[Tuple["FactorExpr", bool], ...]

    def __post_init__(self) -> None:
        if len(self.factors) != 3:
            raise ValueError(f"products are cubic (got {len(self.factors)} factors)")
        ordered = tuple(sorted(self.factors, key=lambda fc: (fc[0].render, fc[1])))
        object.__setattr__(self, "factors", ordered)


@dataclass(frozen=True)
class FactorExpr:
    base: Union[str, Product]
    chain: Tuple[TimePair, ...] = ()

    def __post_init__(self) -> None:
        if isinstance(self.base, str) and self.base not in (PHI, PSI_TILDE):
            raise ValueError(f"unknown base symbol {self.base!r}")

    @cached_property
    def distinguished(self) -> bool:
        if isinstance(self.base, Product):
            return any(f.distinguished for f, _ in self.base.factors)
        return self.base == PSI_TILDE

    @cached_property
    def render(self) -> str:
        if isinstance(self.base, Product):
            parts = [f"conj({f.render})" if c else f.render for f, c in self.base.factors]
            text = "(" + "*".join(parts) + ")"
        else:
            text = self.base
        for a, b in self.chain:
            text = f"U[{a},{b}]{text}" if text.startswith("(") else f"U[{a},{b}]({text})"
        return text

    def propagated(self, t_from: int, t_to: int) -> "FactorExpr":
        """Apply ``U(t_from - t_to)`` after the existing chain."""
        if t_from == t_to:
            return self
        if self.chain and self.chain[-1][0] == t_to:
            start = self.chain[-1][1]
            rest = self.chain[:-1]
            if start == t_from:
                return FactorExpr(self.base, rest)
            return FactorExpr(self.base, rest + ((t_from, start),))
        return FactorExpr(self.base, self.chain + ((t_from, t_to),))

    def substitute(self, symbol: str, replacement: "FactorExpr") -> "FactorExpr":
        """Replace a base symbol; the replacement's own chain runs first."""
        if isinstance(self.base, Product):
            kids = tuple((f.substitute(symbol, replacement), c) for f, c in self.base.factors)
            return FactorExpr(Product(kids), self.chain)
        if self.base != symbol:
            return self
        out = replacement
        for a, b in self.chain:
            out = out.propagated(a, b)
        return out

    def time_indices(self) -> Set[int]:
        found = {i for pair in self.chain for i in pair}
        if isinstance(self.base, Product):
            for f, _ in self.base.factors:
                found |= f.time_indices()
        return found


PHI_FACTOR = FactorExpr(PHI)
PSI_FACTOR = FactorExpr(PSI_TILDE)
CUBIC_FACTOR = FactorExpr(Product(((PHI_FACTOR, False), (PHI_FACTOR, False), (PHI_FACTOR, True))))


class KernelTerm(NamedTuple):
    sign: int
    left: FactorExpr
    right: FactorExpr

    @property
    def distinguished_count(self) -> int:
        return int(self.left.distinguished) + int(self.right.distinguished)


@dataclass(frozen=True)
class OneParticleKernelExpr:
    terms: Tuple[KernelTerm, ...]

    def __len__(self) -> int:
        return len(self.terms)

    def propagated(self, t_from: int, t_to: int) -> "OneParticleKernelExpr":
        if t_from == t_to:
            return self
        return OneParticleKernelExpr(
            tuple(
                KernelTerm(s, left.propagated(t_from, t_to), right.propagated(t_from, t_to))
                for s, left, right in self.terms
            )
        )

    def substitute(self, symbol: str, replacement: FactorExpr) -> "OneParticleKernelExpr":
        sub = symbol, replacement
        return OneParticleKernelExpr(
            tuple(
                KernelTerm(s, lf.substitute(*sub), rt.substitute(*sub)) for s, lf, rt in self.terms
            )
        )

    def distinguished_counts(self) -> List[int]:
        return [term.distinguished_count for term in self.terms]

    def time_indices(self) -> Set[int]:
        found: Set[int] = set()
        for _, left, right in self.terms:
            found |= left.time_indices() | right.time_indices()
        return found

    def to_rows(self) -> List[Dict[str, Any]]:
        return [
            {
                "sign": s,
                "left": left.render,
                "right": right.render,
                "left_chain": [list(p) for p in left.chain],
                "right_chain": [list(p) for p in right.chain],
                "distinguished": [left.distinguished, right.distinguished],
            }
            for s, left, right in self.terms
        ]


LEAF_KERNEL = OneParticleKernelExpr((KernelTerm(1, PHI_FACTOR, PHI_FACTOR),))
DISTINGUISHED_KERNEL = OneParticleKernelExpr(
    (KernelTerm(1, PSI_FACTOR, PHI_FACTOR), KernelTerm(-1, PHI_FACTOR, PSI_FACTOR))
)


@dataclass(frozen=True)
class MultiParticleKernelExpr:
    slots: Tuple[OneParticleKernelExpr, ...]

    def __len__(self) -> int:
        return len(self.slots)

    def substitute(self, symbol: str, replacement: FactorExpr) -> "MultiParticleKernelExpr":
        return MultiParticleKernelExpr(tuple(s.substitute(symbol, replacement) for s in self.slots))


def contract(kept: OneParticleKernelExpr, traced: OneParticleKernelExpr) -> OneParticleKernelExpr:
    """``B`` applied to ``kept (x) traced``; ``2 * len(kept) * len(traced)`` terms."""
    terms: List[KernelTerm] = []
    for s1, chi1, psi1 in kept.terms:
        for s2, chi2, psi2 in traced.terms:
            sign = s1 * s2
            plus = FactorExpr(Product(((chi1, False), (chi2, False), (psi2, True))))
            minus = FactorExpr(Product(((psi1, False), (chi2, True), (psi2, False))))
            terms.append(KernelTerm(sign, plus, psi1))
            terms.append(KernelTerm(-sign, chi1, minus))
    return OneParticleKernelExpr(tuple(terms))


def rank1_product(n: int) -> MultiParticleKernelExpr:
    if n < 1:
        raise ValueError(f"a product kernel needs at least one particle (got {n})")
    return MultiParticleKernelExpr((LEAF_KERNEL,) * n)


def apply_b(j: int, expr: MultiParticleKernelExpr) -> MultiParticleKernelExpr:
    """Contract the last slot into slot ``j`` (1-based)."""
    n = len(expr.slots)
    if n < 2 or not 1 <= j < n:
        raise SlotOutOfRange(f"cannot contract slot {n} into slot {j} of a {n}-slot kernel")
    slots = list(expr.slots[:-1])
    slots[j - 1] = contract(expr.slots[j - 1], expr.slots[-1])
    return MultiParticleKernelExpr(tuple(slots))


def apply_propagator(
    expr: MultiParticleKernelExpr,
    slots: Optional[Iterable[int]],
    t_from: int,
    t_to: int,
) -> MultiParticleKernelExpr:
    """Propagate the chosen slots (all when ``slots`` is None) by ``U(t_from - t_to)``."""
    n = len(expr.slots)
    chosen = set(range(1, n + 1)) if slots is None else set(slots)
    bad = [s for s in chosen if not 1 <= s <= n]
    if bad:
        raise SlotOutOfRange(f"slots {sorted(bad)} outside 1..{n}")
    return MultiParticleKernelExpr(
        tuple(
            slot.propagated(t_from, t_to) if idx in chosen else slot
            for idx, slot in enumerate(expr.slots, start=1)
        )
    )


def theta_expand(l: TreeLabeling) -> Dict[int, OneParticleKernelExpr]:
    """Kernels of every internal vertex, built from the leaves upwards."""
    thetas: Dict[int, OneParticleKernelExpr] = {}
    for alpha in range(l.m, 0, -1):
        if l.distinguished and alpha == l.m:
            thetas[alpha] = DISTINGUISHED_KERNEL
            continue
        own = l.time_index(alpha)

        def lifted(label: int) -> OneParticleKernelExpr:
            expr = LEAF_KERNEL if l.is_leaf(label) else thetas[label]
            return expr.propagated(own, l.time_index(label))

        thetas[alpha] = contract(lifted(l.kept[alpha - 1]), lifted(l.contracted[alpha - 1]))
    return thetas


def substitute_psi_tilde(expr: OneParticleKernelExpr) -> OneParticleKernelExpr:
    return expr.substitute(PSI_TILDE, CUBIC_FACTOR)


@dataclass(frozen=True)
class TreeFactor:
    j: int
    labeling: Optional[TreeLabeling]
    thetas: Dict[int, OneParticleKernelExpr]
    expr: OneParticleKernelExpr

    @property
    def m(self) -> int:
        return 0 if self.labeling is None else self.labeling.m


@dataclass(frozen=True)
class ForestExpansion:
    source: CollapseMap
    forest: TreeForest
    factors: Tuple[TreeFactor, ...]

    def as_product(self) -> MultiParticleKernelExpr:
        return MultiParticleKernelExpr(tuple(f.expr for f in self.factors))

    def substituted(self) -> MultiParticleKernelExpr:
        return self.as_product().substitute(PSI_TILDE, CUBIC_FACTOR)


def assemble_jk(m: CollapseMap) -> ForestExpansion:
    """Per-tree factors ``J_j`` whose tensor product is the Duhamel integrand."""
    forest = build_forest(m)
    factors = []
    for j in range(1, m.k + 1):
        if forest.is_bare_edge(j):
            phi = PHI_FACTOR.propagated(0, m.r)
            expr = OneParticleKernelExpr((KernelTerm(1, phi, phi),))
            factors.append(TreeFactor(j, None, {}, expr))
            continue
        lab = extract_labeling(forest, j)
        thetas = theta_expand(lab)
        factors.append(TreeFactor(j, lab, thetas, thetas[1].propagated(0, lab.time_binding[0])))
    return ForestExpansion(m, forest, tuple(factors))


def direct_expansion(m: CollapseMap) -> MultiParticleKernelExpr:
    """Left-to-right construction without trees, innermost operator first."""
    expr = rank1_product(m.k + m.r)
    for col in range(m.r, 0, -1):
        expr = apply_b(m.row(col), expr)
        expr = apply_propagator(expr, None, col - 1, col)
    return expr


__all__ = [
    "PHI",
    "PSI_TILDE",
    "Product",
    "FactorExpr",
    "KernelTerm",
    "OneParticleKernelExpr",
    "MultiParticleKernelExpr",
    "PHI_FACTOR",
    "PSI_FACTOR",
    "CUBIC_FACTOR",
    "LEAF_KERNEL",
    "DISTINGUISHED_KERNEL",
    "TreeFactor",
    "ForestExpansion",
    "contract",
    "rank1_product",
    "apply_b",
    "apply_propagator",
    "theta_expand",
    "substitute_psi_tilde",
    "assemble_jk",
    "direct_expansion",
]
