"""Collapse maps and the acceptable-move rewriting system.

A collapse map of depth ``r`` over ``k`` retained particles assigns to every
Duhamel column ``l`` (1-based) the particle row ``rho[l]`` that the
``(k+l)``-th particle is contracted into; ``rho[l] < k + l`` always holds.

Acceptable moves exchange two adjacent columns together with the rows
``k+l`` and ``k+l+1`` of all later columns, and swap the matching time
labels in the permutation ``pi``. Repeatedly fixing the leftmost descent
reduces every map to its upper echelon form (nondecreasing ``rho``); the
maps sharing an echelon form make up one class, and the reduction
permutations of the members tile the class's time domain.

Permutations are tuples ``pi`` with ``pi[i-1] == π(i)``; ``pi`` names the
ordered region ``{t >= t_{π(1)} >= ... >= t_{π(r)}}``.
"""
from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass
from typing import Dict, Iterable, List, Sequence, Tuple

from .errors import EnumerationCapExceeded, InapplicableMove
from .logutil import get_logger

Permutation = Tuple[int, ...]

DEFAULT_ENUMERATION_CAP = 10**7


@dataclass(frozen=True, order=True)
class CollapseMap:
    k: int
    rho: Tuple[int, ...]

    def __post_init__(self) -> None:
        if int(self.k) < 1:
            raise ValueError(f"k must be >= 1 (got {self.k})")
        rho = tuple(int(row) for row in self.rho)
        if not rho:
            raise ValueError("rho must have at least one column (r >= 1)")
        for col, row in enumerate(rho, start=1):
            if not 1 <= row < self.k + col:
                raise ValueError(
                    f"rho[{col}]={row} outside 1..{self.k + col - 1} (k={self.k})"
                )
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "rho", rho)

    @property
    def r(self) -> int:
        return len(self.rho)

    def row(self, col: int) -> int:
        return self.rho[col - 1]

    def is_upper_echelon(self) -> bool:
        return all(a <= b for a, b in zip(self.rho, self.rho[1:]))

    def operators(self) -> List[Tuple[int, int]]:
        """Interaction operators in column order as ``(row, particle)`` pairs."""
        return [(row, self.k + col) for col, row in enumerate(self.rho, start=1)]

    def describe(self) -> str:
        return " ".join(f"B_{{{a},{b}}}" for a, b in self.operators())

    @classmethod
    def parse(cls, k: int, text: str) -> "CollapseMap":
        parts = [p for p in text.replace(" ", "").split(",") if p]
        try:
            rho = tuple(int(p) for p in parts)
        except ValueError as exc:
            raise ValueError(f"cannot parse rho {text!r}: {exc}") from exc
        return cls(k, rho)


class EchelonForm(CollapseMap):
    """A collapse map with nondecreasing contraction rows."""

    def __post_init__(self) -> None:
        super().__post_init__()
        if not self.is_upper_echelon():
            raise ValueError(f"rho={self.rho} is not in upper echelon form")


def is_upper_echelon(m: CollapseMap) -> bool:
    return m.is_upper_echelon()


def identity_permutation(r: int) -> Permutation:
    return tuple(range(1, r + 1))


def _check_permutation(pi: Sequence[int], r: int) -> Permutation:
    pi_t = tuple(int(p) for p in pi)
    if sorted(pi_t) != list(range(1, r + 1)):
        raise ValueError(f"{pi_t} is not a permutation of 1..{r}")
    return pi_t


@dataclass(frozen=True)
class MoveTrace:
    moves: Tuple[int, ...]
    pi: Permutation

    def replay(self, m: CollapseMap) -> Tuple[CollapseMap, Permutation]:
        current, pi = m, identity_permutation(m.r)
        for col in self.moves:
            current, pi = apply_move(current, pi, col)
        return current, pi

    def unwind(self, form: CollapseMap) -> Tuple[CollapseMap, Permutation]:
        """Undo the recorded moves starting from the reduced map."""
        current, pi = form, self.pi
        for col in reversed(self.moves):
            current, pi = revert_move(current, pi, col)
        return current, pi


@dataclass(frozen=True)
class SimplexDomain:
    t: float
    r: int
    perms: Tuple[Permutation, ...]

    def __post_init__(self) -> None:
        if self.t < 0:
            raise ValueError(f"time horizon must be nonnegative (got {self.t})")
        perms = tuple(_check_permutation(p, self.r) for p in self.perms)
        if len(set(perms)) != len(perms):
            raise ValueError("simplex permutations must be pairwise distinct")
        object.__setattr__(self, "perms", perms)

    @property
    def volume(self) -> float:
        return len(self.perms) * self.t**self.r / math.factorial(self.r)


@dataclass(frozen=True)
class ClassMember:
    source: CollapseMap
    pi: Permutation
    moves: Tuple[int, ...]


@dataclass(frozen=True)
class EchelonClass:
    form: EchelonForm
    members: Tuple[ClassMember, ...]

    @property
    def perms(self) -> Tuple[Permutation, ...]:
        return tuple(member.pi for member in self.members)

    def __len__(self) -> int:
        return len(self.members)


def count_collapse_maps(k: int, r: int) -> int:
    return math.prod(k + col - 1 for col in range(1, r + 1))


def enumerate_collapse_maps(
    k: int, r: int, cap: int = DEFAULT_ENUMERATION_CAP
) -> List[CollapseMap]:
    """All collapse maps for ``(k, r)`` in lexicographic order of ``rho``."""
    if k < 1 or r < 1:
        raise ValueError(f"k and r must be >= 1 (got k={k}, r={r})")
    count = count_collapse_maps(k, r)
    if count > cap:
        raise EnumerationCapExceeded(count, cap)
    ranges = [range(1, k + col) for col in range(1, r + 1)]
    maps = [CollapseMap(k, rho) for rho in itertools.product(*ranges)]
    get_logger().debug("enumerated %d collapse maps for k=%d r=%d", len(maps), k, r)
    return maps


def move_applicable(m: CollapseMap, col: int) -> bool:
    if not 1 <= col < m.r:
        return False
    a, b = m.rho[col - 1], m.rho[col]
    return b < a and b < m.k + col


def _revert_applicable(m: CollapseMap, col: int) -> bool:
    if not 1 <= col < m.r:
        return False
    a, b = m.rho[col - 1], m.rho[col]
    return a < b < m.k + col


def _exchange(m: CollapseMap, pi: Permutation, col: int) -> Tuple[CollapseMap, Permutation]:
    rho = list(m.rho)
    rho[col - 1], rho[col] = rho[col], rho[col - 1]
    lo, hi = m.k + col, m.k + col + 1
    for idx in range(col + 1, len(rho)):
        if rho[idx] == lo:
            rho[idx] = hi
        elif rho[idx] == hi:
            rho[idx] = lo
    swapped = tuple(col + 1 if p == col else col if p == col + 1 else p for p in pi)
    return CollapseMap(m.k, tuple(rho)), swapped


def apply_move(
    m: CollapseMap, pi: Sequence[int], col: int
) -> Tuple[CollapseMap, Permutation]:
    """Apply the acceptable move at column ``col``.

    Allowed iff ``rho[col+1] < rho[col]`` and ``rho[col+1] < k + col``.
    Raises :class:`InapplicableMove` otherwise.
    """
    pi_t = _check_permutation(pi, m.r)
    if not move_applicable(m, col):
        raise InapplicableMove(f"no acceptable move at column {col} for rho={list(m.rho)}")
    return _exchange(m, pi_t, col)


def revert_move(
    m: CollapseMap, pi: Sequence[int], col: int
) -> Tuple[CollapseMap, Permutation]:
    """Inverse of :func:`apply_move` at the same column."""
    pi_t = _check_permutation(pi, m.r)
    if not _revert_applicable(m, col):
        raise InapplicableMove(f"no inverse move at column {col} for rho={list(m.rho)}")
    return _exchange(m, pi_t, col)


def applicable_moves(m: CollapseMap) -> List[int]:
    return [col for col in range(1, m.r) if move_applicable(m, col)]


def reduce_to_echelon(m: CollapseMap) -> Tuple[EchelonForm, MoveTrace]:
    """Reduce ``m`` by always moving at the leftmost descent."""
    current, pi = m, identity_permutation(m.r)
    moves: List[int] = []
    ceiling = m.r * m.r
    while True:
        col = next((c for c in range(1, current.r) if move_applicable(current, c)), None)
        if col is None:
            break
        current, pi = _exchange(current, pi, col)
        moves.append(col)
        if len(moves) > ceiling:
            raise RuntimeError(f"reduction of rho={list(m.rho)} exceeded {ceiling} moves")
    # every descent is applicable, so no applicable move means nondecreasing rows
    return EchelonForm(m.k, current.rho), MoveTrace(tuple(moves), pi)


def partition_classes(
    k: int, r: int, cap: int = DEFAULT_ENUMERATION_CAP
) -> Dict[EchelonForm, EchelonClass]:
    """Group all maps of ``(k, r)`` by their echelon form, ordered by form."""
    grouped: Dict[EchelonForm, List[ClassMember]] = {}
    for m in enumerate_collapse_maps(k, r, cap):
        form, trace = reduce_to_echelon(m)
        grouped.setdefault(form, []).append(ClassMember(m, trace.pi, trace.moves))
    classes: Dict[EchelonForm, EchelonClass] = {}
    for form in sorted(grouped, key=lambda f: f.rho):
        members = tuple(grouped[form])
        perms = [member.pi for member in members]
        if len(set(perms)) != len(perms):
            raise RuntimeError(f"class of {list(form.rho)} has repeated reduction permutations")
        classes[form] = EchelonClass(form, members)
    total = sum(len(c) for c in classes.values())
    get_logger().debug("k=%d r=%d: %d maps in %d classes", k, r, total, len(classes))
    return classes


def time_domain(cls: EchelonClass, t: float) -> SimplexDomain:
    return SimplexDomain(float(t), cls.form.r, cls.perms)


def _exchange_neighbors(m: CollapseMap) -> Iterable[CollapseMap]:
    pi = identity_permutation(m.r)
    for col in range(1, m.r):
        a, b = m.rho[col - 1], m.rho[col]
        if a != b and b < m.k + col:
            yield _exchange(m, pi, col)[0]


def move_graph_echelon_forms(
    k: int, r: int, cap: int = DEFAULT_ENUMERATION_CAP
) -> Dict[CollapseMap, Tuple[Tuple[int, ...], ...]]:
    """Breadth-first search of the undirected move graph.

    Returns, for every map, the nondecreasing ``rho`` arrays found in its
    connected component. Independent of :func:`reduce_to_echelon`.
    """
    seen: Dict[CollapseMap, Tuple[Tuple[int, ...], ...]] = {}
    for start in enumerate_collapse_maps(k, r, cap):
        if start in seen:
            continue
        component = {start}
        queue = deque([start])
        while queue:
            node = queue.popleft()
            for nxt in _exchange_neighbors(node):
                if nxt not in component:
                    component.add(nxt)
                    queue.append(nxt)
        forms = tuple(sorted(m.rho for m in component if m.is_upper_echelon()))
        for node in component:
            seen[node] = forms
    return seen


def class_table(
    k_max: int, r_max: int, cap: int = DEFAULT_ENUMERATION_CAP
) -> List[Tuple[int, int, int, int, int]]:
    """Rows ``(k, r, map_count, class_count, 2**(k+r))``."""
    rows = []
    for k in range(1, k_max + 1):
        for r in range(1, r_max + 1):
            classes = partition_classes(k, r, cap)
            count = sum(len(c) for c in classes.values())
            rows.append((k, r, count, len(classes), 2 ** (k + r)))
    return rows


__all__ = [
    "CollapseMap",
    "EchelonForm",
    "MoveTrace",
    "SimplexDomain",
    "ClassMember",
    "EchelonClass",
    "Permutation",
    "DEFAULT_ENUMERATION_CAP",
    "count_collapse_maps",
    "enumerate_collapse_maps",
    "is_upper_echelon",
    "identity_permutation",
    "move_applicable",
    "applicable_moves",
    "apply_move",
    "revert_move",
    "reduce_to_echelon",
    "partition_classes",
    "time_domain",
    "move_graph_echelon_forms",
    "class_table",
]
