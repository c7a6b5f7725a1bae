"""Binary contraction trees of a collapse map.

Vertices are ``Vertex(kind, index)`` with kind ``"w"`` (root ``w_j``), ``"v"``
(internal ``v_l``, one per column) or ``"u"`` (leaf ``u_p``, one per
particle). Internal vertex ``v_l`` has two children: the *kept* child, which
continues particle ``rho[l]`` (the next column acting on it, or its leaf), and
the *contracted* child, which carries particle ``k+l`` (the first column acting
on it, or its leaf). Root ``w_j`` points at the first column acting on
particle ``j``, or straight at ``u_j`` for a bare edge.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, NamedTuple, Optional, Tuple

from .boardgame import CollapseMap
from .errors import BareEdgeTree


class Vertex(NamedTuple):
    kind: str
    index: int

    def __str__(self) -> str:
        return f"{self.kind}{self.index}"


class VertexKind(str, Enum):
    ROOT = "root"
    INTERNAL = "internal"
    LEAF_REGULAR = "leaf-regular"
    LEAF_DISTINGUISHED = "leaf-distinguished"


@dataclass(frozen=True, eq=False)
class TreeForest:
    source: CollapseMap
    children: Dict[Vertex, Tuple[Vertex, ...]]
    parent: Dict[Vertex, Vertex]
    tree_of: Dict[Vertex, int]
    distinguished_tree: int

    @property
    def k(self) -> int:
        return self.source.k

    @property
    def r(self) -> int:
        return self.source.r

    def kind(self, v: Vertex) -> VertexKind:
        if v.kind == "w":
            return VertexKind.ROOT
        if v.kind == "v":
            return VertexKind.INTERNAL
        if v in self.children[Vertex("v", self.r)]:
            return VertexKind.LEAF_DISTINGUISHED
        return VertexKind.LEAF_REGULAR

    def vertices(self, j: int) -> List[Vertex]:
        """Vertices of tree ``j`` in depth-first order from its root."""
        out: List[Vertex] = []
        stack = [Vertex("w", j)]
        while stack:
            v = stack.pop()
            out.append(v)
            stack.extend(reversed(self.children.get(v, ())))
        return out

    def internal_columns(self, j: int) -> List[int]:
        return sorted(v.index for v in self.vertices(j) if v.kind == "v")

    def leaves(self, j: int) -> List[int]:
        return sorted(v.index for v in self.vertices(j) if v.kind == "u")

    def is_bare_edge(self, j: int) -> bool:
        return self.children[Vertex("w", j)][0].kind == "u"

    def adjacency_lines(self) -> List[str]:
        lines = []
        for j in range(1, self.k + 1):
            tag = " (distinguished)" if j == self.distinguished_tree else ""
            lines.append(f"tree {j}{tag}")
            for v in self.vertices(j):
                kids = self.children.get(v)
                if not kids:
                    continue
                if v.kind == "v":
                    row, particle = self.source.operators()[v.index - 1]
                    label = f"{v} [B_{{{row},{particle}}}]"
                    lines.append(f"  {label} -> kept {kids[0]}, contracted {kids[1]}")
                else:
                    lines.append(f"  {v} -> {kids[0]}")
        return lines

    def to_dot(self) -> str:
        """Graphviz description; distinguished leaves are drawn doubled."""
        out = ["digraph forest {", "  node [shape=circle];"]
        for j in range(1, self.k + 1):
            out.append(f"  subgraph cluster_{j} {{")
            out.append(f'    label="tau_{j}";')
            for v in self.vertices(j):
                shape = "box" if v.kind == "w" else "circle"
                if self.kind(v) is VertexKind.LEAF_DISTINGUISHED:
                    shape = "doublecircle"
                out.append(f'    {v} [shape={shape}, label="{v.kind}_{v.index}"];')
            for v in self.vertices(j):
                for pos, kid in enumerate(self.children.get(v, ())):
                    style = ' [style=dashed]' if v.kind == "v" and pos == 1 else ""
                    out.append(f"    {v} -> {kid}{style};")
            out.append("  }")
        out.append("}")
        return "\n".join(out) + "\n"


def build_forest(m: CollapseMap) -> TreeForest:
    k, r = m.k, m.r
    top: Dict[int, Vertex] = {p: Vertex("u", p) for p in range(1, k + r + 1)}
    children: Dict[Vertex, Tuple[Vertex, ...]] = {}
    parent: Dict[Vertex, Vertex] = {}
    for col in range(r, 0, -1):
        v = Vertex("v", col)
        row = m.row(col)
        kept, contracted = top[row], top[k + col]
        children[v] = (kept, contracted)
        parent[kept] = v
        parent[contracted] = v
        top[row] = v
    tree_of: Dict[Vertex, int] = {}
    for j in range(1, k + 1):
        root = Vertex("w", j)
        children[root] = (top[j],)
        parent[top[j]] = root
        stack = [root]
        while stack:
            v = stack.pop()
            tree_of[v] = j
            stack.extend(children.get(v, ()))
    distinguished = tree_of[Vertex("v", r)]
    return TreeForest(m, children, parent, tree_of, distinguished)


@dataclass(frozen=True)
class TreeLabeling:
    """Internal labeling of one tree.

    Internal labels ``1..m`` follow global column order; leaves are labeled
    ``m+1..2m+1`` by tree particle (``1`` is the root particle, ``a+1`` the
    particle introduced by internal vertex ``a``). ``sigma[a-1]`` is the tree
    particle that vertex ``a`` contracts into. Child maps send an internal
    label to a child label (internal or leaf): ``kappa_minus`` is the kept
    child and ``kappa_plus`` the contracted one. The two are not ordered by
    label in general; ``(1, 2, 1)`` has ``kappa_minus(1) = 3 > kappa_plus(1) = 2``.
    """

    j: int
    k: int
    r: int
    m: int
    sigma: Tuple[int, ...]
    kept: Tuple[int, ...]
    contracted: Tuple[int, ...]
    kappa_minus: Tuple[int, ...]
    kappa_plus: Tuple[int, ...]
    time_binding: Tuple[int, ...]
    leaf_particles: Tuple[int, ...]
    distinguished: bool

    def is_leaf(self, label: int) -> bool:
        return label > self.m

    def time_index(self, label: int) -> int:
        """Global time index of a label; every leaf sits at the last time ``r``."""
        return self.r if self.is_leaf(label) else self.time_binding[label - 1]

    def kappa_minus_of(self, alpha: int) -> int:
        return self.kappa_minus[alpha - 1]

    def kappa_plus_of(self, alpha: int) -> int:
        return self.kappa_plus[alpha - 1]

    @property
    def distinguished_label(self) -> Optional[int]:
        return self.m if self.distinguished else None

    def distinguished_leaves(self) -> Tuple[int, ...]:
        if not self.distinguished:
            return ()
        return (self.kept[self.m - 1], self.contracted[self.m - 1])

    def operators(self) -> List[Tuple[int, int]]:
        """Global ``(row, particle)`` pairs of the tree's columns."""
        root_particle = self.j
        tree_to_global = {1: root_particle}
        for alpha, col in enumerate(self.time_binding, start=1):
            tree_to_global[alpha + 1] = self.k + col
        return [
            (tree_to_global[self.sigma[alpha - 1]], self.k + col)
            for alpha, col in enumerate(self.time_binding, start=1)
        ]


def extract_labeling(f: TreeForest, j: int) -> TreeLabeling:
    if not 1 <= j <= f.k:
        raise ValueError(f"tree index {j} outside 1..{f.k}")
    if f.is_bare_edge(j):
        raise BareEdgeTree(f"tree {j} is a bare edge with no internal vertices")
    k, r = f.k, f.r
    columns = f.internal_columns(j)
    m = len(columns)
    label_of_col = {col: alpha for alpha, col in enumerate(columns, start=1)}
    tree_particle = {j: 1}
    for alpha, col in enumerate(columns, start=1):
        tree_particle[k + col] = alpha + 1
    sigma = tuple(tree_particle[f.source.row(col)] for col in columns)

    def label(v: Vertex) -> int:
        if v.kind == "v":
            return label_of_col[v.index]
        return m + tree_particle[v.index]

    kept = tuple(label(f.children[Vertex("v", col)][0]) for col in columns)
    contracted = tuple(label(f.children[Vertex("v", col)][1]) for col in columns)
    leaf_particles = tuple(
        sorted(tree_particle, key=lambda p: tree_particle[p])
    )
    return TreeLabeling(
        j=j,
        k=k,
        r=r,
        m=m,
        sigma=sigma,
        kept=kept,
        contracted=contracted,
        kappa_minus=kept,
        kappa_plus=contracted,
        time_binding=tuple(columns),
        leaf_particles=leaf_particles,
        distinguished=j == f.distinguished_tree,
    )


def extract_labelings(f: TreeForest) -> Dict[int, TreeLabeling]:
    """Labelings of every non-bare tree, keyed by tree index."""
    return {j: extract_labeling(f, j) for j in range(1, f.k + 1) if not f.is_bare_edge(j)}


def subtree_stats(l: TreeLabeling, alpha: int) -> Tuple[int, int]:
    """Internal-vertex count ``d`` and regular-leaf count ``b`` below ``alpha``."""
    if not 1 <= alpha <= l.m:
        raise ValueError(f"internal label {alpha} outside 1..{l.m}")
    special = set(l.distinguished_leaves())
    internal = regular = 0
    stack = [alpha]
    while stack:
        node = stack.pop()
        if l.is_leaf(node):
            if node not in special:
                regular += 1
            continue
        internal += 1
        stack.extend((l.kept[node - 1], l.contracted[node - 1]))
    return internal, regular


def reassemble(f: TreeForest) -> CollapseMap:
    """Rebuild the collapse map from the per-tree labelings."""
    rows: Dict[int, int] = {}
    for lab in extract_labelings(f).values():
        for (row, _particle), col in zip(lab.operators(), lab.time_binding):
            rows[col] = row
    return CollapseMap(f.k, tuple(rows[col] for col in range(1, f.r + 1)))


__all__ = [
    "Vertex",
    "VertexKind",
    "TreeForest",
    "TreeLabeling",
    "build_forest",
    "extract_labeling",
    "extract_labelings",
    "subtree_stats",
    "reassemble",
]
