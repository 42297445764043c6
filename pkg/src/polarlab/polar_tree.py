"""Polar tree structure and sub-polar tree extraction.

The full polar tree for a length-N code has n+1 levels; node (s, t)
covers a contiguous span of 2^(n-s) leaf positions. The sub-polar tree
keeps the maximal nodes whose dimension (number of active positions in
the span) does not exceed a threshold tau; list decoders advance one
such leaf at a time.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import log

import numpy as np

from .codes import CodeSpec, pac_convolve
from .encode import polar_transform

LN2 = log(2.0)


@dataclass(frozen=True)
class TreeNode:
    level: int
    pos: int  # 1-based within the level
    length: int
    span: tuple[int, int]  # inclusive 1-based leaf interval
    dim: int

    @property
    def start0(self) -> int:
        return self.span[0] - 1


@dataclass(frozen=True)
class SubLeaf:
    node: TreeNode
    index_r: int  # 1-based position among the sub-tree leaves
    active_positions: tuple[int, ...]  # 0-based offsets within the span

    @property
    def length(self) -> int:
        return self.node.length

    @property
    def dim(self) -> int:
        return self.node.dim


@dataclass
class SubPolarTree:
    spec: CodeSpec
    tau: int
    leaves: list[SubLeaf]
    _candidate_cache: dict[int, np.ndarray] = field(default_factory=dict, repr=False)

    @property
    def m_count(self) -> int:
        return len(self.leaves)

    def residual_frozen(self, r: int) -> int:
        """Frozen-position count in leaves strictly after level r."""
        return sum(lf.length - lf.dim for lf in self.leaves[r:])


def _make_node(spec: CodeSpec, level: int, pos: int) -> TreeNode:
    n = spec.n_stages
    length = 1 << (n - level)
    start = (pos - 1) * length + 1
    span = (start, start + length - 1)
    dim = sum(1 for a in spec.info_set if span[0] <= a <= span[1])
    return TreeNode(level=level, pos=pos, length=length, span=span, dim=dim)


def _leaf_from_node(spec: CodeSpec, node: TreeNode, index_r: int) -> SubLeaf:
    offsets = tuple(
        a - node.span[0] for a in spec.info_set if node.span[0] <= a <= node.span[1]
    )
    return SubLeaf(node=node, index_r=index_r, active_positions=offsets)


def build_sub_polar_tree(spec: CodeSpec, tau: int) -> SubPolarTree:
    """Extract the sub-polar tree for dimension threshold ``tau``.

    Leaves are the maximal nodes with dim <= tau whose parent has
    dim > tau (the root is kept whole when its dim <= tau), ordered left
    to right.
    """
    if tau < 1:
        raise ValueError(f"tau must be >= 1, got {tau}")
    leaves: list[TreeNode] = []

    def walk(level: int, pos: int):
        node = _make_node(spec, level, pos)
        if node.dim <= tau:
            leaves.append(node)
            return
        walk(level + 1, 2 * pos - 1)
        walk(level + 1, 2 * pos)

    walk(0, 1)
    subleaves = [
        _leaf_from_node(spec, node, i + 1) for i, node in enumerate(leaves)
    ]
    return SubPolarTree(spec=spec, tau=tau, leaves=subleaves)


def bit_level_tree(spec: CodeSpec) -> SubPolarTree:
    """Degenerate partition with one leaf per bit position (SC/SCL walk)."""
    n = spec.n_stages
    active = set(spec.info_set)
    subleaves = []
    for t in range(1, spec.n_block + 1):
        node = TreeNode(level=n, pos=t, length=1, span=(t, t), dim=int(t in active))
        subleaves.append(
            SubLeaf(node=node, index_r=t, active_positions=(0,) if t in active else ())
        )
    return SubPolarTree(spec=spec, tau=1, leaves=subleaves)


def active_patterns(leaf: SubLeaf) -> np.ndarray:
    """All 2^k u-domain span patterns in binary counting order, zeros at
    frozen offsets. Shape (2^k, length)."""
    k = leaf.dim
    ell = leaf.length
    pats = np.zeros((1 << k, ell), dtype=np.int8)
    for bit, off in enumerate(leaf.active_positions):
        # first active offset carries the most significant counting bit
        period = 1 << (k - 1 - bit)
        pats[:, off] = (np.arange(1 << k) // period) & 1
    return pats


def leaf_candidate_set(tree: SubPolarTree, r: int) -> np.ndarray:
    """Candidate node sequences C^{M[r]} for the r-th leaf (1-based).

    Each row is the length-l polar transform of one active-bit pattern;
    rows follow active-pattern binary counting order. Cached per leaf.
    """
    cached = tree._candidate_cache.get(r)
    if cached is None:
        leaf = tree.leaves[r - 1]
        cached = polar_transform(active_patterns(leaf))
        tree._candidate_cache[r] = cached
    return cached


def leaf_candidate_set_pac(
    tree: SubPolarTree, r: int, impulse, state
) -> list[tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """PAC candidate triples (word, new_state, u_segment) for leaf r.

    The convolution register ``state`` is consumed through a copy per
    candidate; words are the transforms of the convolved segments.
    """
    leaf = tree.leaves[r - 1]
    out = []
    for useg in active_patterns(leaf):
        vseg, new_state = pac_convolve(useg, impulse, state)
        out.append((polar_transform(vseg), new_state, useg))
    return out


def residual_log_kappa(tree: SubPolarTree, r: int) -> float:
    """ln(valid completions / all completions) for a level-r path.

    Equals -F_r * ln 2 with F_r the number of frozen positions in the
    leaves after r; the same for every valid path at that level.
    """
    if not 0 <= r <= tree.m_count:
        raise ValueError(f"level {r} outside [0, {tree.m_count}]")
    return -float(tree.residual_frozen(r)) * LN2


def log_kappa_table(tree: SubPolarTree) -> np.ndarray:
    """residual_log_kappa for r = 0..M as one array."""
    return np.array([residual_log_kappa(tree, r) for r in range(tree.m_count + 1)])
