"""Complete binary tree model: node addressing, edges, and edge-weight schemes.

Nodes are addressed by 1-based breadth-first index: the root is 1, the
children of node i are 2i and 2i+1, and the level of node i is
floor(log2 i) (root on level 0, leaves on level h-1).
"""

import enum
from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

# 2^48 - 1 positions still fit comfortably in an unsigned 64-bit slot space.
MAX_HEIGHT = 48


class WeightScheme(enum.Enum):
    """Edge weight as a function of the child's level d.

    GEOMETRIC assigns 2^-d; EXACT assigns the traversal probability of the
    edge under uniform random search targets, (2^(h-d) - 1) / (2^h - 1).
    """

    GEOMETRIC = "geometric"
    EXACT = "exact"


@dataclass(frozen=True)
class TreeShape:
    """A complete binary tree with ``height`` levels of nodes."""

    height: int

    def __post_init__(self):
        if not 1 <= self.height <= MAX_HEIGHT:
            raise ValueError(
                f"height must be in [1, {MAX_HEIGHT}], got {self.height}"
            )

    @property
    def n_nodes(self) -> int:
        return (1 << self.height) - 1

    @property
    def n_edges(self) -> int:
        return self.n_nodes - 1

    def level_of(self, bfs_index: int) -> int:
        if not 1 <= bfs_index <= self.n_nodes:
            raise ValueError(
                f"bfs index {bfs_index} out of range [1, {self.n_nodes}]"
            )
        return bfs_index.bit_length() - 1

    def edges(self) -> Iterator["Edge"]:
        """Yield the n-1 edges, one per child index 2 .. 2^h - 1."""
        for child in range(2, self.n_nodes + 1):
            yield Edge(child >> 1, child, child.bit_length() - 1)


class Edge(NamedTuple):
    parent_bfs: int
    child_bfs: int
    child_level: int


def level_of(bfs_index: int) -> int:
    """Level of a node by breadth-first index, with no shape bound check."""
    if bfs_index < 1:
        raise ValueError(f"bfs index must be >= 1, got {bfs_index}")
    return bfs_index.bit_length() - 1


def edge_weight(child_level: int, shape: TreeShape, scheme: WeightScheme) -> float:
    """Weight of an edge whose child sits on level d = ``child_level``."""
    h = shape.height
    if not 1 <= child_level <= h - 1:
        raise ValueError(f"child level {child_level} out of range [1, {h - 1}]")
    if scheme is WeightScheme.GEOMETRIC:
        return 2.0 ** (-child_level)
    return ((1 << (h - child_level)) - 1) / ((1 << h) - 1)


def level_weights(shape: TreeShape, scheme: WeightScheme) -> np.ndarray:
    """Vector of edge weights indexed by child level 1 .. h-1 (entry 0 unused)."""
    h = shape.height
    w = np.zeros(h, dtype=np.float64)
    for d in range(1, h):
        w[d] = edge_weight(d, shape, scheme)
    return w


def total_weight(shape: TreeShape, scheme: WeightScheme) -> float:
    """Sum W of all edge weights. Geometric: exactly h - 1."""
    h = shape.height
    if scheme is WeightScheme.GEOMETRIC:
        return float(h - 1)
    w = level_weights(shape, scheme)
    counts = np.array([0] + [1 << d for d in range(1, h)], dtype=np.float64)
    return float(np.dot(w, counts))


def child_levels(shape: TreeShape) -> np.ndarray:
    """Levels of children 2 .. n as an int array (vectorized level_of)."""
    children = np.arange(2, shape.n_nodes + 1, dtype=np.int64)
    # frexp exponent is exact for integers below 2^53, unlike floor(log2).
    return np.frexp(children.astype(np.float64))[1].astype(np.int64) - 1
