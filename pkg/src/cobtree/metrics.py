"""Locality functionals and block-transition curves for tree layouts.

Edge lengths are position differences between parent and child.  The four
functionals summarize them: P0w (weighted edge product, the exp of the
weight-averaged log length), P1w (weighted mean length), P1 (plain mean
length) and Pinf (maximum length).  beta(N) is the expected fraction of
consecutive accesses that cross a block boundary for blocks of N nodes
under uniformly random block alignment; the average cache miss ratio
(acmr) sums beta over geometrically growing block sizes and is
approximated by log(P0w).
"""

import bisect
from dataclasses import dataclass

import numpy as np

from .layouts import Layout
from .tree_model import WeightScheme, child_levels, level_weights, total_weight


@dataclass(frozen=True)
class LocalityStats:
    p0w: float
    p1w: float
    p1: float
    pinf: int

    def as_tuple(self):
        return (self.p0w, self.p1w, self.p1, self.pinf)


def edge_lengths(layout: Layout) -> np.ndarray:
    """Length of each edge, indexed by child bfs order (children 2 .. n)."""
    pos = layout.position
    n = layout.shape.n_nodes
    child = np.arange(2, n + 1, dtype=np.int64)
    return np.abs(pos[child] - pos[child >> 1])


def _edge_weights(layout: Layout, scheme: WeightScheme) -> np.ndarray:
    w = level_weights(layout.shape, scheme)
    return w[child_levels(layout.shape)]


def locality_stats(layout: Layout, scheme: WeightScheme = WeightScheme.GEOMETRIC) -> LocalityStats:
    if layout.shape.height < 2:
        raise ValueError("locality stats need at least one edge (h >= 2)")
    lens = edge_lengths(layout).astype(np.float64)
    w = _edge_weights(layout, scheme)
    W = total_weight(layout.shape, scheme)
    p0w = float(2.0 ** (np.dot(w, np.log2(lens)) / W))
    p1w = float(np.dot(w, lens) / W)
    p1 = float(lens.mean())
    pinf = int(lens.max())
    return LocalityStats(p0w, p1w, p1, pinf)


class BetaTable:
    """Histogram of edge length -> total weight, with prefix sums so beta
    over a whole range of block sizes costs one pass over the edges."""

    def __init__(self, layout: Layout, scheme: WeightScheme = WeightScheme.GEOMETRIC):
        lens = edge_lengths(layout)
        w = _edge_weights(layout, scheme)
        order = np.argsort(lens, kind="stable")
        lens = lens[order]
        w = w[order]
        uniq, starts = np.unique(lens, return_index=True)
        sums = np.add.reduceat(w, starts)
        wl_sums = np.add.reduceat(w * lens, starts)
        self.lengths = uniq
        self.cum_w = np.cumsum(sums)
        self.cum_wl = np.cumsum(wl_sums)
        self.total_w = float(total_weight(layout.shape, scheme))
        self.pinf = int(uniq[-1])
        self.p1w = float(self.cum_wl[-1] / self.total_w)

    def beta(self, block_nodes):
        """beta for a scalar or array of block sizes N >= 1."""
        N = np.asarray(block_nodes, dtype=np.float64)
        if np.any(N < 1):
            raise ValueError("block size must be >= 1")
        idx = np.searchsorted(self.lengths, N, side="right") - 1
        within_wl = np.where(idx >= 0, self.cum_wl[np.maximum(idx, 0)], 0.0)
        within_w = np.where(idx >= 0, self.cum_w[np.maximum(idx, 0)], 0.0)
        # Edges no longer than N contribute len/N, the rest a full miss.
        val = (within_wl / N + (self.total_w - within_w)) / self.total_w
        if np.isscalar(block_nodes):
            return float(val)
        return val


def block_transitions(layout: Layout, scheme: WeightScheme, block_nodes: int) -> float:
    return BetaTable(layout, scheme).beta(block_nodes)


def beta_curve(layout: Layout, scheme: WeightScheme, block_sizes) -> np.ndarray:
    return BetaTable(layout, scheme).beta(np.asarray(block_sizes))


def miss_cost(length: int, base: int = 2) -> float:
    """Expected misses for one edge summed over block sizes base^k, k >= 1:
    floor(log_b len) + len * base^(-floor(log_b len)) / (base - 1)."""
    if length < 1:
        raise ValueError("edge length must be >= 1")
    if base < 2:
        raise ValueError("base must be >= 2")
    t = 0
    p = 1
    while p * base <= length:
        p *= base
        t += 1
    return t + length / p / (base - 1)


def acmr(layout: Layout, scheme: WeightScheme = WeightScheme.GEOMETRIC, base: int = 2):
    """(exact, log_approx): the exact weighted average cache miss ratio and
    its log(P0w) approximation in the same base."""
    if base < 2:
        raise ValueError("base must be >= 2")
    lens = edge_lengths(layout)
    w = _edge_weights(layout, scheme)
    W = total_weight(layout.shape, scheme)
    # floor(log_base len) via exact float exponents for base 2, loop otherwise
    if base == 2:
        t = np.frexp(lens.astype(np.float64))[1].astype(np.int64) - 1
        pw = np.exp2(t.astype(np.float64))
    else:
        t = np.zeros(lens.shape, dtype=np.int64)
        pw = np.ones(lens.shape, dtype=np.float64)
        step = pw * base
        while True:
            grow = step <= lens
            if not grow.any():
                break
            t[grow] += 1
            pw[grow] *= base
            step = pw * base
    mu = t + lens / pw / (base - 1)
    exact = float(np.dot(w, mu) / W)
    stats = locality_stats(layout, scheme)
    log_approx = float(np.log(stats.p0w) / np.log(base))
    return exact, log_approx


def acmr_beta_series(layout: Layout, scheme: WeightScheme = WeightScheme.GEOMETRIC, base: int = 2) -> float:
    """acmr as the truncated sum of beta(base^k): explicit terms until
    base^k covers the longest edge, then the geometric tail p1w/base^k in
    closed form."""
    table = BetaTable(layout, scheme)
    total = 0.0
    k = 1
    while base ** k < table.pinf:
        total += table.beta(base ** k)
        k += 1
    # From here every edge fits in one block: beta(N) = p1w / N.
    total += table.p1w / (base ** (k - 1) * (base - 1))
    return total


def weight_cdf(layout: Layout, scheme: WeightScheme = WeightScheme.GEOMETRIC):
    """Cumulative edge-weight distribution over edge length: arrays
    (lengths, F) where F[i] is the weight fraction of edges no longer than
    lengths[i]; F ends at 1."""
    table = BetaTable(layout, scheme)
    return table.lengths.copy(), table.cum_w / table.total_w
