"""Brute-force and dynamic-programming oracles for the layout family.

These exist to *check* the structural claims the named layouts rely on:
exhaustive enumeration of all unit-cut layouts at small heights, the cost
recurrences for the optimal unit-cut layout, exhaustive search over raw
permutations at tiny heights, and the memoized search for optimal cut
heights per subtree height and orientation.
"""

import itertools
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import implicit
from .layouts import (
    LEFT,
    RIGHT,
    Const,
    Half,
    HeightMinusOne,
    Layout,
    LayoutSpec,
    Orientation,
    Table,
    build_layout,
    layout_from_positions,
    named_spec,
)
from .metrics import locality_stats
from .tree_model import TreeShape, WeightScheme, level_weights, total_weight

_I = Orientation.IN_ORDER
_P = Orientation.PRE_ORDER

METRIC_P0W = "P0w"
METRIC_P1W = "P1w"


# ---------------------------------------------------------------------------
# Unit-cut (g = 1) layouts: every node with subtree height >= 2 carries a
# free in-order / pre-order choice.  Those nodes are exactly bfs 1 .. 2^(h-1)-1.
# ---------------------------------------------------------------------------

def g1_choice_count(h: int) -> int:
    return (1 << (h - 1)) - 1


def build_g1_positions(h: int, orientations) -> np.ndarray:
    """Positions for a unit-cut layout given per-node orientation flags.

    ``orientations[i]`` is True for in-order placement of node i (only read
    for i < 2^(h-1)).  Pre-order roots go to the block end nearer the parent;
    each child block keeps the left child's block leftmost.
    """
    n = (1 << h) - 1
    pos = np.zeros(n + 1, dtype=np.int64)
    # Stack-based recursion: (node, lo, hi, side), block is [lo, hi] 1-based.
    stack = [(1, 1, n, LEFT)]
    while stack:
        node, lo, hi, side = stack.pop()
        if lo == hi:
            pos[node] = lo
            continue
        half = (hi - lo) // 2  # size of each child block
        if orientations[node]:
            mid = lo + half
            pos[node] = mid
            stack.append((2 * node, lo, mid - 1, RIGHT))
            stack.append((2 * node + 1, mid + 1, hi, LEFT))
        elif side is LEFT:
            pos[node] = lo
            stack.append((2 * node, lo + 1, lo + half, LEFT))
            stack.append((2 * node + 1, lo + half + 1, hi, LEFT))
        else:
            pos[node] = hi
            stack.append((2 * node, lo, lo + half - 1, RIGHT))
            stack.append((2 * node + 1, lo + half, hi - 1, RIGHT))
    return pos


def _assignment_bits(h, rule):
    """Orientation flags per node from a labeling rule walked over the
    unit-cut recursion; rule(orient, side) -> (left child o, right child o)."""
    flags = np.zeros(1 << h, dtype=bool)

    def walk(node, o, side, m):
        if m < 2:
            return
        flags[node] = o is _I
        if o is _I:
            ol, orr = rule(o, None)
            walk(2 * node, ol, RIGHT, m - 1)
            walk(2 * node + 1, orr, LEFT, m - 1)
        else:
            near_o, far_o = rule(o, side)
            if side is LEFT:
                walk(2 * node, near_o, LEFT, m - 1)
                walk(2 * node + 1, far_o, LEFT, m - 1)
            else:
                walk(2 * node, far_o, RIGHT, m - 1)
                walk(2 * node + 1, near_o, RIGHT, m - 1)

    walk(1, _I, LEFT, h)
    return flags


def minep_assignment(h: int) -> np.ndarray:
    """In-order root; in-order nodes get pre-order children; pre-order nodes
    get a pre-order near child and an in-order far child."""

    def rule(o, side):
        if o is _I:
            return (_P, _P)
        return (_P, _I)  # (near, far)

    return _assignment_bits(h, rule)


def minwla_assignment(h: int) -> np.ndarray:
    """In-order root, every other node pre-order."""

    def rule(o, side):
        return (_P, _P)

    return _assignment_bits(h, rule)


def _g1_metric_arrays(h: int, scheme: WeightScheme):
    shape = TreeShape(h)
    child = np.arange(2, shape.n_nodes + 1, dtype=np.int64)
    levels = np.frexp(child.astype(np.float64))[1].astype(np.int64) - 1
    w = level_weights(shape, scheme)[levels]
    W = total_weight(shape, scheme)
    return child, w, W


def g1_cost(pos: np.ndarray, child, w, W, metric: str) -> float:
    lens = np.abs(pos[child] - pos[child >> 1]).astype(np.float64)
    if metric == METRIC_P0W:
        return float(2.0 ** (np.dot(w, np.log2(lens)) / W))
    if metric == METRIC_P1W:
        return float(np.dot(w, lens) / W)
    raise ValueError(f"unknown metric {metric!r}")


@dataclass
class G1SearchResult:
    h: int
    metric: str
    scheme: WeightScheme
    best_cost: float
    minimizers: List[int]  # bitmasks over choice nodes 1 .. 2^(h-1)-1
    n_assignments: int

    def contains(self, flags: np.ndarray) -> bool:
        mask = 0
        for i in range(1, (1 << (self.h - 1))):
            if flags[i]:
                mask |= 1 << (i - 1)
        return mask in set(self.minimizers)


MAX_ENUM_HEIGHT = 5


def enumerate_g1(h: int, scheme: WeightScheme, metric: str, tol: float = 1e-12) -> G1SearchResult:
    """Exhaustively evaluate every unit-cut layout of height h and return
    the cost minimizers.  2^(2^(h-1)-1) assignments; refuses h > 5."""
    if h > MAX_ENUM_HEIGHT:
        raise ValueError(
            f"exhaustive enumeration limited to h <= {MAX_ENUM_HEIGHT} "
            f"({1 << g1_choice_count(MAX_ENUM_HEIGHT)} assignments at h=5)"
        )
    if h < 2:
        raise ValueError("enumeration needs h >= 2")
    nbits = g1_choice_count(h)
    child, w, W = _g1_metric_arrays(h, scheme)
    flags = np.zeros(1 << h, dtype=bool)
    best = math.inf
    argmin: List[int] = []
    for mask in range(1 << nbits):
        for i in range(nbits):
            flags[i + 1] = (mask >> i) & 1
        pos = build_g1_positions(h, flags)
        c = g1_cost(pos, child, w, W, metric)
        if c < best - tol:
            best = c
            argmin = [mask]
        elif c <= best + tol:
            argmin.append(mask)
    return G1SearchResult(h, metric, scheme, best, argmin, 1 << nbits)


# ---------------------------------------------------------------------------
# Cost recurrences for the optimal unit-cut layout (geometric weights).
# C is W times log2 of the weighted edge product, per root orientation.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CostPair:
    height: int
    c_in: float
    c_pre: float


def dp_g1_costs(h: int, log_base: int = 2) -> List[CostPair]:
    """CostPair per height 2..h from the bottom-up recurrences
    C_I(m) = C_P(m-1) and
    C_P(m) = (C_I(m-1) + C_P(m-1) + log(2^(m-1) + 2^(m-2) - 1)) / 2."""
    if h < 2:
        raise ValueError("recurrences start at h = 2")
    lb = math.log(log_base)
    pairs = [CostPair(2, 0.0, math.log(2) / lb / 2)]
    for m in range(3, h + 1):
        prev = pairs[-1]
        far_len = (1 << (m - 1)) + (1 << (m - 2)) - 1
        c_in = prev.c_pre
        c_pre = 0.5 * (prev.c_in + prev.c_pre + math.log(far_len) / lb)
        pairs.append(CostPair(m, c_in, c_pre))
    return pairs


@dataclass
class CheckRow:
    name: str
    ok: bool
    detail: str


def verify_recurrence_inequalities(h_max: int, tol: float = 1e-9) -> List[CheckRow]:
    """The two induction inequalities and both corollary equalities, for
    every 3 <= h <= h_max."""
    if h_max < 3:
        raise ValueError("need h_max >= 3")
    pairs = {p.height: p for p in dp_g1_costs(h_max)}
    rows = []
    for h in range(3, h_max + 1):
        lo, hi = pairs[h - 1], pairs[h]
        f = math.log2((1 << (h - 1)) + (1 << (h - 2)) - 1)
        checks = [
            (f"ineq3 h={h}", lo.c_pre <= lo.c_in + (h - 2) + tol,
             f"C_P({h-1})={lo.c_pre:.6f} <= C_I({h-1})+(h-2)={lo.c_in + h - 2:.6f}"),
            (f"ineq4 h={h}", lo.c_in + f <= lo.c_pre + (h - 1) + tol,
             f"C_I({h-1})+log2(...)={lo.c_in + f:.6f} <= C_P({h-1})+(h-1)={lo.c_pre + h - 1:.6f}"),
            (f"eq-in h={h}", abs(hi.c_in - lo.c_pre) <= tol,
             f"C_I({h})={hi.c_in:.9f} vs C_P({h-1})={lo.c_pre:.9f}"),
            (f"eq-pre h={h}", abs(hi.c_pre - 0.5 * (lo.c_in + lo.c_pre + f)) <= tol,
             f"C_P({h})={hi.c_pre:.9f}"),
        ]
        rows.extend(CheckRow(n, bool(ok), d) for n, ok, d in checks)
    return rows


# ---------------------------------------------------------------------------
# Tiny unrestricted search over raw permutations.
# ---------------------------------------------------------------------------

MAX_PERM_HEIGHT = 3


@dataclass
class TinySearchResult:
    h: int
    metric: str
    scheme: WeightScheme
    best_cost: float
    best_positions: Optional[Tuple[int, ...]]
    recursive_best: Optional[float]
    recursive_attains: Optional[bool]


def _all_recursive_layouts(h: int):
    """Every layout expressible with the supported nomenclature at tiny h:
    orientation x k x alternation x cut function (per height)."""
    heights = range(2, h + 1)
    cut_ranges = [range(1, m) for m in heights]
    for cuts in itertools.product(*cut_ranges):
        table = {}
        for m, g in zip(heights, cuts):
            table[(_I, m)] = g
            table[(_P, m)] = g
        policy = Table.from_dict(table)
        for o in (_I, _P):
            for k in (1, 2, math.inf):
                for alt in (False, True):
                    yield LayoutSpec(o, k, policy, alt)


def best_permutation_tiny(h: int, scheme: WeightScheme, metric: str) -> TinySearchResult:
    """Exhaustive minimum over all node-to-position bijections, plus whether
    some layout from the recursive family attains it."""
    if h > MAX_PERM_HEIGHT:
        raise ValueError(f"unrestricted search limited to h <= {MAX_PERM_HEIGHT}")
    if h == 1:
        return TinySearchResult(h, metric, scheme, 1.0, (1,), 1.0, True)
    n = (1 << h) - 1
    child, w, W = _g1_metric_arrays(h, scheme)
    pos = np.zeros(n + 1, dtype=np.int64)
    best = math.inf
    best_perm = None
    for perm in itertools.permutations(range(1, n + 1)):
        pos[1:] = perm
        c = g1_cost(pos, child, w, W, metric)
        if c < best:
            best = c
            best_perm = perm
    rec_best = math.inf
    for spec in _all_recursive_layouts(h):
        lay = build_layout(spec, h)
        c = g1_cost(lay.position, child, w, W, metric)
        rec_best = min(rec_best, c)
    return TinySearchResult(
        h, metric, scheme, best, best_perm, rec_best,
        bool(rec_best <= best * (1 + 1e-12) + 1e-12),
    )


# ---------------------------------------------------------------------------
# Optimal cut heights: one decision per (orientation, height), found
# bottom-up because a subtree's best arrangement depends only on its height
# and orientation once all smaller heights are fixed.
# ---------------------------------------------------------------------------

MAX_CUT_SEARCH_HEIGHT = 12


@dataclass
class CutRow:
    orientation: Orientation
    height: int
    best_g: int
    ties: List[int]
    cost: float


def optimal_cut_heights(
    h_max: int,
    scheme: WeightScheme = WeightScheme.GEOMETRIC,
    first_inorder=2,
    alternating: bool = True,
    rel_tol: float = 1e-12,
) -> List[CutRow]:
    """For each height m <= h_max and root orientation, the cut g in
    [1, floor(m/2)] minimizing P0w of the standalone height-m tree, with
    bottom subtrees following the k rule and smaller heights already fixed
    at their optima.  Equal-cost cuts are reported as ties and resolved
    toward the largest g: collapsing an in-order cut to g=1 reproduces the
    same layout, so the small-g duplicates carry no information.
    """
    if h_max > MAX_CUT_SEARCH_HEIGHT:
        raise ValueError(f"cut search limited to h <= {MAX_CUT_SEARCH_HEIGHT}")
    cuts: Dict[Tuple[Orientation, int], int] = {}
    rows: List[CutRow] = []
    for m in range(2, h_max + 1):
        for o in (_I, _P):
            costs = {}
            for g in range(1, max(1, m // 2) + 1):
                trial = dict(cuts)
                trial[(o, m)] = g
                spec = LayoutSpec(o, first_inorder, Table.from_dict(trial), alternating)
                lay = build_layout(spec, m)
                costs[g] = locality_stats(lay, scheme).p0w
            mn = min(costs.values())
            ties = sorted(g for g, c in costs.items() if c <= mn * (1 + rel_tol))
            best_g = max(ties)
            cuts[(o, m)] = best_g
            rows.append(CutRow(o, m, best_g, ties, mn))
    return rows


# ---------------------------------------------------------------------------
# Branch instrumentation: connecting-edge lengths per recursion branch,
# used to check that alternation preserves per-branch length sums while
# never increasing per-branch length products.
# ---------------------------------------------------------------------------

def branch_profiles(spec: LayoutSpec, h: int) -> Dict[Tuple[int, int], List[int]]:
    """Map (branch root bfs, branch height) -> lengths of the edges between
    the branch's top-subtree leaves and its bottom-subtree roots."""
    lay = build_layout(spec, h)
    pos = lay.position
    out: Dict[Tuple[int, int], List[int]] = {}

    def walk(r, v, o, side):
        if v == 1:
            return
        g = spec.cut.cut(o, v)
        lens = []
        for c in range(r << g, (r << g) + (1 << g)):
            lens.append(abs(int(pos[c >> 1]) - int(pos[c])))
            xa = c >> 1
            sigma = implicit._leaf_rank(spec, o, g, side, r, xa)
            _, _, orient, child_side = implicit._bottom_slot(
                spec, o, g, side, sigma, (c & 1) == 0
            )
            walk(c, v - g, orient, child_side)
        out[(r, v)] = lens
        walk(r, g, o, side)

    walk(1, h, spec.orientation, LEFT)
    return out


def alternation_branch_check(spec: LayoutSpec, h: int):
    """Compare a plain spec with its alternating version branch by branch.

    Returns (sums_equal, products_ok, p0w_plain, p0w_alt): per-branch
    connecting-edge sums must match exactly and products must not grow.
    """
    from .layouts import alternate

    plain = branch_profiles(spec, h)
    alt = branch_profiles(alternate(spec), h)
    if set(plain) != set(alt):
        raise AssertionError("branch decompositions differ")
    sums_equal = all(sum(plain[k]) == sum(alt[k]) for k in plain)
    products_ok = all(math.prod(alt[k]) <= math.prod(plain[k]) for k in plain)
    g = WeightScheme.GEOMETRIC
    p0_plain = locality_stats(build_layout(spec, h), g).p0w
    p0_alt = locality_stats(build_layout(alternate(spec), h), g).p0w
    return sums_equal, products_ok, p0_plain, p0_alt
