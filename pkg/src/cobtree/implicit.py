"""Breadth-first index to layout position translation in O(path) arithmetic.

Walks the recursive branch decomposition from the spec alone, so positions
of single nodes are available for trees far too large to materialize.  At
each branch the walk either descends into the top subtree or jumps to the
bottom subtree containing the target, accumulating the block offset.  The
jump needs the storage rank of the target's ancestor leaf among the top
subtree's leaves, which the same descent logic provides.
"""

from dataclasses import dataclass
from typing import List

from .layouts import (
    LEFT,
    RIGHT,
    LayoutSpec,
    Orientation,
    validate_spec,
)
from .tree_model import MAX_HEIGHT, level_of

_I = Orientation.IN_ORDER
_P = Orientation.PRE_ORDER


@dataclass(frozen=True)
class SearchStep:
    bfs_index: int
    depth: int
    layout_position: int


def cut_height(spec: LayoutSpec, orientation: Orientation, m: int) -> int:
    """Cut height of a subtree of m levels under the spec's policy."""
    if m < 2:
        raise ValueError(f"cut height undefined for subtree height {m}")
    g = spec.cut.cut(orientation, m)
    if not 1 <= g <= m - 1:
        raise ValueError(f"policy returned invalid cut g={g} for height {m}")
    return g


def _bottom_slot(spec, o, g, side, sigma, child_is_left):
    """Resolve where one bottom subtree lands within its branch.

    ``sigma``: 0-based storage rank of the parent leaf among the top
    subtree's 2^(g-1) leaves.  Returns (on_left_side, outward_p, orientation,
    child_side) with outward_p the 1-based block position counted away from
    the top subtree along its run.
    """
    k = spec.k
    if o is _I:
        if g == 1:
            on_left = child_is_left
            p = 1
        else:
            half = 1 << (g - 2)
            if sigma < half:
                on_left = True
                out_leaf = half - 1 - sigma
            else:
                on_left = False
                out_leaf = sigma - half
            q = (half - 1 - out_leaf) if spec.alternating else out_leaf
            near = child_is_left if not on_left else not child_is_left
            p = 2 * q + 1 if near else 2 * q + 2
    else:
        n_leaves = 1 << (g - 1)
        on_left = side is RIGHT  # bottoms sit on the side away from the parent
        out_leaf = sigma if not on_left else n_leaves - 1 - sigma
        q = (n_leaves - 1 - out_leaf) if spec.alternating else out_leaf
        near = child_is_left if not on_left else not child_is_left
        p = 2 * q + 1 if near else 2 * q + 2
    orient = _P if p < k else _I
    child_side = RIGHT if on_left else LEFT
    return on_left, p, orient, child_side


def _leaf_rank(spec, o, v, side, r, x):
    """Storage rank of x among the 2^(v-1) deepest-level nodes of the
    virtual subtree with root r and v levels."""
    if v == 1:
        return 0
    g = spec.cut.cut(o, v)
    dx = v - 1  # x's level relative to r
    xa = x >> (dx - (g - 1))  # ancestor leaf inside the top subtree
    ca = x >> (dx - g)        # root of the bottom subtree holding x
    sigma = _leaf_rank(spec, o, g, side, r, xa)
    child_is_left = (ca & 1) == 0
    on_left, p, orient, child_side = _bottom_slot(spec, o, g, side, sigma, child_is_left)
    if o is _I:
        per_side = 1 << (g - 1)
        if on_left:
            blocks_left = per_side - p
        else:
            blocks_left = per_side + (p - 1)
    else:
        blocks_left = (p - 1) if side is LEFT else (1 << g) - p
    leaves_per_block = 1 << (v - g - 1)
    return blocks_left * leaves_per_block + _leaf_rank(spec, orient, v - g, child_side, ca, x)


def _translate(spec, o, v, side, r, base, target):
    """0-based offset of target within the block of the virtual subtree
    (r, v); ``base`` is the block's absolute 0-based start."""
    while True:
        if v == 1:
            return base
        g = spec.cut.cut(o, v)
        a_size = (1 << g) - 1
        nb = (1 << (v - g)) - 1
        if o is _I:
            a_off = (1 << (g - 1)) * nb
        else:
            a_off = 0 if side is LEFT else ((1 << v) - 1) - a_size
        d = level_of(target) - level_of(r)
        if d < g:
            base += a_off
            v = g
            continue
        xa = target >> (d - (g - 1))
        ca = target >> (d - g)
        sigma = _leaf_rank(spec, o, g, side, r, xa)
        child_is_left = (ca & 1) == 0
        on_left, p, orient, child_side = _bottom_slot(spec, o, g, side, sigma, child_is_left)
        if o is _I:
            if on_left:
                off = a_off - p * nb
            else:
                off = a_off + a_size + (p - 1) * nb
        else:
            if side is LEFT:
                off = a_size + (p - 1) * nb
            else:
                off = a_off - p * nb
        base += off
        r, v, o, side = ca, v - g, orient, child_side


# Validation result cache: repeated single-node translations of the same
# (spec, height) re-run the policy worklist otherwise.
_VALIDATED: set = set()


def translate_index(spec: LayoutSpec, h: int, bfs_index: int) -> int:
    """Layout position (1-based) of a node, equal to the materialized
    layout's entry, computed without building the permutation."""
    if not 1 <= h <= MAX_HEIGHT:
        raise ValueError(f"height {h} out of range [1, {MAX_HEIGHT}]")
    if not 1 <= bfs_index <= (1 << h) - 1:
        raise ValueError(f"bfs index {bfs_index} out of range [1, {(1 << h) - 1}]")
    if (spec, h) not in _VALIDATED:
        report = validate_spec(spec, h)
        if not report.ok:
            raise ValueError("invalid spec: " + "; ".join(report.problems))
        _VALIDATED.add((spec, h))
    return _translate(spec, spec.orientation, h, LEFT, 1, 0, bfs_index) + 1


def search_path(spec: LayoutSpec, h: int, target_bfs: int) -> List[SearchStep]:
    """Root-to-target ancestor chain with layout positions; the search for
    a node visits exactly these slots, root first."""
    if not 1 <= target_bfs <= (1 << h) - 1:
        raise ValueError(f"target {target_bfs} out of range")
    depth = level_of(target_bfs)
    ancestors = [target_bfs >> (depth - d) for d in range(depth + 1)]
    return [
        SearchStep(a, level_of(a), translate_index(spec, h, a))
        for a in ancestors
    ]
