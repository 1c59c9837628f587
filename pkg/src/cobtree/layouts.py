"""Recursive tree layouts: cut policies, layout specs, and the builder.

A layout maps every breadth-first node index of a complete binary tree to a
1-based storage position.  Layouts in this family are built by recursively
cutting a subtree of height m into a top subtree of height g = cut(m) and
2^g bottom subtrees of height m - g, then arranging the pieces contiguously:

* an in-order top subtree sits in the middle of its bottom subtrees, a
  pre-order top subtree at the end nearer its parent leaf (the mirror,
  post-order placement covers blocks left of their parent);
* the children of the leftmost 2^(g-2) leaves of an in-order top subtree
  form the left bottom subtrees;
* counting outward from the top subtree, bottom subtrees before position k
  are arranged pre-order, those at or after position k in-order;
* per side, bottom subtrees follow the storage order of their parent
  leaves outward, or the reverse order when the layout is alternating;
* the two child subtrees of one parent leaf occupy adjacent blocks, the
  left child's block leftmost in storage;
* the cut height depends only on subtree height and orientation.
"""

import enum
import math
import re
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .tree_model import MAX_HEIGHT, TreeShape

# Full materialization above this height needs > 1 GiB of positions.
MAX_MATERIALIZED_HEIGHT = 28

K_INF = math.inf


class Orientation(enum.Enum):
    IN_ORDER = "I"
    PRE_ORDER = "P"


# ---------------------------------------------------------------------------
# Cut policies
# ---------------------------------------------------------------------------

class CutPolicy:
    """Maps (orientation, subtree height m >= 2) to a cut height g."""

    def cut(self, orientation: Orientation, m: int) -> int:
        raise NotImplementedError

    def spec_token(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class Const(CutPolicy):
    value: int

    def cut(self, orientation, m):
        return self.value

    def spec_token(self):
        return str(self.value)


@dataclass(frozen=True)
class Half(CutPolicy):
    def cut(self, orientation, m):
        return m // 2

    def spec_token(self):
        return "half"


@dataclass(frozen=True)
class HeightMinusOne(CutPolicy):
    def cut(self, orientation, m):
        return m - 1

    def spec_token(self):
        return "h-1"


@dataclass(frozen=True)
class Bender(CutPolicy):
    """Bottom subtrees get the largest power-of-two height below m."""

    def cut(self, orientation, m):
        if m < 2:
            raise ValueError(f"cut undefined for height {m}")
        p = 1
        while p * 2 < m:
            p *= 2
        return m - p

    def spec_token(self):
        return "bender"


def _opt_pre_cut(m: int) -> int:
    # One exception at m = 5, where the plain rule floor((m-1)/2) = 2 loses.
    if m <= 5:
        return 1
    return (m - 1) // 2


@dataclass(frozen=True)
class Opt(CutPolicy):
    """Empirically optimal cuts: pre-order subtrees at max{1, floor((m-1)/2)}
    with the height-5 exception, in-order subtrees one level above the
    pre-order cut of their children."""

    def cut(self, orientation, m):
        if orientation is Orientation.PRE_ORDER:
            return _opt_pre_cut(m)
        if m == 2:
            return 1
        return _opt_pre_cut(m - 1) + 1

    def spec_token(self):
        return "opt"


@dataclass(frozen=True)
class OptNormalized(CutPolicy):
    """Opt with every in-order cut collapsed to 1; builds the same layout
    but turns in-order index steps into cheaper pre-order steps."""

    def cut(self, orientation, m):
        if orientation is Orientation.IN_ORDER:
            return 1
        return _opt_pre_cut(m)

    def spec_token(self):
        return "opt"


@dataclass(frozen=True)
class Table(CutPolicy):
    """Explicit (orientation, height) -> cut mapping."""

    entries: tuple  # sorted tuple of ((Orientation, m), g) pairs

    @staticmethod
    def from_dict(mapping) -> "Table":
        items = tuple(sorted(mapping.items(), key=lambda kv: (kv[0][0].value, kv[0][1])))
        return Table(items)

    def _lookup(self):
        return dict(self.entries)

    def cut(self, orientation, m):
        try:
            return self._lookup()[(orientation, m)]
        except KeyError:
            raise KeyError(f"no cut entry for ({orientation.value}, {m})") from None

    def spec_token(self):
        return "table"


# ---------------------------------------------------------------------------
# Layout specifications
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LayoutSpec:
    """Orientation of the outermost cut, position k of the first in-order
    bottom subtree counting outward (inf = all pre-order, None = irrelevant
    because all bottom subtrees are single nodes), cut policy, and whether
    bottom subtrees run in reverse (alternating) leaf order."""

    orientation: Orientation
    first_inorder: Optional[Union[int, float]]
    cut: CutPolicy
    alternating: bool = False
    name: Optional[str] = field(default=None, compare=False)

    @property
    def k(self) -> Union[int, float]:
        return K_INF if self.first_inorder is None else self.first_inorder

    def spec_string(self) -> str:
        k = self.first_inorder
        ktok = "*" if k is None else ("inf" if k == K_INF else str(k))
        tilde = "~" if self.alternating else ""
        return f"{tilde}{self.orientation.value}^{self.cut.spec_token()}_{ktok}"

    def label(self) -> str:
        return self.name or self.spec_string()


_I = Orientation.IN_ORDER
_P = Orientation.PRE_ORDER

NAMED_SPECS = {
    "pre-order":   LayoutSpec(_P, K_INF, Const(1), False, name="pre-order"),
    "in-order":    LayoutSpec(_I, 1, Const(1), False, name="in-order"),
    "minwla":      LayoutSpec(_I, K_INF, Const(1), False, name="minwla"),
    "minep":       LayoutSpec(_I, 2, Const(1), False, name="minep"),
    "pre-veb":     LayoutSpec(_P, K_INF, Half(), False, name="pre-veb"),
    "in-veb":      LayoutSpec(_I, 1, Half(), False, name="in-veb"),
    "pre-veba":    LayoutSpec(_P, K_INF, Half(), True, name="pre-veba"),
    "in-veba":     LayoutSpec(_I, 1, Half(), True, name="in-veba"),
    "halfwep":     LayoutSpec(_I, 2, Half(), True, name="halfwep"),
    "minwep":      LayoutSpec(_I, 2, Opt(), True, name="minwep"),
    "bender":      LayoutSpec(_P, K_INF, Bender(), False, name="bender"),
    "pre-breadth": LayoutSpec(_P, None, HeightMinusOne(), False, name="pre-breadth"),
    "in-breadth":  LayoutSpec(_I, None, HeightMinusOne(), False, name="in-breadth"),
}

LAYOUT_NAMES = tuple(NAMED_SPECS)


def named_spec(name: str) -> LayoutSpec:
    try:
        return NAMED_SPECS[name.lower()]
    except KeyError:
        raise KeyError(
            f"unknown layout {name!r}; known: {', '.join(LAYOUT_NAMES)}"
        ) from None


_SPEC_RE = re.compile(r"^(~?)([IP])\^([a-z0-9-]+)_(1|2|inf|\*)$", re.IGNORECASE)


def parse_spec(text: str) -> LayoutSpec:
    """Parse a layout name or a spec string ``[~]<I|P>^<cut>_<k>`` with
    cut in {integer, half, h-1, bender, opt} and k in {1, 2, inf, *}."""
    if text.lower() in NAMED_SPECS:
        return NAMED_SPECS[text.lower()]
    m = _SPEC_RE.match(text.strip())
    if not m:
        raise KeyError(f"cannot parse layout spec {text!r}")
    tilde, orient, cut_tok, k_tok = m.groups()
    orientation = _I if orient.upper() == "I" else _P
    cut_tok = cut_tok.lower()
    if cut_tok == "half":
        cut: CutPolicy = Half()
    elif cut_tok == "h-1":
        cut = HeightMinusOne()
    elif cut_tok == "bender":
        cut = Bender()
    elif cut_tok == "opt":
        cut = Opt()
    elif cut_tok.isdigit():
        cut = Const(int(cut_tok))
    else:
        raise KeyError(f"unknown cut token {cut_tok!r} in {text!r}")
    k_tok = k_tok.lower()
    k: Optional[Union[int, float]]
    if k_tok == "*":
        k = None
    elif k_tok == "inf":
        k = K_INF
    else:
        k = int(k_tok)
    return LayoutSpec(orientation, k, cut, alternating=bool(tilde))


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

@dataclass
class ValidationReport:
    ok: bool
    problems: list

    def __bool__(self):
        return self.ok


def _reachable_orientations(orientation, g, k, pre_branch):
    """Orientations occurring among the bottom subtrees of one branch."""
    per_side = (1 << (g - 1)) if not pre_branch else (1 << g)
    out = set()
    if k > 1:
        out.add(_P)
    if k <= per_side:
        out.add(_I)
    return out


def validate_spec(spec: LayoutSpec, h: int) -> ValidationReport:
    """Check that the cut policy is well defined on every (orientation,
    height) pair the recursion can reach from height h, and that k is one
    of the supported subscripts."""
    problems = []
    if spec.first_inorder is not None and spec.first_inorder not in (1, 2, K_INF):
        problems.append(
            f"subscript k={spec.first_inorder} unsupported (must be 1, 2 or inf)"
        )
        return ValidationReport(False, problems)
    if h < 1:
        problems.append(f"height {h} out of range")
        return ValidationReport(False, problems)

    seen = set()
    stack = [(spec.orientation, h)]
    while stack:
        o, m = stack.pop()
        if m < 2 or (o, m) in seen:
            continue
        seen.add((o, m))
        try:
            g = spec.cut.cut(o, m)
        except KeyError:
            problems.append(
                f"restriction (g) incomplete: no cut for ({o.value}, {m})"
            )
            continue
        except ValueError as exc:
            problems.append(str(exc))
            continue
        if not 1 <= g <= m - 1:
            problems.append(
                f"cut g={g} out of range [1, {m - 1}] for ({o.value}, {m})"
            )
            continue
        stack.append((o, g))
        pre_branch = o is _P
        for ob in _reachable_orientations(o, g, spec.k, pre_branch):
            stack.append((ob, m - g))
    return ValidationReport(not problems, problems)


# ---------------------------------------------------------------------------
# Layout objects
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Layout:
    """A bijection from breadth-first index to 1-based storage position.

    ``position`` has length n+1; entry 0 is unused."""

    shape: TreeShape
    position: np.ndarray
    label: str = "layout"

    def position_of(self, bfs_index: int) -> int:
        if not 1 <= bfs_index <= self.shape.n_nodes:
            raise ValueError(f"bfs index {bfs_index} out of range")
        return int(self.position[bfs_index])

    def inverse(self) -> np.ndarray:
        """Array mapping storage position -> bfs index (entry 0 unused)."""
        inv = np.zeros(self.shape.n_nodes + 1, dtype=np.int64)
        inv[self.position[1:]] = np.arange(1, self.shape.n_nodes + 1)
        return inv

    def is_bijection(self) -> bool:
        seen = np.zeros(self.shape.n_nodes + 1, dtype=bool)
        seen[self.position[1:]] = True
        return bool(seen[1:].all())


def layout_equal(a: Layout, b: Layout) -> bool:
    if a.shape.height != b.shape.height:
        raise ValueError(
            f"height mismatch: {a.shape.height} vs {b.shape.height}"
        )
    return bool(np.array_equal(a.position[1:], b.position[1:]))


def layout_from_positions(h: int, position, label: str = "layout") -> Layout:
    """Wrap an explicit bfs -> position mapping (entry 0 ignored/absent)."""
    shape = TreeShape(h)
    pos = np.asarray(position, dtype=np.int64)
    if pos.shape[0] == shape.n_nodes:
        pos = np.concatenate([[0], pos])
    if pos.shape[0] != shape.n_nodes + 1:
        raise ValueError("position array has wrong length")
    lay = Layout(shape, pos, label)
    if not lay.is_bijection():
        raise ValueError("positions are not a bijection onto 1..n")
    return lay


# ---------------------------------------------------------------------------
# Builder
#
# A subtree's arrangement depends only on (orientation, height, side of the
# parent), so the builder assembles memoized per-shape templates.  A template
# for a virtual subtree of v levels maps relative bfs index (root = 1) to a
# 0-based offset within the subtree's block.
# ---------------------------------------------------------------------------

LEFT = "L"    # parent leaf lies left of this block
RIGHT = "R"   # parent leaf lies right of this block


def _branch_slots(spec, o, g, side, leaf_order):
    """Expand one branch into bottom-subtree placements.

    ``leaf_order``: relative bfs indices of the top subtree's leaves in
    storage order.  Returns a list of (child_rel, block_index, orientation,
    child_side) where block_index counts bottom blocks left to right in
    storage (the top subtree's block is not counted).
    """
    k = spec.k
    alt = spec.alternating
    slots = []

    def emit_run(owners_outward, n_blocks, side_is_left, base_index):
        # owners_outward: parent leaves enumerated from the top subtree
        # outward; alternating layouts reverse this enumeration.  The two
        # children of one leaf take adjacent blocks, the left child's block
        # leftmost in storage, so the near child differs per run direction.
        owners = owners_outward[::-1] if alt else owners_outward
        for q, x in enumerate(owners):
            p_near, p_far = 2 * q + 1, 2 * q + 2  # 1-based outward positions
            if side_is_left:
                near_child, far_child = 2 * x + 1, 2 * x
            else:
                near_child, far_child = 2 * x, 2 * x + 1
            for child, p in ((near_child, p_near), (far_child, p_far)):
                orient = _P if p < k else _I
                if side_is_left:
                    slots.append((child, base_index + n_blocks - p, orient, RIGHT))
                else:
                    slots.append((child, base_index + p - 1, orient, LEFT))

    if o is _I:
        per_side = 1 << (g - 1)
        if g == 1:
            x = int(leaf_order[0])
            slots.append((2 * x, 0, _P if 1 < k else _I, RIGHT))
            slots.append((2 * x + 1, 1, _P if 1 < k else _I, LEFT))
        else:
            half = 1 << (g - 2)
            left_leaves = [int(v) for v in leaf_order[:half]]
            right_leaves = [int(v) for v in leaf_order[half:]]
            # Left side: the outward enumeration runs right to left.
            emit_run(left_leaves[::-1], per_side, True, 0)
            emit_run(right_leaves, per_side, False, per_side)
    else:
        owners = [int(v) for v in leaf_order]
        if side is LEFT:
            emit_run(owners, 1 << g, False, 0)
        else:
            emit_run(owners[::-1], 1 << g, True, 0)
    return slots


def _template(spec, o, v, side, memo):
    """Relative-position template for a virtual subtree of v levels."""
    key = (o, v, side if o is _P else None)
    hit = memo.get(key)
    if hit is not None:
        return hit

    size = (1 << v) - 1
    tpl = np.empty((1 << v), dtype=np.int64)
    tpl[0] = -1
    if v == 1:
        tpl[1] = 0
        memo[key] = tpl
        return tpl

    g = spec.cut.cut(o, v)
    if not 1 <= g <= v - 1:
        raise ValueError(
            f"cut g={g} invalid for ({o.value}, {v}); "
            "validate the spec before building"
        )
    a_size = (1 << g) - 1
    nb_h = v - g
    nb = (1 << nb_h) - 1

    ta = _template(spec, o, g, side, memo)
    # Leaves of the top subtree in storage order.
    leaf_lo = 1 << (g - 1)
    leaves = np.arange(leaf_lo, 2 * leaf_lo)
    leaf_order = leaves[np.argsort(ta[leaf_lo:2 * leaf_lo], kind="stable")]

    slots = _branch_slots(spec, o, g, side, leaf_order)
    if o is _I:
        a_off = (1 << (g - 1)) * nb
        per_side = 1 << (g - 1)

        def block_offset(idx):
            # Blocks left of the top subtree, then the top block, then right.
            if idx < per_side:
                return idx * nb
            return a_off + a_size + (idx - per_side) * nb
    else:
        a_off = 0 if side is LEFT else size - a_size

        def block_offset(idx):
            if side is LEFT:
                return a_size + idx * nb
            return idx * nb

    # Copy the top subtree template level by level (contiguous runs).
    for j in range(g):
        lo, hi = 1 << j, 1 << (j + 1)
        tpl[lo:hi] = a_off + ta[lo:hi]

    for child, block_idx, orient, child_side in slots:
        tb = _template(spec, orient, nb_h, child_side, memo)
        off = block_offset(block_idx)
        for j in range(nb_h):
            w = 1 << j
            tpl[child * w: child * w + w] = off + tb[w: 2 * w]

    memo[key] = tpl
    return tpl


def build_layout(spec: LayoutSpec, h: int) -> Layout:
    """Materialize the full bfs -> position permutation for height h."""
    if h > MAX_MATERIALIZED_HEIGHT:
        raise ValueError(
            f"refusing to materialize height {h} (> {MAX_MATERIALIZED_HEIGHT}); "
            "use the implicit index translation instead"
        )
    report = validate_spec(spec, h)
    if not report.ok:
        raise ValueError("invalid spec: " + "; ".join(report.problems))
    shape = TreeShape(h)
    memo = {}
    # A pre-order outermost top subtree has no parent leaf; it goes leftmost.
    tpl = _template(spec, spec.orientation, h, LEFT, memo)
    position = np.empty(shape.n_nodes + 1, dtype=np.int64)
    position[0] = 0
    position[1:] = tpl[1:] + 1
    return Layout(shape, position, spec.label())


def alternate(spec: LayoutSpec) -> LayoutSpec:
    """The alternating version of a spec (bottom subtrees in reverse leaf
    order); leaves the weighted edge sum unchanged and never increases the
    weighted edge product."""
    if spec.alternating:
        raise ValueError(f"spec {spec.label()} is already alternating")
    name = None
    if spec.name in ("pre-veb", "in-veb"):
        name = spec.name + "a"
    return LayoutSpec(spec.orientation, spec.first_inorder, spec.cut, True, name=name)


# ---------------------------------------------------------------------------
# Permutation file I/O
# ---------------------------------------------------------------------------

def write_permutation(layout: Layout, fp) -> None:
    """Text format: header ``bfs,pos`` then one ``bfs_index,position`` line
    per node, sorted by bfs index."""
    fp.write("bfs,pos\n")
    pos = layout.position
    for i in range(1, layout.shape.n_nodes + 1):
        fp.write(f"{i},{pos[i]}\n")


def read_permutation(fp, label: str = "file") -> Layout:
    header = fp.readline().strip()
    if header != "bfs,pos":
        raise ValueError(f"bad permutation header {header!r}")
    pairs = []
    for line in fp:
        line = line.strip()
        if not line:
            continue
        a, b = line.split(",")
        pairs.append((int(a), int(b)))
    n = len(pairs)
    h = n.bit_length()
    if (1 << h) - 1 != n:
        raise ValueError(f"{n} rows is not a complete tree")
    pos = np.zeros(n + 1, dtype=np.int64)
    for a, b in pairs:
        pos[a] = b
    return layout_from_positions(h, pos[1:], label)
