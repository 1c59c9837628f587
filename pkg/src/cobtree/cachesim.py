"""Trace-driven multi-level set-associative LRU cache simulation.

Replays the storage positions touched by tree searches against a configured
hierarchy and reports per-level accesses, misses and miss ratios.  A hit at
one level stops probing; a miss at every level fills the line into all of
them (inclusive fill).  Alignment of the tree's base address within a cache
line is either fixed or drawn uniformly at random, matching the random
placement assumption behind the analytic block-transition measure.
"""

import math
from dataclasses import dataclass, field
from typing import List, Sequence, Union

import numpy as np

from .implicit import translate_index
from .layouts import LayoutSpec, build_layout, MAX_MATERIALIZED_HEIGHT


@dataclass(frozen=True)
class CacheLevel:
    capacity_bytes: int
    line_bytes: int
    associativity: int
    policy: str = "lru"

    def __post_init__(self):
        if self.policy != "lru":
            raise ValueError(f"unsupported replacement policy {self.policy!r}")
        if self.capacity_bytes % (self.line_bytes * self.associativity):
            raise ValueError(
                "capacity must be divisible by line_bytes * associativity"
            )

    @property
    def n_sets(self) -> int:
        return self.capacity_bytes // (self.line_bytes * self.associativity)


UNIFORM = "uniform"


@dataclass(frozen=True)
class CacheConfig:
    levels: tuple
    node_bytes: int = 4
    alignment: Union[int, str] = UNIFORM

    def __post_init__(self):
        if not self.levels:
            raise ValueError("at least one cache level required")
        for lv in self.levels:
            if lv.line_bytes % self.node_bytes:
                raise ValueError("line_bytes must be divisible by node_bytes")
        if isinstance(self.alignment, str) and self.alignment != UNIFORM:
            raise ValueError(f"alignment must be an offset or {UNIFORM!r}")

    @property
    def line_nodes(self) -> int:
        return self.levels[0].line_bytes // self.node_bytes


def parse_config(text: str) -> CacheConfig:
    """Flat key-value format: ``level<i>.capacity``, ``level<i>.line``,
    ``level<i>.assoc``, ``node_bytes``, ``alignment`` (int or uniform)."""
    kv = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            key, val = line.split("=", 1)
        else:
            key, val = line.split(None, 1)
        kv[key.strip()] = val.strip()
    levels = []
    i = 1
    while f"level{i}.capacity" in kv:
        levels.append(
            CacheLevel(
                int(kv[f"level{i}.capacity"]),
                int(kv[f"level{i}.line"]),
                int(kv[f"level{i}.assoc"]),
            )
        )
        i += 1
    if not levels:
        raise ValueError("config defines no cache levels")
    node_bytes = int(kv.get("node_bytes", 4))
    align_raw = kv.get("alignment", UNIFORM)
    alignment: Union[int, str] = UNIFORM if align_raw == UNIFORM else int(align_raw)
    return CacheConfig(tuple(levels), node_bytes, alignment)


def load_config(path) -> CacheConfig:
    with open(path, "r", encoding="utf-8") as fp:
        return parse_config(fp.read())


@dataclass
class LevelStats:
    accesses: int
    misses: int

    @property
    def miss_ratio(self) -> float:
        return self.misses / self.accesses if self.accesses else 0.0


class Simulator:
    """One replay instance; holds the LRU state of every level."""

    def __init__(self, config: CacheConfig, seed=None):
        self.config = config
        rng = np.random.default_rng(seed)
        if config.alignment == UNIFORM:
            self.offset_nodes = int(rng.integers(0, config.line_nodes))
        else:
            self.offset_nodes = int(config.alignment) % config.line_nodes
        # sets[level][set_index] is a list of line tags, most recent first
        self._sets = [
            [[] for _ in range(lv.n_sets)] for lv in config.levels
        ]
        self.stats = [LevelStats(0, 0) for _ in config.levels]

    def access(self, position: int) -> int:
        """Touch one storage position; returns the deepest level probed
        (len(levels) means a miss everywhere)."""
        addr = (position - 1 + self.offset_nodes) * self.config.node_bytes
        levels = self.config.levels
        hit_level = len(levels)
        for i, lv in enumerate(levels):
            line = addr // lv.line_bytes
            s = self._sets[i][line % lv.n_sets]
            st = self.stats[i]
            st.accesses += 1
            try:
                s.remove(line)
            except ValueError:
                st.misses += 1
                continue
            s.insert(0, line)
            hit_level = i
            break
        # Fill every level that missed (inclusive hierarchy).
        for i in range(min(hit_level, len(levels))):
            lv = levels[i]
            line = addr // lv.line_bytes
            s = self._sets[i][line % lv.n_sets]
            s.insert(0, line)
            if len(s) > lv.associativity:
                s.pop()
        return hit_level

    def run(self, trace: Sequence[int]) -> List[LevelStats]:
        for p in trace:
            self.access(int(p))
        return self.stats


def simulate(trace: Sequence[int], config: CacheConfig, seed=None) -> List[LevelStats]:
    """Replay a trace of storage positions; per-level access/miss counts."""
    if len(trace) == 0:
        raise ValueError("empty trace")
    sim = Simulator(config, seed)
    return sim.run(trace)


# ---------------------------------------------------------------------------
# Trace construction
# ---------------------------------------------------------------------------

def search_positions_matrix(spec: LayoutSpec, h: int, keys: np.ndarray) -> np.ndarray:
    """Positions of the ancestor chains of many targets at once, one row per
    search, padded with -1 beyond each path's end.  Uses the materialized
    layout when the height permits; equals per-step index translation."""
    keys = np.asarray(keys, dtype=np.int64)
    n = (1 << h) - 1
    if keys.size and (keys.min() < 1 or keys.max() > n):
        raise ValueError("search key out of range")
    depths = np.frexp(keys.astype(np.float64))[1].astype(np.int64) - 1
    if h <= MAX_MATERIALIZED_HEIGHT:
        pos = build_layout(spec, h).position
        lookup = lambda idx: pos[idx]
    else:
        lookup = np.vectorize(lambda i: translate_index(spec, h, int(i)))
    out = np.full((keys.size, h), -1, dtype=np.int64)
    for d in range(h):
        mask = depths >= d
        if not mask.any():
            break
        anc = keys[mask] >> (depths[mask] - d)
        out[mask, d] = lookup(anc)
    return out


def trace_from_searches(spec: LayoutSpec, h: int, keys) -> np.ndarray:
    """Concatenated root-first search paths (storage positions) per key."""
    mat = search_positions_matrix(spec, h, np.asarray(keys, dtype=np.int64))
    flat = mat.ravel()
    return flat[flat > 0]


def random_keys(h: int, count: int, seed=None) -> np.ndarray:
    """Uniform random node indices (every node equally likely)."""
    rng = np.random.default_rng(seed)
    return rng.integers(1, 1 << h, size=count, dtype=np.int64)


# ---------------------------------------------------------------------------
# Convergence experiment: a single one-line cache with per-search uniform
# alignment makes the transition miss rate an unbiased estimate of beta(N).
# ---------------------------------------------------------------------------

def transition_miss_rate(spec: LayoutSpec, h: int, block_nodes: int,
                         n_searches: int, seed=None):
    """(miss_rate, misses, transitions) over random searches through a
    single-block cache of ``block_nodes`` nodes, alignment redrawn uniformly
    per search.  Only within-search transitions count; the cold first access
    of each search does not."""
    rng = np.random.default_rng(seed)
    keys = rng.integers(1, 1 << h, size=n_searches, dtype=np.int64)
    mat = search_positions_matrix(spec, h, keys)
    offsets = rng.integers(0, block_nodes, size=n_searches, dtype=np.int64)
    lines = (mat - 1 + offsets[:, None]) // block_nodes
    valid = (mat[:, 1:] > 0) & (mat[:, :-1] > 0)
    changed = (lines[:, 1:] != lines[:, :-1]) & valid
    transitions = int(valid.sum())
    misses = int(changed.sum())
    return misses / transitions, misses, transitions
