"""Sector bases: ordered enumeration of the computational configurations of a
dynamically closed symmetry / Krylov sector.

Conventions
-----------
A configuration over ``n_sites`` binary degrees of freedom (spins or dimer
links) is stored as a python int with site 0 at the MOST significant bit:
``bit(site i) = (config >> (n_sites - 1 - i)) & 1``.  With this layout the
0/1 string of a configuration (site 0 first) is just its binary rendering,
and sorting by integer value equals lexicographic sorting of the strings.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from itertools import combinations
from math import comb
from typing import Iterable, Sequence

import numpy as np

from .errors import CapacityError, MalformedMoveError

DEFAULT_BASIS_BUDGET = 2_000_000


def bit_at(config: int, site: int, n_sites: int) -> int:
    return (config >> (n_sites - 1 - site)) & 1


def site_mask(site: int, n_sites: int) -> int:
    return 1 << (n_sites - 1 - site)


def config_to_string(config: int, n_sites: int) -> str:
    return format(config, f"0{n_sites}b")


def string_to_config(s: str) -> int:
    return int(s, 2)


@dataclass(frozen=True)
class LocalMove:
    """Involutive local rewrite: pattern_a <-> pattern_b on the masked sites."""

    mask: int
    pattern_a: int
    pattern_b: int

    def __post_init__(self):
        if self.pattern_a & ~self.mask or self.pattern_b & ~self.mask:
            raise MalformedMoveError("move patterns extend outside the mask")
        if self.pattern_a == self.pattern_b:
            raise MalformedMoveError("move patterns are identical")

    def apply(self, config: int) -> int | None:
        """Return the rewritten configuration, or None if the move does not match."""
        sub = config & self.mask
        if sub == self.pattern_a:
            return (config & ~self.mask) | self.pattern_b
        if sub == self.pattern_b:
            return (config & ~self.mask) | self.pattern_a
        return None


@dataclass
class SectorBasis:
    """Sorted, indexed list of configurations spanning one closed sector.

    Configurations are stored as uint64 (so n_sites <= 64); bit operations
    against python-int masks go through the helpers below to avoid numpy's
    silent uint64/int promotion pitfalls.
    """

    n_sites: int
    configs: np.ndarray  # uint64, strictly increasing
    sector_label: str
    index: dict[int, int] = field(repr=False, default_factory=dict)
    _bits: np.ndarray | None = field(repr=False, default=None, compare=False)

    def __post_init__(self):
        if self.n_sites > 64:
            raise CapacityError(f"n_sites={self.n_sites} exceeds the 64-bit configuration width")
        self.configs = np.asarray(self.configs, dtype=np.uint64)
        if self.configs.size > 1 and not np.all(self.configs[1:] > self.configs[:-1]):
            raise ValueError("configs must be strictly sorted without duplicates")
        if not self.index:
            self.index = {int(c): i for i, c in enumerate(self.configs)}

    @property
    def size(self) -> int:
        return int(self.configs.size)

    def ordinal(self, config: int) -> int:
        return self.index[int(config)]

    def __contains__(self, config: int) -> bool:
        return int(config) in self.index

    def ordinals(self, configs: np.ndarray) -> np.ndarray:
        """Vectorized lookup via binary search; caller guarantees membership."""
        return np.searchsorted(self.configs, configs.astype(np.uint64))

    def xor(self, mask: int) -> np.ndarray:
        return np.bitwise_xor(self.configs, np.uint64(mask))

    def site_bit(self, site: int) -> np.ndarray:
        """Per-configuration bit of one site, as int64 0/1."""
        shift = np.uint64(self.n_sites - 1 - site)
        return ((self.configs >> shift) & np.uint64(1)).astype(np.int64)

    def bits(self) -> np.ndarray:
        """(size, n_sites) uint8 table of per-site bits, site 0 in column 0."""
        if self._bits is None:
            shifts = np.arange(self.n_sites - 1, -1, -1).astype(np.uint64)
            self._bits = ((self.configs[:, None] >> shifts[None, :]) & np.uint64(1)).astype(
                np.uint8
            )
        return self._bits

    def dump(self, fh) -> None:
        """One configuration per line as a 0/1 string, most-significant site first."""
        for c in self.configs:
            fh.write(config_to_string(int(c), self.n_sites) + "\n")


def _check_budget(size: int, budget: int, what: str) -> None:
    if size > budget:
        raise CapacityError(f"{what}: dimension {size} exceeds budget {budget}")


def enumerate_magnetization_sector(
    n_sites: int, n_up: int, budget: int = DEFAULT_BASIS_BUDGET
) -> SectorBasis:
    """All configurations with exactly ``n_up`` set bits, sorted."""
    if not 0 <= n_up <= n_sites:
        raise ValueError(f"n_up={n_up} outside [0, {n_sites}]")
    _check_budget(comb(n_sites, n_up), budget, "magnetization sector")
    configs = sorted(
        sum(site_mask(i, n_sites) for i in sites) if sites else 0
        for sites in combinations(range(n_sites), n_up)
    )
    return SectorBasis(n_sites, np.array(configs, dtype=np.uint64), f"m{n_up}")


def enumerate_full_space(n_sites: int, budget: int = DEFAULT_BASIS_BUDGET) -> SectorBasis:
    _check_budget(1 << n_sites, budget, "full space")
    return SectorBasis(n_sites, np.arange(1 << n_sites, dtype=np.uint64), "full")


def enumerate_reachable_sector(
    seed: int,
    moves: Sequence[LocalMove],
    n_sites: int,
    budget: int = DEFAULT_BASIS_BUDGET,
    sector_label: str = "reachable",
) -> SectorBasis:
    """Breadth-first closure of ``seed`` under the involutive moves, sorted."""
    seen = {int(seed)}
    queue = deque(seen)
    while queue:
        c = queue.popleft()
        for mv in moves:
            t = mv.apply(c)
            if t is not None and t not in seen:
                seen.add(t)
                if len(seen) > budget:
                    raise CapacityError(
                        f"reachable sector exceeds budget {budget}"
                    )
                queue.append(t)
    return SectorBasis(n_sites, np.array(sorted(seen), dtype=np.uint64), sector_label)


def dfs_closure(seed: int, moves: Sequence[LocalMove]) -> set[int]:
    """Depth-first closure, as an order-independence cross-check for tests."""
    seen = {int(seed)}
    stack = [int(seed)]
    while stack:
        c = stack.pop()
        for mv in moves:
            t = mv.apply(c)
            if t is not None and t not in seen:
                seen.add(t)
                stack.append(t)
    return seen
