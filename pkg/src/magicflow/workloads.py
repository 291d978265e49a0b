"""Seeded layered-DAG generators for the three compressibility families.

Nodes are laid out in ``layers`` rows of ``width`` nodes; node id is
``layer * width + index``. Every candidate pair (u in an earlier layer,
v in a later layer) is visited in canonical (layer, index) order and kept
with probability ``edge_density``. The Low family also wires a backbone so
each node has a predecessor in the layer just before it.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

from .dag import CircuitDag
from .rng import SplitMix64


class Family(str, enum.Enum):
    HIGH = "high"
    MEDIUM = "medium"
    LOW = "low"


class InvalidParams(ValueError):
    pass


# Family shapes: (layers, width, edge_density). High and Medium are sparse
# and moderately dense random layered DAGs; Low is a single-width backbone chain.
FAMILY_DEFAULTS: dict[Family, tuple[int, int, float]] = {
    Family.HIGH: (40, 4, 0.16),
    Family.MEDIUM: (40, 3, 0.40),
    Family.LOW: (40, 1, 0.80),
}

SEEDS_PER_FAMILY = 5


@dataclass(frozen=True)
class FamilyParams:
    family: Family
    layers: int
    width: int
    t_fraction: float = 1.0
    edge_density: float | None = None  # None -> family default
    seed: int = 0

    @classmethod
    def default(cls, family: Family | str, seed: int = 0) -> "FamilyParams":
        family = Family(family)
        layers, width, density = FAMILY_DEFAULTS[family]
        return cls(family, layers, width, 1.0, density, seed)

    @property
    def density(self) -> float:
        if self.edge_density is None:
            return FAMILY_DEFAULTS[self.family][2]
        return self.edge_density

    def check(self) -> None:
        if not isinstance(self.family, Family):
            raise InvalidParams(f"unknown family {self.family!r}")
        if self.layers < 1 or self.width < 1:
            raise InvalidParams("layers and width must be >= 1")
        if not (0.0 < self.t_fraction <= 1.0) or math.isnan(self.t_fraction):
            raise InvalidParams(f"t_fraction must lie in (0, 1], got {self.t_fraction}")
        if not (0.0 <= self.density <= 1.0):
            raise InvalidParams(f"edge_density must lie in [0, 1], got {self.density}")
        if not (0 <= self.seed < 2**64):
            raise InvalidParams("seed must be an unsigned 64-bit integer")


def generate(params: FamilyParams) -> CircuitDag:
    params = replace(params, family=Family(params.family))
    params.check()
    rng = SplitMix64(params.seed)
    width = params.width
    n = params.layers * width

    if params.t_fraction >= 1.0:
        is_t = [True] * n
    else:
        is_t = [rng.random() < params.t_fraction for _ in range(n)]

    density = params.density
    backbone = params.family is Family.LOW
    edges: list[tuple[int, int]] = []
    for layer in range(1, params.layers):
        for i in range(width):
            v = layer * width + i
            linked_to_previous = False
            for u in range(layer * width):
                if rng.random() < density:
                    edges.append((u, v))
                    if u >= (layer - 1) * width:
                        linked_to_previous = True
            if backbone and not linked_to_previous:
                edges.append(((layer - 1) * width + rng.below(width), v))
    return CircuitDag(((v, is_t[v]) for v in range(n)), edges)


def family_seeds(master_seed: int, count: int = SEEDS_PER_FAMILY) -> dict[Family, list[int]]:
    """Distinct per-family instance seeds derived from one master seed."""
    rng = SplitMix64(master_seed)
    seeds: dict[Family, list[int]] = {}
    used: set[int] = set()
    for family in Family:
        seeds[family] = []
        while len(seeds[family]) < count:
            s = rng.next_u64()
            if s not in used:
                used.add(s)
                seeds[family].append(s)
    return seeds


def default_sweep_families(master_seed: int = 0) -> list[FamilyParams]:
    return [
        FamilyParams.default(family, seed)
        for family, seeds in family_seeds(master_seed).items()
        for seed in seeds
    ]


# Small hand-built fixtures used by tests and the CLI examples.

def chain(n: int, t: bool = True) -> CircuitDag:
    return CircuitDag([(i, t) for i in range(n)], [(i, i + 1) for i in range(n - 1)])


def independent(n: int) -> CircuitDag:
    return CircuitDag([(i, True) for i in range(n)])


def diamond() -> CircuitDag:
    return CircuitDag([(i, True) for i in range(4)], [(0, 1), (0, 2), (1, 3), (2, 3)])


def chain_plus_isolated(chain_len: int, isolated: int) -> CircuitDag:
    nodes = [(i, True) for i in range(chain_len + isolated)]
    return CircuitDag(nodes, [(i, i + 1) for i in range(chain_len - 1)])
