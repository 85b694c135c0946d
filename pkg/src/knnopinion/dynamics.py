"""Core update laws: k-nearest-neighbor averaging and asynchronous bounded
confidence (ABC), plus neighbor selection and the interaction graph.

Neighbor rule (k-NN): order all agents by (|x_j - x_i|, j) ascending and take
the first k. The id component makes the order strictly total, so the neighbor
set is unique; ties always resolve toward the lower agent id. The updating
agent may or may not survive into its own neighbor set.

ABC rule: all agents within distance d, always including the agent itself.

Agent ids are 1-based in every public interface.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .numerics import Scalar, coerce_all, mean_of


class ParameterError(ValueError):
    """Out-of-range k, d or agent id."""


class Configuration:
    """Immutable vector of n opinions, agent ids 1..n, single backend."""

    __slots__ = ("opinions", "backend")

    def __init__(self, opinions: Sequence):
        if len(opinions) == 0:
            raise ParameterError("a configuration needs at least one agent")
        vals, backend = coerce_all(opinions)
        object.__setattr__(self, "opinions", tuple(vals))
        object.__setattr__(self, "backend", backend)

    def __setattr__(self, name, value):
        raise AttributeError("Configuration is immutable")

    @property
    def n(self) -> int:
        return len(self.opinions)

    def opinion(self, i: int) -> Scalar:
        self._check_agent(i)
        return self.opinions[i - 1]

    def agents(self) -> range:
        return range(1, self.n + 1)

    def replace(self, i: int, value: Scalar) -> "Configuration":
        # value comes out of backend-preserving arithmetic, so the costly
        # re-coercion of Configuration() is skipped
        self._check_agent(i)
        ops = list(self.opinions)
        ops[i - 1] = value
        out = object.__new__(Configuration)
        object.__setattr__(out, "opinions", tuple(ops))
        object.__setattr__(out, "backend", self.backend)
        return out

    def without(self, i: int) -> "Configuration":
        self._check_agent(i)
        if self.n == 1:
            raise ParameterError("cannot remove the last agent")
        return Configuration([v for j, v in enumerate(self.opinions) if j != i - 1])

    def _check_agent(self, i: int) -> None:
        if not 1 <= i <= self.n:
            raise ParameterError(f"agent id {i} out of range 1..{self.n}")

    def __eq__(self, other):
        return (
            isinstance(other, Configuration)
            and self.backend == other.backend
            and self.opinions == other.opinions
        )

    def __hash__(self):
        return hash((self.backend, self.opinions))

    def __repr__(self):
        return f"Configuration({list(self.opinions)!r})"


@dataclass(frozen=True)
class NeighborSet:
    """Neighbor ids of one agent, in selection order (distance, then id)."""

    agent: int
    members: tuple


@dataclass(frozen=True)
class InteractionGraph:
    n: int
    edges: frozenset  # directed (i, j) pairs, 1-based

    def out_neighbors(self, i: int) -> set:
        return {j for (a, j) in self.edges if a == i}

    def to_edge_list(self) -> str:
        lines = [f"{i} {j}" for (i, j) in sorted(self.edges)]
        return "\n".join(lines) + "\n"


def _check_k(k: int, n: int) -> None:
    if not 1 <= k <= n:
        raise ParameterError(f"k={k} violates 1 <= k <= n={n}")


# Positional (0-based) primitives shared by the simulation hot loops.

def _float_floor(value) -> float:
    try:
        return float(value)
    except OverflowError:
        return float("inf") if value > 0 else float("-inf")


def knn_indices(opinions: Sequence[Scalar], idx: int, k: int) -> list:
    """0-based indices of the k nearest opinions to opinions[idx], ties to
    the lower index. The positional order must match the agent-id order."""
    xi = opinions[idx]
    n = len(opinions)
    if isinstance(xi, Fraction):
        # rational comparisons are slow; float() is monotonic on rationals,
        # so a float primary key orders almost everything and the exact key
        # only breaks genuine float ties
        dists = [abs(o - xi) for o in opinions]
        order = sorted(range(n), key=lambda j: (_float_floor(dists[j]), dists[j], j))
    else:
        order = sorted(range(n), key=lambda j: (abs(opinions[j] - xi), j))
    return order[:k]


def abc_indices(opinions: Sequence[Scalar], idx: int, d: Scalar) -> list:
    xi = opinions[idx]
    return [j for j, xj in enumerate(opinions) if abs(xj - xi) <= d]


def knn_updated_value(opinions: Sequence[Scalar], idx: int, k: int) -> Scalar:
    return mean_of([opinions[j] for j in knn_indices(opinions, idx, k)])


def abc_updated_value(opinions: Sequence[Scalar], idx: int, d: Scalar) -> Scalar:
    return mean_of([opinions[j] for j in abc_indices(opinions, idx, d)])


# 1-based public operations over Configuration.

def knn_neighbors(config: Configuration, i: int, k: int) -> NeighborSet:
    _check_k(k, config.n)
    config._check_agent(i)
    idxs = knn_indices(config.opinions, i - 1, k)
    return NeighborSet(agent=i, members=tuple(j + 1 for j in idxs))


def knn_update(config: Configuration, i: int, k: int) -> Configuration:
    _check_k(k, config.n)
    config._check_agent(i)
    return config.replace(i, knn_updated_value(config.opinions, i - 1, k))


def abc_neighbors(config: Configuration, i: int, d: Scalar) -> NeighborSet:
    config._check_agent(i)
    if d < 0:
        raise ParameterError("confidence range d must be >= 0")
    idxs = abc_indices(config.opinions, i - 1, d)
    return NeighborSet(agent=i, members=tuple(j + 1 for j in idxs))


def abc_update(config: Configuration, i: int, d: Scalar) -> Configuration:
    config._check_agent(i)
    if d < 0:
        raise ParameterError("confidence range d must be >= 0")
    return config.replace(i, abc_updated_value(config.opinions, i - 1, d))


def interaction_graph(config: Configuration, k: int) -> InteractionGraph:
    _check_k(k, config.n)
    edges = set()
    for i in config.agents():
        for j in knn_neighbors(config, i, k).members:
            edges.add((i, j))
    return InteractionGraph(n=config.n, edges=frozenset(edges))


def diameter(config: Configuration) -> Scalar:
    return max(config.opinions) - min(config.opinions)
