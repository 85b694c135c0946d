"""Classification of configurations (equilibrium / clustered / consensus),
cluster decomposition, and the two non-clustered equilibrium constructions.

Classification is by direct application of the update map for every agent:
n neighbor computations is cheap at desk scale and the definition itself
leaves no room for shortcut bugs. Exact backend is required; float limits of
Monte Carlo runs go through quantize_clusters instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .dynamics import Configuration, ParameterError, knn_neighbors, knn_update
from .numerics import EXACT, FLOAT, BackendError, Scalar, mean_of


class FloatBackendError(BackendError):
    """Exact classification asked of a float configuration."""


def _require_exact(config: Configuration, what: str) -> None:
    if config.backend != EXACT:
        raise FloatBackendError(
            f"{what} requires the exact backend; "
            "for float configurations use quantize_clusters"
        )


@dataclass(frozen=True)
class ClusterPartition:
    """Same-opinion groups, sorted by ascending opinion."""

    groups: tuple  # of (opinion, frozenset of agent ids)

    @property
    def sizes(self) -> list:
        return [len(members) for _, members in self.groups]

    @property
    def opinions(self) -> list:
        return [op for op, _ in self.groups]

    def min_size(self) -> int:
        return min(self.sizes)

    def to_jsonable(self) -> dict:
        from .numerics import format_scalar

        return {
            "groups": [
                {"opinion": format_scalar(op), "members": sorted(members)}
                for op, members in self.groups
            ],
            "sizes": self.sizes,
        }


@dataclass
class EquilibriumReport:
    is_equilibrium: bool
    is_clustered: bool
    is_consensus: bool
    witnesses: dict = field(default_factory=dict)

    def to_jsonable(self) -> dict:
        return {
            "is_equilibrium": self.is_equilibrium,
            "is_clustered": self.is_clustered,
            "is_consensus": self.is_consensus,
            "witnesses": self.witnesses,
        }


def partition_clusters(config: Configuration) -> ClusterPartition:
    _require_exact(config, "partition_clusters")
    by_value: dict = {}
    for i in config.agents():
        by_value.setdefault(config.opinion(i), set()).add(i)
    groups = tuple(
        (op, frozenset(by_value[op])) for op in sorted(by_value)
    )
    return ClusterPartition(groups=groups)


def is_clustered(config: Configuration, k: int) -> bool:
    """True iff every agent's neighbor set is homogeneous at its own opinion.

    Computed from the definition, then cross-checked against the equivalent
    size criterion (every same-opinion group has >= k members); a mismatch
    would be an implementation bug and raises.
    """
    _require_exact(config, "is_clustered")
    by_definition = True
    for i in config.agents():
        xi = config.opinion(i)
        if any(config.opinion(j) != xi for j in knn_neighbors(config, i, k).members):
            by_definition = False
            break
    by_sizes = partition_clusters(config).min_size() >= k
    if by_definition != by_sizes:
        raise RuntimeError(
            f"cluster-size equivalence violated for {config!r}, k={k}"
        )
    return by_definition


def is_equilibrium(config: Configuration, k: int) -> EquilibriumReport:
    _require_exact(config, "is_equilibrium")
    witnesses: dict = {}

    equilibrium = True
    for i in config.agents():
        if knn_update(config, i, k) != config:
            equilibrium = False
            witnesses["equilibrium"] = {
                "agent": i,
                "neighbors": list(knn_neighbors(config, i, k).members),
            }
            break

    clustered = True
    for i in config.agents():
        xi = config.opinion(i)
        members = knn_neighbors(config, i, k).members
        if any(config.opinion(j) != xi for j in members):
            clustered = False
            witnesses["clustered"] = {"agent": i, "neighbors": list(members)}
            break

    first = config.opinion(1)
    consensus = all(config.opinion(i) == first for i in config.agents())
    if not consensus:
        j = next(i for i in config.agents() if config.opinion(i) != first)
        witnesses["consensus"] = {"agents": [1, j]}

    return EquilibriumReport(
        is_equilibrium=equilibrium,
        is_clustered=clustered,
        is_consensus=consensus,
        witnesses=witnesses,
    )


def max_cluster_count(n: int, k: int) -> int:
    """Upper bound floor(n/k) on the number of distinct clusters."""
    if not 1 <= k <= n:
        raise ParameterError(f"k={k} violates 1 <= k <= n={n}")
    return n // k


def build_clustered(groups, interleave: bool = False) -> Configuration:
    """Configuration from (opinion, size) pairs; ids assigned in blocks, or
    round-robin across groups when interleave is set."""
    if not groups:
        raise ParameterError("need at least one group")
    if interleave:
        pools = [[op] * size for op, size in groups]
        ops = []
        while any(pools):
            for pool in pools:
                if pool:
                    ops.append(pool.pop())
    else:
        ops = [op for op, size in groups for _ in range(size)]
    return Configuration(ops)


def _check_alpha_beta(alpha: Scalar, beta: Scalar) -> None:
    if not (isinstance(alpha, (int, Fraction)) and isinstance(beta, (int, Fraction))):
        raise FloatBackendError("counterexample constructors are exact-only")
    if not alpha < beta:
        raise ParameterError("alpha must be strictly less than beta")


def build_tie_counterexample(alpha: Scalar, beta: Scalar) -> Configuration:
    """n=7 non-clustered equilibrium for k=3 that hinges on the tie rule:
    agents 1,3,5 at alpha, agents 2,4,6 at beta, agent 7 at the midpoint.
    The construction is re-certified before being returned."""
    _check_alpha_beta(alpha, beta)
    alpha, beta = Fraction(alpha), Fraction(beta)
    mid = (alpha + beta) / 2
    config = Configuration([alpha, beta, alpha, beta, alpha, beta, mid])
    report = is_equilibrium(config, 3)
    if not report.is_equilibrium or report.is_clustered:
        raise RuntimeError("tie counterexample failed self-certification")
    return config


def build_example1(alpha: Scalar, beta: Scalar) -> Configuration:
    """n=20 non-clustered equilibrium for k=5 that does not rely on ties:
    11 agents at alpha, two at (3a+2b)/5, two at (2a+3b)/5, five at beta."""
    _check_alpha_beta(alpha, beta)
    alpha, beta = Fraction(alpha), Fraction(beta)
    low_mid = (3 * alpha + 2 * beta) / 5
    high_mid = (2 * alpha + 3 * beta) / 5
    config = Configuration(
        [alpha] * 11 + [low_mid] * 2 + [high_mid] * 2 + [beta] * 5
    )
    report = is_equilibrium(config, 5)
    if not report.is_equilibrium or report.is_clustered:
        raise RuntimeError("example-1 construction failed self-certification")
    return config


def single_linkage_groups(opinions, tolerance) -> list:
    """Groups of 0-based indices: sort by opinion, split where the gap
    between consecutive opinions exceeds the tolerance. Chained linkage is
    deliberate: a group's total spread may exceed the tolerance."""
    order = sorted(range(len(opinions)), key=lambda j: (opinions[j], j))
    groups = [[order[0]]]
    for prev, cur in zip(order, order[1:]):
        if opinions[cur] - opinions[prev] <= tolerance:
            groups[-1].append(cur)
        else:
            groups.append([cur])
    return groups


def quantize_clusters(config: Configuration, tolerance: Scalar = 1e-9) -> ClusterPartition:
    """Single-linkage grouping of a float configuration; each group is
    represented by its mean opinion. Default tolerance 1e-9 sits well above
    accumulated roundoff after ~1e5 averaging steps and well below the
    inter-cluster gaps seen at n=20 scale."""
    if tolerance <= 0:
        raise ParameterError("tolerance must be positive")
    if config.backend != FLOAT:
        raise BackendError("quantize_clusters is for float configurations")
    idx_groups = single_linkage_groups(config.opinions, tolerance)
    groups = []
    for idxs in idx_groups:
        rep = mean_of([config.opinions[j] for j in idxs])
        groups.append((rep, frozenset(j + 1 for j in idxs)))
    groups.sort(key=lambda g: g[0])
    return ClusterPartition(groups=tuple(groups))
