from fractions import Fraction
from itertools import combinations

import pytest

from knnopinion.dynamics import (
    Configuration,
    ParameterError,
    abc_update,
    diameter,
    interaction_graph,
    knn_neighbors,
    knn_update,
)
from knnopinion.equilibria import build_example1
from knnopinion.rng import SeededRng

F = Fraction


def oracle_knn_members(config, i, k):
    """Independent neighbor oracle: enumerate every k-subset and pick the one
    whose sorted (distance, id) key list is lexicographically smallest."""
    xi = config.opinion(i)
    def key(subset):
        return sorted((abs(config.opinion(j) - xi), j) for j in subset)
    best = min(combinations(config.agents(), k), key=key)
    return set(best)


def test_tie_counterexample_neighbors_of_middle_agent():
    x = Configuration([F(0), F(1), F(0), F(1), F(0), F(1), F(1, 2)])
    ns = knn_neighbors(x, 7, 3)
    assert ns.members == (7, 1, 2)  # self at distance 0, then lowest ids win the six-way tie


def test_k_equals_n_gives_everyone():
    x = Configuration([F(3), F(0), F(9)])
    assert set(knn_neighbors(x, 2, 3).members) == {1, 2, 3}


def test_example1_agent12_neighbors():
    x = build_example1(F(0), F(1))
    assert set(knn_neighbors(x, 12, 5).members) == {1, 12, 13, 14, 15}


def test_all_equal_excludes_self_when_ties_fill_up():
    x = Configuration([F(0)] * 4)
    assert set(knn_neighbors(x, 3, 2).members) == {1, 2}


def test_neighbors_match_bruteforce_oracle():
    rng = SeededRng("nbr-oracle")
    for _ in range(200):
        n = 2 + rng.randbelow(6)
        k = 1 + rng.randbelow(n)
        x = Configuration([F(rng.randbelow(8), 1 + rng.randbelow(3)) for _ in range(n)])
        i = 1 + rng.randbelow(n)
        assert set(knn_neighbors(x, i, k).members) == oracle_knn_members(x, i, k)


def test_update_example1_is_fixed_for_agent12():
    x = build_example1(F(0), F(1))
    assert knn_update(x, 12, 5) == x


def test_update_consensus_fixed():
    x = Configuration([F(2, 7)] * 5)
    for i in x.agents():
        assert knn_update(x, i, 3) == x


def test_update_three_agents_midpoint():
    # N_2 = {1, 2}: agents 1 and 3 tie at distance 1/2, lower id wins
    x = Configuration([F(0), F(1, 2), F(1)])
    assert set(knn_neighbors(x, 2, 2).members) == oracle_knn_members(x, 2, 2) == {1, 2}
    assert knn_update(x, 2, 2) == Configuration([F(0), F(1, 4), F(1)])


def test_update_touches_exactly_one_component():
    rng = SeededRng("single-writer")
    for _ in range(50):
        n = 2 + rng.randbelow(8)
        x = Configuration([F(rng.randbelow(10)) for _ in range(n)])
        i = 1 + rng.randbelow(n)
        k = 1 + rng.randbelow(n)
        y = knn_update(x, i, k)
        assert all(y.opinion(j) == x.opinion(j) for j in x.agents() if j != i)


def test_affine_equivariance_of_selection():
    rng = SeededRng("affine")
    for _ in range(50):
        n = 2 + rng.randbelow(7)
        x = Configuration([F(rng.randbelow(12), 2) for _ in range(n)])
        a, b = F(1 + rng.randbelow(5)), F(rng.randbelow(9) - 4)
        mapped = Configuration([a * v + b for v in x.opinions])
        i = 1 + rng.randbelow(n)
        k = 1 + rng.randbelow(n)
        assert knn_neighbors(mapped, i, k) == knn_neighbors(x, i, k)
        assert knn_update(mapped, i, k) == Configuration(
            [a * v + b for v in knn_update(x, i, k).opinions]
        )


def test_abc_update_threshold():
    x = Configuration([0.0, 0.2, 1.0])
    got = abc_update(x, 1, 0.25)
    assert got.opinions == (0.1, 0.2, 1.0)


def test_abc_isolated_agent_unchanged():
    x = Configuration([F(0), F(10), F(20)])
    assert abc_update(x, 2, F(1)) == x


def test_abc_full_visibility_gives_global_mean():
    x = Configuration([F(0), F(1), F(5)])
    assert abc_update(x, 3, F(100)).opinion(3) == F(2)


def test_abc_negative_d_rejected():
    with pytest.raises(ParameterError):
        abc_update(Configuration([F(0), F(1)]), 1, F(-1))


def test_graph_complete_when_k_is_n():
    x = Configuration([F(0), F(5), F(9)])
    g = interaction_graph(x, 3)
    assert g.edges == frozenset((i, j) for i in (1, 2, 3) for j in (1, 2, 3))


def test_graph_k1_self_loops_only_for_distinct_opinions():
    g = interaction_graph(Configuration([F(0), F(1)]), 1)
    assert g.edges == frozenset({(1, 1), (2, 2)})


def test_graph_three_agents():
    g = interaction_graph(Configuration([F(0), F(1, 2), F(1)]), 2)
    assert g.out_neighbors(1) == {1, 2}
    assert g.out_neighbors(2) == {1, 2}
    assert g.out_neighbors(3) == {2, 3}
    assert "1 1\n1 2\n" in g.to_edge_list()


def test_diameter():
    assert diameter(Configuration([F(4)] * 3)) == 0
    assert diameter(Configuration([F(0), F(1), F(2), F(3)])) == 3
    assert diameter(build_example1(F(0), F(1))) == 1


def test_parameter_errors():
    x = Configuration([F(0), F(1)])
    with pytest.raises(ParameterError):
        knn_neighbors(x, 1, 3)
    with pytest.raises(ParameterError):
        knn_neighbors(x, 5, 1)
    with pytest.raises(ParameterError):
        Configuration([])
