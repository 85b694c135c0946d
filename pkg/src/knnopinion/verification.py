"""The bundled verification suite: randomized, certified checks of the
cluster-size equivalence, the monotonicity/contraction machinery, the z/y
dichotomy, the shrinking-schedule contraction, and the two non-clustered
equilibrium constructions. Everything runs on the exact backend.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .convergence import (
    VerifierReport,
    check_z_le_y,
    random_exact_configuration,
    verify_lemma2_monotonicity,
    verify_lemma3_contraction,
    verify_lemma_bigm,
    verify_shrink_contraction,
)
from .dynamics import Configuration
from .equilibria import (
    build_example1,
    build_tie_counterexample,
    is_clustered,
    is_equilibrium,
    max_cluster_count,
    partition_clusters,
)
from .rng import SeededRng


def random_cluster_layout(n: int, rng: SeededRng) -> Configuration:
    """Random partition of n agents into same-opinion groups with distinct
    opinions and shuffled agent positions; group sizes are a uniform-ish
    random composition of n, so sizes below any k occur regularly."""
    sizes = []
    left = n
    while left > 0:
        s = 1 + rng.randbelow(left)
        sizes.append(s)
        left -= s
    opinions = list(range(3 * len(sizes)))
    rng.shuffle(opinions)
    values = []
    for gi, size in enumerate(sizes):
        values.extend([Fraction(opinions[gi])] * size)
    rng.shuffle(values)
    return Configuration(values)


def verify_cluster_size_equivalence(trials: int, seed, n_max: int = 30) -> VerifierReport:
    """is_clustered(x, k) must coincide with (min same-opinion group size
    >= k) on random layouts; the size side is recomputed here, independently
    of the neighbor-based definition."""
    rng = SeededRng(seed).derive("cluster-size")
    for t in range(trials):
        n = 1 + rng.randbelow(n_max)
        k = 1 + rng.randbelow(n)
        config = random_cluster_layout(n, rng)
        min_size = min(
            len(members) for _, members in partition_clusters(config).groups
        )
        if is_clustered(config, k) != (min_size >= k):
            return VerifierReport(
                name="cluster_size_equivalence", passed=False,
                detail={"trial": t, "n": n, "k": k,
                        "config": [str(v) for v in config.opinions]},
            )
    return VerifierReport(
        name="cluster_size_equivalence", passed=True, detail={"trials": trials}
    )


def verify_clustered_implies_equilibrium(trials: int, seed, n_max: int = 30) -> VerifierReport:
    rng = SeededRng(seed).derive("clustered-eq")
    checked = 0
    for t in range(trials):
        n = 1 + rng.randbelow(n_max)
        config = random_cluster_layout(n, rng)
        sizes = [len(m) for _, m in partition_clusters(config).groups]
        k = min(sizes)  # guarantees the layout is clustered at this k
        if not is_clustered(config, k):
            return VerifierReport(
                name="clustered_implies_equilibrium", passed=False,
                detail={"trial": t, "reason": "layout not clustered at k=min size"},
            )
        checked += 1
        if not is_equilibrium(config, k).is_equilibrium:
            return VerifierReport(
                name="clustered_implies_equilibrium", passed=False,
                detail={"trial": t, "n": n, "k": k,
                        "config": [str(v) for v in config.opinions]},
            )
    return VerifierReport(
        name="clustered_implies_equilibrium", passed=True, detail={"checked": checked}
    )


def verify_floor_bound_tight(n_max: int = 20) -> VerifierReport:
    """For every (n, k) a clustered layout with floor(n/k) groups exists:
    floor(n/k) - 1 groups of size k plus one group with the remainder."""
    for n in range(1, n_max + 1):
        for k in range(1, n + 1):
            count = max_cluster_count(n, k)
            sizes = [k] * (count - 1) + [n - k * (count - 1)]
            config = Configuration(
                [Fraction(gi) for gi, size in enumerate(sizes) for _ in range(size)]
            )
            groups = partition_clusters(config).groups
            if len(groups) != count or not is_clustered(config, k):
                return VerifierReport(
                    name="floor_bound_tight", passed=False,
                    detail={"n": n, "k": k, "sizes": sizes},
                )
    return VerifierReport(name="floor_bound_tight", passed=True, detail={"n_max": n_max})


def verify_counterexamples(pairs: int, seed) -> VerifierReport:
    """Both non-clustered equilibrium constructions certify for random
    rational (alpha, beta) pairs with alpha < beta."""
    rng = SeededRng(seed).derive("counterexamples")
    for t in range(pairs):
        den = 1 + rng.randbelow(30)
        a = Fraction(rng.randbelow(200) - 100, den)
        b = a + Fraction(1 + rng.randbelow(100), den)
        for builder, k in ((build_tie_counterexample, 3), (build_example1, 5)):
            config = builder(a, b)
            report = is_equilibrium(config, k)
            if not report.is_equilibrium or report.is_clustered:
                return VerifierReport(
                    name="counterexamples", passed=False,
                    detail={"trial": t, "alpha": str(a), "beta": str(b),
                            "builder": builder.__name__},
                )
    return VerifierReport(name="counterexamples", passed=True, detail={"pairs": pairs})


def verify_mu_monotonicity_random(trials: int, seed, n_max: int = 12) -> VerifierReport:
    rng = SeededRng(seed).derive("mu-mono")
    for t in range(trials):
        n = 2 + rng.randbelow(n_max - 1)
        k = 1 + rng.randbelow(n)
        config = random_exact_configuration(n, rng)
        report = verify_lemma2_monotonicity(config, k, steps=2 * k + 3)
        if not report.passed:
            report.detail.update({"trial": t, "n": n, "k": k})
            return report
    return VerifierReport(name="mu_monotonicity", passed=True, detail={"trials": trials})


def verify_mu_contraction_random(trials: int, seed, n_max: int = 12) -> VerifierReport:
    rng = SeededRng(seed).derive("mu-contract")
    for t in range(trials):
        n = 2 + rng.randbelow(n_max - 1)
        k = 1 + rng.randbelow(n)
        config = random_exact_configuration(n, rng)
        report = verify_lemma3_contraction(config, k)
        if not report.passed:
            report.detail.update({"trial": t, "n": n, "k": k})
            return report
    return VerifierReport(name="mu_contraction", passed=True, detail={"trials": trials})


def verify_bigm_random(trials: int, seed, n_max: int = 12) -> VerifierReport:
    rng = SeededRng(seed).derive("big-m")
    for t in range(trials):
        n = 2 + rng.randbelow(n_max - 1)
        k = 1 + rng.randbelow(n)
        config = random_exact_configuration(n, rng)
        report = verify_lemma_bigm(config, k, steps=2 * k + 3)
        if not report.passed:
            report.detail.update({"trial": t, "n": n, "k": k})
            return report
    return VerifierReport(name="big_m_mirror", passed=True, detail={"trials": trials})


def verify_zy_dichotomy_grid(trials_per_pair: int, seed, n_max: int = 12) -> VerifierReport:
    for n in range(2, n_max + 1):
        for k in range(1, n + 1):
            report = check_z_le_y(n, k, trials_per_pair, seed)
            if not report.passed:
                return report
    return VerifierReport(
        name="z_le_y", passed=True,
        detail={"n_max": n_max, "trials_per_pair": trials_per_pair},
    )


def verify_shrink_grid(trials_per_pair: int, seed, n_max: int = 10) -> VerifierReport:
    """Exact contraction certificate for every (n, k) with n < 2k."""
    rng = SeededRng(seed).derive("shrink")
    for n in range(1, n_max + 1):
        for k in range((n // 2) + 1, n + 1):
            for t in range(trials_per_pair):
                config = random_exact_configuration(n, rng)
                report = verify_shrink_contraction(config, k)
                if not report.passed:
                    report.detail["trial"] = t
                    return report
    return VerifierReport(
        name="shrink_contraction", passed=True,
        detail={"n_max": n_max, "trials_per_pair": trials_per_pair},
    )


@dataclass
class SuiteReport:
    reports: list = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.reports)

    def to_jsonable(self) -> dict:
        return {
            "all_passed": self.all_passed,
            "checks": {r.name: r.to_jsonable() for r in self.reports},
        }


def run_suite(seed, trials: int = 200) -> SuiteReport:
    """The full verification suite at a configurable trial budget."""
    return SuiteReport(reports=[
        verify_cluster_size_equivalence(trials, seed),
        verify_clustered_implies_equilibrium(max(20, trials // 4), seed),
        verify_floor_bound_tight(),
        verify_counterexamples(max(20, trials // 10), seed),
        verify_mu_monotonicity_random(trials, seed),
        verify_mu_contraction_random(trials, seed),
        verify_bigm_random(max(20, trials // 4), seed),
        verify_zy_dichotomy_grid(max(50, trials // 2), seed),
        verify_shrink_grid(max(10, trials // 10), seed),
    ])
