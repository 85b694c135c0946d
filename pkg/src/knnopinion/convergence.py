"""Extremal selectors, the y/z boundary quantities, the deterministic
shrinking schedule, and certified checks of the contraction machinery.

All verifiers run on the exact backend: the contraction statements are
inequalities between rationals and are certified, not approximated. Every
verifier drives the one shared k-NN update implementation through an agent
schedule; nothing re-implements the dynamics.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from .dynamics import (
    Configuration,
    ParameterError,
    _check_k,
    diameter,
    knn_neighbors,
    knn_update,
)
from .numerics import Scalar
from .rng import SeededRng

MU = "MU"
BIG_M = "BIG_M"


@dataclass(frozen=True)
class ExtremalSelection:
    mu: int       # lowest-index minimizer
    big_m: int    # lowest-index maximizer
    y: Scalar     # max opinion within the mu agent's neighborhood
    z: Scalar     # min opinion within the big_m agent's neighborhood


@dataclass(frozen=True)
class ShrinkSchedule:
    """k-1 updates of the lowest agent followed by k-1 of the highest."""

    k: int

    @property
    def steps(self) -> list:
        return [MU] * (self.k - 1) + [BIG_M] * (self.k - 1)

    def __len__(self) -> int:
        return 2 * self.k - 2


@dataclass
class VerifierReport:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)

    def to_jsonable(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


def mu_index(config: Configuration) -> int:
    ops = config.opinions
    lo = min(ops)
    return ops.index(lo) + 1


def big_m_index(config: Configuration) -> int:
    ops = config.opinions
    hi = max(ops)
    return ops.index(hi) + 1


def extremal_selection(config: Configuration, k: int) -> ExtremalSelection:
    _check_k(k, config.n)
    mu = mu_index(config)
    big_m = big_m_index(config)
    y = max(config.opinion(j) for j in knn_neighbors(config, mu, k).members)
    z = min(config.opinion(j) for j in knn_neighbors(config, big_m, k).members)
    return ExtremalSelection(mu=mu, big_m=big_m, y=y, z=z)


def reflect(config: Configuration) -> Configuration:
    return Configuration([-v for v in config.opinions])


def random_exact_configuration(
    n: int, rng: SeededRng, value_range: int = 24, denominator: Optional[int] = None
) -> Configuration:
    """Random rational opinions with a shared small denominator; the small
    value range makes exact ties common, which exercises the tie rule."""
    den = denominator if denominator is not None else rng.randbelow(12) + 1
    return Configuration(
        [Fraction(rng.randbelow(value_range * den + 1), den) for _ in range(n)]
    )


def check_z_le_y(n: int, k: int, trials: int, seed) -> VerifierReport:
    """Dichotomy check: z <= y holds for every configuration iff n < 2k.

    For n < 2k, random search for a violation (must find none). For
    n >= 2k, the sorted-distinct witness x = (0, 1, ..., n-1) has its k
    smallest values strictly below the k largest, giving z > y exactly.
    """
    _check_k(k, n)
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    if n < 2 * k:
        rng = SeededRng(seed).derive(f"zy:{n}:{k}")
        for t in range(trials):
            config = random_exact_configuration(n, rng)
            sel = extremal_selection(config, k)
            if sel.z > sel.y:
                return VerifierReport(
                    name="z_le_y",
                    passed=False,
                    detail={
                        "n": n, "k": k, "trial": t,
                        "config": [str(v) for v in config.opinions],
                    },
                )
        return VerifierReport(
            name="z_le_y", passed=True, detail={"n": n, "k": k, "trials": trials}
        )
    witness = Configuration([Fraction(v) for v in range(n)])
    sel = extremal_selection(witness, k)
    return VerifierReport(
        name="z_le_y",
        passed=sel.z > sel.y,
        detail={
            "n": n, "k": k,
            "witness": [str(v) for v in witness.opinions],
            "y": str(sel.y), "z": str(sel.z),
        },
    )


@dataclass
class ScheduleRun:
    states: list          # Configuration, length steps+1
    updaters: list        # agent ids
    contraction_bound_applies: bool = False

    @property
    def diameters(self) -> list:
        return [diameter(s) for s in self.states]


def _selector(tag: str) -> Callable[[Configuration], int]:
    return mu_index if tag == MU else big_m_index


def run_schedule_tags(config: Configuration, k: int, tags) -> ScheduleRun:
    states = [config]
    updaters = []
    for tag in tags:
        i = _selector(tag)(states[-1])
        updaters.append(i)
        states.append(knn_update(states[-1], i, k))
    return ScheduleRun(states=states, updaters=updaters)


def run_shrink_schedule(config: Configuration, k: int) -> ScheduleRun:
    """Apply the 2k-2 step mu-then-M schedule. The (1 - 1/k) diameter
    contraction is guaranteed only for n < 2k; the run is still executed
    otherwise and the flag on the result says whether the bound applies."""
    _check_k(k, config.n)
    run = run_schedule_tags(config, k, ShrinkSchedule(k).steps)
    run.contraction_bound_applies = config.n < 2 * k
    return run


def verify_lemma2_monotonicity(
    config: Configuration,
    k: int,
    steps: int,
    update_fn: Optional[Callable] = None,
) -> VerifierReport:
    """All-mu schedule: the mu agent's neighbor set and its max opinion y
    stay constant; members only rise, never above y(0); non-members are
    bit-constant. update_fn is injectable so a corrupted rule can be shown
    to fail (mutation fixture)."""
    if steps < 1:
        raise ParameterError("steps must be >= 1")
    update = update_fn if update_fn is not None else knn_update

    members0 = set(knn_neighbors(config, mu_index(config), k).members)
    y0 = max(config.opinion(j) for j in members0)
    state = config

    def fail(step, reason):
        return VerifierReport(
            name="mu_monotonicity",
            passed=False,
            detail={"step": step, "reason": reason,
                    "state": [str(v) for v in state.opinions]},
        )

    for t in range(steps):
        mu = mu_index(state)
        members = set(knn_neighbors(state, mu, k).members)
        if members != members0:
            return fail(t, "neighbor set of the minimal agent changed")
        y = max(state.opinion(j) for j in members)
        if y != y0:
            return fail(t, "y changed")
        nxt = update(state, mu, k)
        for j in config.agents():
            if j in members0:
                if nxt.opinion(j) < state.opinion(j):
                    return fail(t, f"member {j} decreased")
                if nxt.opinion(j) > y0:
                    return fail(t, f"member {j} exceeded y(0)")
            elif nxt.opinion(j) != state.opinion(j):
                return fail(t, f"non-member {j} moved")
        state = nxt
    return VerifierReport(
        name="mu_monotonicity", passed=True, detail={"steps": steps}
    )


def verify_lemma3_contraction(
    config: Configuration, k: int, update_fn: Optional[Callable] = None
) -> VerifierReport:
    """After k-1 all-mu steps:
    y - min <= (1 - 1/k) * (y(0) - min(0)), certified exactly."""
    update = update_fn if update_fn is not None else knn_update
    sel0 = extremal_selection(config, k)
    lo0 = min(config.opinions)
    state = config
    for _ in range(k - 1):
        state = update(state, mu_index(state), k)
    y_end = max(state.opinion(j) for j in knn_neighbors(state, mu_index(state), k).members)
    lo_end = min(state.opinions)
    lhs = y_end - lo_end
    rhs = (1 - Fraction(1, k)) * (sel0.y - lo0)
    return VerifierReport(
        name="mu_contraction",
        passed=lhs <= rhs,
        detail={"lhs": str(lhs), "rhs": str(rhs), "k": k},
    )


def verify_lemma_bigm(config: Configuration, k: int, steps: int) -> VerifierReport:
    """Mirror-image checks under the all-M schedule, exercised through the
    reflection identity big_m(x) = mu(-x), then cross-checked by running
    the M schedule directly."""
    if steps < 1:
        raise ParameterError("steps must be >= 1")

    # Direct run under I(t) = M(x(t)).
    members0 = set(knn_neighbors(config, big_m_index(config), k).members)
    z0 = min(config.opinion(j) for j in members0)
    state = config
    direct_states = [state]
    for t in range(steps):
        big_m = big_m_index(state)
        members = set(knn_neighbors(state, big_m, k).members)
        if members != members0:
            return VerifierReport(
                name="big_m_mirror", passed=False,
                detail={"step": t, "reason": "neighbor set of the maximal agent changed"},
            )
        z = min(state.opinion(j) for j in members)
        if z != z0:
            return VerifierReport(
                name="big_m_mirror", passed=False,
                detail={"step": t, "reason": "z changed"},
            )
        nxt = knn_update(state, big_m, k)
        for j in config.agents():
            if j in members0:
                if nxt.opinion(j) > state.opinion(j) or nxt.opinion(j) < z0:
                    return VerifierReport(
                        name="big_m_mirror", passed=False,
                        detail={"step": t, "reason": f"member {j} violated monotone bound"},
                    )
            elif nxt.opinion(j) != state.opinion(j):
                return VerifierReport(
                    name="big_m_mirror", passed=False,
                    detail={"step": t, "reason": f"non-member {j} moved"},
                )
        state = nxt
        direct_states.append(state)

    # Reflection cross-check: M schedule on x == negated mu schedule on -x.
    mirror = reflect(config)
    for t, direct in enumerate(direct_states):
        if reflect(mirror) != direct:
            return VerifierReport(
                name="big_m_mirror", passed=False,
                detail={"step": t, "reason": "reflection identity broken"},
            )
        if t < steps:
            mirror = knn_update(mirror, mu_index(mirror), k)

    # Contraction on the max side after k-1 steps.
    state = config
    for _ in range(k - 1):
        state = knn_update(state, big_m_index(state), k)
    z_end = min(state.opinion(j) for j in knn_neighbors(state, big_m_index(state), k).members)
    lhs = max(state.opinions) - z_end
    rhs = (1 - Fraction(1, k)) * (max(config.opinions) - z0)
    if lhs > rhs:
        return VerifierReport(
            name="big_m_mirror", passed=False,
            detail={"reason": "max-side contraction failed",
                    "lhs": str(lhs), "rhs": str(rhs)},
        )
    return VerifierReport(name="big_m_mirror", passed=True, detail={"steps": steps})


def verify_shrink_contraction(config: Configuration, k: int) -> VerifierReport:
    """Certify diameter(T) <= (1 - 1/k) * diameter(0) after the shrink
    schedule (valid claim for n < 2k; reported, not asserted, otherwise)."""
    run = run_shrink_schedule(config, k)
    d0, dT = diameter(run.states[0]), diameter(run.states[-1])
    bound = (1 - Fraction(1, k)) * d0
    holds = dT <= bound
    report = VerifierReport(
        name="shrink_contraction",
        passed=holds if run.contraction_bound_applies else True,
        detail={
            "n": config.n, "k": k,
            "initial_diameter": str(d0),
            "final_diameter": str(dT),
            "bound": str(bound),
            "bound_applies": run.contraction_bound_applies,
            "observed_holds": holds,
        },
    )
    return report
