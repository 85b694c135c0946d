"""Seeded stochastic simulation, convergence detection, Monte Carlo consensus
statistics, and the addition/removal robustness experiments.

A run is a single-threaded sequential process; parallelism only ever comes
from running independent scenarios (batch_sweep). Events fire before the
update of their step, and the agent sampler includes agents added at that
step from that step on.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .convergence import ShrinkSchedule, run_shrink_schedule
from .dynamics import (
    Configuration,
    ParameterError,
    abc_update,
    abc_updated_value,
    knn_update,
    knn_updated_value,
)
from .equilibria import is_clustered, is_equilibrium, partition_clusters, single_linkage_groups
from .numerics import EXACT, FLOAT, Scalar, backend_of
from .rng import SeededRng
from .scenario import (
    EventSpec,
    InitialSpec,
    ModelSpec,
    ScenarioError,
    ScenarioSpec,
    ScheduleSpec,
    validate_scenario,
)

STOP_CONVERGED = "converged"
STOP_EQUILIBRIUM = "equilibrium_detected"
STOP_MAX_STEPS = "max_steps"
STOP_SCHEDULE_EXHAUSTED = "schedule_exhausted"

CLASS_CONSENSUS = "consensus"
CLASS_CLUSTERED = "clustered"
CLASS_NON_CLUSTERED = "non_clustered_numerical"
CLASS_NOT_CONVERGED = "not_converged"


@dataclass
class TrajectoryRecord:
    name: str
    backend: str
    recorded_steps: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)   # (ids tuple, opinions tuple)
    updaters: list = field(default_factory=list)    # agent id per executed step
    mins: list = field(default_factory=list)        # per state, length steps+1
    maxs: list = field(default_factory=list)
    events_log: list = field(default_factory=list)
    stop_reason: str = STOP_MAX_STEPS
    total_steps: int = 0
    classification: Optional[str] = None
    final_ids: tuple = ()
    final_opinions: tuple = ()

    @property
    def diameters(self) -> list:
        return [hi - lo for lo, hi in zip(self.mins, self.maxs)]


def _build_initial(spec: InitialSpec):
    if spec.kind == "uniform_random":
        rng = SeededRng(spec.seed).derive("init")
        opinions = [rng.uniform(spec.low, spec.high) for _ in range(spec.n)]
        return opinions, FLOAT
    if spec.kind == "explicit":
        config = Configuration(list(spec.opinions))
        return list(config.opinions), config.backend
    opinions = [op for op, size in spec.groups for _ in range(size)]
    config = Configuration(opinions)
    return list(config.opinions), config.backend


def _coerce_added(value, backend: str) -> Scalar:
    if backend == FLOAT:
        return float(value)
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    raise ScenarioError(
        "cannot add a float opinion to an exact-backend run"
    )


def _updated_value(opinions, idx, model: ModelSpec) -> Scalar:
    if model.kind == "knn":
        return knn_updated_value(opinions, idx, model.k)
    return abc_updated_value(opinions, idx, model.d)


def _is_exact_equilibrium(opinions, model: ModelSpec) -> bool:
    return all(
        _updated_value(opinions, idx, model) == opinions[idx]
        for idx in range(len(opinions))
    )


def _max_probe_move(opinions, model: ModelSpec, ceiling: float) -> float:
    """Largest single-agent update displacement; bails out early once any
    probe reaches the ceiling."""
    worst = 0.0
    for idx in range(len(opinions)):
        move = abs(_updated_value(opinions, idx, model) - opinions[idx])
        if move > worst:
            worst = move
            if worst >= ceiling:
                break
    return worst


def _float_converged(opinions, model: ModelSpec, tol: float) -> bool:
    """Two-stage stop rule for float runs.

    Limits are approached asymptotically, so a bare probe test cannot tell a
    slow transit from a limit. A run stops when every probe update moves less
    than tol AND either (a) the quantized groups are all well formed (k-NN:
    every group has >= k members; any model: within-group spread < tol), the
    usual clustered/consensus limit, or (b) probe moves have stalled near
    roundoff, the signature of a genuine non-clustered equilibrium rather
    than a state still drifting toward a cluster merge.
    """
    move = _max_probe_move(opinions, model, tol)
    if move >= tol:
        return False
    groups = single_linkage_groups(opinions, tol)
    spreads_ok = all(
        max(opinions[j] for j in g) - min(opinions[j] for j in g) < tol
        for g in groups
    )
    if spreads_ok and (
        len(groups) == 1
        or model.kind == "abc"
        or all(len(g) >= model.k for g in groups)
    ):
        return True
    stall = max(tol * 1e-4, 4e-16)
    return move < stall


def classify_opinions(opinions, model: ModelSpec, tol: float, backend: str) -> str:
    """Label a limit state. For k-NN, a clustered label additionally needs
    every group to have at least k members; smaller stable groups mean a
    non-clustered equilibrium (numerical, for the float backend)."""
    if backend == EXACT:
        config = Configuration(list(opinions))
        part = partition_clusters(config)
        if len(part.groups) == 1:
            return CLASS_CONSENSUS
        if model.kind == "knn":
            return CLASS_CLUSTERED if is_clustered(config, model.k) else CLASS_NON_CLUSTERED
        return CLASS_CLUSTERED
    groups = single_linkage_groups(opinions, tol)
    if len(groups) == 1:
        return CLASS_CONSENSUS
    if model.kind == "knn" and any(len(g) < model.k for g in groups):
        return CLASS_NON_CLUSTERED
    return CLASS_CLUSTERED


def simulate(spec: ScenarioSpec) -> TrajectoryRecord:
    """Run one scenario to convergence, equilibrium, schedule end or the
    step cap. Deterministic: identical spec -> bit-identical record."""
    validate_scenario(spec)
    opinions, backend = _build_initial(spec.initial)
    ids = list(range(1, len(opinions) + 1))
    next_id = len(opinions) + 1

    events_by_step = {e.step: e for e in spec.events}
    last_event_step = max(events_by_step, default=-1)
    rng_events = SeededRng(spec.event_seed).derive("events")
    rng_sched = (
        SeededRng(spec.schedule.seed).derive("schedule")
        if spec.schedule.kind == "uniform_random"
        else None
    )
    shrink_tags = (
        ShrinkSchedule(spec.model.k).steps if spec.schedule.kind == "shrink" else None
    )

    record = TrajectoryRecord(name=spec.name, backend=backend)
    record.recorded_steps.append(0)
    record.snapshots.append((tuple(ids), tuple(opinions)))
    record.mins.append(min(opinions))
    record.maxs.append(max(opinions))

    t = 0
    while True:
        event = events_by_step.get(t)
        if event is not None:
            _apply_event(event, ids, opinions, next_id, backend, rng_events, record)
            if event.kind == "add":
                next_id += 1

        if t >= last_event_step and _check_due(t, len(ids)):
            if backend == EXACT:
                if _is_exact_equilibrium(opinions, spec.model):
                    record.stop_reason = STOP_EQUILIBRIUM
                    break
            elif _float_converged(opinions, spec.model, spec.tol):
                record.stop_reason = STOP_CONVERGED
                break

        if t >= spec.max_steps:
            record.stop_reason = STOP_MAX_STEPS
            break

        updater_idx = _next_updater_index(
            spec.schedule, t, ids, opinions, rng_sched, shrink_tags
        )
        if updater_idx is None:
            record.stop_reason = STOP_SCHEDULE_EXHAUSTED
            break

        opinions[updater_idx] = _updated_value(opinions, updater_idx, spec.model)
        record.updaters.append(ids[updater_idx])
        record.mins.append(min(opinions))
        record.maxs.append(max(opinions))
        t += 1
        if t % spec.record_every == 0:
            record.recorded_steps.append(t)
            record.snapshots.append((tuple(ids), tuple(opinions)))

    record.total_steps = t
    if record.recorded_steps[-1] != t:
        record.recorded_steps.append(t)
        record.snapshots.append((tuple(ids), tuple(opinions)))
    record.final_ids = tuple(ids)
    record.final_opinions = tuple(opinions)
    if record.stop_reason in (STOP_CONVERGED, STOP_EQUILIBRIUM):
        record.classification = classify_opinions(opinions, spec.model, spec.tol, backend)
    else:
        record.classification = CLASS_NOT_CONVERGED
    return record


def _check_due(t: int, n: int) -> bool:
    return t % max(n, 1) == 0


def _apply_event(event, ids, opinions, next_id, backend, rng_events, record):
    if event.kind == "add":
        if isinstance(event.opinion, tuple) and event.opinion[0] == "uniform_random":
            if backend == EXACT:
                raise ScenarioError(
                    "random-opinion additions require the float backend"
                )
            value = rng_events.uniform(event.opinion[1], event.opinion[2])
        else:
            value = _coerce_added(event.opinion, backend)
        ids.append(next_id)
        opinions.append(value)
        record.events_log.append(
            {"step": event.step, "kind": "add", "agent": next_id}
        )
    else:
        pos = bisect_left(ids, event.agent)
        if pos >= len(ids) or ids[pos] != event.agent:
            raise ScenarioError(
                f"events: agent {event.agent} not present at step {event.step}"
            )
        del ids[pos]
        del opinions[pos]
        record.events_log.append(
            {"step": event.step, "kind": "remove", "agent": event.agent}
        )


def _next_updater_index(schedule, t, ids, opinions, rng_sched, shrink_tags):
    if schedule.kind == "uniform_random":
        return rng_sched.randbelow(len(ids))
    if schedule.kind == "explicit":
        if t >= len(schedule.agents):
            return None
        agent = schedule.agents[t]
        pos = bisect_left(ids, agent)
        if pos >= len(ids) or ids[pos] != agent:
            raise ScenarioError(f"schedule: agent {agent} not present at step {t}")
        return pos
    # shrink: repeat the 2k-2 tag pattern, recomputing the extremal agent
    # from the current state at every step
    if not shrink_tags:
        return None
    tag = shrink_tags[t % len(shrink_tags)]
    if tag == "MU":
        return opinions.index(min(opinions))
    return opinions.index(max(opinions))


@dataclass
class MonteCarloStats:
    n: int
    k: int
    runs: int
    converged: int
    hitting_times: list
    consensus_values: list
    hull_violations: int
    max_steps: int
    tol: float

    @property
    def all_converged(self) -> bool:
        return self.converged == self.runs

    def to_jsonable(self) -> dict:
        return {
            "n": self.n, "k": self.k, "runs": self.runs,
            "converged": self.converged,
            "fraction_converged": self.converged / self.runs if self.runs else 0.0,
            "hitting_times": self.hitting_times,
            "consensus_values": self.consensus_values,
            "hull_violations": self.hull_violations,
            "max_steps": self.max_steps, "tol": self.tol,
        }


def monte_carlo_consensus(
    n: int,
    k: int,
    runs: int,
    seed,
    max_steps: int = 10**6,
    tol: float = 1e-9,
    allow_large_n: bool = False,
) -> MonteCarloStats:
    """Independent seeded runs with uniform random initial opinions in [0,1]
    and uniform i.i.d. agent selection; a run converges when the diameter
    drops below tol. Consensus for n < 2k is the claim under test; n >= 2k
    needs the explicit exploratory override."""
    if not 1 <= k <= n:
        raise ParameterError(f"k={k} violates 1 <= k <= n={n}")
    if n >= 2 * k and not allow_large_n:
        raise ParameterError(
            f"n={n} >= 2k={2 * k}: consensus is not guaranteed; "
            "pass allow_large_n=True for exploratory runs"
        )
    hitting_times = []
    consensus_values = []
    converged = 0
    hull_violations = 0
    for r in range(runs):
        rng = SeededRng(seed).derive(f"mc:{r}")
        opinions = [rng.uniform(0.0, 1.0) for _ in range(n)]
        lo0, hi0 = min(opinions), max(opinions)
        t = 0
        while t < max_steps:
            if max(opinions) - min(opinions) < tol:
                break
            idx = rng.randbelow(n)
            opinions[idx] = knn_updated_value(opinions, idx, k)
            t += 1
        if max(opinions) - min(opinions) < tol:
            converged += 1
            hitting_times.append(t)
            c = (min(opinions) + max(opinions)) / 2.0
            consensus_values.append(c)
            if not lo0 <= c <= hi0:
                hull_violations += 1
        else:
            hitting_times.append(None)
    return MonteCarloStats(
        n=n, k=k, runs=runs, converged=converged,
        hitting_times=hitting_times, consensus_values=consensus_values,
        hull_violations=hull_violations, max_steps=max_steps, tol=tol,
    )


class NotClusteredError(ValueError):
    """The robustness experiments require a clustered base configuration."""


@dataclass
class AdditionRunReport:
    model: str
    originals_untouched: bool
    classification: str
    stop_reason: str
    total_steps: int
    final_original_opinions: tuple
    final_added_opinions: tuple

    def to_jsonable(self) -> dict:
        from .numerics import format_scalar

        return {
            "model": self.model,
            "originals_untouched": self.originals_untouched,
            "classification": self.classification,
            "stop_reason": self.stop_reason,
            "total_steps": self.total_steps,
            "final_original_opinions": [format_scalar(v) for v in self.final_original_opinions],
            "final_added_opinions": [format_scalar(v) for v in self.final_added_opinions],
        }


@dataclass
class AdditionReport:
    knn: AdditionRunReport
    abc: Optional[AdditionRunReport] = None

    def to_jsonable(self) -> dict:
        out = {"knn": self.knn.to_jsonable()}
        if self.abc is not None:
            out["abc"] = self.abc.to_jsonable()
        return out


def _addition_spec(base_floats, model, additions, schedule_seed, max_steps, tol):
    events = tuple(
        EventSpec(kind="add", step=step, opinion=float(op))
        for step, op in additions
    )
    return ScenarioSpec(
        model=model,
        initial=InitialSpec(kind="explicit", opinions=tuple(base_floats)),
        schedule=ScheduleSpec(kind="uniform_random", seed=schedule_seed),
        events=events,
        max_steps=max_steps,
        tol=tol,
        record_every=1,
        name="robustness-addition",
    )


def _run_addition(base_floats, model, additions, schedule_seed, max_steps, tol):
    spec = _addition_spec(base_floats, model, additions, schedule_seed, max_steps, tol)
    rec = simulate(spec)
    n0 = len(base_floats)
    untouched = True
    for ids, ops in rec.snapshots:
        for pos, agent in enumerate(ids):
            if agent <= n0 and ops[pos] != base_floats[agent - 1]:
                untouched = False
                break
        if not untouched:
            break
    finals = dict(zip(rec.final_ids, rec.final_opinions))
    return AdditionRunReport(
        model=model.kind,
        originals_untouched=untouched,
        classification=rec.classification,
        stop_reason=rec.stop_reason,
        total_steps=rec.total_steps,
        final_original_opinions=tuple(finals[a] for a in sorted(finals) if a <= n0),
        final_added_opinions=tuple(finals[a] for a in sorted(finals) if a > n0),
    )


def robustness_addition(
    base: Configuration,
    k: int,
    additions,
    schedule_seed,
    abc_d=None,
    max_steps: int = 10**5,
    tol: float = 1e-12,
) -> AdditionReport:
    """Add agents to a certified clustered k-NN equilibrium and watch whether
    the original agents ever move (they must not, bit for bit).

    `base` must be exact so the clustered precondition can be certified; the
    simulation itself runs in floats. `additions` is a list of (step, opinion)
    with concrete opinions; the same uniform schedule stream is replayed for
    the optional ABC side-by-side run, mirroring the shared update order of
    the comparison experiment.
    """
    if base.backend != EXACT:
        raise NotClusteredError("base configuration must be exact to certify clustering")
    if not is_clustered(base, k):
        raise NotClusteredError("base configuration is not clustered for this k")
    base_floats = [float(v) for v in base.opinions]
    knn_report = _run_addition(
        base_floats, ModelSpec(kind="knn", k=k), additions, schedule_seed, max_steps, tol
    )
    abc_report = None
    if abc_d is not None:
        abc_report = _run_addition(
            base_floats, ModelSpec(kind="abc", d=float(abc_d)), additions,
            schedule_seed, max_steps, tol,
        )
    return AdditionReport(knn=knn_report, abc=abc_report)


@dataclass
class RemovalReport:
    removed_agent: int
    victim_cluster_size: int
    still_equilibrium: bool
    expected_equilibrium: bool
    abc_unchanged: Optional[bool]
    resumed_classification: Optional[str]

    def to_jsonable(self) -> dict:
        return {
            "removed_agent": self.removed_agent,
            "victim_cluster_size": self.victim_cluster_size,
            "still_equilibrium": self.still_equilibrium,
            "expected_equilibrium": self.expected_equilibrium,
            "abc_unchanged": self.abc_unchanged,
            "resumed_classification": self.resumed_classification,
        }


def robustness_removal(
    base: Configuration,
    k: int,
    remove_id: int,
    abc_d=None,
    schedule_seed=0,
    max_steps: int = 10**5,
    tol: float = 1e-9,
) -> RemovalReport:
    """Remove one agent from a clustered k-NN equilibrium. The result stays
    an equilibrium iff the victim's cluster had at least k+1 members; when it
    does not, the dynamics are resumed (float, uniform schedule) and the new
    limit is reported."""
    if base.backend != EXACT:
        raise NotClusteredError("base configuration must be exact to certify clustering")
    if not is_clustered(base, k):
        raise NotClusteredError("base configuration is not clustered for this k")
    victim_opinion = base.opinion(remove_id)
    part = partition_clusters(base)
    victim_size = next(len(m) for op, m in part.groups if op == victim_opinion)

    removed = base.without(remove_id)
    still = is_equilibrium(removed, k).is_equilibrium
    expected = victim_size >= k + 1

    abc_unchanged = None
    if abc_d is not None:
        d = Fraction(abc_d)
        abc_unchanged = all(
            abc_update(removed, i, d) == removed for i in removed.agents()
        )

    resumed = None
    if not still:
        spec = ScenarioSpec(
            model=ModelSpec(kind="knn", k=k),
            initial=InitialSpec(
                kind="explicit", opinions=tuple(float(v) for v in removed.opinions)
            ),
            schedule=ScheduleSpec(kind="uniform_random", seed=schedule_seed),
            max_steps=max_steps,
            tol=tol,
            record_every=max_steps,
            name="robustness-removal",
        )
        resumed = simulate(spec).classification
    return RemovalReport(
        removed_agent=remove_id,
        victim_cluster_size=victim_size,
        still_equilibrium=still,
        expected_equilibrium=expected,
        abc_unchanged=abc_unchanged,
        resumed_classification=resumed,
    )


@dataclass
class SweepResult:
    total: int
    classifications: dict
    cluster_count_histogram: dict
    hitting_times: list
    errors: dict   # scenario index -> message

    def hitting_time_quantile(self, q: float):
        times = sorted(t for t in self.hitting_times if t is not None)
        if not times:
            return None
        pos = min(len(times) - 1, int(q * len(times)))
        return times[pos]

    def to_jsonable(self) -> dict:
        return {
            "total": self.total,
            "classifications": self.classifications,
            "cluster_count_histogram": self.cluster_count_histogram,
            "hitting_time_quantiles": {
                "p50": self.hitting_time_quantile(0.5),
                "p90": self.hitting_time_quantile(0.9),
                "p100": self.hitting_time_quantile(1.0),
            },
            "errors": {str(i): msg for i, msg in self.errors.items()},
        }


def _sweep_one(spec: ScenarioSpec):
    rec = simulate(spec)
    groups = None
    if rec.stop_reason in (STOP_CONVERGED, STOP_EQUILIBRIUM):
        if rec.backend == FLOAT:
            groups = len(single_linkage_groups(list(rec.final_opinions), spec.tol))
        else:
            groups = len(partition_clusters(Configuration(list(rec.final_opinions))).groups)
    hit = rec.total_steps if rec.stop_reason in (STOP_CONVERGED, STOP_EQUILIBRIUM) else None
    return rec.classification, groups, hit


def batch_sweep(specs, jobs: int = 1) -> SweepResult:
    """Run every scenario (independently seeded via their own documents) and
    aggregate. Results merge in scenario order regardless of completion
    order, so the aggregate is deterministic."""
    results: dict = {}
    errors: dict = {}
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {i: pool.submit(_sweep_one, spec) for i, spec in enumerate(specs)}
        for i, fut in futures.items():
            try:
                results[i] = fut.result()
            except Exception as exc:
                errors[i] = str(exc)
    else:
        for i, spec in enumerate(specs):
            try:
                results[i] = _sweep_one(spec)
            except Exception as exc:
                errors[i] = str(exc)

    classifications: dict = {}
    histogram: dict = {}
    hitting = []
    for i in sorted(results):
        cls, groups, hit = results[i]
        classifications[cls] = classifications.get(cls, 0) + 1
        if groups is not None:
            histogram[groups] = histogram.get(groups, 0) + 1
        hitting.append(hit)
    return SweepResult(
        total=len(specs),
        classifications=classifications,
        cluster_count_histogram=histogram,
        hitting_times=hitting,
        errors=errors,
    )
