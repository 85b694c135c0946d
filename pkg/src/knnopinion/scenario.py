"""Scenario documents: the JSON contract consumed by the simulator and CLI.

A scenario fixes the model (k-NN or ABC), the initial configuration, the
update schedule, optional timed add/remove events, and the stopping rules.
Randomness is explicit: the initial generator, the schedule and the event
opinions each carry their own seed, so a scenario document is a complete,
reproducible description of a run.

Example document:

    {
      "name": "two-clusters",
      "model": {"kind": "knn", "k": 5},
      "initial": {"kind": "uniform_random", "n": 20,
                  "low": 0.0, "high": 1.0, "seed": 7},
      "schedule": {"kind": "uniform_random", "seed": 42},
      "events": [{"kind": "add", "step": 2,
                  "opinion": {"kind": "uniform_random", "low": 0, "high": 1}}],
      "event_seed": 11,
      "max_steps": 100000,
      "tol": 1e-9,
      "record_every": 1
    }

initial kinds: uniform_random {n, low, high, seed}; explicit {opinions:
[number | "p/q", ...]}; clusters {groups: [{opinion, size}, ...]}.
schedule kinds: uniform_random {seed}; explicit {agents: [id, ...]};
shrink {} (k-NN only; repeats the 2k-2 step mu/M pattern).
event kinds: add {step, opinion: number | "p/q" | uniform_random descriptor};
remove {step, agent}.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from .numerics import format_scalar, parse_scalar

DEFAULT_MAX_STEPS = 10**6
DEFAULT_TOL = 1e-9


class ScenarioError(ValueError):
    """Invalid scenario document; message names the offending field."""


@dataclass(frozen=True)
class ModelSpec:
    kind: str                 # "knn" | "abc"
    k: Optional[int] = None
    d: Optional[object] = None

    def to_dict(self) -> dict:
        if self.kind == "knn":
            return {"kind": "knn", "k": self.k}
        return {"kind": "abc", "d": _scalar_to_json(self.d)}


@dataclass(frozen=True)
class InitialSpec:
    kind: str                 # "uniform_random" | "explicit" | "clusters"
    n: Optional[int] = None
    low: float = 0.0
    high: float = 1.0
    seed: Optional[object] = None
    opinions: Optional[tuple] = None
    groups: Optional[tuple] = None   # of (opinion, size)

    def size(self) -> int:
        if self.kind == "uniform_random":
            return self.n
        if self.kind == "explicit":
            return len(self.opinions)
        return sum(size for _, size in self.groups)

    def to_dict(self) -> dict:
        if self.kind == "uniform_random":
            return {"kind": "uniform_random", "n": self.n, "low": self.low,
                    "high": self.high, "seed": self.seed}
        if self.kind == "explicit":
            return {"kind": "explicit",
                    "opinions": [_scalar_to_json(v) for v in self.opinions]}
        return {"kind": "clusters",
                "groups": [{"opinion": _scalar_to_json(op), "size": size}
                           for op, size in self.groups]}


@dataclass(frozen=True)
class ScheduleSpec:
    kind: str                 # "uniform_random" | "explicit" | "shrink"
    seed: Optional[object] = None
    agents: Optional[tuple] = None

    def to_dict(self) -> dict:
        if self.kind == "uniform_random":
            return {"kind": "uniform_random", "seed": self.seed}
        if self.kind == "explicit":
            return {"kind": "explicit", "agents": list(self.agents)}
        return {"kind": "shrink"}


@dataclass(frozen=True)
class EventSpec:
    kind: str                 # "add" | "remove"
    step: int
    opinion: Optional[object] = None   # scalar or ("uniform_random", lo, hi)
    agent: Optional[int] = None

    def to_dict(self) -> dict:
        if self.kind == "add":
            if isinstance(self.opinion, tuple) and self.opinion[0] == "uniform_random":
                op = {"kind": "uniform_random",
                      "low": self.opinion[1], "high": self.opinion[2]}
            else:
                op = _scalar_to_json(self.opinion)
            return {"kind": "add", "step": self.step, "opinion": op}
        return {"kind": "remove", "step": self.step, "agent": self.agent}


@dataclass(frozen=True)
class ScenarioSpec:
    model: ModelSpec
    initial: InitialSpec
    schedule: ScheduleSpec
    events: tuple = ()
    event_seed: object = 0
    max_steps: int = DEFAULT_MAX_STEPS
    tol: float = DEFAULT_TOL
    record_every: int = 1
    name: str = "scenario"

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "model": self.model.to_dict(),
            "initial": self.initial.to_dict(),
            "schedule": self.schedule.to_dict(),
            "events": [e.to_dict() for e in self.events],
            "event_seed": self.event_seed,
            "max_steps": self.max_steps,
            "tol": self.tol,
            "record_every": self.record_every,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def _scalar_to_json(value):
    from fractions import Fraction

    if isinstance(value, Fraction):
        return format_scalar(value)
    return value


def _require(cond, field_name, message):
    if not cond:
        raise ScenarioError(f"{field_name}: {message}")


def _parse_model(raw) -> ModelSpec:
    _require(isinstance(raw, dict), "model", "must be an object")
    kind = raw.get("kind")
    if kind == "knn":
        k = raw.get("k")
        _require(isinstance(k, int) and k >= 1, "model.k", "must be a positive integer")
        return ModelSpec(kind="knn", k=k)
    if kind == "abc":
        d = raw.get("d")
        _require(d is not None, "model.d", "is required for the abc model")
        d = parse_scalar(d)
        _require(d >= 0, "model.d", "must be >= 0")
        return ModelSpec(kind="abc", d=d)
    raise ScenarioError("model.kind: must be 'knn' or 'abc'")


def _parse_initial(raw) -> InitialSpec:
    _require(isinstance(raw, dict), "initial", "must be an object")
    kind = raw.get("kind")
    if kind == "uniform_random":
        n = raw.get("n")
        _require(isinstance(n, int) and n >= 1, "initial.n", "must be a positive integer")
        _require("seed" in raw, "initial.seed", "is required")
        return InitialSpec(kind=kind, n=n, low=float(raw.get("low", 0.0)),
                           high=float(raw.get("high", 1.0)), seed=raw["seed"])
    if kind == "explicit":
        ops = raw.get("opinions")
        _require(isinstance(ops, list) and ops, "initial.opinions", "must be a non-empty list")
        return InitialSpec(kind=kind, opinions=tuple(parse_scalar(v) for v in ops))
    if kind == "clusters":
        groups = raw.get("groups")
        _require(isinstance(groups, list) and groups, "initial.groups", "must be a non-empty list")
        parsed = []
        for g in groups:
            _require(isinstance(g, dict) and "opinion" in g and "size" in g,
                     "initial.groups", "entries need opinion and size")
            _require(isinstance(g["size"], int) and g["size"] >= 1,
                     "initial.groups.size", "must be a positive integer")
            parsed.append((parse_scalar(g["opinion"]), g["size"]))
        return InitialSpec(kind=kind, groups=tuple(parsed))
    raise ScenarioError("initial.kind: must be uniform_random, explicit or clusters")


def _parse_schedule(raw) -> ScheduleSpec:
    _require(isinstance(raw, dict), "schedule", "must be an object")
    kind = raw.get("kind")
    if kind == "uniform_random":
        _require("seed" in raw, "schedule.seed", "is required")
        return ScheduleSpec(kind=kind, seed=raw["seed"])
    if kind == "explicit":
        agents = raw.get("agents")
        _require(isinstance(agents, list), "schedule.agents", "must be a list")
        _require(all(isinstance(a, int) and a >= 1 for a in agents),
                 "schedule.agents", "must contain positive agent ids")
        return ScheduleSpec(kind=kind, agents=tuple(agents))
    if kind == "shrink":
        return ScheduleSpec(kind="shrink")
    raise ScenarioError("schedule.kind: must be uniform_random, explicit or shrink")


def _parse_event(raw, pos) -> EventSpec:
    where = f"events[{pos}]"
    _require(isinstance(raw, dict), where, "must be an object")
    step = raw.get("step")
    _require(isinstance(step, int) and step >= 0, f"{where}.step",
             "must be a nonnegative integer")
    kind = raw.get("kind")
    if kind == "add":
        op = raw.get("opinion")
        _require(op is not None, f"{where}.opinion", "is required")
        if isinstance(op, dict):
            _require(op.get("kind") == "uniform_random", f"{where}.opinion.kind",
                     "must be uniform_random")
            opinion = ("uniform_random", float(op.get("low", 0.0)),
                       float(op.get("high", 1.0)))
        else:
            opinion = parse_scalar(op)
        return EventSpec(kind="add", step=step, opinion=opinion)
    if kind == "remove":
        agent = raw.get("agent")
        _require(isinstance(agent, int) and agent >= 1, f"{where}.agent",
                 "must be a positive agent id")
        return EventSpec(kind="remove", step=step, agent=agent)
    raise ScenarioError(f"{where}.kind: must be 'add' or 'remove'")


def parse_scenario(raw: dict) -> ScenarioSpec:
    _require(isinstance(raw, dict), "scenario", "must be a JSON object")
    model = _parse_model(raw.get("model"))
    initial = _parse_initial(raw.get("initial"))
    schedule = _parse_schedule(raw.get("schedule"))
    events = tuple(_parse_event(e, i) for i, e in enumerate(raw.get("events", [])))

    steps = [e.step for e in events]
    _require(steps == sorted(steps) and len(steps) == len(set(steps)),
             "events", "steps must be strictly increasing")

    max_steps = raw.get("max_steps", DEFAULT_MAX_STEPS)
    _require(isinstance(max_steps, int) and max_steps >= 0, "max_steps",
             "must be a nonnegative integer")
    tol = raw.get("tol", DEFAULT_TOL)
    _require(isinstance(tol, (int, float)) and tol > 0, "tol", "must be positive")
    record_every = raw.get("record_every", 1)
    _require(isinstance(record_every, int) and record_every >= 1, "record_every",
             "must be a positive integer")

    spec = ScenarioSpec(
        model=model, initial=initial, schedule=schedule, events=events,
        event_seed=raw.get("event_seed", 0), max_steps=max_steps,
        tol=float(tol), record_every=record_every,
        name=raw.get("name", "scenario"),
    )
    validate_scenario(spec)
    return spec


def load_scenario(path) -> ScenarioSpec:
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"invalid JSON at line {exc.lineno}: {exc.msg}")
    return parse_scenario(raw)


def validate_scenario(spec: ScenarioSpec) -> None:
    """Static checks that need the whole document: the k <= n constraint at
    every point of the event timeline, and removal ids that exist when the
    event fires. Added agents get ids n+1, n+2, ... in event order; ids are
    never reused within a run."""
    n0 = spec.initial.size()
    if spec.model.kind == "knn":
        _require(spec.model.k <= n0, "model.k",
                 f"k={spec.model.k} exceeds initial agent count n={n0}")
    if spec.schedule.kind == "shrink":
        _require(spec.model.kind == "knn", "schedule",
                 "shrink schedule requires the knn model")

    ids = set(range(1, n0 + 1))
    next_id = n0 + 1
    for pos, event in enumerate(spec.events):
        if event.kind == "add":
            ids.add(next_id)
            next_id += 1
        else:
            _require(event.agent in ids, f"events[{pos}].agent",
                     f"agent {event.agent} not present at step {event.step}")
            ids.remove(event.agent)
            _require(len(ids) >= 1, f"events[{pos}]", "cannot remove the last agent")
            if spec.model.kind == "knn":
                _require(spec.model.k <= len(ids), f"events[{pos}]",
                         f"removal leaves fewer than k={spec.model.k} agents")
