"""Scheduling policies: four heuristic baselines and the learned policy wrapper."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backend import Fleet, mean_gate_duration, mean_gate_error
from .nn import forward
from .workload import QTask

POLICY_NAMES = ("rr", "sef", "fdf", "fan", "qfor")


@dataclass(frozen=True)
class DecisionContext:
    now: float
    step_index: int
    next_available: tuple[float, ...]
    task: QTask | None = None

    @classmethod
    def from_env(cls, env) -> DecisionContext:
        return cls(env.now, env.index, tuple(s.next_available_time for s in env.fleet.states),
                   env.current_task)


class Policy:
    name = "policy"

    def __init__(self, num_nodes: int):
        if num_nodes < 1:
            raise ValueError("need at least one node")
        self.num_nodes = num_nodes

    def reset(self) -> None:
        """Called at the start of every episode."""

    def act(self, obs: np.ndarray, ctx: DecisionContext) -> int:
        raise NotImplementedError

    def __call__(self, obs, ctx) -> int:
        return self.act(obs, ctx)


class RoundRobin(Policy):
    name = "rr"

    def __init__(self, num_nodes: int, persist: bool = False):
        super().__init__(num_nodes)
        self.persist = persist
        self.cursor = 0

    def reset(self):
        if not self.persist:
            self.cursor = 0

    def act(self, obs, ctx):
        a = self.cursor % self.num_nodes
        self.cursor += 1
        return a


class ConstantPolicy(Policy):
    def __init__(self, num_nodes: int, action: int):
        super().__init__(num_nodes)
        self.action = action

    def act(self, obs, ctx):
        return self.action


def _argmin(values) -> int:
    # first index of the minimum, so ties go to the lowest index
    return int(np.argmin(np.asarray(values, dtype=float)))


class SmallestErrorFirst(ConstantPolicy):
    name = "sef"

    def __init__(self, fleet: Fleet):
        super().__init__(len(fleet), _argmin([mean_gate_error(n) for n in fleet.nodes]))


class FastestDurationFirst(ConstantPolicy):
    name = "fdf"

    def __init__(self, fleet: Fleet):
        super().__init__(len(fleet), _argmin([mean_gate_duration(n) for n in fleet.nodes]))


class FirstAvailableNode(Policy):
    """Lowest-index idle node; when all are busy, the one that frees up first."""

    name = "fan"

    def act(self, obs, ctx):
        for j, t in enumerate(ctx.next_available):
            if t <= ctx.now:
                return j
        return _argmin(ctx.next_available)


def round_robin(num_nodes: int, persist: bool = False) -> RoundRobin:
    return RoundRobin(num_nodes, persist)


def smallest_error_first(fleet: Fleet) -> SmallestErrorFirst:
    return SmallestErrorFirst(fleet)


def fastest_duration_first(fleet: Fleet) -> FastestDurationFirst:
    return FastestDurationFirst(fleet)


def first_available_node(fleet: Fleet) -> FirstAvailableNode:
    return FirstAvailableNode(len(fleet))


def make_baseline(name: str, fleet: Fleet) -> Policy:
    builders = {"rr": lambda: round_robin(len(fleet)), "sef": lambda: smallest_error_first(fleet),
                "fdf": lambda: fastest_duration_first(fleet), "fan": lambda: first_available_node(fleet)}
    if name not in builders:
        raise ValueError(f"unknown baseline {name!r}; expected one of {sorted(builders)}")
    return builders[name]()


class LearnedPolicy(Policy):
    """Greedy (argmax) action of a trained policy network."""

    name = "qfor"

    def __init__(self, params):
        super().__init__(params.weights[-1].shape[1])
        self.params = params

    def act(self, obs, ctx):
        logits, _ = forward(self.params, obs)
        return int(np.argmax(logits))
