"""Discrete-event scheduling environment.

Tasks arrive in order; each step assigns the current task to one node, books
it on that node's FIFO timeline and returns the reward for the placement.
"""
from __future__ import annotations

import csv
import threading
from dataclasses import dataclass, field

import numpy as np

from .backend import Fleet, fleet_averages
from .errors import CapacityError, InvalidAction, MissingCalibration, UnsupportedGate
from .estimator import (RewardBreakdown, ScoreWeights, critical_path_duration, estimate_fidelity,
                        expected_fidelity, failure, score_assignment)
from .transpiler import transpile
from .workload import QTask, WorkloadManifest, generate_workload

Q_MAX = 127
S_MAX = 8192
Q_LEN_MAX = 32
TASK_FEATURES = 5
NODE_FEATURES = 7


def obs_size(num_nodes: int) -> int:
    return TASK_FEATURES + NODE_FEATURES * num_nodes


@dataclass(frozen=True)
class Placement:
    """Cached per-(circuit, node) transpilation result."""

    fidelity: float
    expected: float
    cp_duration: float  # seconds per shot


class TranspileCache:
    """Thread-safe cache of placements keyed by (circuit name, node name).

    ``None`` records a placement that cannot be transpiled. Concurrent inserts
    of the same key compute identical values, so last write wins harmlessly.
    """

    def __init__(self):
        self._data: dict[tuple[str, str], Placement | None] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def __len__(self) -> int:
        return len(self._data)

    def get(self, task: QTask, node, avg) -> Placement | None:
        key = (task.circuit.source_name, node.name)
        with self._lock:
            if key in self._data:
                self.hits += 1
                return self._data[key]
        self.misses += 1
        try:
            tc = transpile(task.circuit, node)
            value = Placement(estimate_fidelity(tc, node), expected_fidelity(tc, avg),
                              critical_path_duration(tc, node))
        except (CapacityError, UnsupportedGate, MissingCalibration):
            value = None
        with self._lock:
            self._data[key] = value
        return value


@dataclass
class StepOutcome:
    observation: np.ndarray
    reward: float
    done: bool
    info: dict = field(default_factory=dict)


def _node_static(fleet: Fleet) -> np.ndarray:
    """Columns q/Q_MAX, 1q err, 2q err, readout err, cx duration, each scaled by the fleet max."""
    rows = []
    for n in fleet.nodes:
        e1 = np.mean(n.errors_1q())
        e2 = np.mean(n.errors_2q())
        er = np.mean(n.readout_error)
        d2 = np.mean(n.durations_2q())
        rows.append((n.num_qubits / Q_MAX, e1, e2, er, d2))
    arr = np.asarray(rows, dtype=float)
    peak = arr[:, 1:].max(axis=0)
    arr[:, 1:] = np.divide(arr[:, 1:], peak, out=np.zeros_like(arr[:, 1:]), where=peak > 0)
    return np.clip(arr, 0.0, 1.0)


def task_features(task: QTask | None, w: ScoreWeights) -> np.ndarray:
    if task is None:
        return np.zeros(TASK_FEATURES)
    f = task.features
    v = np.array([f.num_qubits / Q_MAX, f.depth / w.D_max, f.g1 / w.G_max,
                  f.g2 / w.G_max, task.shots / S_MAX])
    return np.clip(v, 0.0, 1.0)


def encode_state(task: QTask | None, fleet: Fleet, now: float, w: ScoreWeights,
                 static: np.ndarray | None = None) -> np.ndarray:
    """Flat observation: task block followed by one block per node, all in [0, 1]."""
    if static is None:
        static = _node_static(fleet)
    dyn = np.empty((len(fleet), 2))
    for j, st in enumerate(fleet.states):
        dyn[j, 0] = st.queue_length / Q_LEN_MAX
        dyn[j, 1] = (st.next_available_time - now) / w.T_max
    nodes = np.concatenate([static, np.clip(dyn, 0.0, 1.0)], axis=1)
    return np.concatenate([task_features(task, w), nodes.ravel()])


class QCloudEnv:
    """Episodic environment over one workload per episode.

    ``reset(seed)`` draws a fresh workload from ``manifest`` with that seed.
    With ``mask_infeasible`` a capacity violation raises instead of paying the
    failure reward; the default leaves the agent to learn the constraint.
    """

    def __init__(self, fleet: Fleet, manifest: WorkloadManifest, weights: ScoreWeights | None = None,
                 cache: TranspileCache | None = None, mask_infeasible: bool = False):
        self.fleet = fleet.fresh()
        self.manifest = manifest
        self.weights = weights or ScoreWeights()
        self.cache = cache if cache is not None else TranspileCache()
        self.mask_infeasible = mask_infeasible
        self.averages = fleet_averages(self.fleet)
        self._static = _node_static(self.fleet)
        self.tasks: list[QTask] = []
        self.index = 0
        self.now = 0.0
        self.failures = 0

    @property
    def num_nodes(self) -> int:
        return len(self.fleet)

    @property
    def observation_size(self) -> int:
        return obs_size(self.num_nodes)

    @property
    def current_task(self) -> QTask | None:
        return self.tasks[self.index] if self.index < len(self.tasks) else None

    @property
    def done(self) -> bool:
        return self.index >= len(self.tasks)

    def observe(self) -> np.ndarray:
        return encode_state(self.current_task, self.fleet, self.now, self.weights, self._static)

    def reset(self, seed: int | None = None) -> np.ndarray:
        if seed is not None:
            self.tasks = generate_workload(self.manifest.with_seed(seed))
        elif not self.tasks:
            self.tasks = generate_workload(self.manifest)
        self.fleet.reset_states()
        self.index = 0
        self.failures = 0
        self.now = 0.0
        self._arrive()
        return self.observe()

    def _arrive(self):
        task = self.current_task
        if task is None:
            return
        self.now = max(self.now, task.arrival)
        for st in self.fleet.states:
            st.advance(self.now)

    def feasible(self, task: QTask) -> list[int]:
        return [j for j, n in enumerate(self.fleet.nodes) if task.features.num_qubits <= n.num_qubits]

    def placements(self, task: QTask) -> list[Placement | None]:
        return [self.cache.get(task, n, self.averages) if task.features.num_qubits <= n.num_qubits
                else None for n in self.fleet.nodes]

    def step(self, action: int) -> StepOutcome:
        if self.done:
            raise InvalidAction("episode is finished; call reset()")
        if not isinstance(action, (int, np.integer)) or not 0 <= action < self.num_nodes:
            raise InvalidAction(f"action {action!r} outside [0, {self.num_nodes})")
        action = int(action)
        task = self.current_task
        node = self.fleet.nodes[action]
        w = self.weights
        info = {"task_id": task.id, "action": action, "node": node.name, "violation": None,
                "now": self.now}
        if task.features.num_qubits > node.num_qubits:
            if self.mask_infeasible:
                raise InvalidAction(f"{node.name} cannot hold {task.features.num_qubits} qubits")
            info["violation"] = "capacity"
            breakdown = failure(w)
        else:
            placed = self.placements(task)
            mine = placed[action]
            if mine is None:
                info["violation"] = "transpile"
                breakdown = failure(w)
            else:
                ok = [p.fidelity for p in placed if p is not None]
                t_exec = task.shots * mine.cp_duration
                t_wait, _ = self.fleet.states[action].accept(self.now, t_exec)
                breakdown = score_assignment(
                    fidelity=mine.fidelity, expected=mine.expected, features=task.features,
                    best=max(ok), worst=min(ok), t_exec=t_exec, t_wait=t_wait, w=w)
        if not breakdown.success:
            self.failures += 1
        info["breakdown"] = breakdown
        self.index += 1
        self._arrive()
        return StepOutcome(self.observe(), breakdown.reward, self.done, info)


TRACE_COLUMNS = ("episode", "step", "task_id", "action", "F", "F_expected", "r_rf", "r_cb",
                 "r_rb", "fidelity_score", "t_wait", "t_exec", "t_total", "time_penalty",
                 "reward", "success")


def trace_row(episode: int, step: int, info: dict) -> list:
    b: RewardBreakdown = info["breakdown"]
    return [episode, step, info["task_id"], info["action"], repr(b.fidelity),
            repr(b.expected_fidelity), repr(b.r_rf), repr(b.r_cb), repr(b.r_rb),
            repr(b.fidelity_score), repr(b.t_wait), repr(b.t_exec), repr(b.t_total),
            repr(b.time_penalty), repr(b.reward), int(b.success)]


class TraceWriter:
    """One CSV row per step."""

    def __init__(self, fh):
        self._w = csv.writer(fh, lineterminator="\n")
        self._w.writerow(TRACE_COLUMNS)

    def write(self, episode: int, step: int, info: dict):
        self._w.writerow(trace_row(episode, step, info))
