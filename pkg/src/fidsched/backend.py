"""Heterogeneous quantum node models built from calibration files."""
from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import ConsistencyError, SchemaError

BASIS_GATES = ("rz", "sx", "x", "cx", "measure")
SINGLE_QUBIT_GATES = ("sx", "x", "rz")

GateKey = tuple[str, tuple[int, ...]]


def _edge(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True, eq=False)
class QNodeSpec:
    """Static description of one quantum device.

    ``gate_error`` and ``gate_duration`` are keyed by ``(kind, qubits)``; two-qubit
    keys use the sorted pair, so a cx calibration covers both directions.
    """

    name: str
    num_qubits: int
    coupling: tuple[tuple[int, int], ...]
    gate_error: dict[GateKey, float]
    gate_duration: dict[GateKey, float]
    readout_error: tuple[float, ...]
    readout_duration: tuple[float, ...]
    basis_gates: tuple[str, ...] = BASIS_GATES

    def __post_init__(self):
        self._validate()

    def _validate(self):
        n = self.num_qubits
        if n <= 0:
            raise ConsistencyError(f"{self.name}: num_qubits must be positive")
        for a, b in self.coupling:
            if not (0 <= a < n and 0 <= b < n) or a == b:
                raise ConsistencyError(f"{self.name}: bad coupling edge ({a}, {b})")
        if len(self.readout_error) != n or len(self.readout_duration) != n:
            raise SchemaError(f"{self.name}: readout entries must cover all {n} qubits")
        for q in range(n):
            for g in SINGLE_QUBIT_GATES:
                if (g, (q,)) not in self.gate_error:
                    raise SchemaError(f"{self.name}: missing {g} calibration for qubit {q}")
        coupled = set(self.coupling)
        for a, b in coupled:
            if ("cx", (a, b)) not in self.gate_error:
                raise ConsistencyError(f"{self.name}: coupled pair ({a}, {b}) has no cx entry")
        for (kind, qubits), err in self.gate_error.items():
            if kind == "cx" and qubits not in coupled:
                raise ConsistencyError(f"{self.name}: cx entry on uncoupled pair {qubits}")
            if not 0.0 <= err < 1.0:
                raise ConsistencyError(f"{self.name}: {kind}{qubits} error {err} outside [0, 1)")
        for (kind, qubits), dur in self.gate_duration.items():
            if dur < 0 or (dur == 0 and kind != "rz") or not math.isfinite(dur):
                raise ConsistencyError(f"{self.name}: {kind}{qubits} duration {dur} not positive")
        for q, (e, d) in enumerate(zip(self.readout_error, self.readout_duration)):
            if not 0.0 <= e < 1.0:
                raise ConsistencyError(f"{self.name}: readout error {e} on qubit {q} outside [0, 1)")
            if not d > 0:
                raise ConsistencyError(f"{self.name}: readout duration {d} on qubit {q} not positive")
        if n > 1 and not self._connected():
            raise ConsistencyError(f"{self.name}: coupling graph is not connected")

    def _connected(self) -> bool:
        seen = {0}
        todo = [0]
        while todo:
            v = todo.pop()
            for u in self.neighbors[v]:
                if u not in seen:
                    seen.add(u)
                    todo.append(u)
        return len(seen) == self.num_qubits

    @cached_property
    def neighbors(self) -> tuple[tuple[int, ...], ...]:
        adj: list[set[int]] = [set() for _ in range(self.num_qubits)]
        for a, b in self.coupling:
            adj[a].add(b)
            adj[b].add(a)
        return tuple(tuple(sorted(s)) for s in adj)

    @cached_property
    def coupling_set(self) -> frozenset[tuple[int, int]]:
        return frozenset(self.coupling)

    def is_coupled(self, a: int, b: int) -> bool:
        return _edge(a, b) in self.coupling_set

    @cached_property
    def distance(self) -> np.ndarray:
        """All-pairs hop distances (BFS from every qubit)."""
        n = self.num_qubits
        dist = np.full((n, n), -1, dtype=np.int64)
        for s in range(n):
            dist[s, s] = 0
            dq = deque([s])
            while dq:
                v = dq.popleft()
                for u in self.neighbors[v]:
                    if dist[s, u] < 0:
                        dist[s, u] = dist[s, v] + 1
                        dq.append(u)
        return dist

    def error_of(self, kind: str, qubits: tuple[int, ...]) -> float | None:
        if kind == "measure":
            return self.readout_error[qubits[0]]
        if len(qubits) == 2:
            qubits = _edge(*qubits)
        return self.gate_error.get((kind, qubits))

    def duration_of(self, kind: str, qubits: tuple[int, ...]) -> float | None:
        if kind == "measure":
            return self.readout_duration[qubits[0]]
        if len(qubits) == 2:
            qubits = _edge(*qubits)
        return self.gate_duration.get((kind, qubits))

    # per-category views used by fleet aggregates and observation scaling
    def errors_1q(self) -> list[float]:
        return [e for (k, q), e in self.gate_error.items() if len(q) == 1]

    def errors_2q(self) -> list[float]:
        return [e for (k, q), e in self.gate_error.items() if len(q) == 2]

    def durations_1q(self) -> list[float]:
        return [d for (k, q), d in self.gate_duration.items() if len(q) == 1]

    def durations_2q(self) -> list[float]:
        return [d for (k, q), d in self.gate_duration.items() if len(q) == 2]

    @classmethod
    def from_dict(cls, data: dict) -> QNodeSpec:
        return _spec_from_dict(data)

    def to_dict(self) -> dict:
        gates: dict[str, list] = {}
        for (kind, qubits), err in sorted(self.gate_error.items(), key=lambda kv: (kv[0][0], kv[0][1])):
            gates.setdefault(kind, []).append(
                {"qubits": list(qubits), "error": err,
                 "duration_s": self.gate_duration[(kind, qubits)]})
        return {
            "name": self.name,
            "num_qubits": self.num_qubits,
            "coupling": [list(e) for e in self.coupling],
            "gates": gates,
            "readout": [{"qubit": q, "error": e, "duration_s": d}
                        for q, (e, d) in enumerate(zip(self.readout_error, self.readout_duration))],
        }


def _require(obj: dict, key: str, typ, where: str):
    if not isinstance(obj, dict) or key not in obj:
        raise SchemaError(f"{where}: missing field {key!r}")
    val = obj[key]
    if typ is float:
        ok = isinstance(val, (int, float)) and not isinstance(val, bool)
    elif typ is int:
        ok = isinstance(val, int) and not isinstance(val, bool)
    else:
        ok = isinstance(val, typ)
    if not ok:
        raise SchemaError(f"{where}: field {key!r} has wrong type {type(val).__name__}")
    return val


def _spec_from_dict(data: dict) -> QNodeSpec:
    if not isinstance(data, dict):
        raise SchemaError("calibration root must be an object")
    name = _require(data, "name", str, "calibration")
    n = _require(data, "num_qubits", int, name)
    coupling_raw = _require(data, "coupling", list, name)
    coupling = []
    for i, e in enumerate(coupling_raw):
        if not (isinstance(e, list) and len(e) == 2 and all(isinstance(v, int) for v in e)):
            raise SchemaError(f"{name}: coupling[{i}] must be a pair of ints")
        coupling.append(_edge(*e))
    if len(set(coupling)) != len(coupling):
        raise SchemaError(f"{name}: duplicate coupling edge")
    gates = _require(data, "gates", dict, name)
    gate_error: dict[GateKey, float] = {}
    gate_duration: dict[GateKey, float] = {}
    for kind in ("sx", "x", "rz", "cx"):
        if kind not in gates:
            raise SchemaError(f"{name}: gates.{kind} missing")
    for kind, entries in gates.items():
        if kind not in ("sx", "x", "rz", "cx"):
            raise SchemaError(f"{name}: gate {kind!r} is not in the basis set")
        if not isinstance(entries, list):
            raise SchemaError(f"{name}: gates.{kind} must be a list")
        arity = 2 if kind == "cx" else 1
        for i, ent in enumerate(entries):
            where = f"{name}: gates.{kind}[{i}]"
            qubits = _require(ent, "qubits", list, where)
            if len(qubits) != arity or not all(isinstance(q, int) for q in qubits):
                raise SchemaError(f"{where}: qubits must be {arity} int(s)")
            if any(not 0 <= q < n for q in qubits):
                raise ConsistencyError(f"{where}: qubit index out of range")
            key = (kind, _edge(*qubits) if arity == 2 else (qubits[0],))
            if key in gate_error:
                raise SchemaError(f"{where}: duplicate entry for {key}")
            gate_error[key] = float(_require(ent, "error", float, where))
            gate_duration[key] = float(_require(ent, "duration_s", float, where))
    readout = _require(data, "readout", list, name)
    r_err: dict[int, float] = {}
    r_dur: dict[int, float] = {}
    for i, ent in enumerate(readout):
        where = f"{name}: readout[{i}]"
        q = _require(ent, "qubit", int, where)
        if not 0 <= q < n:
            raise ConsistencyError(f"{where}: qubit {q} out of range")
        if q in r_err:
            raise SchemaError(f"{where}: duplicate readout entry for qubit {q}")
        r_err[q] = float(_require(ent, "error", float, where))
        r_dur[q] = float(_require(ent, "duration_s", float, where))
    missing = [q for q in range(n) if q not in r_err]
    if missing:
        raise SchemaError(f"{name}: readout missing for qubit {missing[0]}")
    return QNodeSpec(
        name=name,
        num_qubits=n,
        coupling=tuple(sorted(coupling)),
        gate_error=dict(sorted(gate_error.items())),
        gate_duration=dict(sorted(gate_duration.items())),
        readout_error=tuple(r_err[q] for q in range(n)),
        readout_duration=tuple(r_dur[q] for q in range(n)),
    )


def load_calibration(path) -> QNodeSpec:
    """Load and validate one calibration JSON file."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path.name}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return _spec_from_dict(data)


# ---------------------------------------------------------------------------
# dynamic state and fleets

@dataclass
class QNodeState:
    """Queue bookkeeping for one node.

    ``completed`` counts tasks accepted by the node; each accepted task finishes
    at its scheduled end time because execution is exclusive and never preempted.
    """

    next_available_time: float = 0.0
    queue_length: int = 0
    completed: int = 0
    _slots: deque = field(default_factory=deque, repr=False)  # (start, end) of accepted tasks

    def advance(self, now: float) -> None:
        while self._slots and self._slots[0][1] <= now:
            self._slots.popleft()
        self.queue_length = sum(1 for start, _ in self._slots if start > now)

    def wait_time(self, now: float) -> float:
        return max(0.0, self.next_available_time - now)

    def accept(self, now: float, exec_time: float) -> tuple[float, float]:
        """Book a task arriving at ``now``; returns (wait, finish time)."""
        wait = self.wait_time(now)
        start = now + wait
        end = start + exec_time
        self.next_available_time = end
        self._slots.append((start, end))
        self.completed += 1
        self.advance(now)
        return wait, end


@dataclass
class Fleet:
    nodes: list[QNodeSpec]
    states: list[QNodeState] = field(default_factory=list)

    def __post_init__(self):
        if not self.nodes:
            raise ValueError("a fleet needs at least one node")
        names = [n.name for n in self.nodes]
        if len(set(names)) != len(names):
            raise ValueError("node names must be unique")
        if not self.states:
            self.states = [QNodeState() for _ in self.nodes]

    def __len__(self) -> int:
        return len(self.nodes)

    def reset_states(self) -> None:
        self.states = [QNodeState() for _ in self.nodes]

    def index_of(self, name: str) -> int:
        return [n.name for n in self.nodes].index(name)

    def fresh(self) -> Fleet:
        """Same (shared, immutable) specs with cleared state."""
        return Fleet(list(self.nodes))


def load_fleet(manifest) -> Fleet:
    """Load a fleet manifest: a JSON list of calibration paths relative to the manifest."""
    manifest = Path(manifest)
    try:
        entries = json.loads(manifest.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{manifest.name}: invalid JSON: {exc.msg}") from exc
    if not isinstance(entries, list) or not all(isinstance(e, str) for e in entries):
        raise SchemaError(f"{manifest.name}: fleet manifest must be a list of paths")
    return Fleet([load_calibration(manifest.parent / e) for e in entries])


@dataclass(frozen=True)
class FleetAverages:
    mean_1q_error: float
    mean_2q_error: float
    mean_readout_error: float
    mean_1q_duration: float
    mean_2q_duration: float


def _mean(values: list[float]) -> float:
    # exact rational mean, rounded once: independent of order and of replicating the entries
    return float(sum(map(Fraction, values), Fraction(0)) / len(values)) if values else 0.0


def fleet_averages(fleet: Fleet | list[QNodeSpec]) -> FleetAverages:
    """Per-category means pooled over every entry of every node.

    Entries are pooled (not node means averaged), so larger devices weigh more.
    """
    nodes = fleet.nodes if isinstance(fleet, Fleet) else list(fleet)
    if not nodes:
        raise ValueError("empty fleet")
    e1, e2, er, d1, d2 = [], [], [], [], []
    for node in nodes:
        e1 += node.errors_1q()
        e2 += node.errors_2q()
        er += list(node.readout_error)
        d1 += node.durations_1q()
        d2 += node.durations_2q()
    return FleetAverages(*(_mean(v) for v in (e1, e2, er, d1, d2)))


def mean_gate_error(node: QNodeSpec) -> float:
    """Mean over every error entry of the node, readout included."""
    return _mean(list(node.gate_error.values()) + list(node.readout_error))


def mean_gate_duration(node: QNodeSpec) -> float:
    return _mean(list(node.gate_duration.values()) + list(node.readout_duration))
