"""Lowering of logical circuits onto a device: basis decomposition, greedy
layout, shortest-path SWAP routing and a small peephole pass."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

from .backend import QNodeSpec
from .circuit import Circuit, GateOp, to_qasm
from .errors import CapacityError, UnsupportedGate

PI = math.pi
NATIVE_KINDS = frozenset({"rz", "sx", "x", "cx", "measure", "barrier"})
_ANGLE_EPS = 1e-12


@dataclass(frozen=True)
class Layout:
    """Bijection from virtual qubits to physical qubits.

    Virtual qubits ``0..num_logical-1`` are the circuit's logical qubits; the
    rest label unused physical qubits (ancillas) so that SWAP routing can be
    tracked as a full permutation.
    """

    virtual_to_physical: tuple[int, ...]
    num_logical: int

    def __post_init__(self):
        v2p = self.virtual_to_physical
        if len(set(v2p)) != len(v2p):
            raise ValueError("layout is not injective")
        if self.num_logical > len(v2p):
            raise ValueError("more logical qubits than physical")
        if any(p < 0 or p >= len(v2p) for p in v2p):
            raise ValueError("layout image outside the device")

    @property
    def logical_to_physical(self) -> tuple[int, ...]:
        return self.virtual_to_physical[: self.num_logical]

    def __getitem__(self, logical: int) -> int:
        return self.virtual_to_physical[logical]


@dataclass(frozen=True)
class TranspiledCircuit:
    node_name: str
    num_qubits: int  # physical qubits on the node
    ops: tuple[GateOp, ...]
    layout: Layout
    final_layout: Layout
    swap_count: int
    num_clbits: int = 0
    source_name: str = ""

    @property
    def g1_t(self) -> int:
        return sum(1 for op in self.ops if op.kind in ("rz", "sx", "x"))

    @property
    def g2_t(self) -> int:
        return sum(1 for op in self.ops if op.kind == "cx")

    @property
    def measures_t(self) -> int:
        return sum(1 for op in self.ops if op.kind == "measure")

    def to_circuit(self) -> Circuit:
        return Circuit(self.num_qubits, self.ops, self.num_clbits, self.source_name)

    def to_qasm(self) -> str:
        """Debug dump over physical qubits."""
        return to_qasm(self.to_circuit())


# ---------------------------------------------------------------------------
# basis decomposition

def _rz(q: int, theta: float) -> GateOp:
    return GateOp("rz", (q,), (math.remainder(theta, 2 * PI),))


def _h(q: int) -> list[GateOp]:
    return [_rz(q, PI / 2), GateOp("sx", (q,)), _rz(q, PI / 2)]


def _u(q: int, theta: float, phi: float, lam: float) -> list[GateOp]:
    # U(theta, phi, lam) = RZ(phi + pi) SX RZ(theta + pi) SX RZ(lam), up to global phase
    return [_rz(q, lam), GateOp("sx", (q,)), _rz(q, theta + PI),
            GateOp("sx", (q,)), _rz(q, phi + PI)]


def _ccx(a: int, b: int, c: int) -> list[tuple]:
    # textbook 6-cx Toffoli network
    return [("h", c), ("cx", b, c), ("tdg", c), ("cx", a, c), ("t", c), ("cx", b, c),
            ("tdg", c), ("cx", a, c), ("t", b), ("t", c), ("h", c), ("cx", a, b),
            ("t", a), ("tdg", b), ("cx", a, b)]


_PHASES = {"z": PI, "s": PI / 2, "sdg": -PI / 2, "t": PI / 4, "tdg": -PI / 4}


def _lower(op: GateOp) -> list[GateOp]:
    k, q, p = op.kind, op.qubits, op.params
    if k in ("rz", "sx", "x", "cx", "measure", "barrier"):
        return [op]
    if k == "h":
        return _h(q[0])
    if k in _PHASES:
        return [_rz(q[0], _PHASES[k])]
    if k == "y":
        return [_rz(q[0], PI), GateOp("x", q)]
    if k == "u":
        return _u(q[0], *p)
    if k == "rx":
        return _u(q[0], p[0], -PI / 2, PI / 2)
    if k == "ry":
        return _u(q[0], p[0], 0.0, 0.0)
    if k == "cz":
        a, b = q
        return _h(b) + [GateOp("cx", (a, b))] + _h(b)
    if k == "swap":
        a, b = q
        return [GateOp("cx", (a, b)), GateOp("cx", (b, a)), GateOp("cx", (a, b))]
    if k == "ccx":
        out: list[GateOp] = []
        for step in _ccx(*q):
            name, *qs = step
            out.extend(_lower(GateOp(name, tuple(qs))))
        return out
    raise UnsupportedGate(k)


def decompose_to_basis(circuit: Circuit) -> Circuit:
    """Rewrite every op into {rz, sx, x, cx, measure, barrier}; unitary kept up to global phase."""
    ops: list[GateOp] = []
    for op in circuit.ops:
        ops.extend(_lower(op))
    return circuit.with_ops(ops)


# ---------------------------------------------------------------------------
# layout and routing

def _interaction_counts(circuit: Circuit) -> list[int]:
    counts = [0] * circuit.num_qubits
    for op in circuit.ops:
        if len(op.qubits) >= 2 and not op.is_barrier:
            for q in op.qubits:
                counts[q] += 1
    return counts


def _bfs_order(node: QNodeSpec, start: int) -> list[int]:
    order, seen, dq = [], {start}, deque([start])
    while dq:
        v = dq.popleft()
        order.append(v)
        for u in node.neighbors[v]:
            if u not in seen:
                seen.add(u)
                dq.append(u)
    return order


def initial_layout(circuit: Circuit, node: QNodeSpec) -> Layout:
    """Greedy interaction-degree placement.

    Logical qubits, busiest first, are laid along a BFS of the coupling graph
    started at the highest-degree physical qubit. Ties go to lower indices.
    """
    n = circuit.num_qubits
    if n > node.num_qubits:
        raise CapacityError(f"{circuit.source_name or 'circuit'} needs {n} qubits, "
                            f"{node.name} has {node.num_qubits}")
    counts = _interaction_counts(circuit)
    logical = sorted(range(n), key=lambda q: (-counts[q], q))
    degrees = [len(nb) for nb in node.neighbors]
    start = max(range(node.num_qubits), key=lambda p: (degrees[p], -p))
    order = _bfs_order(node, start)
    v2p = [-1] * node.num_qubits
    for lq, pq in zip(logical, order):
        v2p[lq] = pq
    used = set(order[:n])
    spare = [p for p in range(node.num_qubits) if p not in used]
    for v, p in zip(range(n, node.num_qubits), spare):
        v2p[v] = p
    return Layout(tuple(v2p), n)


def _shortest_path(node: QNodeSpec, src: int, dst: int) -> list[int]:
    # walk down the distance field, always to the lowest-index neighbour
    dist = node.distance
    path = [src]
    while path[-1] != dst:
        cur = path[-1]
        d = dist[cur, dst]
        path.append(next(u for u in node.neighbors[cur] if dist[u, dst] == d - 1))
    return path


def route(circuit: Circuit, layout: Layout, node: QNodeSpec) -> TranspiledCircuit:
    """Make every cx act on a coupled pair by inserting SWAPs (as 3 cx each).

    The control is moved along a shortest path until it neighbours the target;
    the running permutation ends up in ``final_layout``.
    """
    v2p = list(layout.virtual_to_physical)
    p2v = [0] * len(v2p)
    for v, p in enumerate(v2p):
        p2v[p] = v
    out: list[GateOp] = []
    swaps = 0
    for op in circuit.ops:
        if op.kind not in NATIVE_KINDS:
            raise UnsupportedGate(op.kind)
        if op.kind != "cx":
            out.append(GateOp(op.kind, tuple(v2p[q] for q in op.qubits), op.params, op.clbits))
            continue
        pa, pb = v2p[op.qubits[0]], v2p[op.qubits[1]]
        if not node.is_coupled(pa, pb):
            path = _shortest_path(node, pa, pb)
            for u, w in zip(path[:-2], path[1:-1]):
                out += [GateOp("cx", (u, w)), GateOp("cx", (w, u)), GateOp("cx", (u, w))]
                vu, vw = p2v[u], p2v[w]
                p2v[u], p2v[w] = vw, vu
                v2p[vu], v2p[vw] = w, u
                swaps += 1
            pa = path[-2]
        out.append(GateOp("cx", (pa, pb)))
    return TranspiledCircuit(
        node_name=node.name,
        num_qubits=node.num_qubits,
        ops=tuple(out),
        layout=layout,
        final_layout=Layout(tuple(v2p), layout.num_logical),
        swap_count=swaps,
        num_clbits=circuit.num_clbits,
        source_name=circuit.source_name,
    )


# ---------------------------------------------------------------------------
# peephole

def _is_zero_angle(theta: float) -> bool:
    return abs(math.remainder(theta, 2 * PI)) < _ANGLE_EPS


def peephole(ops) -> list[GateOp]:
    """Cancel adjacent x·x and identical cx·cx pairs; merge runs of rz on a qubit.

    Works in one pass with a per-qubit stack of live ops, so cancellations
    cascade (x x x x vanishes entirely).
    """
    live: list[GateOp | None] = []
    stacks: dict[int, list[int]] = {}

    def top(q):
        st = stacks.get(q)
        return st[-1] if st else None

    def drop(idx):
        for q in live[idx].qubits:
            stacks[q].pop()
        live[idx] = None

    for op in ops:
        if op.kind == "x":
            i = top(op.qubits[0])
            if i is not None and live[i].kind == "x":
                drop(i)
                continue
        elif op.kind == "cx":
            c, t = op.qubits
            i = top(c)
            if i is not None and i == top(t) and live[i].kind == "cx" and live[i].qubits == (c, t):
                drop(i)
                continue
        elif op.kind == "rz":
            q = op.qubits[0]
            i = top(q)
            if i is not None and live[i].kind == "rz":
                merged = live[i].params[0] + op.params[0]
                if _is_zero_angle(merged):
                    drop(i)
                else:
                    live[i] = GateOp("rz", (q,), (math.remainder(merged, 2 * PI),))
                continue
            if _is_zero_angle(op.params[0]):
                continue
        idx = len(live)
        live.append(op)
        for q in op.qubits:
            stacks.setdefault(q, []).append(idx)
    return [op for op in live if op is not None]


def transpile(circuit: Circuit, node: QNodeSpec) -> TranspiledCircuit:
    """decompose -> layout -> route -> peephole. Deterministic."""
    if circuit.num_qubits > node.num_qubits:
        raise CapacityError(f"{circuit.source_name or 'circuit'} needs {circuit.num_qubits} "
                            f"qubits, {node.name} has {node.num_qubits}")
    basis = decompose_to_basis(circuit)
    layout = initial_layout(basis, node)
    routed = route(basis, layout, node)
    return TranspiledCircuit(
        node_name=routed.node_name,
        num_qubits=routed.num_qubits,
        ops=tuple(peephole(routed.ops)),
        layout=routed.layout,
        final_layout=routed.final_layout,
        swap_count=routed.swap_count,
        num_clbits=routed.num_clbits,
        source_name=routed.source_name,
    )
